//! Domain types and the mappings from expert assessments to per-month
//! transition probabilities.
//!
//! A risk `i` carries an expert likelihood `L_i` on the 1..5 scale, which is
//! normalized to a vulnerability `p_i = (L_i - 1) / 4`. Three exponents map
//! vulnerability to the monthly probabilities driving the dynamics:
//!
//! ```text
//! p_int_i = 1 - (1 - p_i)^alpha        internal materialization
//! p_con_i = 1 - (1 - p_i)^gamma        continuation of an active risk
//! p_ext_ji = 1 - (1 - p_i)^(beta a_ji) influence of active j on target i
//! ```
//!
//! The exponents scale linearly with the time unit, so a decade-scale value
//! is 120 times the monthly one. Everything inside the crate runs at monthly
//! resolution.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of months in a decade, the time unit of the expert assessments.
pub const MONTHS_PER_DECADE: f64 = 120.0;

/// The five risk categories, numbered in their conventional order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskGroup {
    Economic = 1,
    Environmental = 2,
    Geopolitical = 3,
    Societal = 4,
    Technological = 5,
}

impl RiskGroup {
    pub const ALL: [RiskGroup; 5] = [
        RiskGroup::Economic,
        RiskGroup::Environmental,
        RiskGroup::Geopolitical,
        RiskGroup::Societal,
        RiskGroup::Technological,
    ];

    pub fn from_index(index: u8) -> Option<Self> {
        match index {
            1..=5 => Some(Self::ALL[usize::from(index) - 1]),
            _ => None,
        }
    }

    /// 1-based category number.
    pub fn index(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            RiskGroup::Economic => "economic",
            RiskGroup::Environmental => "environmental",
            RiskGroup::Geopolitical => "geopolitical",
            RiskGroup::Societal => "societal",
            RiskGroup::Technological => "technological",
        }
    }
}

impl fmt::Display for RiskGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RiskGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        if let Ok(idx) = t.parse::<u8>() {
            return RiskGroup::from_index(idx)
                .ok_or_else(|| Error::validation(format!("group index {idx} not in 1..5")));
        }
        RiskGroup::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(t))
            .ok_or_else(|| Error::validation(format!("unknown risk group '{t}'")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskRecord {
    pub id: usize,
    pub name: String,
    pub group: RiskGroup,
    /// Decade-scale expert likelihood, 1..=5.
    pub likelihood: f64,
    pub stddev: f64,
}

/// Ordered list of risks with ids `1..=N`.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskCatalog {
    records: Vec<RiskRecord>,
}

impl RiskCatalog {
    pub fn new(records: Vec<RiskRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::validation("risk catalog is empty"));
        }
        for (pos, r) in records.iter().enumerate() {
            if r.id != pos + 1 {
                return Err(Error::validation(format!(
                    "risk ids must be contiguous 1..N in order; found id {} at position {}",
                    r.id,
                    pos + 1
                )));
            }
            normalize_likelihood(r.likelihood).map_err(|_| {
                Error::validation(format!(
                    "risk {} ({}): likelihood {} outside [1, 5]",
                    r.id, r.name, r.likelihood
                ))
            })?;
            if !(r.stddev.is_finite() && r.stddev >= 0.0) {
                return Err(Error::validation(format!(
                    "risk {} ({}): stddev {} must be finite and non-negative",
                    r.id, r.name, r.stddev
                )));
            }
        }
        Ok(Self { records })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[RiskRecord] {
        &self.records
    }

    /// Record for a 1-based risk id.
    pub fn get(&self, id: usize) -> Option<&RiskRecord> {
        id.checked_sub(1).and_then(|i| self.records.get(i))
    }

    pub fn groups(&self) -> Vec<RiskGroup> {
        self.records.iter().map(|r| r.group).collect()
    }

    pub fn likelihoods(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.likelihood).collect()
    }

    /// Normalized vulnerabilities `p_i`, in record order.
    pub fn vulnerabilities(&self) -> Vec<f64> {
        // Likelihoods were range-checked at construction.
        self.records
            .iter()
            .map(|r| (r.likelihood - 1.0) / 4.0)
            .collect()
    }

    /// Same risks with replaced likelihood scores.
    pub fn with_likelihoods(&self, likelihoods: &[f64]) -> Result<Self> {
        if likelihoods.len() != self.len() {
            return Err(Error::validation(format!(
                "expected {} likelihoods, got {}",
                self.len(),
                likelihoods.len()
            )));
        }
        let records = self
            .records
            .iter()
            .zip(likelihoods)
            .map(|(r, &l)| RiskRecord {
                likelihood: l,
                ..r.clone()
            })
            .collect();
        Self::new(records)
    }
}

/// Undirected binary influence graph over `N` risks, 0-based node indices.
///
/// Expert-count weights may be attached; they are kept for round-tripping
/// but the dynamics only look at whether an edge exists.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceGraph {
    n: usize,
    adjacency: Vec<bool>,
    neighbors: Vec<Vec<usize>>,
    weights: Option<Vec<u32>>,
}

impl InfluenceGraph {
    pub fn empty(n: usize) -> Self {
        Self {
            n,
            adjacency: vec![false; n * n],
            neighbors: vec![Vec::new(); n],
            weights: None,
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j)));
        Self::from_edges(n, edges).expect("complete graph edges are valid")
    }

    /// Builds a graph from unordered 0-based pairs. Duplicates and
    /// self-loops are rejected.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (a, b) in edges {
            g.insert_edge(a, b)?;
        }
        g.sort_neighbors();
        Ok(g)
    }

    /// Builds a graph from weighted pairs; every weight must be positive.
    pub fn from_weighted_edges(
        n: usize,
        edges: impl IntoIterator<Item = (usize, usize, u32)>,
    ) -> Result<Self> {
        let mut g = Self::empty(n);
        let mut weights = vec![0u32; n * n];
        for (a, b, w) in edges {
            if w == 0 {
                return Err(Error::validation(format!(
                    "edge ({}, {}) has zero weight",
                    a + 1,
                    b + 1
                )));
            }
            g.insert_edge(a, b)?;
            weights[a * n + b] = w;
            weights[b * n + a] = w;
        }
        g.weights = Some(weights);
        g.sort_neighbors();
        Ok(g)
    }

    /// Builds a graph from a dense 0/1 matrix, which must be symmetric with
    /// a zero diagonal.
    pub fn from_adjacency(matrix: &[Vec<u8>]) -> Result<Self> {
        let n = matrix.len();
        let mut edges = Vec::new();
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::validation(format!(
                    "adjacency row {} has length {}, expected {n}",
                    i + 1,
                    row.len()
                )));
            }
            for (j, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(Error::validation(format!(
                        "adjacency entry ({}, {}) = {v} is not binary",
                        i + 1,
                        j + 1
                    )));
                }
                if v != matrix[j][i] {
                    return Err(Error::validation(format!(
                        "adjacency is asymmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i == j && v == 1 {
                    return Err(Error::validation(format!("self-loop on risk {}", i + 1)));
                }
                if i < j && v == 1 {
                    edges.push((i, j));
                }
            }
        }
        Self::from_edges(n, edges)
    }

    fn insert_edge(&mut self, a: usize, b: usize) -> Result<()> {
        let n = self.n;
        if a >= n || b >= n {
            return Err(Error::validation(format!(
                "edge ({}, {}) references a risk outside 1..{n}",
                a + 1,
                b + 1
            )));
        }
        if a == b {
            return Err(Error::validation(format!("self-loop on risk {}", a + 1)));
        }
        if self.adjacency[a * n + b] {
            return Err(Error::validation(format!(
                "duplicate edge ({}, {})",
                a.min(b) + 1,
                a.max(b) + 1
            )));
        }
        self.adjacency[a * n + b] = true;
        self.adjacency[b * n + a] = true;
        self.neighbors[a].push(b);
        self.neighbors[b].push(a);
        Ok(())
    }

    fn sort_neighbors(&mut self) {
        for nb in &mut self.neighbors {
            nb.sort_unstable();
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn is_connected(&self, a: usize, b: usize) -> bool {
        self.adjacency[a * self.n + b]
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn weight(&self, a: usize, b: usize) -> Option<u32> {
        self.weights.as_ref().map(|w| w[a * self.n + b])
    }

    pub fn has_weights(&self) -> bool {
        self.weights.is_some()
    }

    /// Unordered edges `(a, b)` with `a < b`, sorted.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for a in 0..self.n {
            for &b in &self.neighbors[a] {
                if a < b {
                    out.push((a, b));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeUnit {
    Month,
    Decade,
}

impl TimeUnit {
    pub fn months(self) -> f64 {
        match self {
            TimeUnit::Month => 1.0,
            TimeUnit::Decade => MONTHS_PER_DECADE,
        }
    }
}

impl fmt::Display for TimeUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeUnit::Month => "month",
            TimeUnit::Decade => "decade",
        })
    }
}

impl FromStr for TimeUnit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "month" => Ok(TimeUnit::Month),
            "decade" => Ok(TimeUnit::Decade),
            other => Err(Error::validation(format!("unknown time unit '{other}'"))),
        }
    }
}

/// Exponents of the three mappings, expressed in a time unit of
/// `unit_months` months.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    unit_months: f64,
}

impl ModelParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, unit: TimeUnit) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            unit_months: unit.months(),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn monthly(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(alpha, beta, gamma, TimeUnit::Month)
    }

    pub fn decade(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        Self::new(alpha, beta, gamma, TimeUnit::Decade)
    }

    fn validate(&self) -> Result<()> {
        let ok = |v: f64| v.is_finite() && v >= 0.0;
        if !(ok(self.alpha) && ok(self.beta) && ok(self.gamma)) {
            return Err(Error::validation(format!(
                "parameters must be finite and non-negative: alpha={}, beta={}, gamma={}",
                self.alpha, self.beta, self.gamma
            )));
        }
        Ok(())
    }

    /// Length of the parameters' time unit in months.
    pub fn unit_months(&self) -> f64 {
        self.unit_months
    }

    /// Named unit, if the current unit is exactly a month or a decade.
    pub fn time_unit(&self) -> Option<TimeUnit> {
        [TimeUnit::Month, TimeUnit::Decade]
            .into_iter()
            .find(|u| (u.months() - self.unit_months).abs() <= 1e-9 * u.months())
    }

    pub fn to_unit(&self, unit: TimeUnit) -> Self {
        if self.time_unit() == Some(unit) {
            return *self;
        }
        let f = unit.months() / self.unit_months;
        let mut p = rescale_params(self, f).expect("positive unit ratio");
        p.unit_months = unit.months();
        p
    }

    pub fn to_monthly(&self) -> Self {
        self.to_unit(TimeUnit::Month)
    }

    pub fn to_decade(&self) -> Self {
        self.to_unit(TimeUnit::Decade)
    }
}

/// Converts parameters to a time unit `factor` times longer. Intensities
/// are additive over time, so each exponent is multiplied by `factor`.
pub fn rescale_params(params: &ModelParams, factor: f64) -> Result<ModelParams> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::validation(format!(
            "rescale factor must be positive and finite, got {factor}"
        )));
    }
    if factor == 1.0 {
        return Ok(*params);
    }
    Ok(ModelParams {
        alpha: params.alpha * factor,
        beta: params.beta * factor,
        gamma: params.gamma * factor,
        unit_months: params.unit_months * factor,
    })
}

/// Maps an expert likelihood score in [1, 5] to a vulnerability in [0, 1].
pub fn normalize_likelihood(likelihood: f64) -> Result<f64> {
    if !(1.0..=5.0).contains(&likelihood) {
        return Err(Error::validation(format!(
            "likelihood {likelihood} outside [1, 5]"
        )));
    }
    Ok((likelihood - 1.0) / 4.0)
}

fn check_probability(name: &str, p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::validation(format!("{name} {p} outside [0, 1]")));
    }
    Ok(())
}

fn check_exponent(name: &str, e: f64) -> Result<()> {
    if !(e.is_finite() && e >= 0.0) {
        return Err(Error::validation(format!(
            "{name} must be finite and non-negative, got {e}"
        )));
    }
    Ok(())
}

/// `1 - (1 - p)^exponent`, the shared polynomial form of all three mappings.
fn polynomial_map(p: f64, exponent: f64) -> f64 {
    1.0 - (1.0 - p).powf(exponent)
}

/// Monthly internal materialization probability.
pub fn internal_probability(vulnerability: f64, alpha_monthly: f64) -> Result<f64> {
    check_probability("vulnerability", vulnerability)?;
    check_exponent("alpha", alpha_monthly)?;
    Ok(polynomial_map(vulnerability, alpha_monthly))
}

/// Monthly probability that an active risk stays active.
pub fn continuation_probability(vulnerability: f64, gamma_monthly: f64) -> Result<f64> {
    check_probability("vulnerability", vulnerability)?;
    check_exponent("gamma", gamma_monthly)?;
    Ok(polynomial_map(vulnerability, gamma_monthly))
}

/// Monthly probability that one active neighbor activates the target.
/// Only the target's vulnerability enters.
pub fn external_probability(target_vulnerability: f64, beta_monthly: f64, connected: bool) -> Result<f64> {
    check_probability("vulnerability", target_vulnerability)?;
    check_exponent("beta", beta_monthly)?;
    if !connected {
        return Ok(0.0);
    }
    Ok(polynomial_map(target_vulnerability, beta_monthly))
}

/// Per-month transition probabilities of every risk.
///
/// Influence is stored per target: an active neighbor of `i` activates it
/// with probability `influence[i]`, whichever neighbor it is.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedRates {
    p_int: Vec<f64>,
    p_con: Vec<f64>,
    influence: Vec<f64>,
    graph: InfluenceGraph,
}

impl DerivedRates {
    /// Assembles rates from explicit probabilities.
    pub fn from_parts(
        p_int: Vec<f64>,
        p_con: Vec<f64>,
        influence: Vec<f64>,
        graph: InfluenceGraph,
    ) -> Result<Self> {
        let n = graph.node_count();
        for (name, v) in [("p_int", &p_int), ("p_con", &p_con), ("influence", &influence)] {
            if v.len() != n {
                return Err(Error::validation(format!(
                    "{name} has length {}, graph has {n} nodes",
                    v.len()
                )));
            }
            for &p in v.iter() {
                check_probability(name, p)?;
            }
        }
        Ok(Self {
            p_int,
            p_con,
            influence,
            graph,
        })
    }

    pub fn len(&self) -> usize {
        self.p_int.len()
    }

    pub fn is_empty(&self) -> bool {
        self.p_int.is_empty()
    }

    pub fn p_int(&self) -> &[f64] {
        &self.p_int
    }

    pub fn p_con(&self) -> &[f64] {
        &self.p_con
    }

    /// Per-target influence probability (the non-zero value of column `i`
    /// of the pairwise matrix).
    pub fn influence(&self) -> &[f64] {
        &self.influence
    }

    pub fn graph(&self) -> &InfluenceGraph {
        &self.graph
    }

    /// Probability that active `source` activates inactive `target` in one month.
    pub fn p_ext(&self, source: usize, target: usize) -> f64 {
        if self.graph.is_connected(source, target) {
            self.influence[target]
        } else {
            0.0
        }
    }

    /// Dense `N x N` matrix, row = source, column = target.
    pub fn p_ext_matrix(&self) -> Vec<Vec<f64>> {
        let n = self.len();
        (0..n)
            .map(|j| (0..n).map(|i| self.p_ext(j, i)).collect())
            .collect()
    }

    pub fn lambda_int(&self, i: usize) -> f64 {
        -(-self.p_int[i]).ln_1p()
    }

    pub fn lambda_rec(&self, i: usize) -> f64 {
        -self.p_con[i].ln()
    }

    pub fn lambda_ext(&self, source: usize, target: usize) -> f64 {
        -(-self.p_ext(source, target)).ln_1p()
    }

    /// Same rates with internal materialization switched off.
    pub fn without_internal(&self) -> Self {
        Self {
            p_int: vec![0.0; self.len()],
            ..self.clone()
        }
    }
}

/// Maps a catalog, graph and parameters onto monthly transition probabilities.
pub fn derive_rates(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    params: &ModelParams,
) -> Result<DerivedRates> {
    if catalog.len() != graph.node_count() {
        return Err(Error::validation(format!(
            "catalog has {} risks but graph has {} nodes",
            catalog.len(),
            graph.node_count()
        )));
    }
    let m = params.to_monthly();
    let p = catalog.vulnerabilities();
    let p_int = p
        .iter()
        .map(|&v| internal_probability(v, m.alpha))
        .collect::<Result<Vec<_>>>()?;
    let p_con = p
        .iter()
        .map(|&v| continuation_probability(v, m.gamma))
        .collect::<Result<Vec<_>>>()?;
    let influence = p
        .iter()
        .map(|&v| external_probability(v, m.beta, true))
        .collect::<Result<Vec<_>>>()?;
    DerivedRates::from_parts(p_int, p_con, influence, graph.clone())
}

/// Outgoing probabilities for one risk given the previous state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    /// Probability of `0 -> 1`.
    pub activation: f64,
    /// Probability of `1 -> 1`.
    pub continuation: f64,
    /// Active neighbors at the previous step.
    pub active_neighbors: usize,
}

impl Transition {
    /// Probability of moving from `from` to `to`.
    pub fn probability(&self, from: bool, to: bool) -> f64 {
        match (from, to) {
            (false, true) => self.activation,
            (false, false) => 1.0 - self.activation,
            (true, true) => self.continuation,
            (true, false) => 1.0 - self.continuation,
        }
    }
}

/// Activation probability of an inactive risk with `k` active neighbors.
pub(crate) fn activation_probability(p_int: f64, influence: f64, k: usize) -> f64 {
    let stay = (1.0 - p_int) * powu(1.0 - influence, k);
    1.0 - stay
}

/// `x^k` for a non-negative integer `k` by repeated squaring; `0^0 = 1`.
pub(crate) fn powu(x: f64, k: usize) -> f64 {
    let exp = i32::try_from(k).unwrap_or(i32::MAX);
    x.powi(exp)
}

pub fn transition_probabilities(rates: &DerivedRates, prev: &StateVector, i: usize) -> Transition {
    let k = rates
        .graph
        .neighbors(i)
        .iter()
        .filter(|&&j| prev.is_active(j))
        .count();
    Transition {
        activation: activation_probability(rates.p_int[i], rates.influence[i], k),
        continuation: rates.p_con[i],
        active_neighbors: k,
    }
}

/// Binary state of every risk at one time step.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateVector(Vec<bool>);

impl StateVector {
    pub fn inactive(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bits(bits: &[u8]) -> Result<Self> {
        bits.iter()
            .map(|&b| match b {
                0 => Ok(false),
                1 => Ok(true),
                other => Err(Error::validation(format!("state value {other} is not 0 or 1"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }

    /// State with exactly the given 0-based risks active.
    pub fn with_active(n: usize, active: &[usize]) -> Result<Self> {
        let mut v = vec![false; n];
        for &i in active {
            *v.get_mut(i)
                .ok_or_else(|| Error::validation(format!("risk {} outside 1..{n}", i + 1)))? = true;
        }
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, active: bool) {
        self.0[i] = active;
    }

    pub fn active_count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    pub fn bits(&self) -> impl Iterator<Item = u8> + '_ {
        self.0.iter().map(|&b| u8::from(b))
    }
}

impl From<Vec<bool>> for StateVector {
    fn from(v: Vec<bool>) -> Self {
        Self(v)
    }
}

/// Calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Month {
    pub year: i32,
    pub month: u8,
}

impl Month {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::validation(format!("month {month} not in 1..12")));
        }
        Ok(Self { year, month })
    }

    pub fn next(self) -> Self {
        if self.month == 12 {
            Self {
                year: self.year + 1,
                month: 1,
            }
        } else {
            Self {
                year: self.year,
                month: self.month + 1,
            }
        }
    }
}

impl fmt::Display for Month {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Month {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::validation(format!("month label '{s}' is not YYYY-MM"));
        let (y, m) = s.split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 {
            return Err(bad());
        }
        let year = y.parse::<i32>().map_err(|_| bad())?;
        let month = m.parse::<u8>().map_err(|_| bad())?;
        Month::new(year, month).map_err(|_| bad())
    }
}

/// Monthly binary states of all risks over `T` consecutive months.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoricalSeries {
    months: Vec<Month>,
    states: Vec<StateVector>,
}

impl HistoricalSeries {
    pub fn new(months: Vec<Month>, states: Vec<StateVector>) -> Result<Self> {
        if months.len() != states.len() {
            return Err(Error::validation(format!(
                "{} month labels for {} state rows",
                months.len(),
                states.len()
            )));
        }
        for w in months.windows(2) {
            if w[1] != w[0].next() {
                return Err(Error::validation(format!(
                    "months not consecutive: {} follows {}",
                    w[1], w[0]
                )));
            }
        }
        if let Some(first) = states.first() {
            if let Some(bad) = states.iter().position(|s| s.len() != first.len()) {
                return Err(Error::validation(format!(
                    "month {} has {} risks, expected {}",
                    months[bad],
                    states[bad].len(),
                    first.len()
                )));
            }
        }
        Ok(Self { months, states })
    }

    /// Series with consecutive labels starting at `start`.
    pub fn from_states(start: Month, states: Vec<StateVector>) -> Result<Self> {
        let months = std::iter::successors(Some(start), |m| Some(m.next()))
            .take(states.len())
            .collect();
        Self::new(months, states)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn risk_count(&self) -> usize {
        self.states.first().map_or(0, StateVector::len)
    }

    pub fn months(&self) -> &[Month] {
        &self.months
    }

    pub fn states(&self) -> &[StateVector] {
        &self.states
    }

    pub fn first_state(&self) -> Option<&StateVector> {
        self.states.first()
    }

    /// Mean number of active risks per month.
    pub fn mean_activity(&self) -> f64 {
        if self.states.is_empty() {
            return 0.0;
        }
        let total: usize = self.states.iter().map(StateVector::active_count).sum();
        total as f64 / self.states.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn catalog(likelihoods: &[f64]) -> RiskCatalog {
        RiskCatalog::new(
            likelihoods
                .iter()
                .enumerate()
                .map(|(i, &l)| RiskRecord {
                    id: i + 1,
                    name: format!("risk {}", i + 1),
                    group: RiskGroup::Economic,
                    likelihood: l,
                    stddev: 0.0,
                })
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn normalize_endpoints() {
        assert_eq!(normalize_likelihood(1.0).unwrap(), 0.0);
        assert_eq!(normalize_likelihood(5.0).unwrap(), 1.0);
        assert_eq!(normalize_likelihood(3.0).unwrap(), 0.5);
        assert!(normalize_likelihood(0.99).is_err());
        assert!(normalize_likelihood(5.01).is_err());
        assert!(normalize_likelihood(f64::NAN).is_err());
    }

    #[test]
    fn catalog_error_names_the_risk() {
        let err = RiskCatalog::new(vec![RiskRecord {
            id: 1,
            name: "Water supply crises".into(),
            group: RiskGroup::Societal,
            likelihood: 6.0,
            stddev: 0.1,
        }])
        .unwrap_err();
        assert!(err.to_string().contains("Water supply crises"), "{err}");
    }

    #[test]
    fn catalog_requires_contiguous_ids() {
        let mk = |id| RiskRecord {
            id,
            name: String::new(),
            group: RiskGroup::Economic,
            likelihood: 2.0,
            stddev: 0.0,
        };
        assert!(RiskCatalog::new(vec![mk(1), mk(3)]).is_err());
        assert!(RiskCatalog::new(vec![mk(1), mk(2)]).is_ok());
    }

    #[test]
    fn mapping_examples() {
        assert_eq!(internal_probability(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(internal_probability(0.0, 7.0).unwrap(), 0.0);
        assert_eq!(internal_probability(0.5, 2.0).unwrap(), 0.75);
        assert_eq!(internal_probability(1.0, 0.3).unwrap(), 1.0);
        assert!(internal_probability(0.5, -1.0).is_err());

        assert_eq!(continuation_probability(0.5, 1.0).unwrap(), 0.5);
        assert_eq!(continuation_probability(1.0, 3.56).unwrap(), 1.0);
        // gamma = 427 per decade, evaluated independently via exp/ln.
        let g = 427.0 / 120.0;
        let expected = 1.0 - (g * 0.5f64.ln()).exp();
        let got = continuation_probability(0.5, g).unwrap();
        assert!((got - expected).abs() < 1e-14);
        assert!((got - 0.9151).abs() < 5e-5);

        assert_eq!(external_probability(0.7, 0.2, false).unwrap(), 0.0);
        assert_eq!(external_probability(0.0, 5.0, true).unwrap(), 0.0);
        assert_eq!(external_probability(0.5, 1.0, true).unwrap(), 0.5);
    }

    #[test]
    fn rescale_examples() {
        let p = ModelParams::decade(0.365, 0.14, 427.0).unwrap();
        let m = rescale_params(&p, 1.0 / 120.0).unwrap();
        assert!((m.alpha - 0.0030417).abs() < 1e-7);
        assert_eq!(m.time_unit(), Some(TimeUnit::Month));
        assert_eq!(rescale_params(&p, 1.0).unwrap(), p);
        let back = rescale_params(&m, 120.0).unwrap();
        assert!((back.alpha - p.alpha).abs() < 1e-15);
        assert!((back.gamma - p.gamma).abs() < 1e-12);
        assert_eq!(back.time_unit(), Some(TimeUnit::Decade));
        assert!(rescale_params(&p, 0.0).is_err());
        assert!(rescale_params(&p, -2.0).is_err());
    }

    #[test]
    fn beta_zero_disconnects() {
        let c = catalog(&[2.0, 3.0, 4.0]);
        let g = InfluenceGraph::complete(3);
        let r = derive_rates(&c, &g, &ModelParams::monthly(0.01, 0.0, 2.0).unwrap()).unwrap();
        assert!(r.p_ext_matrix().iter().flatten().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_graph_decade_alpha_one() {
        let c = catalog(&[2.0, 3.5]);
        let r = derive_rates(
            &c,
            &InfluenceGraph::empty(2),
            &ModelParams::decade(1.0, 0.5, 100.0).unwrap(),
        )
        .unwrap();
        for (i, p) in c.vulnerabilities().into_iter().enumerate() {
            let expected = 1.0 - (1.0 - p).powf(1.0 / 120.0);
            assert!((r.p_int()[i] - expected).abs() < 1e-15);
            assert_eq!(r.p_ext(0, 1), 0.0);
        }
    }

    #[test]
    fn symmetric_inputs_give_identical_rows() {
        let c = catalog(&[3.0; 4]);
        let r = derive_rates(
            &c,
            &InfluenceGraph::complete(4),
            &ModelParams::monthly(0.01, 0.02, 3.0).unwrap(),
        )
        .unwrap();
        let m = r.p_ext_matrix();
        for i in 1..4 {
            assert_eq!(r.p_int()[i], r.p_int()[0]);
            assert_eq!(r.p_con()[i], r.p_con()[0]);
            let mut row = m[i].clone();
            row.remove(i);
            let mut row0 = m[0].clone();
            row0.remove(0);
            assert_eq!(row, row0);
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let c = catalog(&[2.0, 3.0]);
        let p = ModelParams::monthly(0.1, 0.1, 1.0).unwrap();
        assert!(derive_rates(&c, &InfluenceGraph::empty(3), &p).is_err());
    }

    #[test]
    fn transition_examples() {
        let c = catalog(&[3.0, 3.0]);
        let g = InfluenceGraph::from_edges(2, [(0, 1)]).unwrap();
        let r = derive_rates(&c, &g, &ModelParams::monthly(1.0, 1.0, 2.0).unwrap()).unwrap();
        let none = StateVector::inactive(2);
        let t = transition_probabilities(&r, &none, 0);
        assert_eq!(t.active_neighbors, 0);
        assert_eq!(t.activation, r.p_int()[0]);

        let one = StateVector::with_active(2, &[1]).unwrap();
        let t = transition_probabilities(&r, &one, 0);
        assert!((t.activation - 0.75).abs() < 1e-15);

        let t = transition_probabilities(&r, &one, 1);
        assert_eq!(t.continuation, r.p_con()[1]);
        for from in [false, true] {
            let s = t.probability(from, false) + t.probability(from, true);
            assert!((s - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn graph_validation() {
        assert!(InfluenceGraph::from_edges(3, [(0, 0)]).is_err());
        assert!(InfluenceGraph::from_edges(3, [(0, 1), (1, 0)]).is_err());
        assert!(InfluenceGraph::from_edges(3, [(0, 3)]).is_err());
        let asym = vec![vec![0, 1], vec![0, 0]];
        assert!(InfluenceGraph::from_adjacency(&asym).is_err());
        let sym = vec![vec![0, 1], vec![1, 0]];
        assert_eq!(InfluenceGraph::from_adjacency(&sym).unwrap().edge_count(), 1);
        assert!(InfluenceGraph::from_weighted_edges(2, [(0, 1, 0)]).is_err());
        assert_eq!(InfluenceGraph::complete(50).edge_count(), 1225);
    }

    #[test]
    fn group_labels() {
        assert_eq!("3".parse::<RiskGroup>().unwrap(), RiskGroup::Geopolitical);
        assert_eq!("Technological".parse::<RiskGroup>().unwrap(), RiskGroup::Technological);
        assert!("6".parse::<RiskGroup>().is_err());
        assert!("cosmic".parse::<RiskGroup>().is_err());
    }

    #[test]
    fn months_must_be_consecutive() {
        let a: Month = "2000-12".parse().unwrap();
        assert_eq!(a.next().to_string(), "2001-01");
        let s = StateVector::inactive(1);
        let gap = vec![a, "2001-02".parse().unwrap()];
        let err = HistoricalSeries::new(gap, vec![s.clone(), s]).unwrap_err();
        assert!(err.to_string().contains("2001-02"));
        assert!("2000-13".parse::<Month>().is_err());
        assert!("2000-1".parse::<Month>().is_err());
    }
}
