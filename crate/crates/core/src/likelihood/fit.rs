use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::TransitionCounts;
use crate::error::{Error, Result};
use crate::model::{
    derive_rates, DerivedRates, HistoricalSeries, InfluenceGraph, ModelParams, RiskCatalog,
    MONTHS_PER_DECADE,
};

/// Constrained forms of the model that can be fitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelVariant {
    /// `alpha`, `beta`, `gamma` free.
    Network,
    /// `beta = 0`.
    Disconnected,
    /// `beta = 0` and `alpha = 1` per decade, so the decade-scale internal
    /// probability equals the normalized expert likelihood.
    ExpertBased,
    /// Ignores expert likelihoods and the graph: shared internal,
    /// influence and continuation intensities on a complete graph. Its
    /// three fitted values are reported in the `alpha`, `beta`, `gamma`
    /// slots as `lambda_int`, `lambda_ext`, `lambda_con`.
    Uniform,
}

impl ModelVariant {
    pub const ALL: [ModelVariant; 4] = [
        ModelVariant::Network,
        ModelVariant::Disconnected,
        ModelVariant::ExpertBased,
        ModelVariant::Uniform,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::Network => "network",
            ModelVariant::Disconnected => "disconnected",
            ModelVariant::ExpertBased => "expert_based",
            ModelVariant::Uniform => "uniform",
        }
    }

    pub fn free_parameters(self) -> usize {
        self.free_mask().iter().filter(|&&f| f).count()
    }

    fn free_mask(self) -> [bool; 3] {
        match self {
            ModelVariant::Network | ModelVariant::Uniform => [true, true, true],
            ModelVariant::Disconnected => [true, false, true],
            ModelVariant::ExpertBased => [false, false, true],
        }
    }

    /// Values of the pinned parameters (monthly scale).
    fn pinned(self) -> [Option<f64>; 3] {
        match self {
            ModelVariant::Network | ModelVariant::Uniform => [None, None, None],
            ModelVariant::Disconnected => [None, Some(0.0), None],
            ModelVariant::ExpertBased => [Some(1.0 / MONTHS_PER_DECADE), Some(0.0), None],
        }
    }
}

impl fmt::Display for ModelVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "network" => Ok(ModelVariant::Network),
            "disconnected" => Ok(ModelVariant::Disconnected),
            "expert_based" | "expert" => Ok(ModelVariant::ExpertBased),
            "uniform" => Ok(ModelVariant::Uniform),
            other => Err(Error::validation(format!("unknown model variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Param {
    Alpha,
    Beta,
    Gamma,
}

impl Param {
    pub const ALL: [Param; 3] = [Param::Alpha, Param::Beta, Param::Gamma];

    fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Param::Alpha => "alpha",
            Param::Beta => "beta",
            Param::Gamma => "gamma",
        }
    }
}

impl fmt::Display for Param {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Param {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Param::ALL
            .into_iter()
            .find(|p| p.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::validation(format!("unknown parameter '{s}'")))
    }
}

/// Grid-scan settings. Boxes are monthly-scale `(lo, hi)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    pub alpha: (f64, f64),
    /// Lower end is 0; zero is always a grid point.
    pub beta: (f64, f64),
    pub gamma: (f64, f64),
    /// Smallest positive `beta` on the coarse grid.
    pub beta_floor: f64,
    /// Grid points per free axis and pass.
    pub points: usize,
    /// Stop once every free axis has relative grid spacing at most this.
    pub rel_precision: f64,
    pub max_refinements: usize,
    /// Keep every evaluated point in the result.
    pub keep_trace: bool,
    /// Extra monthly points `[alpha, beta, gamma]` evaluated in the coarse
    /// pass (pinned coordinates are overridden by the variant).
    pub anchors: Vec<[f64; 3]>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self {
            alpha: (1e-5, 1.0),
            beta: (0.0, 1.0),
            gamma: (1e-3, 100.0),
            beta_floor: 1e-6,
            points: 25,
            rel_precision: 1e-3,
            max_refinements: 30,
            keep_trace: false,
            anchors: Vec::new(),
        }
    }
}

impl SearchConfig {
    fn validate(&self) -> Result<()> {
        let pos_box = |name: &str, (lo, hi): (f64, f64)| {
            if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && hi > lo) {
                return Err(Error::validation(format!(
                    "{name} search box ({lo}, {hi}) must satisfy 0 < lo < hi"
                )));
            }
            Ok(())
        };
        pos_box("alpha", self.alpha)?;
        pos_box("gamma", self.gamma)?;
        pos_box("beta", (self.beta_floor, self.beta.1))?;
        if self.beta.0 != 0.0 {
            return Err(Error::validation("beta search box must start at 0"));
        }
        if self.points < 3 {
            return Err(Error::validation("at least 3 grid points per axis"));
        }
        if !(self.rel_precision > 0.0) {
            return Err(Error::validation("relative precision must be positive"));
        }
        Ok(())
    }

    fn bounds(&self, axis: usize) -> (f64, f64) {
        match axis {
            0 => self.alpha,
            1 => self.beta,
            _ => self.gamma,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl FittedParams {
    fn from_point(p: [f64; 3]) -> Self {
        Self {
            alpha: p[0],
            beta: p[1],
            gamma: p[2],
        }
    }

    pub fn get(&self, p: Param) -> f64 {
        match p {
            Param::Alpha => self.alpha,
            Param::Beta => self.beta,
            Param::Gamma => self.gamma,
        }
    }

    fn scaled(&self, f: f64) -> Self {
        Self {
            alpha: self.alpha * f,
            beta: self.beta * f,
            gamma: self.gamma * f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub log_likelihood: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub variant: ModelVariant,
    pub monthly: FittedParams,
    pub decade: FittedParams,
    pub log_likelihood: f64,
    pub free_parameters: usize,
    pub boundary_hit: bool,
    pub boundary_params: Vec<Param>,
    pub degenerate_fit: bool,
    pub refinements: usize,
    pub evaluations: usize,
    /// Best log-likelihood after the coarse pass and after each refinement.
    pub best_by_pass: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

impl FitResult {
    /// Fitted values as monthly model parameters. For the uniform variant
    /// these are the shared intensities.
    pub fn params(&self) -> ModelParams {
        ModelParams::monthly(self.monthly.alpha, self.monthly.beta, self.monthly.gamma)
            .expect("fitted parameters lie in the search box")
    }

    /// Transition probabilities implied by the fit.
    pub fn rates(&self, catalog: &RiskCatalog, graph: &InfluenceGraph) -> Result<DerivedRates> {
        fit_with_rates_of(self.variant, &self.params(), catalog, graph)
    }
}

/// Transition probabilities of `variant` at monthly parameters `params`.
pub fn fit_with_rates_of(
    variant: ModelVariant,
    params: &ModelParams,
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
) -> Result<DerivedRates> {
    let m = params.to_monthly();
    match variant {
        ModelVariant::Uniform => {
            let n = catalog.len();
            let prob = |l: f64| -(-l).exp_m1();
            DerivedRates::from_parts(
                vec![prob(m.alpha); n],
                vec![prob(m.gamma); n],
                vec![prob(m.beta); n],
                InfluenceGraph::complete(n),
            )
        }
        _ => derive_rates(catalog, graph, &m),
    }
}

fn counts_for(
    variant: ModelVariant,
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    history: &HistoricalSeries,
) -> Result<TransitionCounts> {
    if catalog.len() != graph.node_count() {
        return Err(Error::validation(format!(
            "catalog has {} risks but graph has {} nodes",
            catalog.len(),
            graph.node_count()
        )));
    }
    match variant {
        ModelVariant::Uniform => {
            let n = catalog.len();
            TransitionCounts::new(&vec![-1.0; n], &InfluenceGraph::complete(n), history)
        }
        _ => {
            let ln_keep: Vec<f64> = catalog
                .vulnerabilities()
                .iter()
                .map(|&p| (-p).ln_1p())
                .collect();
            TransitionCounts::new(&ln_keep, graph, history)
        }
    }
}

fn log_space(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| {
            if i == 0 {
                lo
            } else if i + 1 == n {
                hi
            } else {
                (a + (b - a) * i as f64 / (n - 1) as f64).exp()
            }
        })
        .collect()
}

struct Scan {
    best: [f64; 3],
    best_ll: f64,
    evaluations: usize,
}

/// Evaluates the cartesian product of the three axes. The objective
/// separates into an `(alpha, beta)` part and a `gamma` part, which are
/// tabulated independently and summed.
fn scan(counts: &TransitionCounts, axes: &[Vec<f64>; 3], trace: Option<&mut Vec<TracePoint>>) -> Scan {
    let pairs: Vec<(f64, f64)> = axes[0]
        .iter()
        .flat_map(|&a| axes[1].iter().map(move |&b| (a, b)))
        .collect();
    let act: Vec<f64> = pairs
        .par_iter()
        .map(|&(a, b)| counts.activation_part(a, b))
        .collect();
    let cont: Vec<f64> = axes[2].iter().map(|&c| counts.continuation_part(c)).collect();
    let mut best = [axes[0][0], axes[1][0], axes[2][0]];
    let mut best_ll = f64::NEG_INFINITY;
    let mut trace = trace;
    for (&(a, b), &la) in pairs.iter().zip(&act) {
        for (&c, &lc) in axes[2].iter().zip(&cont) {
            let ll = la + lc;
            if let Some(t) = trace.as_deref_mut() {
                t.push(TracePoint {
                    alpha: a,
                    beta: b,
                    gamma: c,
                    log_likelihood: ll,
                });
            }
            if ll > best_ll {
                best_ll = ll;
                best = [a, b, c];
            }
        }
    }
    Scan {
        best,
        best_ll,
        evaluations: pairs.len() * axes[2].len(),
    }
}

/// Maximum-likelihood fit by coarse log-spaced grid scan followed by
/// repeated local refinement.
///
/// Each refinement shrinks the log-width of every free axis by 4 around
/// the incumbent and rescans; the incumbent is only replaced by a strictly
/// better point, so the best log-likelihood never decreases.
pub fn fit(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    history: &HistoricalSeries,
    variant: ModelVariant,
    search: &SearchConfig,
) -> Result<FitResult> {
    search.validate()?;
    let counts = counts_for(variant, catalog, graph, history)?;
    let free = variant.free_mask();
    let pinned = variant.pinned();
    let mut trace = search.keep_trace.then(Vec::new);

    let coarse_axis = |axis: usize| -> Vec<f64> {
        if let Some(v) = pinned[axis] {
            return vec![v];
        }
        let (lo, hi) = search.bounds(axis);
        if axis == 1 {
            let mut v = vec![0.0];
            v.extend(log_space(search.beta_floor, hi, search.points - 1));
            v
        } else {
            log_space(lo, hi, search.points)
        }
    };
    let axes = [coarse_axis(0), coarse_axis(1), coarse_axis(2)];
    let s = scan(&counts, &axes, trace.as_mut());
    let mut best = s.best;
    let mut best_ll = s.best_ll;
    let mut evaluations = s.evaluations;

    for anchor in &search.anchors {
        let mut p = *anchor;
        for axis in 0..3 {
            if let Some(v) = pinned[axis] {
                p[axis] = v;
            }
        }
        let inside = (0..3).all(|axis| {
            let (lo, hi) = search.bounds(axis);
            pinned[axis].is_some() || (p[axis] >= lo && p[axis] <= hi)
        });
        if !inside {
            continue;
        }
        let ll = counts.evaluate(p[0], p[1], p[2]);
        evaluations += 1;
        if let Some(t) = trace.as_mut() {
            t.push(TracePoint {
                alpha: p[0],
                beta: p[1],
                gamma: p[2],
                log_likelihood: ll,
            });
        }
        if ll > best_ll {
            best_ll = ll;
            best = p;
        }
    }

    let mut best_by_pass = vec![best_ll];

    // Log-widths of the current windows.
    let mut width = [0.0f64; 3];
    for axis in 0..3 {
        let (lo, hi) = search.bounds(axis);
        let lo = if axis == 1 { search.beta_floor } else { lo };
        width[axis] = hi.ln() - lo.ln();
    }
    let spacing_ok = |w: f64| (w / (search.points - 1) as f64).exp_m1() <= search.rel_precision;
    let refinable = |axis: usize, best: &[f64; 3]| free[axis] && !(axis == 1 && best[1] == 0.0);

    let mut refinements = 0;
    while refinements < search.max_refinements
        && (0..3).any(|axis| refinable(axis, &best) && !spacing_ok(width[axis]))
    {
        refinements += 1;
        let mut axes: [Vec<f64>; 3] = Default::default();
        for axis in 0..3 {
            if !refinable(axis, &best) {
                axes[axis] = vec![best[axis]];
                continue;
            }
            width[axis] /= 4.0;
            let (lo, hi) = search.bounds(axis);
            let lo = if axis == 1 { search.beta_floor } else { lo };
            let (box_lo, box_hi) = (lo.ln(), hi.ln());
            let mut w_lo = best[axis].ln() - width[axis] / 2.0;
            let mut w_hi = best[axis].ln() + width[axis] / 2.0;
            if w_lo < box_lo {
                w_hi += box_lo - w_lo;
                w_lo = box_lo;
            }
            if w_hi > box_hi {
                w_lo -= w_hi - box_hi;
                w_hi = box_hi;
            }
            let v_lo = if w_lo <= box_lo { lo } else { w_lo.exp() };
            let v_hi = if w_hi >= box_hi { hi } else { w_hi.exp() };
            axes[axis] = log_space(v_lo, v_hi.min(hi), search.points);
        }
        let s = scan(&counts, &axes, trace.as_mut());
        evaluations += s.evaluations;
        if s.best_ll > best_ll {
            best_ll = s.best_ll;
            best = s.best;
        }
        best_by_pass.push(best_ll);
    }

    let mut boundary_params = Vec::new();
    for p in Param::ALL {
        let axis = p.index();
        if !free[axis] {
            continue;
        }
        let (lo, hi) = search.bounds(axis);
        let v = best[axis];
        let tol = search.rel_precision;
        let at_lo = if axis == 1 {
            v <= search.beta_floor * (1.0 + tol)
        } else {
            v <= lo * (1.0 + tol)
        };
        if at_lo || v >= hi * (1.0 - tol) {
            boundary_params.push(p);
        }
    }
    let needs_activation = free[0] || free[1];
    let degenerate_fit = (needs_activation && counts.activations() == 0)
        || (free[2] && counts.active_months() == 0);

    let monthly = FittedParams::from_point(best);
    Ok(FitResult {
        variant,
        monthly,
        decade: monthly.scaled(MONTHS_PER_DECADE),
        log_likelihood: best_ll,
        free_parameters: variant.free_parameters(),
        boundary_hit: !boundary_params.is_empty(),
        boundary_params,
        degenerate_fit,
        refinements,
        evaluations,
        best_by_pass,
        trace,
    })
}

/// Fits several variants, restricted ones first, seeding each nested fit
/// with the optima of the models it contains. This guarantees that a full
/// model never reports a lower maximum than a model nested in it. Results
/// come back in the order requested.
pub fn fit_variants(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    history: &HistoricalSeries,
    variants: &[ModelVariant],
    search: &SearchConfig,
) -> Result<Vec<FitResult>> {
    const ORDER: [ModelVariant; 4] = [
        ModelVariant::ExpertBased,
        ModelVariant::Disconnected,
        ModelVariant::Network,
        ModelVariant::Uniform,
    ];
    let mut done: Vec<FitResult> = Vec::new();
    for v in ORDER {
        if !variants.contains(&v) {
            continue;
        }
        let mut s = search.clone();
        if v != ModelVariant::Uniform {
            s.anchors.extend(
                done.iter()
                    .filter(|f| f.variant != ModelVariant::Uniform)
                    .map(|f| [f.monthly.alpha, f.monthly.beta, f.monthly.gamma]),
            );
        }
        done.push(fit(catalog, graph, history, v, &s)?);
    }
    let mut out = Vec::with_capacity(variants.len());
    for v in variants {
        let f = done
            .iter()
            .find(|f| f.variant == *v)
            .ok_or_else(|| Error::validation(format!("variant {v} requested twice")))?;
        out.push(f.clone());
    }
    Ok(out)
}

/// Values of one parameter along a surface axis (monthly scale).
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub param: Param,
    pub values: Vec<f64>,
}

impl Axis {
    pub fn linear(param: Param, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect(),
        };
        Self { param, values }
    }

    pub fn log(param: Param, lo: f64, hi: f64, n: usize) -> Self {
        let values = match n {
            0 => Vec::new(),
            1 => vec![lo],
            _ => log_space(lo, hi, n),
        };
        Self { param, values }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub log_likelihood: f64,
}

/// Network-model log-likelihood over a 2-D grid with the third parameter
/// pinned. Rows are ordered with `x` outermost.
pub fn likelihood_surface(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    history: &HistoricalSeries,
    pinned: (Param, f64),
    x: &Axis,
    y: &Axis,
) -> Result<Vec<SurfacePoint>> {
    if x.param == y.param || pinned.0 == x.param || pinned.0 == y.param {
        return Err(Error::validation(
            "surface needs three distinct parameters: one pinned, two scanned",
        ));
    }
    let all = x.values.iter().chain(&y.values).chain(std::iter::once(&pinned.1));
    if let Some(v) = all.into_iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::validation(format!(
            "surface parameter value {v} must be finite and non-negative"
        )));
    }
    let counts = counts_for(ModelVariant::Network, catalog, graph, history)?;
    let cells: Vec<(f64, f64)> = x
        .values
        .iter()
        .flat_map(|&a| y.values.iter().map(move |&b| (a, b)))
        .collect();
    Ok(cells
        .par_iter()
        .map(|&(xv, yv)| {
            let mut p = [0.0; 3];
            p[pinned.0.index()] = pinned.1;
            p[x.param.index()] = xv;
            p[y.param.index()] = yv;
            SurfacePoint {
                x: xv,
                y: yv,
                log_likelihood: counts.evaluate(p[0], p[1], p[2]),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::likelihood::log_likelihood;
    use crate::model::{Month, RiskGroup, RiskRecord, StateVector};

    fn catalog(likelihoods: &[f64]) -> RiskCatalog {
        RiskCatalog::new(
            likelihoods
                .iter()
                .enumerate()
                .map(|(i, &l)| RiskRecord {
                    id: i + 1,
                    name: format!("r{}", i + 1),
                    group: RiskGroup::Economic,
                    likelihood: l,
                    stddev: 0.1,
                })
                .collect(),
        )
        .unwrap()
    }

    fn small_history() -> (RiskCatalog, InfluenceGraph, HistoricalSeries) {
        let c = catalog(&[2.0, 3.0, 3.5, 4.0]);
        let g = InfluenceGraph::from_edges(4, [(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let rows: Vec<StateVector> = [
            [0, 0, 1, 0],
            [0, 1, 1, 0],
            [1, 1, 1, 0],
            [1, 1, 0, 1],
            [0, 1, 0, 1],
            [0, 0, 0, 1],
            [0, 0, 1, 1],
            [0, 0, 1, 0],
        ]
        .iter()
        .map(|r| StateVector::from_bits(r).unwrap())
        .collect();
        let h = HistoricalSeries::from_states(Month::new(2000, 1).unwrap(), rows).unwrap();
        (c, g, h)
    }

    #[test]
    fn counts_agree_with_direct_likelihood() {
        let (c, g, h) = small_history();
        for variant in ModelVariant::ALL {
            let counts = counts_for(variant, &c, &g, &h).unwrap();
            for p in [[0.01, 0.02, 1.5], [0.3, 0.0, 0.2], [1e-4, 0.5, 20.0]] {
                let params = ModelParams::monthly(p[0], p[1], p[2]).unwrap();
                let rates = fit_with_rates_of(variant, &params, &c, &g).unwrap();
                let direct = log_likelihood(&rates, &h).unwrap().value;
                let fast = counts.evaluate(p[0], p[1], p[2]);
                assert!(
                    (direct - fast).abs() < 1e-9 * direct.abs().max(1.0),
                    "{variant}: {direct} vs {fast}"
                );
            }
        }
    }

    #[test]
    fn fit_stays_in_box_and_never_gets_worse() {
        let (c, g, h) = small_history();
        let search = SearchConfig::default();
        for variant in ModelVariant::ALL {
            let r = fit(&c, &g, &h, variant, &search).unwrap();
            assert!(r.log_likelihood <= 0.0);
            assert!(r.best_by_pass.windows(2).all(|w| w[1] >= w[0]));
            let m = r.monthly;
            assert!(m.alpha >= search.alpha.0 && m.alpha <= search.alpha.1 || variant == ModelVariant::ExpertBased);
            assert!(m.beta >= 0.0 && m.beta <= search.beta.1);
            assert!(m.gamma >= search.gamma.0 && m.gamma <= search.gamma.1);
            assert_eq!(r.free_parameters, variant.free_parameters());
        }
    }

    #[test]
    fn variant_constraints_hold() {
        let (c, g, h) = small_history();
        let s = SearchConfig::default();
        let d = fit(&c, &g, &h, ModelVariant::Disconnected, &s).unwrap();
        assert_eq!(d.monthly.beta, 0.0);
        let e = fit(&c, &g, &h, ModelVariant::ExpertBased, &s).unwrap();
        assert_eq!(e.monthly.alpha, 1.0 / 120.0);
        assert!((e.decade.alpha - 1.0).abs() < 1e-12);
        assert_eq!(e.monthly.beta, 0.0);
    }

    #[test]
    fn expert_anchor_bounds_disconnected() {
        let (c, g, h) = small_history();
        let e = fit(&c, &g, &h, ModelVariant::ExpertBased, &SearchConfig::default()).unwrap();
        let s = SearchConfig {
            anchors: vec![[e.monthly.alpha, 0.0, e.monthly.gamma]],
            ..Default::default()
        };
        let d = fit(&c, &g, &h, ModelVariant::Disconnected, &s).unwrap();
        assert!(d.log_likelihood >= e.log_likelihood);
    }

    #[test]
    fn all_inactive_history_hits_lower_alpha_bound() {
        let c = catalog(&[3.0, 3.0]);
        let g = InfluenceGraph::from_edges(2, [(0, 1)]).unwrap();
        let rows = vec![StateVector::inactive(2); 24];
        let h = HistoricalSeries::from_states(Month::new(2000, 1).unwrap(), rows).unwrap();
        let r = fit(&c, &g, &h, ModelVariant::Network, &SearchConfig::default()).unwrap();
        assert_eq!(r.monthly.alpha, 1e-5);
        assert!(r.boundary_hit);
        assert!(r.boundary_params.contains(&Param::Alpha));
        assert!(r.degenerate_fit);
    }

    #[test]
    fn unit_surface_equals_point_likelihood() {
        let (c, g, h) = small_history();
        let x = Axis::linear(Param::Alpha, 0.02, 0.02, 1);
        let y = Axis::linear(Param::Beta, 0.1, 0.1, 1);
        let s = likelihood_surface(&c, &g, &h, (Param::Gamma, 2.0), &x, &y).unwrap();
        assert_eq!(s.len(), 1);
        let rates = derive_rates(&c, &g, &ModelParams::monthly(0.02, 0.1, 2.0).unwrap()).unwrap();
        let ll = log_likelihood(&rates, &h).unwrap().value;
        assert!((s[0].log_likelihood - ll).abs() < 1e-10);
    }

    #[test]
    fn surface_rejects_repeated_params() {
        let (c, g, h) = small_history();
        let x = Axis::linear(Param::Alpha, 0.01, 0.1, 3);
        assert!(likelihood_surface(&c, &g, &h, (Param::Gamma, 2.0), &x, &x).is_err());
        let y = Axis::linear(Param::Beta, 0.01, 0.1, 3);
        assert!(likelihood_surface(&c, &g, &h, (Param::Alpha, 2.0), &x, &y).is_err());
    }

    #[test]
    fn variant_names_parse() {
        for v in ModelVariant::ALL {
            assert_eq!(v.name().parse::<ModelVariant>().unwrap(), v);
        }
        assert_eq!("expert-based".parse::<ModelVariant>().unwrap(), ModelVariant::ExpertBased);
        assert!("bogus".parse::<ModelVariant>().is_err());
    }
}
