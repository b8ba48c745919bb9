//! Discrete-time Monte-Carlo engine.
//!
//! Each month every risk is updated synchronously from the previous state
//! vector: an inactive risk with `k` active neighbors activates with
//! probability `1 - (1 - p_int) (1 - e)^k`, an active one stays active with
//! probability `p_con`. One uniform draw is consumed per risk per step, in
//! ascending risk order (see [`crate::rng`] for the draw definition).
//!
//! Replicas are independent streams keyed by `(master_seed, replica)`.
//! Aggregates are either integer counts, or floating sums reduced in fixed
//! chunks of replicas in index order, so reports do not depend on the
//! number of worker threads.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    activation_probability, derive_rates, transition_probabilities, DerivedRates, InfluenceGraph,
    ModelParams, RiskCatalog, StateVector,
};
use crate::rng::Stream;

const CHUNK: usize = 256;

/// Draws the next state from the previous one.
pub fn step(state: &StateVector, rates: &DerivedRates, rng: &mut Stream) -> StateVector {
    let next: Vec<bool> = (0..state.len())
        .map(|i| {
            let t = transition_probabilities(rates, state, i);
            let u = rng.uniform();
            if state.is_active(i) {
                u < t.continuation
            } else {
                u < t.activation
            }
        })
        .collect();
    next.into()
}

/// Precomputed transition tables for fast stepping.
#[derive(Debug, Clone)]
pub struct Kernel<'a> {
    rates: &'a DerivedRates,
    /// `activation[i][k]` for `k` active neighbors.
    activation: Vec<Vec<f64>>,
}

impl<'a> Kernel<'a> {
    pub fn new(rates: &'a DerivedRates) -> Self {
        let g = rates.graph();
        let activation = (0..rates.len())
            .map(|i| {
                (0..=g.degree(i))
                    .map(|k| activation_probability(rates.p_int()[i], rates.influence()[i], k))
                    .collect()
            })
            .collect();
        Self { rates, activation }
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }
}

/// Mutable state of one replica, with active-neighbor counts kept
/// up to date incrementally.
#[derive(Debug, Clone)]
pub struct Walker<'k, 'a> {
    kernel: &'k Kernel<'a>,
    state: Vec<bool>,
    active_neighbors: Vec<u32>,
    active: usize,
    flipped: Vec<usize>,
}

impl<'k, 'a> Walker<'k, 'a> {
    pub fn new(kernel: &'k Kernel<'a>, initial: &StateVector) -> Self {
        let n = kernel.len();
        assert_eq!(initial.len(), n, "initial state has wrong length");
        let mut w = Self {
            kernel,
            state: vec![false; n],
            active_neighbors: vec![0; n],
            active: 0,
            flipped: Vec::with_capacity(n),
        };
        for i in 0..n {
            if initial.is_active(i) {
                w.toggle(i);
            }
        }
        w
    }

    fn toggle(&mut self, i: usize) {
        let on = !self.state[i];
        self.state[i] = on;
        for &j in self.kernel.rates.graph().neighbors(i) {
            if on {
                self.active_neighbors[j] += 1;
            } else {
                self.active_neighbors[j] -= 1;
            }
        }
        if on {
            self.active += 1;
        } else {
            self.active -= 1;
        }
    }

    /// One synchronous step.
    pub fn advance(&mut self, rng: &mut Stream) {
        let p_con = self.kernel.rates.p_con();
        self.flipped.clear();
        for i in 0..self.state.len() {
            let u = rng.uniform();
            let next = if self.state[i] {
                u < p_con[i]
            } else {
                u < self.kernel.activation[i][self.active_neighbors[i] as usize]
            };
            if next != self.state[i] {
                self.flipped.push(i);
            }
        }
        for idx in 0..self.flipped.len() {
            let i = self.flipped[idx];
            self.toggle(i);
        }
    }

    pub fn is_active(&self, i: usize) -> bool {
        self.state[i]
    }

    pub fn active_count(&self) -> usize {
        self.active
    }

    pub fn state(&self) -> StateVector {
        self.state.clone().into()
    }
}

/// Simulates one trajectory of `steps` transitions; the result has
/// `steps + 1` states, the first being `initial`.
pub fn simulate(
    rates: &DerivedRates,
    initial: &StateVector,
    steps: usize,
    rng: &mut Stream,
) -> Vec<StateVector> {
    let kernel = Kernel::new(rates);
    let mut w = Walker::new(&kernel, initial);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(initial.clone());
    for _ in 0..steps {
        w.advance(rng);
        out.push(w.state());
    }
    out
}

#[derive(Debug, Clone, PartialEq, Default)]
pub enum InitialState {
    #[default]
    Inactive,
    State(StateVector),
}

impl InitialState {
    fn resolve(&self, n: usize) -> Result<StateVector> {
        match self {
            InitialState::Inactive => Ok(StateVector::inactive(n)),
            InitialState::State(s) if s.len() == n => Ok(s.clone()),
            InitialState::State(s) => Err(Error::validation(format!(
                "initial state has {} risks, model has {n}",
                s.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    /// Total steps per replica, including burn-in.
    pub steps: usize,
    pub burn_in: usize,
    pub replicas: usize,
    pub master_seed: u64,
    pub initial_state: InitialState,
    /// Percentiles (0..=100) of the active-count distribution to report.
    pub percentiles: Vec<f64>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            steps: 2200,
            burn_in: 200,
            replicas: 10_000,
            master_seed: 0,
            initial_state: InitialState::Inactive,
            percentiles: vec![10.0, 50.0, 90.0],
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        if self.burn_in >= self.steps {
            return Err(Error::validation(format!(
                "burn-in {} must be smaller than steps {}",
                self.burn_in, self.steps
            )));
        }
        if self.replicas == 0 {
            return Err(Error::validation("replicas must be at least 1"));
        }
        if let Some(p) = self.percentiles.iter().find(|p| !(0.0..=100.0).contains(*p)) {
            return Err(Error::validation(format!("percentile {p} outside [0, 100]")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceReport {
    /// Fraction of post-burn-in steps each risk was active, pooled over replicas.
    pub fractions: Vec<f64>,
    /// Standard error of each fraction from the spread across replicas.
    pub fraction_se: Vec<f64>,
    pub mean_activity: f64,
    pub activity_std: f64,
    /// `(percentile, active count)` pairs.
    pub percentiles: Vec<(f64, usize)>,
    /// Pooled counts of the number of simultaneously active risks.
    pub activity_histogram: Vec<u64>,
    /// Mean number of active risks at each step `0..=steps`, over replicas.
    pub activity_by_step: Vec<f64>,
    pub replicas: usize,
    pub samples_per_replica: usize,
}

#[derive(Clone)]
struct PersistenceAcc {
    active_steps: Vec<u64>,
    active_steps_sq: Vec<u64>,
    histogram: Vec<u64>,
    by_step: Vec<u64>,
}

impl PersistenceAcc {
    fn new(n: usize, steps: usize) -> Self {
        Self {
            active_steps: vec![0; n],
            active_steps_sq: vec![0; n],
            histogram: vec![0; n + 1],
            by_step: vec![0; steps + 1],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        let add = |a: &mut [u64], b: &[u64]| a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        add(&mut self.active_steps, &other.active_steps);
        add(&mut self.active_steps_sq, &other.active_steps_sq);
        add(&mut self.histogram, &other.histogram);
        add(&mut self.by_step, &other.by_step);
        self
    }
}

/// Persistence experiment on explicit rates.
pub fn persistence(rates: &DerivedRates, config: &SimConfig) -> Result<PersistenceReport> {
    config.validate()?;
    let n = rates.len();
    let initial = config.initial_state.resolve(n)?;
    let kernel = Kernel::new(rates);
    let chunks = config.replicas.div_ceil(CHUNK);
    let acc = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = PersistenceAcc::new(n, config.steps);
            let mut counts = vec![0u64; n];
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(config.replicas);
            for r in lo..hi {
                let mut rng = Stream::for_replica(config.master_seed, r as u64);
                let mut w = Walker::new(&kernel, &initial);
                counts.iter_mut().for_each(|x| *x = 0);
                acc.by_step[0] += w.active_count() as u64;
                for t in 1..=config.steps {
                    w.advance(&mut rng);
                    acc.by_step[t] += w.active_count() as u64;
                    if t > config.burn_in {
                        acc.histogram[w.active_count()] += 1;
                        for (i, c) in counts.iter_mut().enumerate() {
                            *c += u64::from(w.is_active(i));
                        }
                    }
                }
                for i in 0..n {
                    acc.active_steps[i] += counts[i];
                    acc.active_steps_sq[i] += counts[i] * counts[i];
                }
            }
            acc
        })
        .reduce(|| PersistenceAcc::new(n, config.steps), PersistenceAcc::merge);

    let samples = (config.steps - config.burn_in) as f64;
    let reps = config.replicas as f64;
    let total = samples * reps;
    let fractions: Vec<f64> = acc.active_steps.iter().map(|&c| c as f64 / total).collect();
    let fraction_se = (0..n)
        .map(|i| {
            if config.replicas < 2 {
                return f64::NAN;
            }
            let mean = acc.active_steps[i] as f64 / reps / samples;
            let mean_sq = acc.active_steps_sq[i] as f64 / reps / (samples * samples);
            let var = (mean_sq - mean * mean).max(0.0) * reps / (reps - 1.0);
            (var / reps).sqrt()
        })
        .collect();
    let mean_activity: f64 = fractions.iter().sum();
    let hist_total: u64 = acc.histogram.iter().sum();
    let second: f64 = acc
        .histogram
        .iter()
        .enumerate()
        .map(|(k, &c)| (k * k) as f64 * c as f64)
        .sum::<f64>()
        / hist_total as f64;
    let activity_std = (second - mean_activity * mean_activity).max(0.0).sqrt();
    let percentiles = config
        .percentiles
        .iter()
        .map(|&q| (q, histogram_percentile(&acc.histogram, q)))
        .collect();
    let activity_by_step = acc.by_step.iter().map(|&c| c as f64 / reps).collect();
    Ok(PersistenceReport {
        fractions,
        fraction_se,
        mean_activity,
        activity_std,
        percentiles,
        activity_histogram: acc.histogram,
        activity_by_step,
        replicas: config.replicas,
        samples_per_replica: config.steps - config.burn_in,
    })
}

/// Smallest value whose cumulative share reaches `q` percent.
fn histogram_percentile(histogram: &[u64], q: f64) -> usize {
    let total: u64 = histogram.iter().sum();
    let target = q / 100.0 * total as f64;
    let mut cum = 0u64;
    for (k, &c) in histogram.iter().enumerate() {
        cum += c;
        if cum as f64 >= target && cum > 0 {
            return k;
        }
    }
    histogram.len().saturating_sub(1)
}

pub fn run_persistence(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    params: &ModelParams,
    config: &SimConfig,
) -> Result<PersistenceReport> {
    persistence(&derive_rates(catalog, graph, params)?, config)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SurvivalCurve {
    /// Months `0..=max_steps`.
    pub times: Vec<usize>,
    /// Fraction of replicas with at least one active risk at each time.
    pub survival: Vec<f64>,
    pub replicas: usize,
}

impl SurvivalCurve {
    /// Builds a curve from per-replica lifetimes (first step with no active
    /// risk; `max_steps + 1` or more means still alive at the horizon).
    pub fn from_lifetimes(lifetimes: &[usize], max_steps: usize) -> Self {
        let mut died_at = vec![0u64; max_steps + 2];
        for &l in lifetimes {
            died_at[l.min(max_steps + 1)] += 1;
        }
        let r = lifetimes.len() as f64;
        let mut alive = lifetimes.len() as u64;
        let mut survival = Vec::with_capacity(max_steps + 1);
        for d in died_at.iter().take(max_steps + 1) {
            alive -= d;
            survival.push(alive as f64 / r);
        }
        Self {
            times: (0..=max_steps).collect(),
            survival,
            replicas: lifetimes.len(),
        }
    }

    /// Binomial standard error at each time.
    pub fn standard_errors(&self) -> Vec<f64> {
        let r = self.replicas as f64;
        self.survival
            .iter()
            .map(|&s| (s * (1.0 - s) / r).sqrt())
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Decay rate per month, `-d ln S / dt`.
    pub rate: f64,
    /// `None` when the curve is flat and the fit explains nothing.
    pub r_squared: Option<f64>,
    pub points: usize,
    /// Set when the survival curve is constant over the window.
    pub flat: bool,
}

/// Inclusive range of months used for a decay fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TailWindow {
    pub start: usize,
    pub end: usize,
}

impl TailWindow {
    /// From the first month survival drops to one half, to the last month at
    /// least `min_alive` replicas are still running.
    pub fn auto(curve: &SurvivalCurve, min_alive: usize) -> Self {
        let r = curve.replicas as f64;
        let start = curve
            .survival
            .iter()
            .position(|&s| s <= 0.5)
            .unwrap_or(0);
        let end = curve
            .survival
            .iter()
            .rposition(|&s| s * r >= min_alive as f64 - 0.5)
            .unwrap_or(0);
        Self { start, end }
    }
}

/// Least-squares line through `(t, ln S(t))` over the window.
pub fn fit_exponential_decay(curve: &SurvivalCurve, window: TailWindow) -> Result<DecayFit> {
    let pts: Vec<(f64, f64)> = curve
        .times
        .iter()
        .zip(&curve.survival)
        .filter(|(&t, &s)| t >= window.start && t <= window.end && s > 0.0)
        .map(|(&t, &s)| (t as f64, s.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} positive survival points in window {}..={}, need 3",
            pts.len(),
            window.start,
            window.end
        )));
    }
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    if syy <= f64::EPSILON * m {
        return Ok(DecayFit {
            rate: 0.0,
            r_squared: None,
            points: pts.len(),
            flat: true,
        });
    }
    let r2 = (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0);
    Ok(DecayFit {
        rate: -slope,
        r_squared: Some(r2),
        points: pts.len(),
        flat: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CascadeReport {
    pub initiator: usize,
    pub survival: SurvivalCurve,
    /// Expected fraction of a cascade's lifetime each risk is active.
    pub lifetime_fraction: Vec<f64>,
    pub mean_lifetime: f64,
    /// Replicas still alive at `max_steps`.
    pub censored: usize,
    pub decay: Option<DecayFit>,
}

#[derive(Clone)]
struct CascadeAcc {
    lifetimes: Vec<usize>,
    fraction_sum: Vec<f64>,
}

/// Cascade experiment on explicit rates. Internal materialization is
/// switched off; `initiator` is 0-based.
pub fn cascade(
    rates: &DerivedRates,
    initiator: usize,
    max_steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<CascadeReport> {
    let n = rates.len();
    if initiator >= n {
        return Err(Error::validation(format!(
            "initiator {} outside 1..{n}",
            initiator + 1
        )));
    }
    if replicas == 0 || max_steps == 0 {
        return Err(Error::validation("replicas and max_steps must be positive"));
    }
    let rates = rates.without_internal();
    let kernel = Kernel::new(&rates);
    let start = StateVector::with_active(n, &[initiator])?;
    let chunks = replicas.div_ceil(CHUNK);
    let parts: Vec<CascadeAcc> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(replicas);
            let mut acc = CascadeAcc {
                lifetimes: Vec::with_capacity(hi - lo),
                fraction_sum: vec![0.0; n],
            };
            let mut active_steps = vec![0u64; n];
            for r in lo..hi {
                let mut rng = Stream::for_replica(seed, r as u64);
                let mut w = Walker::new(&kernel, &start);
                active_steps.iter_mut().for_each(|x| *x = 0);
                let mut t = 0;
                while w.active_count() > 0 && t <= max_steps {
                    for (i, a) in active_steps.iter_mut().enumerate() {
                        *a += u64::from(w.is_active(i));
                    }
                    t += 1;
                    if t <= max_steps {
                        w.advance(&mut rng);
                    }
                }
                // First step with no active risk, or max_steps + 1 if censored.
                let lifetime = t;
                acc.lifetimes.push(lifetime);
                for i in 0..n {
                    acc.fraction_sum[i] += active_steps[i] as f64 / lifetime as f64;
                }
            }
            acc
        })
        .collect();

    let mut lifetimes = Vec::with_capacity(replicas);
    let mut fraction_sum = vec![0.0; n];
    for p in parts {
        lifetimes.extend(p.lifetimes);
        fraction_sum.iter_mut().zip(&p.fraction_sum).for_each(|(a, b)| *a += b);
    }
    let survival = SurvivalCurve::from_lifetimes(&lifetimes, max_steps);
    let censored = lifetimes.iter().filter(|&&l| l > max_steps).count();
    let mean_lifetime =
        lifetimes.iter().map(|&l| l.min(max_steps + 1) as f64).sum::<f64>() / replicas as f64;
    let window = TailWindow::auto(&survival, 10);
    let decay = fit_exponential_decay(&survival, window).ok();
    Ok(CascadeReport {
        initiator,
        survival,
        lifetime_fraction: fraction_sum.iter().map(|s| s / replicas as f64).collect(),
        mean_lifetime,
        censored,
        decay,
    })
}

pub fn run_cascade(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    params: &ModelParams,
    initiator: usize,
    max_steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<CascadeReport> {
    cascade(
        &derive_rates(catalog, graph, params)?,
        initiator,
        max_steps,
        replicas,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetHitReport {
    pub initiator: usize,
    pub target: usize,
    pub probability: f64,
    pub replicas: usize,
    pub standard_error: f64,
    /// Replicas stopped at the step cap before a hit or extinction; they
    /// count as misses.
    pub censored: usize,
}

/// Probability that a cascade from `initiator` ever activates `target`
/// (0-based ids), with internal materialization switched off.
pub fn target_hit(
    rates: &DerivedRates,
    initiator: usize,
    target: usize,
    max_steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<TargetHitReport> {
    let n = rates.len();
    if initiator >= n || target >= n {
        return Err(Error::validation(format!(
            "initiator {} / target {} outside 1..{n}",
            initiator + 1,
            target + 1
        )));
    }
    if initiator == target {
        return Err(Error::validation("initiator and target must differ"));
    }
    if replicas == 0 {
        return Err(Error::validation("replicas must be at least 1"));
    }
    let rates = rates.without_internal();
    let kernel = Kernel::new(&rates);
    let start = StateVector::with_active(n, &[initiator])?;
    let chunks = replicas.div_ceil(CHUNK);
    let (hits, censored) = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(replicas);
            let mut hits = 0u64;
            let mut censored = 0u64;
            for r in lo..hi {
                let mut rng = Stream::for_replica(seed, r as u64);
                let mut w = Walker::new(&kernel, &start);
                let mut t = 0;
                loop {
                    if w.is_active(target) {
                        hits += 1;
                        break;
                    }
                    if w.active_count() == 0 {
                        break;
                    }
                    if t == max_steps {
                        censored += 1;
                        break;
                    }
                    w.advance(&mut rng);
                    t += 1;
                }
            }
            (hits, censored)
        })
        .reduce(|| (0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
    let p = hits as f64 / replicas as f64;
    Ok(TargetHitReport {
        initiator,
        target,
        probability: p,
        replicas,
        standard_error: (p * (1.0 - p) / replicas as f64).sqrt(),
        censored: censored as usize,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn run_target_hit(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    params: &ModelParams,
    initiator: usize,
    target: usize,
    max_steps: usize,
    replicas: usize,
    seed: u64,
) -> Result<TargetHitReport> {
    target_hit(
        &derive_rates(catalog, graph, params)?,
        initiator,
        target,
        max_steps,
        replicas,
        seed,
    )
}
