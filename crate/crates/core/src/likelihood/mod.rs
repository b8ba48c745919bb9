//! Log-likelihood of a monthly history and parameter estimation.
//!
//! The likelihood of a history is the product, over months `t = 2..T` and
//! risks, of the probability of each observed transition given the state
//! at `t - 1`. The first month is conditioned on.
//!
//! For fitting, the history is reduced once to transition counts. For risk
//! `i` with inactive state and `k` active neighbors, the probability of
//! staying inactive is `exp(-w_i (a + b k))`, and an active risk recovers
//! with probability `exp(-w_i c)`. With `w_i = -ln(1 - p_i)` and
//! `(a, b, c) = (alpha, beta, gamma)` this is the network model; with
//! `w_i = 1` and a complete graph it is the uniform model whose `(a, b, c)`
//! are shared intensities.

mod fit;
mod lrt;
mod perturb;

pub use fit::{
    fit, fit_variants, fit_with_rates_of, likelihood_surface, Axis, FitResult, FittedParams, ModelVariant,
    Param, SearchConfig, SurfacePoint, TracePoint,
};
pub use lrt::{chi_square_sf, compare_models, lr_statistic, lr_test, LrComparison, LrTestResult};
pub use perturb::{perturbation_study, PerturbConfig, PerturbationReport, PerturbedSet};

use crate::error::{Error, Result};
use crate::model::{transition_probabilities, DerivedRates, HistoricalSeries, InfluenceGraph};

/// Outcome of a likelihood evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLikelihood {
    pub value: f64,
    /// First transition with zero model probability, as
    /// `(step, risk)` with 1-based step index into the series and 0-based risk.
    pub impossible_at: Option<(usize, usize)>,
}

impl LogLikelihood {
    pub fn into_result(self) -> Result<f64> {
        match self.impossible_at {
            Some((step, risk)) => Err(Error::ImpossibleTransition { step, risk }),
            None => Ok(self.value),
        }
    }
}

fn check_dims(rates: &DerivedRates, history: &HistoricalSeries) -> Result<()> {
    if history.len() < 2 {
        return Err(Error::validation(format!(
            "history has {} months; at least 2 are needed",
            history.len()
        )));
    }
    if history.risk_count() != rates.len() {
        return Err(Error::validation(format!(
            "history has {} risks, model has {}",
            history.risk_count(),
            rates.len()
        )));
    }
    Ok(())
}

/// Sum over observed transitions of the log transition probability.
pub fn log_likelihood(rates: &DerivedRates, history: &HistoricalSeries) -> Result<LogLikelihood> {
    check_dims(rates, history)?;
    let states = history.states();
    let mut total = 0.0;
    let mut impossible_at = None;
    for (t, pair) in states.windows(2).enumerate() {
        let (prev, next) = (&pair[0], &pair[1]);
        for i in 0..rates.len() {
            let tr = transition_probabilities(rates, prev, i);
            let p = tr.probability(prev.is_active(i), next.is_active(i));
            if p <= 0.0 {
                impossible_at.get_or_insert((t + 2, i));
                total = f64::NEG_INFINITY;
            } else {
                total += p.ln();
            }
        }
    }
    Ok(LogLikelihood {
        value: total,
        impossible_at,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
struct IdleCount {
    stayed: u32,
    activated: u32,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct IdleEntry {
    ln_keep: f64,
    k: f64,
    count: IdleCount,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct ActiveEntry {
    ln_keep: f64,
    continued: u32,
    recovered: u32,
}

/// Transition counts of a history, grouped by risk and number of active
/// neighbors; evaluates the log-likelihood in `O(N * max degree)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionCounts {
    idle: Vec<IdleEntry>,
    active: Vec<ActiveEntry>,
    activations: u64,
    active_months: u64,
}

/// `x * ln_q` with the convention `0 * -inf = 0`.
fn scaled(ln_q: f64, x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * ln_q
    }
}

/// `ln(1 - exp(v))` for `v <= 0`.
fn ln_one_minus_exp(v: f64) -> f64 {
    if v > -std::f64::consts::LN_2 {
        (-v.exp_m1()).ln()
    } else {
        (-v.exp()).ln_1p()
    }
}

impl TransitionCounts {
    /// `ln_keep[i]` is `ln(1 - p_i)` (or `-1` for intensity-form fits).
    pub fn new(ln_keep: &[f64], graph: &InfluenceGraph, history: &HistoricalSeries) -> Result<Self> {
        let n = ln_keep.len();
        if graph.node_count() != n || history.risk_count() != n {
            return Err(Error::validation(format!(
                "dimension mismatch: {n} weights, graph {}, history {}",
                graph.node_count(),
                history.risk_count()
            )));
        }
        if history.len() < 2 {
            return Err(Error::validation(format!(
                "history has {} months; at least 2 are needed",
                history.len()
            )));
        }
        let mut idle: Vec<Vec<IdleCount>> = (0..n)
            .map(|i| vec![IdleCount::default(); graph.degree(i) + 1])
            .collect();
        let mut active = vec![(0u32, 0u32); n];
        for pair in history.states().windows(2) {
            let (prev, next) = (&pair[0], &pair[1]);
            for i in 0..n {
                if prev.is_active(i) {
                    if next.is_active(i) {
                        active[i].0 += 1;
                    } else {
                        active[i].1 += 1;
                    }
                } else {
                    let k = graph
                        .neighbors(i)
                        .iter()
                        .filter(|&&j| prev.is_active(j))
                        .count();
                    let c = &mut idle[i][k];
                    if next.is_active(i) {
                        c.activated += 1;
                    } else {
                        c.stayed += 1;
                    }
                }
            }
        }
        let mut activations = 0;
        let mut active_months = 0;
        let idle = idle
            .into_iter()
            .enumerate()
            .flat_map(|(i, per_k)| {
                per_k
                    .into_iter()
                    .enumerate()
                    .filter(|(_, c)| c.stayed + c.activated > 0)
                    .map(move |(k, count)| IdleEntry {
                        ln_keep: ln_keep[i],
                        k: k as f64,
                        count,
                    })
            })
            .inspect(|e| activations += u64::from(e.count.activated))
            .collect();
        let active = active
            .into_iter()
            .enumerate()
            .filter(|(_, (c, r))| c + r > 0)
            .map(|(i, (continued, recovered))| {
                active_months += u64::from(continued + recovered);
                ActiveEntry {
                    ln_keep: ln_keep[i],
                    continued,
                    recovered,
                }
            })
            .collect();
        Ok(Self {
            idle,
            active,
            activations,
            active_months,
        })
    }

    /// Number of observed `0 -> 1` transitions.
    pub fn activations(&self) -> u64 {
        self.activations
    }

    /// Number of scored months in which a risk started active.
    pub fn active_months(&self) -> u64 {
        self.active_months
    }

    /// Log-likelihood contribution of inactive-start transitions.
    pub fn activation_part(&self, a: f64, b: f64) -> f64 {
        let mut ll = 0.0;
        for e in &self.idle {
            let ln_stay = scaled(e.ln_keep, a + b * e.k);
            if e.count.stayed > 0 {
                ll += f64::from(e.count.stayed) * ln_stay;
            }
            if e.count.activated > 0 {
                ll += f64::from(e.count.activated) * ln_one_minus_exp(ln_stay);
            }
        }
        ll
    }

    /// Log-likelihood contribution of active-start transitions.
    pub fn continuation_part(&self, c: f64) -> f64 {
        let mut ll = 0.0;
        for e in &self.active {
            let ln_recover = scaled(e.ln_keep, c);
            if e.recovered > 0 {
                ll += f64::from(e.recovered) * ln_recover;
            }
            if e.continued > 0 {
                ll += f64::from(e.continued) * ln_one_minus_exp(ln_recover);
            }
        }
        ll
    }

    pub fn evaluate(&self, a: f64, b: f64, c: f64) -> f64 {
        self.activation_part(a, b) + self.continuation_part(c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Month, StateVector};

    fn series(rows: &[&[u8]]) -> HistoricalSeries {
        HistoricalSeries::from_states(
            Month::new(2000, 1).unwrap(),
            rows.iter().map(|r| StateVector::from_bits(r).unwrap()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_factor() {
        let r = DerivedRates::from_parts(vec![0.5], vec![0.3], vec![0.0], InfluenceGraph::empty(1))
            .unwrap();
        let ll = log_likelihood(&r, &series(&[&[0], &[0]])).unwrap();
        assert!((ll.value - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn certain_transitions_give_zero() {
        let r = DerivedRates::from_parts(
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 0.0],
            InfluenceGraph::empty(2),
        )
        .unwrap();
        let ll = log_likelihood(&r, &series(&[&[0, 0], &[1, 0]])).unwrap();
        assert_eq!(ll.value, 0.0);
        assert_eq!(ll.impossible_at, None);
    }

    #[test]
    fn two_risks_hand_enumeration() {
        // Risk 0: p_int 0.1, p_con 0.6, influence 0.3; risk 1: 0.2, 0.7, 0.4.
        let g = InfluenceGraph::from_edges(2, [(0, 1)]).unwrap();
        let r = DerivedRates::from_parts(vec![0.1, 0.2], vec![0.6, 0.7], vec![0.3, 0.4], g).unwrap();
        let h = series(&[&[1, 0], &[1, 1], &[0, 1]]);
        // t=2: risk 0 continues (0.6); risk 1 inactive with 1 active neighbor
        //      activates: 1 - 0.8 * 0.6 = 0.52.
        // t=3: risk 0 recovers (0.4); risk 1 continues (0.7).
        let expected = (0.6f64 * 0.52 * 0.4 * 0.7).ln();
        let got = log_likelihood(&r, &h).unwrap().value;
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn impossible_transition_is_located() {
        let r = DerivedRates::from_parts(vec![0.0], vec![0.5], vec![0.0], InfluenceGraph::empty(1))
            .unwrap();
        let ll = log_likelihood(&r, &series(&[&[0], &[0], &[1]])).unwrap();
        assert_eq!(ll.value, f64::NEG_INFINITY);
        assert_eq!(ll.impossible_at, Some((3, 0)));
        assert!(matches!(
            ll.into_result(),
            Err(Error::ImpossibleTransition { step: 3, risk: 0 })
        ));
    }

    #[test]
    fn short_or_mismatched_history_rejected() {
        let r = DerivedRates::from_parts(vec![0.1], vec![0.5], vec![0.0], InfluenceGraph::empty(1))
            .unwrap();
        assert!(log_likelihood(&r, &series(&[&[0]])).is_err());
        assert!(log_likelihood(&r, &series(&[&[0, 0], &[0, 0]])).is_err());
    }

    #[test]
    fn ln_one_minus_exp_branches() {
        for v in [-1e-12, -0.1, -0.69, -0.7, -5.0, -40.0] {
            let direct = (1.0 - f64::exp(v)).ln();
            assert!((ln_one_minus_exp(v) - direct).abs() < 1e-6 * direct.abs().max(1.0));
        }
        assert_eq!(ln_one_minus_exp(f64::NEG_INFINITY), 0.0);
        assert_eq!(ln_one_minus_exp(0.0), f64::NEG_INFINITY);
    }
}
