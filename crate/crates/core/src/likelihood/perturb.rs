use serde::Serialize;

use super::fit::{fit, FitResult, FittedParams, ModelVariant, SearchConfig};
use crate::error::{Error, Result};
use crate::model::{HistoricalSeries, InfluenceGraph, RiskCatalog};
use crate::rng::{Stream, PERTURB_STREAM};
use crate::sim::{persistence, InitialState, SimConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbConfig {
    /// Number of perturbed likelihood sets.
    pub sets: usize,
    pub seed: u64,
    pub search: SearchConfig,
    /// Monte-Carlo replicas used to estimate the monthly activity of each
    /// fitted model. All models share the same random streams.
    pub replicas: usize,
}

impl Default for PerturbConfig {
    fn default() -> Self {
        Self {
            sets: 10,
            seed: 0,
            search: SearchConfig::default(),
            replicas: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbedSet {
    pub likelihoods: Vec<f64>,
    pub fit: FitResult,
    pub mean_activity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerturbationReport {
    pub sets: usize,
    pub seed: u64,
    pub baseline: FitResult,
    pub baseline_mean_activity: f64,
    pub perturbed: Vec<PerturbedSet>,
    /// Largest relative deviation of each fitted parameter from the baseline.
    pub max_param_deviation: FittedParams,
    /// Largest relative deviation of the mean activity at any month.
    pub max_activity_deviation: f64,
    pub max_loglik_deviation: f64,
}

fn rel_dev(value: f64, base: f64) -> f64 {
    if value == base {
        0.0
    } else if base == 0.0 {
        f64::INFINITY
    } else {
        ((value - base) / base).abs()
    }
}

/// Monthly mean activity of a fitted network model over the span of the
/// history, started from its first month.
fn activity_profile(
    fit: &FitResult,
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    history: &HistoricalSeries,
    cfg: &PerturbConfig,
) -> Result<Vec<f64>> {
    let rates = fit.rates(catalog, graph)?;
    let sim = SimConfig {
        steps: history.len() - 1,
        burn_in: 0,
        replicas: cfg.replicas,
        master_seed: cfg.seed,
        initial_state: InitialState::State(
            history.first_state().cloned().expect("history is non-empty"),
        ),
        percentiles: Vec::new(),
    };
    Ok(persistence(&rates, &sim)?.activity_by_step)
}

/// Refits the network model on likelihood sets drawn uniformly within one
/// standard deviation of each expert average (clamped to [1, 5]) and
/// reports how far parameters, activity and log-likelihood move.
pub fn perturbation_study(
    catalog: &RiskCatalog,
    graph: &InfluenceGraph,
    history: &HistoricalSeries,
    cfg: &PerturbConfig,
) -> Result<PerturbationReport> {
    if cfg.sets == 0 {
        return Err(Error::validation("need at least one perturbed set"));
    }
    if cfg.replicas == 0 {
        return Err(Error::validation("replicas must be at least 1"));
    }
    if history.len() < 2 {
        return Err(Error::validation("history needs at least 2 months"));
    }
    let baseline = fit(catalog, graph, history, ModelVariant::Network, &cfg.search)?;
    let base_profile = activity_profile(&baseline, catalog, graph, history, cfg)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;

    let mut rng = Stream::new(cfg.seed, PERTURB_STREAM);
    let draws: Vec<Vec<f64>> = (0..cfg.sets)
        .map(|_| {
            catalog
                .records()
                .iter()
                .map(|r| {
                    let u = rng.uniform();
                    (r.likelihood + r.stddev * (2.0 * u - 1.0)).clamp(1.0, 5.0)
                })
                .collect()
        })
        .collect();

    let mut perturbed = Vec::with_capacity(cfg.sets);
    let mut max_param = FittedParams {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };
    let mut max_activity: f64 = 0.0;
    let mut max_ll: f64 = 0.0;
    for likelihoods in draws {
        let cat = catalog.with_likelihoods(&likelihoods)?;
        let f = fit(&cat, graph, history, ModelVariant::Network, &cfg.search)?;
        let profile = activity_profile(&f, &cat, graph, history, cfg)?;
        max_param.alpha = max_param.alpha.max(rel_dev(f.monthly.alpha, baseline.monthly.alpha));
        max_param.beta = max_param.beta.max(rel_dev(f.monthly.beta, baseline.monthly.beta));
        max_param.gamma = max_param.gamma.max(rel_dev(f.monthly.gamma, baseline.monthly.gamma));
        for (a, b) in profile.iter().zip(&base_profile) {
            max_activity = max_activity.max(rel_dev(*a, *b));
        }
        max_ll = max_ll.max(rel_dev(f.log_likelihood, baseline.log_likelihood));
        perturbed.push(PerturbedSet {
            likelihoods,
            mean_activity: mean(&profile),
            fit: f,
        });
    }

    Ok(PerturbationReport {
        sets: cfg.sets,
        seed: cfg.seed,
        baseline_mean_activity: mean(&base_profile),
        baseline,
        perturbed,
        max_param_deviation: max_param,
        max_activity_deviation: max_activity,
        max_loglik_deviation: max_ll,
    })
}
