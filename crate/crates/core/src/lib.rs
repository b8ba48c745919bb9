//! Failure dynamics on expert-assessed risk networks.
//!
//! Risks are nodes of an undirected influence graph. Each month a risk is
//! either active (materialized) or not. Inactive risks materialize on their
//! own or through active neighbors, active ones persist or recover. All
//! monthly probabilities come from expert likelihood scores through three
//! exponents `alpha`, `beta`, `gamma` ([`model`]).
//!
//! - [`sim`]: Monte-Carlo engine and the persistence, cascade and
//!   target-hit experiments.
//! - [`likelihood`]: log-likelihood of a monthly history, grid-scan fitting,
//!   model variants, likelihood-ratio tests and the noise study.
//! - [`meanfield`]: continuous-time mean-field equations and closed forms.
//! - [`netstats`]: contagion potential, block-model generation and
//!   estimation, degree statistics.
//! - [`io`], [`synth`], [`manifest`]: file formats, synthetic datasets and
//!   run manifests used by the `riskdyn` command.

pub mod cli;
pub mod error;
pub mod io;
pub mod likelihood;
pub mod manifest;
pub mod meanfield;
pub mod model;
pub mod netstats;
pub mod rng;
pub mod sim;
pub mod synth;

pub use error::{Error, Result};
pub use model::{
    derive_rates, DerivedRates, HistoricalSeries, InfluenceGraph, ModelParams, Month, RiskCatalog,
    RiskGroup, RiskRecord, StateVector, TimeUnit,
};
