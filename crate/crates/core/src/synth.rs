//! Synthetic datasets with the shape of the expert-survey data: risks in
//! groups, a block-model influence graph, and a monthly history simulated
//! from known parameters.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::io::{self, Dataset};
use crate::model::{
    derive_rates, HistoricalSeries, InfluenceGraph, ModelParams, Month, RiskCatalog, RiskGroup,
    RiskRecord, StateVector,
};
use crate::netstats::{sbm_generate, BlockMatrix};
use crate::rng::{Stream, CATALOG_STREAM};
use crate::sim::simulate;

/// Names of the fifty global risks, ten per group in group order.
pub const RISK_NAMES: [&str; 50] = [
    "Chronic fiscal imbalances",
    "Chronic labour market imbalances",
    "Extreme volatility in energy and agriculture prices",
    "Hard landing of an emerging economy",
    "Major systemic financial failure",
    "Prolonged infrastructure neglect",
    "Recurring liquidity crises",
    "Severe income disparity",
    "Unforeseen negative consequences of regulation",
    "Unmanageable inflation or deflation",
    "Antibiotic-resistant bacteria",
    "Failure of climate change adaptation",
    "Irremediable pollution",
    "Land and waterway use mismanagement",
    "Mismanaged urbanization",
    "Persistent extreme weather",
    "Rising greenhouse gas emissions",
    "Species overexploitation",
    "Unprecedented geophysical destruction",
    "Vulnerability to geomagnetic storms",
    "Critical fragile states",
    "Diffusion of weapons of mass destruction",
    "Entrenched organized crime",
    "Failure of diplomatic conflict resolution",
    "Global governance failure",
    "Militarization of space",
    "Pervasive entrenched corruption",
    "Terrorism",
    "Unilateral resource nationalization",
    "Widespread illicit trade",
    "Backlash against globalization",
    "Food shortage crises",
    "Ineffective illicit drug policies",
    "Mismanagement of population aging",
    "Rising rates of chronic disease",
    "Rising religious fanaticism",
    "Unmanaged migration",
    "Unsustainable population growth",
    "Vulnerability to pandemics",
    "Water supply crises",
    "Critical systems failure",
    "Cyber attacks",
    "Failure of intellectual property regime",
    "Massive digital misinformation",
    "Massive incident of data fraud/theft",
    "Mineral resource supply vulnerability",
    "Proliferation of orbital debris",
    "Unforeseen consequences of climate change mitigation",
    "Unforeseen consequences of nanotechnology",
    "Unforeseen consequences of new life science technologies",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    /// Group sizes and edge probabilities; at most five groups.
    pub blocks: BlockMatrix,
    /// Likelihoods are drawn uniformly from the half-step grid in this
    /// closed range.
    pub likelihood_range: (f64, f64),
    /// Standard deviation of each expert average as a fraction of it.
    pub stddev_fraction: f64,
    /// Ground truth.
    pub params: ModelParams,
    /// Recorded months `T`.
    pub months: usize,
    /// Simulated months discarded before recording, started from all
    /// risks inactive.
    pub burn_in: usize,
    pub start: Month,
    pub seed: u64,
}

impl Default for SynthConfig {
    /// 50 risks in 5 groups of 10, about 515 expected edges, 156 months
    /// from January 2000, ground truth `alpha=0.365, beta=0.14, gamma=427`
    /// per decade.
    fn default() -> Self {
        let (p_in, p_out) = (0.6, 0.38);
        let probs = (0..5)
            .map(|a| (0..5).map(|b| if a == b { p_in } else { p_out }).collect())
            .collect();
        Self {
            blocks: BlockMatrix::new(vec![10; 5], probs).expect("valid default blocks"),
            likelihood_range: (2.0, 4.5),
            stddev_fraction: 0.015,
            params: ModelParams::decade(0.365, 0.14, 427.0).expect("valid default params"),
            months: 156,
            burn_in: 240,
            start: Month::new(2000, 1).expect("valid month"),
            seed: 0,
        }
    }
}

fn on_half_grid(v: f64) -> bool {
    (1.0..=5.0).contains(&v) && (2.0 * v).fract() == 0.0
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let g = self.blocks.groups();
        if g == 0 || g > RiskGroup::ALL.len() {
            return Err(Error::validation(format!("need 1 to 5 groups, got {g}")));
        }
        if self.blocks.sizes.contains(&0) {
            return Err(Error::validation("every group needs at least one risk"));
        }
        let (lo, hi) = self.likelihood_range;
        if !(on_half_grid(lo) && on_half_grid(hi) && lo <= hi) {
            return Err(Error::validation(format!(
                "likelihood range ({lo}, {hi}) must be half-steps within [1, 5]"
            )));
        }
        if !(self.stddev_fraction.is_finite() && self.stddev_fraction >= 0.0) {
            return Err(Error::validation("stddev fraction must be non-negative"));
        }
        if self.months < 24 {
            return Err(Error::validation(format!(
                "series needs at least 24 months, got {}",
                self.months
            )));
        }
        Ok(())
    }

    pub fn risk_count(&self) -> usize {
        self.blocks.node_count()
    }
}

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub catalog: RiskCatalog,
    pub graph: InfluenceGraph,
    pub history: HistoricalSeries,
    pub params: ModelParams,
}

impl SynthDataset {
    pub fn dataset(&self) -> Dataset {
        Dataset {
            catalog: self.catalog.clone(),
            graph: self.graph.clone(),
            history: Some(self.history.clone()),
        }
    }

    /// Writes `risks.csv`, `edges.csv`, `history.csv` and `params.json`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let mut files = self.dataset().save_dir(&dir)?;
        let p = dir.as_ref().join(io::PARAMS_FILE);
        io::save_params(&self.params, &p)?;
        files.push(p);
        Ok(files)
    }
}

fn synth_catalog(cfg: &SynthConfig) -> Result<RiskCatalog> {
    let sizes = &cfg.blocks.sizes;
    let named = sizes.len() == 5 && sizes.iter().all(|&s| s == 10);
    let (lo, hi) = cfg.likelihood_range;
    let steps = ((hi - lo) * 2.0).round() as usize + 1;
    let mut rng = Stream::new(cfg.seed, CATALOG_STREAM);
    let records = cfg
        .blocks
        .labels()
        .into_iter()
        .enumerate()
        .map(|(i, g)| {
            let likelihood = lo + 0.5 * rng.index(steps) as f64;
            RiskRecord {
                id: i + 1,
                name: if named {
                    RISK_NAMES[i].to_string()
                } else {
                    format!("Risk {}", i + 1)
                },
                group: RiskGroup::from_index(g as u8 + 1).expect("at most five groups"),
                likelihood,
                stddev: cfg.stddev_fraction * likelihood,
            }
        })
        .collect();
    RiskCatalog::new(records)
}

/// Generates a catalog, a block-model graph and a simulated history. Each
/// part uses its own random stream derived from `config.seed`.
pub fn synth_dataset(config: &SynthConfig) -> Result<SynthDataset> {
    config.validate()?;
    let catalog = synth_catalog(config)?;
    let graph = sbm_generate(&config.blocks, config.seed);
    let rates = derive_rates(&catalog, &graph, &config.params)?;
    let mut rng = Stream::for_replica(config.seed, 0);
    let n = catalog.len();
    let mut states = simulate(
        &rates,
        &StateVector::inactive(n),
        config.burn_in + config.months - 1,
        &mut rng,
    );
    let recorded = states.split_off(config.burn_in);
    let history = HistoricalSeries::from_states(config.start, recorded)?;
    Ok(SynthDataset {
        catalog,
        graph,
        history,
        params: config.params,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_shape() {
        let d = synth_dataset(&SynthConfig::default()).unwrap();
        assert_eq!(d.catalog.len(), 50);
        assert_eq!(d.history.len(), 156);
        assert_eq!(d.history.months()[0].to_string(), "2000-01");
        assert_eq!(d.history.months()[155].to_string(), "2012-12");
        assert_eq!(d.catalog.records()[7].name, "Severe income disparity");
        assert_eq!(d.catalog.records()[40].group, RiskGroup::Technological);
        assert!(d.catalog.likelihoods().iter().all(|&l| on_half_grid(l) && (2.0..=4.5).contains(&l)));
        let e = d.graph.edge_count();
        assert!((400..630).contains(&e), "{e} edges");
    }

    #[test]
    fn same_seed_same_data() {
        let a = synth_dataset(&SynthConfig::default()).unwrap();
        let b = synth_dataset(&SynthConfig::default()).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.graph, b.graph);
        assert_eq!(a.catalog, b.catalog);
        let c = synth_dataset(&SynthConfig {
            seed: 1,
            ..Default::default()
        })
        .unwrap();
        assert_ne!(a.history, c.history);
    }

    #[test]
    fn config_validation() {
        let short = SynthConfig {
            months: 23,
            ..Default::default()
        };
        assert!(synth_dataset(&short).is_err());
        let off_grid = SynthConfig {
            likelihood_range: (1.25, 4.0),
            ..Default::default()
        };
        assert!(off_grid.validate().is_err());
        let six = SynthConfig {
            blocks: BlockMatrix::new(vec![2; 6], vec![vec![0.5; 6]; 6]).unwrap(),
            ..Default::default()
        };
        assert!(six.validate().is_err());
    }
}
