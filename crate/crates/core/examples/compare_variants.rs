//! Fit the four model variants on the sample data and compare nested pairs.

use riskdyn::io::Dataset;
use riskdyn::likelihood::{compare_models, fit_variants, ModelVariant, SearchConfig};

fn main() -> riskdyn::Result<()> {
    let d = Dataset::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample"))?;
    let variants = [
        ModelVariant::Network,
        ModelVariant::Disconnected,
        ModelVariant::ExpertBased,
        ModelVariant::Uniform,
    ];
    let fits = fit_variants(&d.catalog, &d.graph, d.history()?, &variants, &SearchConfig::default())?;
    for f in &fits {
        let p = f.decade;
        println!(
            "{:<13} LL {:>10.3}  alpha {:.4} beta {:.4} gamma {:.1}",
            f.variant.name(),
            f.log_likelihood,
            p.alpha,
            p.beta,
            p.gamma
        );
    }
    for c in compare_models(&fits).iter().filter(|c| c.nested) {
        println!(
            "{} vs {}: D = {:.3}, df = {}, p = {:.3e}",
            c.full.name(),
            c.restricted.name(),
            c.statistic,
            c.degrees_of_freedom,
            c.p_value.unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
