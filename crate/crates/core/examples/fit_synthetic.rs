//! Generate a long synthetic history from known parameters and fit them back.

use riskdyn::likelihood::{fit, ModelVariant, SearchConfig};
use riskdyn::synth::{synth_dataset, SynthConfig};

fn main() -> riskdyn::Result<()> {
    let cfg = SynthConfig {
        months: 1560,
        seed: 7,
        ..Default::default()
    };
    let data = synth_dataset(&cfg)?;
    let truth = cfg.params.to_decade();
    let f = fit(&data.catalog, &data.graph, &data.history, ModelVariant::Network, &SearchConfig::default())?;
    println!("{:>6} {:>10} {:>10}", "", "truth", "fitted");
    for (name, t, e) in [
        ("alpha", truth.alpha, f.decade.alpha),
        ("beta", truth.beta, f.decade.beta),
        ("gamma", truth.gamma, f.decade.gamma),
    ] {
        println!("{name:>6} {t:>10.4} {e:>10.4}");
    }
    println!("log-likelihood {:.3} after {} refinements", f.log_likelihood, f.refinements);
    Ok(())
}
