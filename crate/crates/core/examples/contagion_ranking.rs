//! Rank sample risks by contagion potential.

use riskdyn::io::{load_params, Dataset};
use riskdyn::netstats::contagion_potential;

fn main() -> riskdyn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let d = Dataset::load_dir(dir)?;
    let params = load_params(format!("{dir}/params.json"))?;
    let r = contagion_potential(&riskdyn::derive_rates(&d.catalog, &d.graph, &params)?);
    for (rank, &i) in r.ranking.iter().enumerate().take(10) {
        let rec = &d.catalog.records()[i];
        println!(
            "{:>2}. C = {:.4}  degree {:>2}  L = {:.1}  {}",
            rank + 1,
            r.potential[i],
            d.graph.degree(i),
            rec.likelihood,
            rec.name
        );
    }
    Ok(())
}
