//! Chance that a cascade from one risk ever reaches each of a few others.

use riskdyn::io::{load_params, Dataset};
use riskdyn::sim::run_target_hit;

fn main() -> riskdyn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let d = Dataset::load_dir(dir)?;
    let params = load_params(format!("{dir}/params.json"))?;
    let initiator = 4;
    println!("from {}", d.catalog.records()[initiator].name);
    let mut targets: Vec<usize> = d.graph.neighbors(initiator).iter().copied().take(3).collect();
    targets.extend((0..d.catalog.len()).filter(|&j| j != initiator && !d.graph.is_connected(initiator, j)).take(3));
    for j in targets {
        let r = run_target_hit(&d.catalog, &d.graph, &params, initiator, j, 3000, 2000, 11)?;
        let link = if d.graph.is_connected(initiator, j) { "linked" } else { "      " };
        println!("  {link} {:.3} ± {:.3}  {}", r.probability, r.standard_error, d.catalog.records()[j].name);
    }
    Ok(())
}
