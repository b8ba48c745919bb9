//! Long-run fraction of time each sample risk spends active.

use riskdyn::io::{load_params, Dataset};
use riskdyn::sim::{run_persistence, SimConfig};

fn main() -> riskdyn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let d = Dataset::load_dir(dir)?;
    let params = load_params(format!("{dir}/params.json"))?;
    let cfg = SimConfig {
        replicas: 2000,
        master_seed: 1,
        ..Default::default()
    };
    let r = run_persistence(&d.catalog, &d.graph, &params, &cfg)?;
    let mut order: Vec<usize> = (0..d.catalog.len()).collect();
    order.sort_by(|&a, &b| r.fractions[b].total_cmp(&r.fractions[a]));
    for &i in order.iter().take(10) {
        let rec = &d.catalog.records()[i];
        println!("{:>5.3} ± {:.3}  {}", r.fractions[i], r.fraction_se[i], rec.name);
    }
    println!("mean active risks {:.2} (sd {:.2})", r.mean_activity, r.activity_std);
    for (p, k) in &r.percentiles {
        println!("p{p:.0}: {k} active");
    }
    Ok(())
}
