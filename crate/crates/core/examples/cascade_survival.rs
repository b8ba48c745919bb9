//! How long a cascade started by a single risk survives once internal
//! activation is switched off.

use riskdyn::io::{load_params, Dataset};
use riskdyn::sim::run_cascade;

fn main() -> riskdyn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let d = Dataset::load_dir(dir)?;
    let params = load_params(format!("{dir}/params.json"))?;
    for initiator in [0, 24, 42] {
        let r = run_cascade(&d.catalog, &d.graph, &params, initiator, 3000, 2000, 3)?;
        let s = &r.survival.survival;
        print!(
            "{:<45} mean life {:>7.1} months, S(12) {:.3}, S(120) {:.3}",
            d.catalog.records()[initiator].name,
            r.mean_lifetime,
            s[12],
            s[120]
        );
        match r.decay {
            Some(f) if !f.flat => println!(", tail decay {:.2e}/month", f.rate),
            _ => println!(),
        }
    }
    Ok(())
}
