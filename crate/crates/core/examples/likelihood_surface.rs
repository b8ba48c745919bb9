//! Log-likelihood over (alpha, beta) with gamma pinned, printed as a
//! coarse text map. Axes take monthly values; labels show them per decade.

use riskdyn::io::Dataset;
use riskdyn::likelihood::{likelihood_surface, Axis, Param};

fn main() -> riskdyn::Result<()> {
    let d = Dataset::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample"))?;
    const DECADE: f64 = 120.0;
    let x = Axis::log(Param::Alpha, 0.05 / DECADE, 5.0 / DECADE, 12);
    let y = Axis::linear(Param::Beta, 0.0, 0.4 / DECADE, 9);
    let gamma = (Param::Gamma, 427.0 / DECADE);
    let grid = likelihood_surface(&d.catalog, &d.graph, d.history()?, gamma, &x, &y)?;
    let best = grid.iter().map(|p| p.log_likelihood).fold(f64::NEG_INFINITY, f64::max);
    print!("{:>8}", "beta\\a");
    for a in &x.values {
        print!("{:>7.2}", a * DECADE);
    }
    println!();
    for (j, b) in y.values.iter().enumerate() {
        print!("{:>8.2}", b * DECADE);
        for i in 0..x.values.len() {
            print!("{:>7.1}", grid[i * y.values.len() + j].log_likelihood - best);
        }
        println!();
    }
    println!("(log-likelihood minus the grid maximum {best:.3})");
    Ok(())
}
