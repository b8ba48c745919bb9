//! Estimate block densities of the sample graph, then sample a new graph
//! from them and estimate again.

use riskdyn::io::Dataset;
use riskdyn::netstats::{degree_stats, estimate_block_probabilities, sbm_generate, BlockMatrix};

fn show(label: &str, m: &BlockMatrix) {
    println!("{label}");
    for row in &m.probabilities {
        let cells: Vec<String> = row.iter().map(|p| p.map_or("  -  ".into(), |p| format!("{p:.3}"))).collect();
        println!("  {}", cells.join(" "));
    }
}

fn main() -> riskdyn::Result<()> {
    let d = Dataset::load_dir(concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample"))?;
    let labels: Vec<usize> = d.catalog.groups().iter().map(|g| (g.index() - 1) as usize).collect();
    let est = estimate_block_probabilities(&d.graph, &labels)?;
    show("sample graph", &est);
    let stats = degree_stats(&d.graph, &labels);
    println!("{} edges, mean degree {:.2}", stats.edges, stats.mean_degree);

    let fitted = BlockMatrix::new(
        est.sizes.clone(),
        est.probabilities.iter().map(|r| r.iter().map(|p| p.unwrap_or(0.0)).collect()).collect(),
    )?;
    let resampled = sbm_generate(&fitted, 42);
    show("resampled graph", &estimate_block_probabilities(&resampled, &fitted.labels())?);
    Ok(())
}
