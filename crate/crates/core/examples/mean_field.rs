//! Mean-field trajectory from an all-inactive start, its stable point, and
//! the closed-form check on a homogeneous complete graph.

use riskdyn::io::{load_params, Dataset};
use riskdyn::meanfield::{
    homogeneous_asymptote, homogeneous_closed_form, integrate_ode, stationary_point, HomogeneousConfig,
    MeanFieldRates, MeanFieldState,
};

fn main() -> riskdyn::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data/sample");
    let d = Dataset::load_dir(dir)?;
    let params = load_params(format!("{dir}/params.json"))?;
    let rates = MeanFieldRates::from_rates(&riskdyn::derive_rates(&d.catalog, &d.graph, &params)?)?;
    let traj = integrate_ode(&rates, &MeanFieldState::zeros(rates.len()), 0.1, 600.0)?;
    for t in [0usize, 12, 60, 120, 240, 600] {
        println!("month {t:>4}: {:.3} active", traj.activity[t * 10]);
    }
    let sp = stationary_point(&rates, 1e-12)?;
    println!("stable point {:.4} after {} iterations", sp.activity(), sp.iterations);

    let h = HomogeneousConfig::new(0.01, 0.2, 0.004, 50, 0.0)?;
    let traj = integrate_ode(&h.rates(), &MeanFieldState::zeros(50), 0.1, 100.0)?;
    let worst = traj
        .times
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s[0] - homogeneous_closed_form(&h, *t).unwrap()).abs())
        .fold(0.0, f64::max);
    println!(
        "homogeneous: asymptote {:.5}, worst RK4 vs closed form {worst:.1e}",
        homogeneous_asymptote(&h)
    );
    Ok(())
}
