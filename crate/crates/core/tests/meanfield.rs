use std::path::PathBuf;

use riskdyn::io::{load_params, Dataset};
use riskdyn::meanfield::{
    homogeneous_asymptote, homogeneous_closed_form, integrate_ode, linear_ode_solution,
    stationary_point, HomogeneousConfig, MeanFieldRates, MeanFieldState,
};
use riskdyn::{derive_rates, Error, InfluenceGraph};

fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample")
}

fn sample_rates() -> MeanFieldRates {
    let d = Dataset::load_dir(sample_dir()).unwrap();
    let p = load_params(sample_dir().join("params.json")).unwrap();
    MeanFieldRates::from_rates(&derive_rates(&d.catalog, &d.graph, &p).unwrap()).unwrap()
}

#[test]
fn without_influence_each_node_settles_at_its_own_balance() {
    let li = vec![0.01, 0.2, 0.0, 1.5];
    let lr = vec![0.5, 0.05, 0.3, 1.5];
    let r = MeanFieldRates::new(li.clone(), lr.clone(), vec![0.0; 4], InfluenceGraph::complete(4)).unwrap();
    let sp = stationary_point(&r, 1e-13).unwrap();
    for i in 0..4 {
        let want = li[i] / (li[i] + lr[i]);
        assert!((sp.s[i] - want).abs() < 1e-11, "{i}: {} vs {want}", sp.s[i]);
    }
    let traj = integrate_ode(&r, &MeanFieldState::zeros(4), 0.1, 5.0).unwrap();
    let last = traj.states.last().unwrap();
    for i in 0..4 {
        let exact = linear_ode_solution(li[i], lr[i], 5.0, 0.0).value;
        assert!((last[i] - exact).abs() < 1e-7);
    }
}

#[test]
fn sample_trajectory_stays_in_bounds_and_approaches_the_fixed_point() {
    let r = sample_rates();
    let traj = integrate_ode(&r, &MeanFieldState::zeros(r.len()), 0.1, 3000.0).unwrap();
    assert_eq!(traj.dt_used, 0.1);
    assert!(traj.states.iter().flatten().all(|&s| (0.0..=1.0).contains(&s)));
    let tol = 1e-12;
    let sp = stationary_point(&r, tol).unwrap();
    assert!(sp.residual <= 10.0 * tol, "residual {}", sp.residual);
    let end = traj.activity.last().unwrap();
    assert!((end - sp.activity()).abs() < 1e-6 * sp.activity(), "{end} vs {}", sp.activity());
    assert!(traj.activity.windows(2).all(|w| w[1] >= w[0] - 1e-12), "monotone rise from zero");
}

#[test]
fn impossible_tolerance_is_a_numerical_failure() {
    let r = sample_rates();
    assert!(matches!(stationary_point(&r, 1e-300), Err(Error::Numerical(_))));
}

#[test]
fn homogeneous_constants_satisfy_their_identity() {
    for &(ls, lr, le, n) in &[(0.01, 0.5, 0.02, 10), (0.3, 0.1, 0.001, 50), (0.0, 0.2, 0.05, 7), (1.0, 1.0, 1.0, 2)] {
        let c = HomogeneousConfig::new(ls, lr, le, n, 0.0).unwrap();
        let (a, b) = (c.a(), c.b());
        let lhs = (b - a) * (b + a);
        let rhs = 4.0 * ls * c.lambda_big_e();
        assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }
}

#[test]
fn closed_form_solves_the_homogeneous_equation() {
    let c = HomogeneousConfig::new(0.02, 0.4, 0.03, 20, 0.05).unwrap();
    let le = c.lambda_big_e();
    let f = |s: f64| c.lambda_s * (1.0 - s) - c.lambda_r * s + le * s * (1.0 - s);
    let h = 1e-4;
    for k in 1..60 {
        let t = k as f64 * 0.37;
        let s = homogeneous_closed_form(&c, t).unwrap();
        let d = (homogeneous_closed_form(&c, t + h).unwrap() - homogeneous_closed_form(&c, t - h).unwrap()) / (2.0 * h);
        assert!((d - f(s)).abs() <= 1e-6, "t={t}: {d} vs {}", f(s));
    }
    assert!((homogeneous_closed_form(&c, 0.0).unwrap() - 0.05).abs() < 1e-15);
    let inf = homogeneous_asymptote(&c);
    assert!((homogeneous_closed_form(&c, 400.0).unwrap() - inf).abs() < 1e-12);
    assert!(f(inf).abs() < 1e-14);
}

#[test]
fn closed_form_rejects_start_above_the_stable_point() {
    let c = HomogeneousConfig::new(0.02, 0.4, 0.03, 20, 0.0).unwrap();
    let above = HomogeneousConfig { s0: (homogeneous_asymptote(&c) + 0.3).min(1.0), ..c };
    assert!(matches!(homogeneous_closed_form(&above, 1.0), Err(Error::Parameterization(_))));
    assert!(HomogeneousConfig::new(-1.0, 0.1, 0.1, 3, 0.0).is_err());
    assert!(HomogeneousConfig::new(0.1, 0.1, 0.1, 3, 1.5).is_err());
}

#[test]
fn ode_matches_closed_form_on_complete_graph() {
    let c = HomogeneousConfig::new(0.01, 0.3, 0.02, 12, 0.0).unwrap();
    let traj = integrate_ode(&c.rates(), &MeanFieldState::zeros(12), 0.05, 60.0).unwrap();
    for (t, s) in traj.times.iter().zip(&traj.states) {
        let exact = homogeneous_closed_form(&c, *t).unwrap();
        assert!((s[0] - exact).abs() < 1e-8, "t={t}");
    }
}
