//! Continuous-time mean-field picture.
//!
//! `s_i(t)` is the probability that risk `i` is active at time `t`
//! (months). It obeys
//!
//! ```text
//! ds_i/dt = l_int_i (1 - s_i) - l_rec_i s_i + l_ext_i (1 - s_i) sum_j a_ij s_j
//! ```
//!
//! with intensities obtained from the monthly probabilities as
//! `l = -ln(1 - p)` and `l_rec = -ln(p_con)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{DerivedRates, InfluenceGraph};

/// Bound violation tolerated by the integrator.
pub const BOUND_EPS: f64 = 1e-9;
pub const DEFAULT_DT: f64 = 0.1;
const MAX_HALVINGS: u32 = 12;
const DAMPING: f64 = 0.5;
const MAX_FIXED_POINT_ITERATIONS: usize = 10_000;

/// Intensities of the three processes; `ext` is per target.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldRates {
    pub int: Vec<f64>,
    pub rec: Vec<f64>,
    pub ext: Vec<f64>,
    pub graph: InfluenceGraph,
}

impl MeanFieldRates {
    pub fn new(int: Vec<f64>, rec: Vec<f64>, ext: Vec<f64>, graph: InfluenceGraph) -> Result<Self> {
        let n = graph.node_count();
        for (name, v) in [("int", &int), ("rec", &rec), ("ext", &ext)] {
            if v.len() != n {
                return Err(Error::validation(format!(
                    "{name} intensities have length {}, graph has {n} nodes",
                    v.len()
                )));
            }
            if let Some(x) = v.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
                return Err(Error::validation(format!(
                    "{name} intensity {x} must be finite and non-negative"
                )));
            }
        }
        Ok(Self { int, rec, ext, graph })
    }

    /// Intensities equivalent to monthly transition probabilities. Certain
    /// events (`p_int = 1`, `p_con = 0`, influence 1) have no finite
    /// intensity and are rejected.
    pub fn from_rates(rates: &DerivedRates) -> Result<Self> {
        let n = rates.len();
        let int = (0..n).map(|i| rates.lambda_int(i)).collect();
        let rec = (0..n).map(|i| rates.lambda_rec(i)).collect();
        let ext = rates.influence().iter().map(|&e| -(-e).ln_1p()).collect();
        Self::new(int, rec, ext, rates.graph().clone()).map_err(|e| {
            Error::validation(format!("rates have no finite intensity form: {e}"))
        })
    }

    pub fn len(&self) -> usize {
        self.int.len()
    }

    pub fn is_empty(&self) -> bool {
        self.int.is_empty()
    }

    fn neighbor_sum(&self, s: &[f64], i: usize) -> f64 {
        self.graph.neighbors(i).iter().map(|&j| s[j]).sum()
    }

    /// Right-hand side of the mean-field equations.
    pub fn rhs(&self, s: &[f64], out: &mut [f64]) {
        for i in 0..self.len() {
            let pressure = self.ext[i] * self.neighbor_sum(s, i);
            out[i] = (self.int[i] + pressure) * (1.0 - s[i]) - self.rec[i] * s[i];
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanFieldState {
    pub s: Vec<f64>,
    pub t: f64,
}

impl MeanFieldState {
    pub fn new(s: Vec<f64>, t: f64) -> Result<Self> {
        if let Some(x) = s.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::validation(format!("state component {x} outside [0, 1]")));
        }
        Ok(Self { s, t })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            s: vec![0.0; n],
            t: 0.0,
        }
    }

    /// Expected number of active risks.
    pub fn activity(&self) -> f64 {
        self.s.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// `sum_i s_i(t)` at each time.
    pub activity: Vec<f64>,
    /// Internal step actually used after any halving.
    pub dt_used: f64,
}

fn rk4_step(rates: &MeanFieldRates, s: &mut [f64], h: f64, scratch: &mut [Vec<f64>; 5]) {
    let [k1, k2, k3, k4, tmp] = scratch;
    let n = s.len();
    rates.rhs(s, k1);
    for i in 0..n {
        tmp[i] = s[i] + 0.5 * h * k1[i];
    }
    rates.rhs(tmp, k2);
    for i in 0..n {
        tmp[i] = s[i] + 0.5 * h * k2[i];
    }
    rates.rhs(tmp, k3);
    for i in 0..n {
        tmp[i] = s[i] + h * k3[i];
    }
    rates.rhs(tmp, k4);
    for i in 0..n {
        s[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn try_integrate(
    rates: &MeanFieldRates,
    s0: &MeanFieldState,
    dt: f64,
    horizon: f64,
    substeps: usize,
) -> Option<Trajectory> {
    let n = rates.len();
    let outer = (horizon / dt).round() as usize;
    let outer = if (outer as f64 * dt - horizon).abs() <= 1e-9 * horizon.max(1.0) {
        outer
    } else {
        (horizon / dt).ceil() as usize
    };
    let mut s = s0.s.clone();
    let mut scratch: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
    let mut traj = Trajectory {
        times: vec![s0.t],
        states: vec![s.clone()],
        activity: vec![s.iter().sum()],
        dt_used: dt / substeps as f64,
    };
    for k in 0..outer {
        let t_lo = k as f64 * dt;
        let t_hi = ((k + 1) as f64 * dt).min(horizon);
        let h = (t_hi - t_lo) / substeps as f64;
        for _ in 0..substeps {
            rk4_step(rates, &mut s, h, &mut scratch);
            if s.iter().any(|&x| !(-BOUND_EPS..=1.0 + BOUND_EPS).contains(&x)) {
                return None;
            }
        }
        traj.times.push(s0.t + t_hi);
        traj.activity.push(s.iter().sum());
        traj.states.push(s.clone());
    }
    Some(traj)
}

/// Classical fourth-order Runge-Kutta over `[0, horizon]`, recording every
/// `dt`. If the state leaves `[0, 1]` (beyond [`BOUND_EPS`]) the internal
/// step is halved and the integration restarted.
pub fn integrate_ode(
    rates: &MeanFieldRates,
    s0: &MeanFieldState,
    dt: f64,
    horizon: f64,
) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::validation(format!("step size {dt} must be positive")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::validation(format!("horizon {horizon} must be non-negative")));
    }
    if s0.s.len() != rates.len() {
        return Err(Error::validation(format!(
            "initial state has {} risks, rates have {}",
            s0.s.len(),
            rates.len()
        )));
    }
    for h in 0..=MAX_HALVINGS {
        if let Some(t) = try_integrate(rates, s0, dt, horizon, 1 << h) {
            return Ok(t);
        }
    }
    Err(Error::Numerical(format!(
        "trajectory left [0, 1] even with step {:e}",
        dt / f64::from(1u32 << MAX_HALVINGS)
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StationaryPoint {
    pub s: Vec<f64>,
    pub iterations: usize,
    /// Largest absolute right-hand side at the returned point.
    pub residual: f64,
}

impl StationaryPoint {
    pub fn activity(&self) -> f64 {
        self.s.iter().sum()
    }
}

fn max_residual(rates: &MeanFieldRates, s: &[f64]) -> f64 {
    let mut out = vec![0.0; s.len()];
    rates.rhs(s, &mut out);
    out.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Stable point reached by damped fixed-point iteration from `start`.
pub fn stationary_point_from(rates: &MeanFieldRates, start: &[f64], tol: f64) -> Result<StationaryPoint> {
    if !(tol > 0.0) {
        return Err(Error::validation("tolerance must be positive"));
    }
    if start.len() != rates.len() {
        return Err(Error::validation("start vector has wrong length"));
    }
    let n = rates.len();
    let mut s = start.to_vec();
    let mut next = vec![0.0; n];
    for it in 1..=MAX_FIXED_POINT_ITERATIONS {
        let mut change: f64 = 0.0;
        for i in 0..n {
            let pressure = rates.int[i] + rates.ext[i] * rates.neighbor_sum(&s, i);
            let denom = pressure + rates.rec[i];
            let target = if denom > 0.0 { pressure / denom } else { s[i] };
            next[i] = (1.0 - DAMPING) * s[i] + DAMPING * target;
            change = change.max((next[i] - s[i]).abs());
        }
        std::mem::swap(&mut s, &mut next);
        if change < tol {
            let residual = max_residual(rates, &s);
            if residual <= tol {
                return Ok(StationaryPoint {
                    s,
                    iterations: it,
                    residual,
                });
            }
        }
    }
    Err(Error::Numerical(format!(
        "fixed-point iteration did not converge in {MAX_FIXED_POINT_ITERATIONS} iterations; residual {:e}",
        max_residual(rates, &s)
    )))
}

/// Stable point starting from the all-inactive state.
pub fn stationary_point(rates: &MeanFieldRates, tol: f64) -> Result<StationaryPoint> {
    stationary_point_from(rates, &vec![0.0; rates.len()], tol)
}

/// Fully connected graph with identical intensities on every node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HomogeneousConfig {
    pub lambda_s: f64,
    pub lambda_r: f64,
    pub lambda_e: f64,
    pub n: usize,
    pub s0: f64,
}

impl HomogeneousConfig {
    pub fn new(lambda_s: f64, lambda_r: f64, lambda_e: f64, n: usize, s0: f64) -> Result<Self> {
        for (name, v) in [("lambda_s", lambda_s), ("lambda_r", lambda_r), ("lambda_e", lambda_e)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::validation(format!("{name} = {v} must be non-negative")));
            }
        }
        if n < 1 {
            return Err(Error::validation("need at least one node"));
        }
        if !(0.0..=1.0).contains(&s0) {
            return Err(Error::validation(format!("s0 = {s0} outside [0, 1]")));
        }
        Ok(Self {
            lambda_s,
            lambda_r,
            lambda_e,
            n,
            s0,
        })
    }

    /// Total influence intensity `(n - 1) lambda_e`.
    pub fn lambda_big_e(&self) -> f64 {
        (self.n - 1) as f64 * self.lambda_e
    }

    pub fn a(&self) -> f64 {
        self.lambda_s + self.lambda_r - self.lambda_big_e()
    }

    pub fn b(&self) -> f64 {
        let a = self.a();
        (a * a + 4.0 * self.lambda_s * self.lambda_big_e()).sqrt()
    }

    pub fn rates(&self) -> MeanFieldRates {
        let n = self.n;
        MeanFieldRates::new(
            vec![self.lambda_s; n],
            vec![self.lambda_r; n],
            vec![self.lambda_e; n],
            InfluenceGraph::complete(n),
        )
        .expect("validated intensities")
    }
}

/// Stable root in [0, 1] of `l_s (1 - s) - l_r s + l_E s (1 - s) = 0`.
pub fn homogeneous_asymptote(cfg: &HomogeneousConfig) -> f64 {
    let le = cfg.lambda_big_e();
    if le == 0.0 {
        let d = cfg.lambda_s + cfg.lambda_r;
        return if d > 0.0 { cfg.lambda_s / d } else { cfg.s0 };
    }
    let (a, b) = (cfg.a(), cfg.b());
    if a > 0.0 {
        // (b - a) / (2 l_E) rewritten to avoid cancellation.
        2.0 * cfg.lambda_s / (a + b)
    } else {
        (b - a) / (2.0 * le)
    }
}

/// Closed-form solution of the homogeneous equation
/// `ds/dt = l_s - a s - l_E s^2`:
///
/// ```text
/// s(t) = (b tanh(b t / 2 + artanh((2 l_E s0 + a) / b)) - a) / (2 l_E)
/// ```
///
/// Requires `s0` at or below the stable point (the `artanh` argument must
/// lie in (-1, 1)); `s0` equal to the stable point gives a constant.
pub fn homogeneous_closed_form(cfg: &HomogeneousConfig, t: f64) -> Result<f64> {
    let le = cfg.lambda_big_e();
    if le == 0.0 {
        let d = cfg.lambda_s + cfg.lambda_r;
        if d == 0.0 {
            return Ok(cfg.s0);
        }
        let inf = cfg.lambda_s / d;
        return Ok(inf + (cfg.s0 - inf) * (-d * t).exp());
    }
    let (a, b) = (cfg.a(), cfg.b());
    if b == 0.0 {
        return Err(Error::Parameterization("b = 0: no artanh form".into()));
    }
    let arg = (2.0 * le * cfg.s0 + a) / b;
    if arg == 1.0 {
        return Ok(cfg.s0);
    }
    if !(-1.0 < arg && arg < 1.0) {
        return Err(Error::Parameterization(format!(
            "artanh argument {arg} outside (-1, 1); s0 = {} lies above the stable point",
            cfg.s0
        )));
    }
    Ok((b * (b * t / 2.0 + arg.atanh()).tanh() - a) / (2.0 * le))
}

/// Value of the decoupled linear equation at `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearSolution {
    pub value: f64,
    /// Both intensities are zero and the solution is the constant `s0`.
    pub degenerate: bool,
}

/// Solution of `ds/dt = l_int (1 - s) - l_rec s` from `s(0) = s0`.
pub fn linear_ode_solution(lambda_int: f64, lambda_rec: f64, t: f64, s0: f64) -> LinearSolution {
    let d = lambda_int + lambda_rec;
    if d == 0.0 {
        return LinearSolution {
            value: s0,
            degenerate: true,
        };
    }
    let inf = lambda_int / d;
    LinearSolution {
        value: inf + (s0 - inf) * (-d * t).exp(),
        degenerate: false,
    }
}

/// Stationary probability of being active for an isolated two-state chain
/// with activation `p_int` and recovery `1 - p_con`.
pub fn disconnected_stationary(p_int: f64, p_con: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_int) || !(0.0..=1.0).contains(&p_con) {
        return Err(Error::validation(format!(
            "probabilities ({p_int}, {p_con}) outside [0, 1]"
        )));
    }
    let denom = p_int + 1.0 - p_con;
    if denom == 0.0 {
        return Err(Error::Degenerate(
            "p_int = 0 and p_con = 1: both states absorbing".into(),
        ));
    }
    Ok(p_int / denom)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Stable root of `-l_E s^2 - a s + l_s` by bisection on [0, 1].
    fn bisect_root(cfg: &HomogeneousConfig) -> f64 {
        let f = |s: f64| cfg.lambda_s * (1.0 - s) - cfg.lambda_r * s + cfg.lambda_big_e() * s * (1.0 - s);
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn golden_ratio_asymptote() {
        // n = 2 so that l_E = l_e.
        let cfg = HomogeneousConfig::new(1.0, 1.0, 1.0, 2, 0.0).unwrap();
        let expected = (5f64.sqrt() - 1.0) / 2.0;
        assert!((homogeneous_asymptote(&cfg) - expected).abs() < 1e-15);
        assert!((homogeneous_asymptote(&cfg) - bisect_root(&cfg)).abs() < 1e-12);
        assert!((homogeneous_closed_form(&cfg, 60.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn asymptote_limits() {
        let c = HomogeneousConfig::new(0.3, 0.7, 0.0, 10, 0.0).unwrap();
        assert!((homogeneous_asymptote(&c) - 0.3).abs() < 1e-15);
        let c = HomogeneousConfig::new(0.0, 0.7, 0.05, 10, 0.0).unwrap();
        assert_eq!(homogeneous_asymptote(&c), 0.0);
    }

    #[test]
    fn closed_form_initial_condition_and_domain() {
        let c = HomogeneousConfig::new(0.01, 0.1, 0.02, 20, 0.05).unwrap();
        assert!((homogeneous_closed_form(&c, 0.0).unwrap() - 0.05).abs() < 1e-14);
        let above = HomogeneousConfig::new(0.01, 0.5, 0.001, 5, 0.9).unwrap();
        assert!(matches!(
            homogeneous_closed_form(&above, 1.0),
            Err(Error::Parameterization(_))
        ));
    }

    #[test]
    fn closed_form_satisfies_ode() {
        let c = HomogeneousConfig::new(0.02, 0.09, 0.004, 50, 0.1).unwrap();
        let h = 1e-4;
        for &t in &[0.5, 3.0, 17.0, 80.0] {
            let s = homogeneous_closed_form(&c, t).unwrap();
            let ds = (homogeneous_closed_form(&c, t + h).unwrap()
                - homogeneous_closed_form(&c, t - h).unwrap())
                / (2.0 * h);
            let rhs = c.lambda_s * (1.0 - s) - c.lambda_r * s + c.lambda_big_e() * s * (1.0 - s);
            assert!((ds - rhs).abs() < 1e-6, "t={t}: {ds} vs {rhs}");
        }
    }

    #[test]
    fn linear_solution_examples() {
        assert_eq!(linear_ode_solution(0.1, 0.3, 0.0, 0.0).value, 0.0);
        let v = linear_ode_solution(0.1, 0.3, 5.0, 0.0).value;
        assert!((v - 0.25 * (1.0 - (-2.0f64).exp())).abs() < 1e-15);
        assert!((linear_ode_solution(0.2, 0.2, 1e4, 0.0).value - 0.5).abs() < 1e-15);
        let d = linear_ode_solution(0.0, 0.0, 3.0, 0.4);
        assert!(d.degenerate);
        assert_eq!(d.value, 0.4);
    }

    #[test]
    fn null_dynamics_stays_at_zero() {
        let r = MeanFieldRates::new(
            vec![0.0; 3],
            vec![0.2; 3],
            vec![0.0; 3],
            InfluenceGraph::complete(3),
        )
        .unwrap();
        let t = integrate_ode(&r, &MeanFieldState::zeros(3), 0.1, 50.0).unwrap();
        assert!(t.states.iter().flatten().all(|&x| x == 0.0));
        assert_eq!(t.times.len(), 501);
    }

    #[test]
    fn decoupled_stationary_point() {
        let r = MeanFieldRates::new(
            vec![0.01, 0.2],
            vec![0.09, 0.05],
            vec![0.0, 0.0],
            InfluenceGraph::complete(2),
        )
        .unwrap();
        let p = stationary_point(&r, 1e-12).unwrap();
        assert!((p.s[0] - 0.1).abs() < 1e-10);
        assert!((p.s[1] - 0.8).abs() < 1e-10);
    }

    #[test]
    fn no_source_means_empty_stationary_point() {
        let r = MeanFieldRates::new(
            vec![0.0; 4],
            vec![0.1; 4],
            vec![0.5; 4],
            InfluenceGraph::complete(4),
        )
        .unwrap();
        let p = stationary_point(&r, 1e-10).unwrap();
        assert!(p.s.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn disconnected_stationary_examples() {
        assert!((disconnected_stationary(0.3, 0.7).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(disconnected_stationary(0.0, 0.4).unwrap(), 0.0);
        assert!(matches!(
            disconnected_stationary(0.0, 1.0),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn infinite_intensities_rejected() {
        let r = DerivedRates::from_parts(vec![0.1], vec![0.0], vec![0.0], InfluenceGraph::empty(1))
            .unwrap();
        assert!(MeanFieldRates::from_rates(&r).is_err());
    }
}
