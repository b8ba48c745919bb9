use serde::Serialize;
use statrs::function::gamma::gamma_ur;

use super::fit::{FitResult, ModelVariant};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LrTestResult {
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}

/// Likelihood-ratio statistic and p-value from two maximized
/// log-likelihoods. A restricted optimum above the full one (possible only
/// through search resolution) yields `D = 0`.
pub fn lr_statistic(ll_full: f64, ll_restricted: f64, df: usize) -> Result<LrTestResult> {
    if df == 0 {
        return Err(Error::validation("degrees of freedom must be at least 1"));
    }
    if !(ll_full.is_finite() && ll_restricted.is_finite()) {
        return Err(Error::validation("log-likelihoods must be finite"));
    }
    let statistic = (2.0 * (ll_full - ll_restricted)).max(0.0);
    Ok(LrTestResult {
        statistic,
        degrees_of_freedom: df,
        p_value: chi_square_sf(statistic, df),
    })
}

fn nested(full: ModelVariant, restricted: ModelVariant) -> bool {
    use ModelVariant::*;
    matches!(
        (full, restricted),
        (Network, Disconnected) | (Network, ExpertBased) | (Disconnected, ExpertBased)
    )
}

/// Likelihood-ratio test of `restricted` against `full`; the variants must
/// be nested.
pub fn lr_test(full: &FitResult, restricted: &FitResult) -> Result<LrTestResult> {
    if !nested(full.variant, restricted.variant) {
        return Err(Error::NonNested {
            full: full.variant.to_string(),
            restricted: restricted.variant.to_string(),
        });
    }
    lr_statistic(
        full.log_likelihood,
        restricted.log_likelihood,
        full.free_parameters - restricted.free_parameters,
    )
}

/// One row of a model comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LrComparison {
    pub full: ModelVariant,
    pub restricted: ModelVariant,
    pub ll_full: f64,
    pub ll_restricted: f64,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    /// Chi-square p-value; absent for non-nested pairs.
    pub p_value: Option<f64>,
    pub nested: bool,
}

/// Compares every pair of fits. Nested pairs get a test; other pairs are
/// reported descriptively with the better-fitting model as `full` and
/// `df` the difference in free-parameter counts (at least 1).
pub fn compare_models(fits: &[FitResult]) -> Vec<LrComparison> {
    let mut rows = Vec::new();
    for (i, a) in fits.iter().enumerate() {
        for b in &fits[i + 1..] {
            let (full, restricted) = if nested(a.variant, b.variant) {
                (a, b)
            } else if nested(b.variant, a.variant) {
                (b, a)
            } else if a.log_likelihood >= b.log_likelihood {
                (a, b)
            } else {
                (b, a)
            };
            let is_nested = nested(full.variant, restricted.variant);
            let df = full
                .free_parameters
                .abs_diff(restricted.free_parameters)
                .max(1);
            let statistic = (2.0 * (full.log_likelihood - restricted.log_likelihood)).max(0.0);
            rows.push(LrComparison {
                full: full.variant,
                restricted: restricted.variant,
                ll_full: full.log_likelihood,
                ll_restricted: restricted.log_likelihood,
                statistic,
                degrees_of_freedom: df,
                p_value: is_nested.then(|| chi_square_sf(statistic, df)),
                nested: is_nested,
            });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Upper tail by Simpson quadrature of the chi-square density; exact
    /// enough for checking the incomplete-gamma route.
    fn chi2_tail_quadrature(x: f64, df: usize) -> f64 {
        let k = df as f64 / 2.0;
        let norm = 1.0 / (2f64.powf(k) * statrs::function::gamma::gamma(k));
        // Substitute t = x + u^2 to tame the tail and (for df = 1) the cusp.
        let f = |u: f64| {
            let t = x + u * u;
            norm * t.powf(k - 1.0) * (-t / 2.0).exp() * 2.0 * u
        };
        let (a, b, n) = (0.0, 12.0, 200_000);
        let h = (b - a) / n as f64;
        let mut s = f(a) + f(b);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(a + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn reported_loglikelihood_pair() {
        let r = lr_statistic(-415.6, -420.1, 1).unwrap();
        assert!((r.statistic - 9.0).abs() < 1e-9);
        let oracle = chi2_tail_quadrature(9.0, 1);
        assert!((r.p_value - oracle).abs() < 1e-8, "{} vs {oracle}", r.p_value);
        assert!((r.p_value - 0.0027).abs() < 5e-5);
        assert!(r.p_value < 0.01);
    }

    #[test]
    fn identical_fits() {
        let r = lr_statistic(-100.0, -100.0, 1).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn five_percent_quantile() {
        let r = lr_statistic(0.0, -3.841 / 2.0, 1).unwrap();
        let oracle = chi2_tail_quadrature(3.841, 1);
        assert!((r.p_value - oracle).abs() < 1e-8);
        assert!((r.p_value - 0.05).abs() < 1e-4);
        for df in [2, 3, 5] {
            for x in [0.5, 2.0, 7.5] {
                let a = chi_square_sf(x, df);
                let b = chi2_tail_quadrature(x, df);
                assert!((a - b).abs() < 1e-8, "df={df} x={x}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn zero_df_rejected() {
        assert!(lr_statistic(-1.0, -2.0, 0).is_err());
    }
}
