//! Multiple-testing plumbing: p-values, local-level calibration, test
//! decisions, and realized error rates.
//!
//! A single-step procedure rejects hypothesis j when `p_j < alpha_loc`.
//! If the joint distribution of the test statistics under the global null
//! has copula C, the family-wise error rate of that procedure is
//! `1 - C(1 - alpha_loc, ..., 1 - alpha_loc)`, so the exact local level
//! solves `C(u, ..., u) = 1 - alpha` on the diagonal. Calibration is
//! therefore one diagonal-quantile evaluation of a (fitted or known)
//! generator; Bonferroni's `alpha / m` is the assumption-free fallback.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::generator::{FitDiagnostics, Generator};
use crate::rng::Seed;
use crate::sampling::{bootstrap_indices, SampleMatrix};
use crate::{Error, Result};

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal parameters are valid")
}

/// Standard normal distribution function.
///
/// Computed through `erfc` from libm (accurate to a few ulp); the erf
/// implementation behind `statrs`' normal CDF only reaches about 1e-11
/// absolute accuracy, which is too loose for the closed-form checks here.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Standard normal density.
fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Standard normal quantile function, `p in (0, 1)`.
///
/// Seeded by `statrs` and polished with two Newton steps against
/// [`normal_cdf`], so the quantile and the CDF invert each other to near
/// machine precision.
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !p.is_finite() || !(0.0..1.0).contains(&p) || p == 0.0 {
        return Err(Error::domain(format!(
            "normal quantile needs p in (0, 1), got {p}"
        )));
    }
    let mut x = std_normal().inverse_cdf(p);
    for _ in 0..2 {
        let density = normal_pdf(x);
        if !x.is_finite() || density <= 0.0 {
            break;
        }
        x -= (normal_cdf(x) - p) / density;
    }
    Ok(x)
}

/// Two-sided p-value of a mean-type statistic `t` whose null distribution
/// is N(0, 1/n): `p = 2 (1 - Phi(sqrt(n) |t|))`.
pub fn p_two_sided_normal(t: f64, n_data: usize) -> Result<f64> {
    if n_data == 0 {
        return Err(Error::domain("sample size must be positive".to_string()));
    }
    if !t.is_finite() {
        return Err(Error::domain(format!("statistic must be finite, got {t}")));
    }
    let z = (n_data as f64).sqrt() * t.abs();
    Ok((2.0 * (1.0 - normal_cdf(z))).clamp(0.0, 1.0))
}

/// How a local level was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Kendall-interpolating generator fit in the full dimension.
    Gnz,
    /// Pairwise-averaged generator fit.
    Pairwise,
    /// `alpha / m`, no copula model.
    Bonferroni,
    /// Closed-form Gumbel diagonal with a known parameter.
    Oracle,
}

impl Method {
    pub fn parse(s: &str) -> Result<Method> {
        match s {
            "gnz" => Ok(Method::Gnz),
            "pairwise" => Ok(Method::Pairwise),
            "bonferroni" => Ok(Method::Bonferroni),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::parse(format!(
                "unknown method '{other}' (expected gnz, pairwise, bonferroni or oracle)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Method::Gnz => "gnz",
            Method::Pairwise => "pairwise",
            Method::Bonferroni => "bonferroni",
            Method::Oracle => "oracle",
        }
    }
}

/// A calibrated local level, the method that produced it, and fit counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationResult {
    pub method: Method,
    pub alpha_loc: f64,
    pub diagnostics: FitDiagnostics,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !alpha.is_finite() || !(0.0..1.0).contains(&alpha) || alpha == 0.0 {
        return Err(Error::domain(format!(
            "global level alpha must lie in (0, 1), got {alpha}"
        )));
    }
    Ok(())
}

/// Local level implied by a generator: `alpha_loc = 1 - q(1 - alpha)` where
/// `q` is the m-variate copula diagonal quantile of `gen`. For any valid
/// generator this lies in `[0, alpha]`.
pub fn calibrate(gen: &Generator, m: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let q = gen.diagonal_quantile(m, 1.0 - alpha)?;
    Ok(1.0 - q)
}

/// Bonferroni local level `alpha / m`.
pub fn calibrate_bonferroni(m: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if m == 0 {
        return Err(Error::domain("number of hypotheses must be positive".to_string()));
    }
    Ok(alpha / m as f64)
}

/// Exact local level under an m-variate Gumbel copula with parameter
/// `theta`: `alpha_loc = 1 - (1 - alpha)^(m^(-1/theta))`.
///
/// theta = 1 recovers the Sidak independence correction; theta -> infinity
/// approaches the unadjusted level alpha (comonotone limit).
pub fn calibrate_oracle_gumbel(theta: f64, m: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if m == 0 {
        return Err(Error::domain("number of hypotheses must be positive".to_string()));
    }
    if !theta.is_finite() || theta < 1.0 {
        return Err(Error::domain(format!(
            "Gumbel parameter theta must be >= 1, got {theta}"
        )));
    }
    let exponent = (m as f64).powf(-1.0 / theta);
    Ok(1.0 - (1.0 - alpha).powf(exponent))
}

/// Family-wise error rate actually attained by local level `alpha_loc`
/// when the statistics follow an m-variate Gumbel copula with parameter
/// `theta`: `1 - (1 - alpha_loc)^(m^(1/theta))`.
pub fn realized_fwer_gumbel(theta: f64, m: usize, alpha_loc: f64) -> Result<f64> {
    if !theta.is_finite() || theta < 1.0 {
        return Err(Error::domain(format!(
            "Gumbel parameter theta must be >= 1, got {theta}"
        )));
    }
    if m == 0 {
        return Err(Error::domain("number of hypotheses must be positive".to_string()));
    }
    if !alpha_loc.is_finite() || !(0.0..=1.0).contains(&alpha_loc) {
        return Err(Error::domain(format!(
            "local level must lie in [0, 1], got {alpha_loc}"
        )));
    }
    Ok(1.0 - (1.0 - alpha_loc).powf((m as f64).powf(1.0 / theta)))
}

/// Single-step decisions: reject hypothesis j iff `p_j < alpha_loc`
/// (strict, so `alpha_loc = 0` rejects nothing).
pub fn decide(pvalues: &[f64], alpha_loc: f64) -> Result<Vec<bool>> {
    if !alpha_loc.is_finite() || !(0.0..=1.0).contains(&alpha_loc) {
        return Err(Error::domain(format!(
            "local level must lie in [0, 1], got {alpha_loc}"
        )));
    }
    if pvalues.iter().any(|p| !p.is_finite() || !(0.0..=1.0).contains(p)) {
        return Err(Error::domain("p-values must lie in [0, 1]".to_string()));
    }
    Ok(pvalues.iter().map(|p| *p < alpha_loc).collect())
}

/// Outcome of one testing round against known ground truth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    /// At least one true null hypothesis was rejected.
    pub fwe: bool,
    /// Fraction of false null hypotheses rejected (0 when there are none).
    pub power: f64,
}

/// Compare decisions with truth flags (`true` = the null hypothesis holds).
pub fn evaluate(decisions: &[bool], null_is_true: &[bool]) -> Result<TestOutcome> {
    if decisions.len() != null_is_true.len() {
        return Err(Error::shape(format!(
            "got {} decisions for {} hypotheses",
            decisions.len(),
            null_is_true.len()
        )));
    }
    let mut false_rejections = 0usize;
    let mut true_rejections = 0usize;
    let mut false_nulls = 0usize;
    for (&reject, &is_null) in decisions.iter().zip(null_is_true) {
        if is_null {
            if reject {
                false_rejections += 1;
            }
        } else {
            false_nulls += 1;
            if reject {
                true_rejections += 1;
            }
        }
    }
    Ok(TestOutcome {
        fwe: false_rejections > 0,
        power: if false_nulls == 0 {
            0.0
        } else {
            true_rejections as f64 / false_nulls as f64
        },
    })
}

/// Bootstrap approximation of the statistics' joint law in the least
/// favorable configuration: for each of `b` resamples of the rows of
/// `data`, the statistic vector `T*_j = |mean*(col j) - mean(col j)|`.
/// Centering at the observed means makes every marginal a null marginal,
/// whatever the data means are.
pub fn bootstrap_lfc_statistics(data: &SampleMatrix, b: usize, seed: Seed) -> Result<SampleMatrix> {
    let n = data.rows();
    let m = data.cols();
    let idx = bootstrap_indices(n, b, seed)?;
    let col_means: Vec<f64> = (0..m).map(|j| data.column_mean(j)).collect();
    let mut out = Vec::with_capacity(b * m);
    for row_idx in &idx {
        for j in 0..m {
            let mean_star =
                row_idx.iter().map(|&i| data.get(i, j)).sum::<f64>() / n as f64;
            out.push((mean_star - col_means[j]).abs());
        }
    }
    SampleMatrix::new(b, m, out)
}
