//! Samplers for the simulation studies: Gumbel copulas, equi-correlated
//! Gaussian data, and bootstrap index matrices.

use crate::rng::{Seed, SplitMix64};
use crate::{Error, Result};

/// A dense n x m matrix of observations, one row per replicate and one
/// column per coordinate (hypothesis). Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl SampleMatrix {
    /// Build from row-major data. All entries must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::shape(format!(
                "matrix must be non-empty, got {rows} x {cols}"
            )));
        }
        if data.len() != rows * cols {
            return Err(Error::shape(format!(
                "expected {rows} x {cols} = {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        if let Some(bad) = data.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain(format!("non-finite matrix entry {bad}")));
        }
        Ok(SampleMatrix { rows, cols, data })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// Copy of column `j`.
    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn column_mean(&self, j: usize) -> f64 {
        self.column(j).iter().sum::<f64>() / self.rows as f64
    }

    /// Keep only the given columns (in the given order).
    pub fn select_columns(&self, cols: &[usize]) -> Result<Self> {
        if cols.iter().any(|&c| c >= self.cols) {
            return Err(Error::shape(format!(
                "column index out of range (matrix has {} columns)",
                self.cols
            )));
        }
        let mut data = Vec::with_capacity(self.rows * cols.len());
        for i in 0..self.rows {
            for &c in cols {
                data.push(self.get(i, c));
            }
        }
        SampleMatrix::new(self.rows, cols.len(), data)
    }
}

/// Kendall's tau -> Gumbel parameter: theta = 1 / (1 - tau).
///
/// Valid for tau in [0, 1); tau = 0 gives the independence member theta = 1.
pub fn tau_to_theta(tau: f64) -> Result<f64> {
    if !tau.is_finite() || !(0.0..1.0).contains(&tau) {
        return Err(Error::domain(format!(
            "Kendall tau must lie in [0, 1), got {tau}"
        )));
    }
    Ok(1.0 / (1.0 - tau))
}

fn check_theta(theta: f64) -> Result<()> {
    if !theta.is_finite() || theta < 1.0 {
        return Err(Error::domain(format!(
            "Gumbel parameter theta must be >= 1, got {theta}"
        )));
    }
    Ok(())
}

/// One positive stable variate with Laplace transform exp(-t^alpha),
/// 0 < alpha < 1, via the Chambers-Mallows-Stuck / Kanter representation:
/// with U ~ Uniform(0, pi) and W ~ Exp(1),
///
///   V = sin(alpha U) / sin(U)^(1/alpha) * ( sin((1-alpha) U) / W )^((1-alpha)/alpha).
fn positive_stable(alpha: f64, rng: &mut SplitMix64) -> f64 {
    let u = std::f64::consts::PI * rng.open01();
    let w = rng.exp1();
    let a = (alpha * u).sin() / u.sin().powf(1.0 / alpha);
    a * (((1.0 - alpha) * u).sin() / w).powf((1.0 - alpha) / alpha)
}

/// Draw `n` vectors from the m-variate Gumbel copula with parameter
/// `theta >= 1`. Entries are uniforms in (0, 1).
///
/// Uses the Marshall-Olkin mixture construction: with V positive stable of
/// index 1/theta and E_1..E_m iid standard exponentials,
/// `U_j = exp(-(E_j / V)^(1/theta))` has the Gumbel copula. `theta = 1` is
/// the independence copula and is drawn directly.
///
/// Per row the draw order is fixed (stable angle, stable exponential, then
/// the m coordinate exponentials), so a given `(seed, n, m, theta)` always
/// produces the same matrix.
pub fn sample_gumbel(n: usize, m: usize, theta: f64, seed: Seed) -> Result<SampleMatrix> {
    check_theta(theta)?;
    if n == 0 || m == 0 {
        return Err(Error::shape(format!(
            "sample dimensions must be positive, got n = {n}, m = {m}"
        )));
    }
    let mut rng = seed.rng();
    let mut data = Vec::with_capacity(n * m);
    if theta == 1.0 {
        for _ in 0..n * m {
            data.push(rng.open01());
        }
        return SampleMatrix::new(n, m, data);
    }
    let alpha = 1.0 / theta;
    for _ in 0..n {
        let v = positive_stable(alpha, &mut rng);
        for _ in 0..m {
            let e = rng.exp1();
            // psi_theta(e / v) with psi_theta(x) = exp(-x^(1/theta));
            // clamp into the open interval so downstream ranking and
            // quantile transforms never see 0 or 1 exactly.
            let u = (-(e / v).powf(alpha)).exp();
            data.push(u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON));
        }
    }
    SampleMatrix::new(n, m, data)
}

/// Draw `n` rows of an m-variate Gaussian with unit variances, common
/// pairwise correlation `rho` in [0, 1), and mean vector `mu`:
///
///   X_{i,j} = mu_j + sqrt(rho) * Z_{i,0} + sqrt(1 - rho) * Z_{i,j}
///
/// with all Z iid standard normal. Per row, the shared factor Z_{i,0} is
/// drawn first, then the m idiosyncratic terms.
pub fn sample_gauss_equicorr(
    n: usize,
    mu: &[f64],
    rho: f64,
    seed: Seed,
) -> Result<SampleMatrix> {
    let m = mu.len();
    if n == 0 || m == 0 {
        return Err(Error::shape(format!(
            "sample dimensions must be positive, got n = {n}, m = {m}"
        )));
    }
    if !rho.is_finite() || !(0.0..1.0).contains(&rho) {
        return Err(Error::domain(format!(
            "equi-correlation rho must lie in [0, 1), got {rho}"
        )));
    }
    if mu.iter().any(|v| !v.is_finite()) {
        return Err(Error::domain("mean vector has a non-finite entry".to_string()));
    }
    let (sr, si) = (rho.sqrt(), (1.0 - rho).sqrt());
    let mut rng = seed.rng();
    let mut data = Vec::with_capacity(n * m);
    for _ in 0..n {
        let shared = rng.normal();
        for &mu_j in mu {
            data.push(mu_j + sr * shared + si * rng.normal());
        }
    }
    SampleMatrix::new(n, m, data)
}

/// Draw `b` bootstrap index rows of length `n`, each entry uniform on
/// `0..n` (resampling with replacement).
pub fn bootstrap_indices(n: usize, b: usize, seed: Seed) -> Result<Vec<Vec<usize>>> {
    if n == 0 || b == 0 {
        return Err(Error::shape(format!(
            "bootstrap dimensions must be positive, got n = {n}, b = {b}"
        )));
    }
    let mut rng = seed.rng();
    Ok((0..b)
        .map(|_| (0..n).map(|_| rng.index(n)).collect())
        .collect())
}
