//! Multivariate pseudo-observations and the empirical Kendall distribution
//! function.
//!
//! For an m-variate sample X_1..X_n the pseudo-observation of row i is the
//! fraction of rows it strictly dominates coordinate-wise,
//!
//!   W_i = #{ j != i : X_{j,l} < X_{i,l} for all l } / (n + 1),
//!
//! an estimate of C(U_i), the copula evaluated at row i's uniform ranks.
//! The distribution function of C(U) is the Kendall distribution function
//! K; every Archimedean copula satisfies K(t) >= t, so the empirical df of
//! the W_i is lifted just enough to restore that property before a
//! generator is fitted to it.

use crate::sampling::SampleMatrix;
use crate::{Error, Result};

/// Coordinate-wise strict-dominance pseudo-observations, in row order.
///
/// Needs at least two rows; ties are handled by the strict inequality (a
/// row never dominates a row it equals in some coordinate), so the minimum
/// over rows is always 0 and every value lies in
/// {0, 1/(n+1), ..., (n-1)/(n+1)}.
pub fn pseudo_observations(sample: &SampleMatrix) -> Result<Vec<f64>> {
    let n = sample.rows();
    if n < 2 {
        return Err(Error::domain(format!(
            "pseudo-observations need at least 2 rows, got {n}"
        )));
    }
    let denom = (n + 1) as f64;
    let mut w = Vec::with_capacity(n);
    for i in 0..n {
        let xi = sample.row(i);
        let mut count = 0usize;
        for j in 0..n {
            if j == i {
                continue;
            }
            let xj = sample.row(j);
            if xj.iter().zip(xi).all(|(a, b)| a < b) {
                count += 1;
            }
        }
        w.push(count as f64 / denom);
    }
    Ok(w)
}

/// A discrete Kendall distribution function: a right-continuous step df
/// with finitely many atoms.
///
/// Invariants (checked on construction):
/// - atoms strictly ascending, inside [0, 1);
/// - cumulative values non-decreasing, in (0, 1], ending at exactly 1;
/// - the Kendall property K(t) >= t on all of [0, 1], which for a step df
///   amounts to `cum[j] >= atoms[j + 1]` (with a virtual final atom at 1).
#[derive(Debug, Clone, PartialEq)]
pub struct KendallDf {
    atoms: Vec<f64>,
    cum: Vec<f64>,
}

impl KendallDf {
    /// Build from atoms and their cumulative probabilities.
    pub fn from_cumulative(atoms: Vec<f64>, cum: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() || atoms.len() != cum.len() {
            return Err(Error::shape(format!(
                "need equally many atoms and cumulative values (> 0), got {} and {}",
                atoms.len(),
                cum.len()
            )));
        }
        for window in atoms.windows(2) {
            if !(window[0] < window[1]) {
                return Err(Error::domain(
                    "atoms must be strictly ascending".to_string(),
                ));
            }
        }
        if atoms.iter().any(|t| !t.is_finite() || !(0.0..1.0).contains(t)) {
            return Err(Error::domain("atoms must lie in [0, 1)".to_string()));
        }
        for window in cum.windows(2) {
            if !(window[0] <= window[1]) {
                return Err(Error::domain(
                    "cumulative values must be non-decreasing".to_string(),
                ));
            }
        }
        if cum.iter().any(|c| !c.is_finite() || *c <= 0.0 || *c > 1.0) {
            return Err(Error::domain(
                "cumulative values must lie in (0, 1]".to_string(),
            ));
        }
        let last = *cum.last().unwrap();
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!(
                "last cumulative value must be 1, got {last}"
            )));
        }
        let mut cum = cum;
        *cum.last_mut().unwrap() = 1.0;
        for j in 0..atoms.len() {
            let next = if j + 1 < atoms.len() { atoms[j + 1] } else { 1.0 };
            if cum[j] < next - 1e-12 {
                return Err(Error::domain(format!(
                    "Kendall property violated: K = {} on [{}, {})",
                    cum[j], atoms[j], next
                )));
            }
        }
        Ok(KendallDf { atoms, cum })
    }

    /// Build from atoms and point masses (which must sum to 1).
    pub fn from_atoms_masses(atoms: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if masses.iter().any(|q| !q.is_finite() || *q <= 0.0) {
            return Err(Error::domain("masses must be positive".to_string()));
        }
        let mut cum = Vec::with_capacity(masses.len());
        let mut acc = 0.0;
        for q in &masses {
            acc += q;
            cum.push(acc);
        }
        if (acc - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("masses must sum to 1, got {acc}")));
        }
        Self::from_cumulative(atoms, cum)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn cumulative(&self) -> &[f64] {
        &self.cum
    }

    /// Point masses, in atom order.
    pub fn masses(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.cum.len());
        let mut prev = 0.0;
        for &c in &self.cum {
            out.push(c - prev);
            prev = c;
        }
        out
    }

    /// Evaluate the step df: K(t) = cum[j] for t in [atoms[j], atoms[j+1]),
    /// 0 left of the first atom, 1 from the last atom on.
    pub fn eval(&self, t: f64) -> f64 {
        // partition_point: number of atoms <= t.
        let k = self.atoms.partition_point(|a| *a <= t);
        if k == 0 {
            0.0
        } else {
            self.cum[k - 1]
        }
    }
}

/// Empirical Kendall distribution function of pseudo-observations `w`,
/// modified so the Kendall property K(t) >= t holds everywhere:
///
/// 1. take the ordinary empirical df of the values (atoms = distinct
///    values, cumulative = counts / n);
/// 2. raise each cumulative value to at least the next atom,
///    `c_j = max(c_j, t_{j+1})` with a virtual final atom at 1 — on
///    [t_j, t_{j+1}) the step value must dominate every t in the interval;
/// 3. restore monotonicity with a cumulative-max pass (raising only);
/// 4. if the smallest value is positive, prepend an atom at 0 with
///    cumulative value t_1, covering [0, t_1) the same way.
///
/// Pseudo-observations always contain a 0 (some row dominates no other
/// row), so step 4 only fires for externally supplied values.
pub fn empirical_kendall_df(w: &[f64]) -> Result<KendallDf> {
    if w.is_empty() {
        return Err(Error::domain(
            "need at least one pseudo-observation".to_string(),
        ));
    }
    if w.iter().any(|v| !v.is_finite() || !(0.0..1.0).contains(v)) {
        return Err(Error::domain(
            "pseudo-observations must lie in [0, 1)".to_string(),
        ));
    }
    let n = w.len() as f64;
    let mut sorted = w.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut atoms: Vec<f64> = Vec::new();
    let mut cum: Vec<f64> = Vec::new();
    let mut seen = 0usize;
    let mut i = 0usize;
    while i < sorted.len() {
        let t = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == t {
            j += 1;
        }
        seen += j - i;
        atoms.push(t);
        cum.push(seen as f64 / n);
        i = j;
    }

    // Kendall-property floor per interval, then monotone repair.
    let k = atoms.len();
    for j in 0..k {
        let next = if j + 1 < k { atoms[j + 1] } else { 1.0 };
        if cum[j] < next {
            cum[j] = next;
        }
    }
    for j in 1..k {
        if cum[j] < cum[j - 1] {
            cum[j] = cum[j - 1];
        }
    }
    if atoms[0] > 0.0 {
        atoms.insert(0, 0.0);
        cum.insert(0, atoms[1]);
    }
    KendallDf::from_cumulative(atoms, cum)
}

/// Kendall distribution function of the bivariate Gumbel copula,
/// K(t) = t - t ln(t) / theta, extended by continuity to K(0) = 0.
pub fn kendall_df_gumbel_2d(t: f64, theta: f64) -> Result<f64> {
    if !theta.is_finite() || theta < 1.0 {
        return Err(Error::domain(format!(
            "Gumbel parameter theta must be >= 1, got {theta}"
        )));
    }
    if !t.is_finite() || !(0.0..=1.0).contains(&t) {
        return Err(Error::domain(format!("t must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    Ok(t - t * t.ln() / theta)
}

/// Brute-force sample Kendall tau of two equal-length vectors: concordant
/// minus discordant pairs over n(n-1)/2 (ties count zero).
pub fn empirical_tau(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "vectors must have equal length");
    let n = x.len();
    assert!(n >= 2, "need at least two observations");
    let mut s = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let p = (x[i] - x[j]) * (y[i] - y[j]);
            if p > 0.0 {
                s += 1;
            } else if p < 0.0 {
                s -= 1;
            }
        }
    }
    s as f64 / (n * (n - 1) / 2) as f64
}
