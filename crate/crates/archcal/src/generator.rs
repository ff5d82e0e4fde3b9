//! Archimedean generator representations, evaluation, and fitting.
//!
//! A generator is a convex, strictly decreasing function `phi: [0,1] ->
//! [0,inf]` with `phi(1) = 0`; its generalized inverse `psi` builds the
//! copula `C(u) = psi(phi(u_1) + ... + phi(u_m))`. Generators are
//! identified only up to a positive scale factor, and every quantity this
//! crate derives from a generator (copula diagonal, diagonal quantile,
//! local level) is invariant under that scaling.
//!
//! Three representations are supported:
//! - [`Generator::Gumbel`]: the parametric family `phi(t) = (-ln t)^theta`,
//!   used as the ground truth in simulations;
//! - [`Generator::RadialAtoms`]: a discrete Williamson transform
//!   `psi(x) = sum_j q_j (1 - x / rho_j)_+^(d-1)`, which is d-monotone by
//!   construction and is what the Kendall-interpolating fit produces;
//! - [`Generator::PiecewisePhi`]: `phi` stored as a piecewise-linear
//!   function of `t`, the natural form for the pairwise-averaged fit.

use serde::{Deserialize, Serialize};

use crate::kendall::{empirical_kendall_df, pseudo_observations, KendallDf};
use crate::rng::Seed;
use crate::sampling::SampleMatrix;
use crate::{Error, Result};

/// Behaviour of a piecewise `phi` left of its first knot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BelowSupport {
    /// Constant-extend with the first knot value (a bounded generator).
    #[default]
    Cap,
    /// Treat `phi` as +infinity below the first knot (a strict generator
    /// truncated at the first knot).
    Infinite,
}

/// Wire format; see [`Generator`] for the invariants enforced on the way in.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "repr", rename_all = "snake_case")]
enum GeneratorWire {
    Gumbel {
        theta: f64,
    },
    RadialAtoms {
        d: usize,
        atoms: Vec<f64>,
        masses: Vec<f64>,
    },
    PiecewisePhi {
        knots: Vec<f64>,
        values: Vec<f64>,
        #[serde(default)]
        below: BelowSupport,
    },
}

/// An Archimedean generator in one of three representations.
///
/// Invariants (enforced by the constructors, relied on everywhere else):
/// - `Gumbel`: `theta >= 1`.
/// - `RadialAtoms`: `d >= 2`; radii strictly descending, positive except
///   for an optional final atom at exactly 0 (mass sitting at the origin
///   of the radial measure); masses positive and summing to 1.
/// - `PiecewisePhi`: at least two knots, strictly ascending inside
///   [0, 1] with the last knot exactly 1; values strictly decreasing and
///   non-negative with the last value exactly 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GeneratorWire", into = "GeneratorWire")]
pub enum Generator {
    Gumbel {
        theta: f64,
    },
    RadialAtoms {
        d: usize,
        atoms: Vec<f64>,
        masses: Vec<f64>,
    },
    PiecewisePhi {
        knots: Vec<f64>,
        values: Vec<f64>,
        below: BelowSupport,
    },
}

impl TryFrom<GeneratorWire> for Generator {
    type Error = Error;

    fn try_from(w: GeneratorWire) -> Result<Generator> {
        match w {
            GeneratorWire::Gumbel { theta } => Generator::gumbel(theta),
            GeneratorWire::RadialAtoms { d, atoms, masses } => {
                Generator::radial_atoms(d, atoms, masses)
            }
            GeneratorWire::PiecewisePhi {
                knots,
                values,
                below,
            } => Generator::piecewise_phi(knots, values, below),
        }
    }
}

impl From<Generator> for GeneratorWire {
    fn from(g: Generator) -> GeneratorWire {
        match g {
            Generator::Gumbel { theta } => GeneratorWire::Gumbel { theta },
            Generator::RadialAtoms { d, atoms, masses } => {
                GeneratorWire::RadialAtoms { d, atoms, masses }
            }
            Generator::PiecewisePhi {
                knots,
                values,
                below,
            } => GeneratorWire::PiecewisePhi {
                knots,
                values,
                below,
            },
        }
    }
}

impl Generator {
    /// Parametric Gumbel generator `phi(t) = (-ln t)^theta`, `theta >= 1`.
    pub fn gumbel(theta: f64) -> Result<Self> {
        if !theta.is_finite() || theta < 1.0 {
            return Err(Error::domain(format!(
                "Gumbel parameter theta must be >= 1, got {theta}"
            )));
        }
        Ok(Generator::Gumbel { theta })
    }

    /// Discrete Williamson-transform generator with the given radial atoms
    /// (strictly descending) and masses (positive, summing to 1 within
    /// 1e-9; renormalized exactly). A final atom at exactly 0 is allowed
    /// and carries the radial mass at the origin: it contributes to
    /// `psi(0) = 1` but to no `psi(x)` with `x > 0`.
    pub fn radial_atoms(d: usize, atoms: Vec<f64>, masses: Vec<f64>) -> Result<Self> {
        if d < 2 {
            return Err(Error::domain(format!("radial dimension d must be >= 2, got {d}")));
        }
        if atoms.is_empty() || atoms.len() != masses.len() {
            return Err(Error::shape(format!(
                "need equally many atoms and masses (> 0), got {} and {}",
                atoms.len(),
                masses.len()
            )));
        }
        if atoms.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(Error::domain("radial atoms must be finite and >= 0".to_string()));
        }
        if atoms[0] <= 0.0 {
            return Err(Error::domain("the largest radial atom must be positive".to_string()));
        }
        for w in atoms.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::domain("radial atoms must be strictly descending".to_string()));
            }
        }
        if masses.iter().any(|q| !q.is_finite() || *q <= 0.0) {
            return Err(Error::domain("radial masses must be positive".to_string()));
        }
        let total: f64 = masses.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::domain(format!("radial masses must sum to 1, got {total}")));
        }
        let masses = masses.into_iter().map(|q| q / total).collect();
        Ok(Generator::RadialAtoms { d, atoms, masses })
    }

    /// Piecewise-linear `phi` through `(knots[i], values[i])`.
    pub fn piecewise_phi(knots: Vec<f64>, values: Vec<f64>, below: BelowSupport) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::shape(format!(
                "need equally many knots and values (>= 2), got {} and {}",
                knots.len(),
                values.len()
            )));
        }
        if knots.iter().any(|t| !t.is_finite() || !(0.0..=1.0).contains(t)) {
            return Err(Error::domain("knots must lie in [0, 1]".to_string()));
        }
        for w in knots.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::domain("knots must be strictly ascending".to_string()));
            }
        }
        let mut knots = knots;
        let last = *knots.last().unwrap();
        if (last - 1.0).abs() > 1e-12 {
            return Err(Error::domain(format!("last knot must be 1, got {last}")));
        }
        *knots.last_mut().unwrap() = 1.0;
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::domain("phi values must be finite and >= 0".to_string()));
        }
        for w in values.windows(2) {
            if !(w[0] > w[1]) {
                return Err(Error::domain("phi values must be strictly decreasing".to_string()));
            }
        }
        let mut values = values;
        let vlast = *values.last().unwrap();
        if vlast.abs() > 1e-12 {
            return Err(Error::domain(format!("phi must vanish at t = 1, got {vlast}")));
        }
        *values.last_mut().unwrap() = 0.0;
        // Generators are convex: segment slopes must be non-decreasing.
        let mut prev_slope = f64::NEG_INFINITY;
        for i in 0..knots.len() - 1 {
            let slope = (values[i + 1] - values[i]) / (knots[i + 1] - knots[i]);
            if slope + 1e-9 * (1.0 + prev_slope.abs()) < prev_slope {
                return Err(Error::domain(format!(
                    "phi must be convex; slope drops from {prev_slope} to {slope}"
                )));
            }
            prev_slope = slope;
        }
        Ok(Generator::PiecewisePhi { knots, values, below })
    }

    /// Evaluate `psi(x)` for `x in [0, +inf]`. `psi(0) = 1` for every
    /// generator; `psi` is non-increasing and right-continuous, and
    /// `psi(+inf) = 0` by convention.
    pub fn psi(&self, x: f64) -> Result<f64> {
        if x.is_nan() || x < 0.0 {
            return Err(Error::domain(format!("psi argument must be >= 0, got {x}")));
        }
        if x == 0.0 {
            return Ok(1.0);
        }
        if x.is_infinite() {
            return Ok(0.0);
        }
        Ok(match self {
            Generator::Gumbel { theta } => (-(x.powf(1.0 / theta))).exp(),
            Generator::RadialAtoms { d, atoms, masses } => {
                let e = (*d - 1) as i32;
                let mut s = 0.0;
                for (rho, q) in atoms.iter().zip(masses) {
                    if x >= *rho {
                        // atoms are descending: nothing further is active
                        break;
                    }
                    s += q * (1.0 - x / rho).powi(e);
                }
                s
            }
            Generator::PiecewisePhi { knots, values, below } => {
                if x >= values[0] {
                    match below {
                        BelowSupport::Cap => 0.0,
                        BelowSupport::Infinite => knots[0],
                    }
                } else {
                    // values are strictly decreasing; find the segment with
                    // values[i] > x >= values[i + 1] and invert linearly.
                    let i = match values
                        .binary_search_by(|v| x.partial_cmp(v).unwrap())
                    {
                        Ok(i) => return Ok(knots[i]),
                        Err(i) => i - 1,
                    };
                    let (v0, v1) = (values[i], values[i + 1]);
                    let (t0, t1) = (knots[i], knots[i + 1]);
                    t0 + (v0 - x) / (v0 - v1) * (t1 - t0)
                }
            }
        })
    }

    /// Evaluate `phi(t)` for `t in [0, 1]` (the generalized inverse of
    /// `psi` for the non-parametric representations). May return
    /// `+inf` for a strict generator at `t = 0`.
    pub fn phi(&self, t: f64) -> Result<f64> {
        if !t.is_finite() || !(0.0..=1.0).contains(&t) {
            return Err(Error::domain(format!("phi argument must lie in [0, 1], got {t}")));
        }
        Ok(match self {
            Generator::Gumbel { theta } => {
                if t == 0.0 {
                    f64::INFINITY
                } else {
                    (-t.ln()).powf(*theta)
                }
            }
            Generator::RadialAtoms { d, atoms, masses } => {
                if t >= 1.0 {
                    return Ok(0.0);
                }
                // Mass at radius 0 creates a flat stretch of psi at height
                // sum of positive-radius masses; phi is 0 from there up.
                let pos_total: f64 = atoms
                    .iter()
                    .zip(masses)
                    .filter(|(r, _)| **r > 0.0)
                    .map(|(_, q)| q)
                    .sum();
                if t >= pos_total {
                    return Ok(0.0);
                }
                if t == 0.0 {
                    return Ok(atoms[0]);
                }
                let e = (*d - 1) as i32;
                let psi_pos = |x: f64| -> f64 {
                    let mut s = 0.0;
                    for (rho, q) in atoms.iter().zip(masses) {
                        if x >= *rho {
                            break;
                        }
                        s += q * (1.0 - x / rho).powi(e);
                    }
                    s
                };
                // Bisect psi(x) = t on [0, atoms[0]]; psi is continuous and
                // strictly decreasing there. Stop once the bracket is a few
                // ulps wide (well inside the documented 1e-12), or after
                // 200 halvings.
                let (mut lo, mut hi) = (0.0f64, atoms[0]);
                for _ in 0..200 {
                    if hi - lo <= hi * 1e-15 {
                        break;
                    }
                    let mid = 0.5 * (lo + hi);
                    if psi_pos(mid) > t {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                    if lo >= hi {
                        break;
                    }
                }
                0.5 * (lo + hi)
            }
            Generator::PiecewisePhi { knots, values, below } => {
                if t < knots[0] {
                    match below {
                        BelowSupport::Cap => values[0],
                        BelowSupport::Infinite => f64::INFINITY,
                    }
                } else {
                    // knots ascending: find segment, interpolate.
                    let i = match knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
                        Ok(i) => return Ok(values[i]),
                        Err(i) => i - 1,
                    };
                    let (t0, t1) = (knots[i], knots[i + 1]);
                    let (v0, v1) = (values[i], values[i + 1]);
                    v0 + (t - t0) / (t1 - t0) * (v1 - v0)
                }
            }
        })
    }

    /// Copula diagonal `C(u, ..., u) = psi(m * phi(u))` for an m-variate
    /// Archimedean copula built from this generator.
    pub fn diagonal(&self, m: usize, u: f64) -> Result<f64> {
        if m == 0 {
            return Err(Error::domain("diagonal dimension m must be >= 1".to_string()));
        }
        if let Generator::Gumbel { theta } = self {
            // Algebraically psi(m * phi(u)) = u^(m^(1/theta)); the direct
            // form stays finite where (-ln u)^theta would over- or
            // underflow at extreme theta.
            if !u.is_finite() || !(0.0..=1.0).contains(&u) {
                return Err(Error::domain(format!(
                    "diagonal argument must lie in [0, 1], got {u}"
                )));
            }
            return Ok(u.powf((m as f64).powf(1.0 / theta)));
        }
        let x = self.phi(u)?;
        self.psi(m as f64 * x)
    }

    /// Generalized inverse of the diagonal, `psi(phi(v) / m)`; maps `v = 0`
    /// to 0 by continuity.
    pub fn diagonal_quantile(&self, m: usize, v: f64) -> Result<f64> {
        if m == 0 {
            return Err(Error::domain("diagonal dimension m must be >= 1".to_string()));
        }
        if !v.is_finite() || !(0.0..=1.0).contains(&v) {
            return Err(Error::domain(format!(
                "diagonal quantile argument must lie in [0, 1], got {v}"
            )));
        }
        if v == 0.0 {
            return Ok(0.0);
        }
        if let Generator::Gumbel { theta } = self {
            // See `diagonal`: the exact form v^(m^(-1/theta)) avoids
            // overflow of the intermediate (-ln v)^theta.
            return Ok(v.powf((m as f64).powf(-1.0 / theta)));
        }
        let x = self.phi(v)?;
        if x.is_infinite() {
            // Can only happen for v = 0 on strict generators, handled above,
            // or an Infinite-flagged piecewise phi below its support.
            return Ok(0.0);
        }
        self.psi(x / m as f64)
    }
}

/// Counters describing how cleanly a fit went through.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Radial atoms whose interpolation condition could not be solved and
    /// whose mass was folded into the origin (summed over pair fits for the
    /// pairwise estimator).
    pub folded_atoms: u32,
    /// Pairs dropped from the pairwise average because their fitted
    /// generator could not be renormalized (vanished at the anchor).
    pub degenerate_pairs: u32,
}

/// Solve for the radial atoms interpolating a Kendall df.
///
/// Given atoms `t_1 = 0 < t_2 < ... < t_k` with masses `q`, produce radii
/// `rho_1 = 1 > rho_2 > ... > rho_k >= 0` such that
/// `sum_{i<j} q_i (1 - rho_j / rho_i)_+^(d-1) = t_j` for every `j >= 2`.
/// For d = 2 each condition has the closed form
/// `rho_j = (sum_{i<j} q_i - t_j) / (sum_{i<j} q_i / rho_i)`; for d > 2 it
/// is solved by bisection on `(0, rho_{j-1})`.
///
/// When the left edge of the bracket is already at or below the target
/// (`sum_{i<j} q_i <= t_j`, possible after the Kendall-property
/// modification) there is no positive root; that atom and every later one
/// fold to radius 0 and the event is counted.
fn fit_radii(t: &[f64], q: &[f64], d: usize) -> (Vec<f64>, u32) {
    let k = t.len();
    let mut rho = Vec::with_capacity(k);
    rho.push(1.0);
    let mut folded = 0u32;
    let e = (d - 1) as i32;
    for j in 1..k {
        if rho[j - 1] <= 0.0 {
            rho.push(0.0);
            folded += 1;
            continue;
        }
        let sq: f64 = q[..j].iter().sum();
        if sq - t[j] <= 0.0 {
            rho.push(0.0);
            folded += 1;
            continue;
        }
        let r = if d == 2 {
            let sqr: f64 = q[..j].iter().zip(&rho[..j]).map(|(qi, ri)| qi / ri).sum();
            (sq - t[j]) / sqr
        } else {
            let g = |x: f64| -> f64 {
                q[..j]
                    .iter()
                    .zip(&rho[..j])
                    .map(|(qi, ri)| if x < *ri { qi * (1.0 - x / ri).powi(e) } else { 0.0 })
                    .sum::<f64>()
                    - t[j]
            };
            let (mut lo, mut hi) = (0.0f64, rho[j - 1]);
            for _ in 0..200 {
                if hi - lo <= hi * 1e-15 {
                    break;
                }
                let mid = 0.5 * (lo + hi);
                if g(mid) > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };
        if r >= rho[j - 1] || r <= 0.0 {
            // Numerically degenerate condition; treat like a failed bracket.
            rho.push(0.0);
            folded += 1;
        } else {
            rho.push(r);
        }
    }
    (rho, folded)
}

/// Fit a radial-atoms generator that interpolates the Kendall df `k`: one
/// radial atom per Kendall atom, same masses, `psi(rho_j) = t_j` at every
/// retained atom. The first Kendall atom must be 0 (always true for dfs
/// built from pseudo-observations) and pins the scale via `rho_1 = 1`.
pub fn fit_from_kendall(kdf: &KendallDf, d: usize) -> Result<(Generator, FitDiagnostics)> {
    if d < 2 {
        return Err(Error::domain(format!("fit dimension d must be >= 2, got {d}")));
    }
    let t = kdf.atoms();
    if t[0] != 0.0 {
        return Err(Error::domain(format!(
            "Kendall df must have its first atom at 0 to fit, got {}",
            t[0]
        )));
    }
    let q = kdf.masses();
    let (rho, folded) = fit_radii(t, &q, d);

    // Merge any folded (radius 0) atoms into a single origin atom.
    let keep = rho.iter().position(|r| *r <= 0.0).unwrap_or(rho.len());
    let mut atoms: Vec<f64> = rho[..keep].to_vec();
    let mut masses: Vec<f64> = q[..keep].to_vec();
    if keep < rho.len() {
        atoms.push(0.0);
        masses.push(q[keep..].iter().sum());
    }
    let gen = Generator::radial_atoms(d, atoms, masses)?;
    Ok((
        gen,
        FitDiagnostics {
            folded_atoms: folded,
            degenerate_pairs: 0,
        },
    ))
}

/// Kendall-interpolating generator fit of an m-variate sample in the full
/// dimension d = m: pseudo-observations, modified empirical Kendall df,
/// then [`fit_from_kendall`].
pub fn fit_generator_gnz(sample: &SampleMatrix) -> Result<(Generator, FitDiagnostics)> {
    if sample.cols() < 2 {
        return Err(Error::domain(format!(
            "generator estimation needs at least 2 columns, got {}",
            sample.cols()
        )));
    }
    let w = pseudo_observations(sample)?;
    let kdf = empirical_kendall_df(&w)?;
    fit_from_kendall(&kdf, sample.cols())
}

/// Which column pairs the pairwise-averaged fit uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairMode {
    /// Every unordered pair of distinct columns, once.
    AllPairs,
    /// `pairs` ordered pairs of distinct columns drawn uniformly with
    /// replacement from the given seed (duplicates contribute their
    /// multiplicity to the average).
    MonteCarlo { pairs: usize, seed: Seed },
}

/// Pairwise-averaged generator fit: fit each selected column pair in
/// dimension 2, rescale every pair's `phi` to equal 1 at the anchor
/// `t = 0.5`, and average the rescaled `phi` functions pointwise over the
/// union of their knots. The result is a piecewise-linear `phi` (each
/// bivariate fit has piecewise-linear `phi`, a property of d = 2
/// Williamson transforms).
pub fn fit_generator_pairwise(
    sample: &SampleMatrix,
    mode: PairMode,
) -> Result<(Generator, FitDiagnostics)> {
    let m = sample.cols();
    if m < 2 {
        return Err(Error::domain(format!(
            "pairwise estimation needs at least 2 columns, got {m}"
        )));
    }

    // Multiset of unordered pairs with multiplicities.
    let mut weights: std::collections::BTreeMap<(usize, usize), usize> =
        std::collections::BTreeMap::new();
    match mode {
        PairMode::AllPairs => {
            for a in 0..m {
                for b in (a + 1)..m {
                    weights.insert((a, b), 1);
                }
            }
        }
        PairMode::MonteCarlo { pairs, seed } => {
            if pairs == 0 {
                return Err(Error::domain("pair count must be positive".to_string()));
            }
            let mut rng = seed.rng();
            for _ in 0..pairs {
                // Uniform ordered pair of distinct columns: first index
                // uniform on 0..m, second uniform on the remaining m - 1.
                let a = rng.index(m);
                let mut b = rng.index(m - 1);
                if b >= a {
                    b += 1;
                }
                let key = (a.min(b), a.max(b));
                *weights.entry(key).or_insert(0) += 1;
            }
        }
    }

    // Per distinct pair: bivariate Kendall-interpolating fit, expressed
    // directly as the knots (Kendall atoms) and values (radii) of its
    // piecewise-linear phi, rescaled to phi(0.5) = 1.
    struct PairPhi {
        knots: Vec<f64>,
        values: Vec<f64>,
        weight: f64,
    }
    let interp = |knots: &[f64], values: &[f64], t: f64| -> f64 {
        // Piecewise-linear evaluation; t in [0, 1], knots ascending with
        // knots[0] = 0 and last = 1.
        match knots.binary_search_by(|k| k.partial_cmp(&t).unwrap()) {
            Ok(i) => values[i],
            Err(i) => {
                let (t0, t1) = (knots[i - 1], knots[i]);
                let (v0, v1) = (values[i - 1], values[i]);
                v0 + (t - t0) / (t1 - t0) * (v1 - v0)
            }
        }
    };

    let mut fits: Vec<PairPhi> = Vec::new();
    let mut diags = FitDiagnostics::default();
    for (&(a, b), &w) in &weights {
        let sub = sample.select_columns(&[a, b])?;
        let wobs = pseudo_observations(&sub)?;
        let kdf = empirical_kendall_df(&wobs)?;
        let t = kdf.atoms().to_vec();
        let q = kdf.masses();
        let (rho, folded) = fit_radii(&t, &q, 2);
        diags.folded_atoms += folded;

        // Knots of the pair's phi: the Kendall atoms while the radius is
        // positive, then straight down to (1, 0). A fold at or before the
        // anchor would make the pair unnormalizable.
        let keep = rho.iter().position(|r| *r <= 0.0).unwrap_or(rho.len());
        let mut knots: Vec<f64> = t[..keep].to_vec();
        let mut values: Vec<f64> = rho[..keep].to_vec();
        if keep < rho.len() {
            // Folded tail: phi hits 0 at the first folded Kendall atom and
            // stays there.
            knots.push(t[keep]);
            values.push(0.0);
        }
        if *knots.last().unwrap() < 1.0 {
            knots.push(1.0);
            values.push(0.0);
        }
        let anchor = interp(&knots, &values, 0.5);
        if !(anchor.is_finite() && anchor > 0.0) {
            diags.degenerate_pairs += 1;
            continue;
        }
        for v in &mut values {
            *v /= anchor;
        }
        fits.push(PairPhi {
            knots,
            values,
            weight: w as f64,
        });
    }
    if fits.is_empty() {
        return Err(Error::domain(
            "every pair fit degenerated; cannot average".to_string(),
        ));
    }
    if fits.len() == 1 {
        // With one distinct pair the average is that pair itself; a unit
        // weight avoids `v * w / w` rounding, so Monte Carlo selection of a
        // single pair matches the all-pairs fit bit for bit.
        fits[0].weight = 1.0;
    }

    // Pointwise weighted average on the union of knots.
    let mut union: Vec<f64> = fits.iter().flat_map(|f| f.knots.iter().copied()).collect();
    union.sort_by(|x, y| x.partial_cmp(y).unwrap());
    union.dedup();
    let total_w: f64 = fits.iter().map(|f| f.weight).sum();
    let mut avg: Vec<f64> = union
        .iter()
        .map(|&t| {
            fits.iter()
                .map(|f| f.weight * interp(&f.knots, &f.values, t))
                .sum::<f64>()
                / total_w
        })
        .collect();

    // If every pair already vanished before t = 1 the average has a flat
    // zero tail; cut it and ramp to (1, 0) so phi stays strictly
    // decreasing.
    let z = avg.iter().position(|v| *v <= 0.0).unwrap_or(avg.len());
    if z == 0 {
        return Err(Error::domain("averaged phi vanished everywhere".to_string()));
    }
    let mut knots: Vec<f64> = union[..z].to_vec();
    avg.truncate(z);
    knots.push(1.0);
    avg.push(0.0);

    let gen = Generator::piecewise_phi(knots, avg, BelowSupport::Cap)?;
    Ok((gen, diags))
}
