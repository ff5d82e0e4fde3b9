//! Acceptance gate: nine end-to-end checks covering closed-form calibration,
//! estimator round trips, a fully hand-worked fit, statistical consistency,
//! error control and power in the simulation studies, sampler validity, and
//! reproducibility of result files.
//!
//! Each check prints one `ACCEPTANCE <k> (<name>): PASS|FAIL` line; run with
//! `cargo test --test acceptance -- --nocapture` to see them.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use archcal::generator::{fit_from_kendall, fit_generator_gnz, fit_generator_pairwise, Generator, PairMode};
use archcal::kendall::{
    empirical_kendall_df, empirical_tau, kendall_df_gumbel_2d, pseudo_observations,
};
use archcal::mtp::{
    calibrate, calibrate_bonferroni, calibrate_oracle_gumbel, realized_fwer_gumbel,
};
use archcal::rng::Seed;
use archcal::sampling::{sample_gumbel, SampleMatrix};
use archcal::sim::{run_sim, SimConfig, SimId, SweepSpec};

/// Fail the criterion with a message unless `cond` holds.
macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !($cond) {
            return Err(format!($($msg)+));
        }
    };
}

fn ok<T>(r: archcal::Result<T>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn criterion<F>(id: u8, name: &str, f: F)
where
    F: FnOnce() -> Result<(), String>,
{
    match f() {
        Ok(()) => println!("ACCEPTANCE {id} ({name}): PASS"),
        Err(msg) => {
            println!("ACCEPTANCE {id} ({name}): FAIL - {msg}");
            panic!("acceptance criterion {id} ({name}) failed: {msg}");
        }
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[derive(Debug)]
struct SummaryRow {
    value: String,
    method: String,
    fwer: f64,
    mean_power: f64,
}

fn parse_summary(path: &Path) -> Vec<SummaryRow> {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines()
        .skip(2)
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            SummaryRow {
                value: f[1].to_string(),
                method: f[2].to_string(),
                fwer: f[6].parse().unwrap(),
                mean_power: f[7].parse().unwrap(),
            }
        })
        .collect()
}

fn summary_row<'a>(rows: &'a [SummaryRow], value: &str, method: &str) -> &'a SummaryRow {
    rows.iter()
        .find(|r| r.value == value && r.method == method)
        .unwrap_or_else(|| panic!("no summary row for value={value} method={method}"))
}

#[test]
fn c1_closed_form_calibration() {
    criterion(1, "closed-form calibration values", || {
        let t0 = Instant::now();
        let alpha = 0.05;
        let m = 6usize;

        // Gumbel theta = 2: the diagonal quantile has the closed form
        // v^(m^(-1/theta)), so alpha_loc = 1 - (1 - alpha)^(m^(-1/theta)).
        let g2 = ok(Generator::gumbel(2.0))?;
        let got = ok(calibrate(&g2, m, alpha))?;
        let closed = 1.0 - (1.0 - alpha).powf((m as f64).powf(-0.5));
        check!((got - closed).abs() <= 1e-10, "theta=2: {got} vs closed form {closed}");
        check!((got - 0.020723).abs() <= 5e-7, "theta=2 reference value: got {got}");
        let ora = ok(calibrate_oracle_gumbel(2.0, m, alpha))?;
        check!((ora - closed).abs() <= 1e-15, "oracle formula: {ora} vs {closed}");

        // Gumbel theta = 1 is independence, so calibration must match the
        // independence-exact level 1 - (1 - alpha)^(1/m).
        let g1 = ok(Generator::gumbel(1.0))?;
        let got1 = ok(calibrate(&g1, m, alpha))?;
        let sidak = 1.0 - (1.0 - alpha).powf(1.0 / m as f64);
        check!((got1 - sidak).abs() <= 1e-12, "theta=1: {got1} vs {sidak}");
        check!((got1 - 0.008512).abs() <= 5e-7, "theta=1 reference value: got {got1}");

        // Bonferroni is exactly alpha / m.
        let bonf = ok(calibrate_bonferroni(m, alpha))?;
        check!(bonf == alpha / m as f64, "bonferroni: {bonf} vs {}", alpha / m as f64);

        // A single radial atom gives the hinge generator psi(x) = (1-x)+,
        // whose diagonal is max(1 - m(1-u), 0) near u = 1; its calibrated
        // level is exactly alpha / m for every m.
        let hinge = ok(Generator::radial_atoms(2, vec![1.0], vec![1.0]))?;
        for mm in 1..=8usize {
            let got = ok(calibrate(&hinge, mm, alpha))?;
            check!(
                (got - alpha / mm as f64).abs() <= 1e-15,
                "single atom, m={mm}: {got} vs {}",
                alpha / mm as f64
            );
        }

        // The comonotone limit keeps the local level at alpha.
        let gbig = ok(Generator::gumbel(1e9))?;
        let lim = ok(calibrate(&gbig, m, alpha))?;
        check!((lim - alpha).abs() <= 1e-6, "comonotone limit: {lim}");

        check!(t0.elapsed().as_secs_f64() < 1.0, "took {:?}", t0.elapsed());
        Ok(())
    });
}

#[test]
fn c2_round_trip_properties() {
    criterion(2, "round-trip and invariant properties", || {
        use proptest::prelude::*;
        use proptest::test_runner::{Config, TestRunner};

        let t0 = Instant::now();
        let cases = 1000u32;
        let config = || Config {
            cases,
            ..Config::default()
        };

        // (a) Gumbel psi and phi invert each other.
        TestRunner::new(config())
            .run(&(1.0..20.0f64, 0.001..0.999f64), |(theta, t)| {
                let g = Generator::gumbel(theta).unwrap();
                let back = g.psi(g.phi(t).unwrap()).unwrap();
                prop_assert!((back - t).abs() <= 1e-12, "theta={theta} t={t} back={back}");
                Ok(())
            })
            .map_err(|e| format!("psi/phi round trip: {e}"))?;

        // (b) Copula diagonal and its quantile invert each other for random
        // radial-atom generators of any scale.
        let radial = (
            proptest::collection::vec((0.1..0.9f64, 0.05..1.0f64), 1..6),
            0.05..1.0f64,
            2usize..6,
            2usize..8,
            0.01..0.99f64,
        );
        TestRunner::new(config())
            .run(&radial, |(pairs, extra_mass, d, m, v)| {
                let mut atoms = vec![1.0f64];
                let mut masses = vec![extra_mass];
                for (f, q) in &pairs {
                    atoms.push(atoms.last().unwrap() * f);
                    masses.push(*q);
                }
                let total: f64 = masses.iter().sum();
                for q in &mut masses {
                    *q /= total;
                }
                let g = Generator::radial_atoms(d, atoms, masses).unwrap();
                let u = g.diagonal_quantile(m, v).unwrap();
                let back = g.diagonal(m, u).unwrap();
                prop_assert!((back - v).abs() <= 1e-9, "d={d} m={m} v={v} back={back}");
                Ok(())
            })
            .map_err(|e| format!("diagonal round trip: {e}"))?;

        // (c) The modified empirical Kendall df is a valid df dominating the
        // identity on arbitrary inputs.
        TestRunner::new(config())
            .run(
                &proptest::collection::vec(0.0..0.95f64, 2..50),
                |w| {
                    let kdf = empirical_kendall_df(&w).unwrap();
                    let atoms = kdf.atoms();
                    let cum = kdf.cumulative();
                    for j in 0..atoms.len() {
                        prop_assert!(atoms[j] >= 0.0 && atoms[j] < 1.0);
                        if j > 0 {
                            prop_assert!(atoms[j] > atoms[j - 1]);
                            prop_assert!(cum[j] >= cum[j - 1]);
                        }
                    }
                    prop_assert!(*cum.last().unwrap() == 1.0);
                    for i in 0..=50 {
                        let t = i as f64 / 50.0;
                        prop_assert!(kdf.eval(t) >= t - 1e-12, "K({t}) = {}", kdf.eval(t));
                    }
                    Ok(())
                },
            )
            .map_err(|e| format!("Kendall df invariants: {e}"))?;

        // (d) Calibrated levels are sandwiched between Bonferroni and alpha,
        // and undo the realized familywise error rate exactly.
        TestRunner::new(config())
            .run(&(1.0..20.0f64, 2usize..30, 0.002..0.2f64), |(theta, m, alpha)| {
                let g = Generator::gumbel(theta).unwrap();
                let loc = calibrate(&g, m, alpha).unwrap();
                let bonf = calibrate_bonferroni(m, alpha).unwrap();
                prop_assert!(loc >= bonf - 1e-12 && loc <= alpha + 1e-12);
                let realized = realized_fwer_gumbel(theta, m, loc).unwrap();
                prop_assert!((realized - alpha).abs() <= 1e-9);
                Ok(())
            })
            .map_err(|e| format!("calibration sandwich: {e}"))?;

        check!(t0.elapsed().as_secs_f64() < 30.0, "took {:?}", t0.elapsed());
        Ok(())
    });
}

#[test]
fn c3_hand_worked_fit() {
    criterion(3, "hand-worked bivariate fit", || {
        // Three bivariate observations whose strict-domination counts are
        // 0, 1 and 2, giving scaled counts (0, 1/4, 2/4).
        let sample = ok(SampleMatrix::new(
            3,
            2,
            vec![0.1, 0.2, 0.5, 0.4, 0.9, 0.8],
        ))?;
        let mut w = ok(pseudo_observations(&sample))?;
        w.sort_by(|a, b| a.partial_cmp(b).unwrap());
        check!(w == vec![0.0, 0.25, 0.5], "scaled counts {w:?}");

        let kdf = ok(empirical_kendall_df(&w))?;
        check!(kdf.atoms() == [0.0, 0.25, 0.5], "atoms {:?}", kdf.atoms());
        let masses = kdf.masses();
        for q in &masses {
            check!((q - 1.0 / 3.0).abs() <= 1e-15, "masses {masses:?}");
        }

        // Bivariate radial fit: rho_1 = 1, then each next radius solves the
        // interpolation condition in closed form, giving 1/4 and 1/10.
        let (gen, diag) = ok(fit_from_kendall(&kdf, 2))?;
        check!(diag.folded_atoms == 0, "unexpected folds");
        let rho = match &gen {
            Generator::RadialAtoms { atoms, .. } => atoms.clone(),
            other => return Err(format!("expected radial fit, got {other:?}")),
        };
        check!(rho.len() == 3, "radii {rho:?}");
        check!(rho[0] == 1.0, "rho1 = {}", rho[0]);
        check!((rho[1] - 0.25).abs() <= 1e-12, "rho2 = {}", rho[1]);
        check!((rho[2] - 0.1).abs() <= 1e-12, "rho3 = {}", rho[2]);

        // The fitted psi interpolates the Kendall df at the radii and takes
        // the derived values between them.
        for (r, t) in rho.iter().zip(kdf.atoms()) {
            let v = ok(gen.psi(*r))?;
            check!((v - t).abs() <= 1e-12, "psi({r}) = {v}, want {t}");
        }
        check!((ok(gen.psi(0.25))? - 0.25).abs() <= 1e-12, "psi(1/4)");
        check!((ok(gen.psi(0.1))? - 0.5).abs() <= 1e-12, "psi(1/10)");
        check!((ok(gen.diagonal(2, 0.25))? - 1.0 / 6.0).abs() <= 1e-15, "diagonal");
        check!((ok(gen.diagonal_quantile(2, 1.0 / 6.0))? - 0.25).abs() <= 1e-12, "quantile");

        // The full-sample estimator reproduces the same radii end to end.
        let (gen2, _) = ok(fit_generator_gnz(&sample))?;
        match &gen2 {
            Generator::RadialAtoms { atoms, .. } => {
                for (a, b) in atoms.iter().zip(&rho) {
                    check!((a - b).abs() <= 1e-15, "end-to-end radii {atoms:?}");
                }
            }
            other => return Err(format!("expected radial fit, got {other:?}")),
        }
        Ok(())
    });
}

#[test]
fn c4_calibration_consistency() {
    criterion(4, "calibrated level consistency in the sample size", || {
        let theta = 2.1;
        let m = 6usize;
        let alpha = 0.05;
        let seeds = 200u64;
        let oracle = ok(calibrate_oracle_gumbel(theta, m, alpha))?;

        let sizes = [50usize, 200, 1000];
        let mut med_gnz = Vec::new();
        let mut med_pair = Vec::new();
        for (bi, &b) in sizes.iter().enumerate() {
            let errs: Vec<(f64, f64)> = (0..seeds)
                .into_par_iter()
                .map(|s| -> Result<(f64, f64), String> {
                    let seed = Seed(((bi as u64 + 1) << 32) | s);
                    let x = ok(sample_gumbel(b, m, theta, seed))?;
                    let (g, _) = ok(fit_generator_gnz(&x))?;
                    let a_gnz = ok(calibrate(&g, m, alpha))?;
                    let (p, _) = ok(fit_generator_pairwise(&x, PairMode::AllPairs))?;
                    let a_pair = ok(calibrate(&p, m, alpha))?;
                    Ok(((a_gnz - oracle).abs(), (a_pair - oracle).abs()))
                })
                .collect::<Result<_, _>>()?;
            med_gnz.push(median(errs.iter().map(|e| e.0).collect()));
            med_pair.push(median(errs.iter().map(|e| e.1).collect()));
        }

        for (name, med) in [("full fit", &med_gnz), ("pairwise fit", &med_pair)] {
            check!(
                med[0] > med[1] && med[1] > med[2],
                "{name}: medians not decreasing: {med:?}"
            );
            check!(
                med[2] / oracle <= 0.25,
                "{name}: relative error at B=1000 is {} (median {}, oracle {oracle})",
                med[2] / oracle,
                med[2]
            );
        }
        Ok(())
    });
}

#[test]
fn c5_fwer_control_under_global_null() {
    criterion(5, "familywise error control under the global null", || {
        let reps = 1000usize;
        let alpha = 0.05;
        // Nominal level plus three binomial standard errors.
        let bound = alpha + 3.0 * (alpha * (1.0 - alpha) / reps as f64).sqrt();

        let mut cfg2 = SimConfig::defaults(SimId::Sim2);
        cfg2.mu = 0.0;
        cfg2.reps = reps;
        cfg2.seed = 52;
        let dir2 = tempfile::tempdir().unwrap();
        let out2 = ok(run_sim(&cfg2, None, dir2.path(), None))?;
        for row in parse_summary(&out2.csv_paths[1]) {
            check!(
                row.fwer <= bound,
                "study 2, method {}: FWER {} > {bound}",
                row.method,
                row.fwer
            );
        }

        let mut cfg3 = SimConfig::defaults(SimId::Sim3);
        cfg3.mu = 0.0;
        cfg3.reps = reps;
        cfg3.seed = 53;
        let sweep = ok(SweepSpec::parse("rho=0,0.5,0.9"))?;
        let dir3 = tempfile::tempdir().unwrap();
        let out3 = ok(run_sim(&cfg3, Some(&sweep), dir3.path(), None))?;
        let rows = parse_summary(&out3.csv_paths[1]);
        check!(rows.len() == 9, "expected 9 summary rows, got {}", rows.len());
        for row in rows {
            check!(
                row.fwer <= bound,
                "study 3, rho {}, method {}: FWER {} > {bound}",
                row.value,
                row.method,
                row.fwer
            );
        }
        Ok(())
    });
}

#[test]
fn c6_power_gain_under_dependence() {
    criterion(6, "power gain under strong dependence", || {
        let mut cfg = SimConfig::defaults(SimId::Sim3);
        cfg.reps = 1000;
        cfg.seed = 61;
        let sweep = ok(SweepSpec::parse("rho=0,0.9"))?;
        let dir = tempfile::tempdir().unwrap();
        let out = ok(run_sim(&cfg, Some(&sweep), dir.path(), None))?;
        let rows = parse_summary(&out.csv_paths[1]);

        // Strong dependence: copula-calibrated tests must beat Bonferroni.
        let bonf_hi = summary_row(&rows, "0.9", "bonferroni").mean_power;
        for method in ["gnz", "pairwise"] {
            let p = summary_row(&rows, "0.9", method).mean_power;
            check!(
                p >= bonf_hi + 0.01,
                "rho=0.9: {method} power {p} vs bonferroni {bonf_hi}"
            );
        }
        // Independence: nothing to gain, so the methods agree closely.
        let bonf_lo = summary_row(&rows, "0", "bonferroni").mean_power;
        for method in ["gnz", "pairwise"] {
            let p = summary_row(&rows, "0", method).mean_power;
            check!(
                (p - bonf_lo).abs() <= 0.02,
                "rho=0: {method} power {p} vs bonferroni {bonf_lo}"
            );
        }
        Ok(())
    });
}

#[test]
fn c7_realized_fwer_convergence() {
    criterion(7, "realized error rate converges to nominal", || {
        let theta = 2.0;
        let m = 6usize;
        let alpha = 0.05;
        let seeds = 100u64;
        let sizes = [50usize, 200, 1000];
        let mut med = Vec::new();
        for (bi, &b) in sizes.iter().enumerate() {
            let errs: Vec<f64> = (0..seeds)
                .into_par_iter()
                .map(|s| -> Result<f64, String> {
                    let seed = Seed(((bi as u64 + 11) << 32) | s);
                    let x = ok(sample_gumbel(b, m, theta, seed))?;
                    let (g, _) = ok(fit_generator_gnz(&x))?;
                    let loc = ok(calibrate(&g, m, alpha))?;
                    let realized = ok(realized_fwer_gumbel(theta, m, loc))?;
                    Ok((realized - alpha).abs())
                })
                .collect::<Result<_, _>>()?;
            med.push(median(errs));
        }
        check!(
            med[0] > med[1] && med[1] > med[2],
            "medians not decreasing: {med:?}"
        );
        check!(med[2] <= 0.01, "median error at B=1000 is {}", med[2]);
        Ok(())
    });
}

#[test]
fn c8_sampler_validity() {
    criterion(8, "copula sampler matches its targets", || {
        let t0 = Instant::now();
        let theta = 2.0;
        let n = 5000usize;
        let x = ok(sample_gumbel(n, 2, theta, Seed(88)))?;

        let tau = empirical_tau(&x.column(0), &x.column(1));
        check!((tau - 0.5).abs() <= 0.03, "empirical tau {tau}");

        let w = ok(pseudo_observations(&x))?;
        let kdf = ok(empirical_kendall_df(&w))?;
        let mut sup: f64 = 0.0;
        for i in 1..200 {
            let t = i as f64 / 200.0;
            let diff = (kdf.eval(t) - ok(kendall_df_gumbel_2d(t, theta))?).abs();
            sup = sup.max(diff);
        }
        check!(sup <= 0.03, "Kendall df sup distance {sup}");
        check!(t0.elapsed().as_secs_f64() < 60.0, "took {:?}", t0.elapsed());
        Ok(())
    });
}

#[test]
fn c9_byte_identical_outputs_across_threads() {
    criterion(9, "byte-identical result files for any thread count", || {
        let mut cfg1 = SimConfig::defaults(SimId::Sim1);
        cfg1.calib_size = 30;
        cfg1.m = 3;
        cfg1.reps = 20;
        cfg1.mc_pairs = 10;
        cfg1.seed = 91;

        let mut cfg2 = SimConfig::defaults(SimId::Sim2);
        cfg2.calib_size = 40;
        cfg2.m = 4;
        cfg2.reps = 40;
        cfg2.seed = 92;

        let mut cfg3 = SimConfig::defaults(SimId::Sim3);
        cfg3.calib_size = 40;
        cfg3.n_data = 30;
        cfg3.m = 3;
        cfg3.reps = 40;
        cfg3.seed = 93;

        for cfg in [cfg1, cfg2, cfg3] {
            let dir_a = tempfile::tempdir().unwrap();
            let dir_b = tempfile::tempdir().unwrap();
            let out_a = ok(run_sim(&cfg, None, dir_a.path(), Some(1)))?;
            let out_b = ok(run_sim(&cfg, None, dir_b.path(), Some(8)))?;
            let paths_a: Vec<_> = out_a.csv_paths.iter().chain(&out_a.svg_paths).collect();
            let paths_b: Vec<_> = out_b.csv_paths.iter().chain(&out_b.svg_paths).collect();
            check!(
                paths_a.len() == paths_b.len(),
                "{}: different file sets",
                cfg.sim
            );
            for (a, b) in paths_a.iter().zip(&paths_b) {
                let bytes_a = std::fs::read(a).map_err(|e| e.to_string())?;
                let bytes_b = std::fs::read(b).map_err(|e| e.to_string())?;
                check!(!bytes_a.is_empty(), "{}: empty output", a.display());
                check!(
                    bytes_a == bytes_b,
                    "{}: bytes differ between 1 and 8 threads",
                    a.display()
                );
            }
        }
        Ok(())
    });
}
