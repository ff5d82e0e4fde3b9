//! Replication loops for the three simulation studies.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use super::{
    io, summarize, sweep_points, MethodSummary, SimConfig, SimId, SimRecord, SweepPoint, SweepSpec,
};
use crate::generator::{
    fit_generator_gnz, fit_generator_pairwise, FitDiagnostics, Generator, PairMode,
};
use crate::mtp::{
    calibrate, calibrate_bonferroni, calibrate_oracle_gumbel, decide, evaluate, normal_quantile,
    p_two_sided_normal, Method,
};
use crate::rng::Seed;
use crate::sampling::{sample_gauss_equicorr, sample_gumbel, SampleMatrix};
use crate::{Error, Result};

/// Files written by a simulation run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub csv_paths: Vec<PathBuf>,
    pub svg_paths: Vec<PathBuf>,
}

/// Run a simulation study (optionally over a parameter sweep) and write its
/// CSV tables and SVG plots into `out_dir`.
///
/// `threads` fixes the worker pool size; `None` lets the pool pick. Output
/// bytes are identical for any thread count because replications are seeded
/// by index and collected in index order.
pub fn run_sim(
    cfg: &SimConfig,
    sweep: Option<&SweepSpec>,
    out_dir: &Path,
    threads: Option<usize>,
) -> Result<RunOutput> {
    let points = sweep_points(cfg, sweep)?;
    std::fs::create_dir_all(out_dir)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::domain(format!("failed to build worker pool: {e}")))?;
    match cfg.sim {
        SimId::Sim1 => run_sim1(&points, out_dir, &pool),
        SimId::Sim2 | SimId::Sim3 => run_tests(cfg.sim, &points, out_dir, &pool),
    }
}

/// Pointwise diagonal curves averaged over replications (study 1).
#[derive(Debug, Clone)]
pub(crate) struct Sim1Curves {
    pub grid: Vec<f64>,
    pub truth: Vec<f64>,
    pub methods: Vec<Method>,
    /// `[method][grid point]`: mean fitted diagonal.
    pub mean_diag: Vec<Vec<f64>>,
    /// `[method][grid point]`: mean absolute distance to the true diagonal.
    pub mean_abs: Vec<Vec<f64>>,
}

fn run_sim1(
    points: &[SweepPoint],
    out_dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<RunOutput> {
    let mut curves = Vec::new();
    for p in points {
        let c = pool.install(|| sim1_point(&p.cfg))?;
        curves.push((p.clone(), c));
    }
    let csv = out_dir.join("sim1_pointwise.csv");
    io::write_sim1_csv(&csv, &curves)?;
    let svg_paths = io::emit_plots(&csv, out_dir)?;
    Ok(RunOutput {
        csv_paths: vec![csv],
        svg_paths,
    })
}

fn sim1_point(cfg: &SimConfig) -> Result<Sim1Curves> {
    let theta = cfg.theta_star()?;
    let n_grid = cfg.calib_size + 2;
    let grid: Vec<f64> = (0..n_grid)
        .map(|i| i as f64 / (cfg.calib_size + 1) as f64)
        .collect();
    let exponent = (cfg.m as f64).powf(1.0 / theta);
    let truth: Vec<f64> = grid.iter().map(|&u| u.powf(exponent)).collect();

    let per_rep: Vec<Vec<Vec<f64>>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| sim1_rep(cfg, theta, &grid, rep))
        .collect::<Result<_>>()?;

    let n_methods = cfg.methods.len();
    let mut mean_diag = vec![vec![0.0; n_grid]; n_methods];
    let mut mean_abs = vec![vec![0.0; n_grid]; n_methods];
    for rep_curves in &per_rep {
        for (mi, curve) in rep_curves.iter().enumerate() {
            for (k, &v) in curve.iter().enumerate() {
                mean_diag[mi][k] += v;
                mean_abs[mi][k] += (v - truth[k]).abs();
            }
        }
    }
    let scale = 1.0 / cfg.reps as f64;
    for mi in 0..n_methods {
        for k in 0..n_grid {
            mean_diag[mi][k] *= scale;
            mean_abs[mi][k] *= scale;
        }
    }
    Ok(Sim1Curves {
        grid,
        truth,
        methods: cfg.methods.clone(),
        mean_diag,
        mean_abs,
    })
}

/// One replication of study 1: fitted diagonal per method on the grid.
fn sim1_rep(cfg: &SimConfig, theta: f64, grid: &[f64], rep: usize) -> Result<Vec<Vec<f64>>> {
    let rs = Seed(cfg.seed).derive(rep as u64);
    // The fits are rank-based, so the copula sample can be used directly
    // without a marginal transform.
    let sample = sample_gumbel(cfg.calib_size, cfg.m, theta, rs.derive(0))?;
    let mut curves = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let gen = match method {
            Method::Gnz => fit_generator_gnz(&sample)?.0,
            Method::Pairwise => {
                fit_generator_pairwise(
                    &sample,
                    PairMode::MonteCarlo {
                        pairs: cfg.mc_pairs,
                        seed: rs.derive(1),
                    },
                )?
                .0
            }
            Method::Oracle => Generator::gumbel(theta)?,
            Method::Bonferroni => {
                return Err(Error::domain(
                    "bonferroni produces no copula estimate to evaluate",
                ))
            }
        };
        let curve: Vec<f64> = grid
            .iter()
            .map(|&u| gen.diagonal(cfg.m, u))
            .collect::<Result<_>>()?;
        curves.push(curve);
    }
    Ok(curves)
}

fn run_tests(
    sim: SimId,
    points: &[SweepPoint],
    out_dir: &Path,
    pool: &rayon::ThreadPool,
) -> Result<RunOutput> {
    let mut point_records: Vec<(SweepPoint, Vec<SimRecord>)> = Vec::new();
    for p in points {
        let nested: Vec<Vec<SimRecord>> = pool.install(|| {
            (0..p.cfg.reps)
                .into_par_iter()
                .map(|rep| match sim {
                    SimId::Sim2 => rep_sim2(&p.cfg, rep),
                    SimId::Sim3 => rep_sim3(&p.cfg, rep),
                    SimId::Sim1 => unreachable!("study 1 is handled by run_sim1"),
                })
                .collect::<Result<_>>()
        })?;
        point_records.push((p.clone(), nested.into_iter().flatten().collect()));
    }

    let prefix = format!("{sim}");
    let records_csv = out_dir.join(format!("{prefix}_records.csv"));
    io::write_records_csv(&records_csv, sim, &point_records)?;
    let summaries: Vec<(SweepPoint, Vec<MethodSummary>)> = point_records
        .iter()
        .map(|(p, recs)| (p.clone(), summarize(recs)))
        .collect();
    let summary_csv = out_dir.join(format!("{prefix}_summary.csv"));
    io::write_summary_csv(&summary_csv, sim, &summaries)?;
    let svg_paths = io::emit_plots(&summary_csv, out_dir)?;
    Ok(RunOutput {
        csv_paths: vec![records_csv, summary_csv],
        svg_paths,
    })
}

/// Calibrate one method's local level from the calibration statistics.
fn calibrated_level(
    method: Method,
    stats: &SampleMatrix,
    cfg: &SimConfig,
    pair_seed: Seed,
    oracle_theta: Option<f64>,
) -> Result<(f64, FitDiagnostics)> {
    match method {
        Method::Gnz => {
            let (gen, diag) = fit_generator_gnz(stats)?;
            Ok((calibrate(&gen, cfg.m, cfg.alpha)?, diag))
        }
        Method::Pairwise => {
            let (gen, diag) = fit_generator_pairwise(
                stats,
                PairMode::MonteCarlo {
                    pairs: cfg.mc_pairs,
                    seed: pair_seed,
                },
            )?;
            Ok((calibrate(&gen, cfg.m, cfg.alpha)?, diag))
        }
        Method::Bonferroni => Ok((
            calibrate_bonferroni(cfg.m, cfg.alpha)?,
            FitDiagnostics::default(),
        )),
        Method::Oracle => {
            let theta = oracle_theta.ok_or_else(|| {
                Error::domain("oracle calibration requires a known copula parameter")
            })?;
            Ok((
                calibrate_oracle_gumbel(theta, cfg.m, cfg.alpha)?,
                FitDiagnostics::default(),
            ))
        }
    }
}

fn run_methods(
    cfg: &SimConfig,
    rep: usize,
    stats: &SampleMatrix,
    pvalues: &[f64],
    pair_seed: Seed,
    oracle_theta: Option<f64>,
) -> Result<Vec<SimRecord>> {
    let nulls = cfg.null_flags();
    let mut records = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let t0 = Instant::now();
        let (alpha_loc, diag) = calibrated_level(method, stats, cfg, pair_seed, oracle_theta)?;
        let decisions = decide(pvalues, alpha_loc)?;
        let outcome = evaluate(&decisions, &nulls)?;
        records.push(SimRecord {
            rep,
            method,
            alpha_loc,
            fwe: outcome.fwe,
            power: outcome.power,
            fit_failures: diag.folded_atoms + diag.degenerate_pairs,
            runtime_ms: t0.elapsed().as_millis() as u64,
        });
    }
    Ok(records)
}

/// Apply the standard-normal quantile entrywise (copula sample to statistic
/// scale). Rank-based fits are unchanged by this, it only fixes the margins.
fn normal_scores(u: &SampleMatrix) -> Result<SampleMatrix> {
    let mut data = Vec::with_capacity(u.rows() * u.cols());
    for i in 0..u.rows() {
        for j in 0..u.cols() {
            data.push(normal_quantile(u.get(i, j))?);
        }
    }
    SampleMatrix::new(u.rows(), u.cols(), data)
}

/// One replication of study 2: Gumbel calibration sample, one Gumbel-copula
/// statistic vector with normal margins, decisions per method.
fn rep_sim2(cfg: &SimConfig, rep: usize) -> Result<Vec<SimRecord>> {
    let theta_star = cfg.theta_star()?;
    // Alternatives tighten the observed dependence a little.
    let theta_obs = theta_star + (1.0 - cfg.pi0) * cfg.mu;
    let rs = Seed(cfg.seed).derive(rep as u64);

    let calib_u = sample_gumbel(cfg.calib_size, cfg.m, theta_star, rs.derive(0))?;
    let calib = normal_scores(&calib_u)?;

    let obs = sample_gumbel(1, cfg.m, theta_obs, rs.derive(1))?;
    let shifts = cfg.mean_shifts();
    let root_n = (cfg.n_data as f64).sqrt();
    let mut pvalues = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        let stat = shifts[j] + normal_quantile(obs.get(0, j))? / root_n;
        pvalues.push(p_two_sided_normal(stat, cfg.n_data)?);
    }

    run_methods(cfg, rep, &calib, &pvalues, rs.derive(2), Some(theta_obs))
}

/// One replication of study 3: equicorrelated Gaussian data, bootstrap
/// least-favourable statistics for calibration, mean tests per method.
fn rep_sim3(cfg: &SimConfig, rep: usize) -> Result<Vec<SimRecord>> {
    let rho = cfg.effective_rho();
    let shifts = cfg.mean_shifts();
    let rs = Seed(cfg.seed).derive(rep as u64);

    let data = sample_gauss_equicorr(cfg.n_data, &shifts, rho, rs.derive(0))?;
    let mut pvalues = Vec::with_capacity(cfg.m);
    for j in 0..cfg.m {
        pvalues.push(p_two_sided_normal(data.column_mean(j), cfg.n_data)?);
    }

    let boot = crate::mtp::bootstrap_lfc_statistics(&data, cfg.calib_size, rs.derive(1))?;
    run_methods(cfg, rep, &boot, &pvalues, rs.derive(2), None)
}
