//! Command-line interface: simulation studies and one-shot calibration.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use archcal::generator::{
    fit_generator_gnz, fit_generator_pairwise, FitDiagnostics, Generator, PairMode,
};
use archcal::mtp::{calibrate, calibrate_bonferroni, decide, CalibrationResult, Method};
use archcal::sampling::SampleMatrix;
use archcal::sim::{apply_quick_preset, run_sim, SimConfig, SimId, SweepSpec};
use archcal::{Error, Result};

#[derive(Parser)]
#[command(
    name = "archcal",
    version,
    about = "Nonparametric Archimedean-copula calibration for multiple testing"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation study and write CSV tables and SVG plots.
    Sim(SimArgs),
    /// Calibrate a local level from a CSV of calibration statistics.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct SimArgs {
    /// Study to run: 1 (diagonal recovery), 2 (calibrated tests under a
    /// Gumbel model), 3 (bootstrap calibration for Gaussian mean tests).
    #[arg(long)]
    sim: String,
    /// Kendall tau of the calibration model (default 0.5).
    #[arg(long)]
    tau: Option<f64>,
    /// Calibration sample size (default 100).
    #[arg(long = "B")]
    calib_size: Option<usize>,
    /// Observations behind each test statistic (default 100).
    #[arg(long)]
    n: Option<usize>,
    /// Number of hypotheses (default 6).
    #[arg(long)]
    m: Option<usize>,
    /// Mean shift on non-null coordinates (default 0.2).
    #[arg(long)]
    mu: Option<f64>,
    /// Equicorrelation of the Gaussian data model (study 3 only;
    /// default sin(pi*tau/2)).
    #[arg(long)]
    rho: Option<f64>,
    /// Fraction of true nulls (default 0.5).
    #[arg(long)]
    pi0: Option<f64>,
    /// Global familywise error level (default 0.05).
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of replications (default 1000).
    #[arg(long = "L")]
    reps: Option<usize>,
    /// Pair budget of the Monte Carlo pairwise fit (default 100).
    #[arg(long = "M")]
    mc_pairs: Option<usize>,
    /// Comma-separated methods (default depends on the study).
    #[arg(long, value_delimiter = ',')]
    methods: Option<Vec<String>>,
    /// Parameter sweep, e.g. "B=50,200,1000" or "rho=0,0.5,0.9".
    #[arg(long)]
    sweep: Option<String>,
    /// "quick" caps L at 200, B at 500 and m at 100 for smoke runs.
    #[arg(long)]
    preset: Option<String>,
    /// Base seed; replication r uses stream r derived from it.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output directory for CSV and SVG files.
    #[arg(long)]
    out: PathBuf,
    /// Worker threads (0 or unset: all cores). The ARCHCAL_THREADS
    /// environment variable is honored when the flag is absent.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV of calibration statistics: header row, then one row per draw
    /// and one column per hypothesis.
    #[arg(long)]
    stats: PathBuf,
    /// Global familywise error level.
    #[arg(long)]
    alpha: f64,
    /// Calibration method: gnz, pairwise (all pairs) or bonferroni.
    #[arg(long)]
    method: String,
    /// Optional CSV of observed p-values (header row, one row or one
    /// column); adds per-hypothesis rejection decisions to the output.
    #[arg(long)]
    pvalues: Option<PathBuf>,
}

/// JSON document printed by `archcal calibrate`.
#[derive(Serialize)]
struct CalibrateOutput {
    #[serde(flatten)]
    result: CalibrationResult,
    m: usize,
    alpha: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    generator: Option<Generator>,
    #[serde(skip_serializing_if = "Option::is_none")]
    rejections: Option<Vec<bool>>,
}

fn main() {
    let cli = Cli::parse();
    let code = match cli.command {
        Command::Sim(args) => run_sim_command(args),
        Command::Calibrate(args) => run_calibrate_command(args),
    };
    if let Err(e) = code {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

fn run_sim_command(args: SimArgs) -> Result<()> {
    let sim = SimId::parse(&args.sim)?;
    let mut cfg = SimConfig::defaults(sim);
    if let Some(v) = args.tau {
        cfg.tau = v;
    }
    if let Some(v) = args.calib_size {
        cfg.calib_size = v;
    }
    if let Some(v) = args.n {
        cfg.n_data = v;
    }
    if let Some(v) = args.m {
        cfg.m = v;
    }
    if let Some(v) = args.mu {
        cfg.mu = v;
    }
    if args.rho.is_some() {
        cfg.rho = args.rho;
    }
    if let Some(v) = args.pi0 {
        cfg.pi0 = v;
    }
    if let Some(v) = args.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = args.reps {
        cfg.reps = v;
    }
    if let Some(v) = args.mc_pairs {
        cfg.mc_pairs = v;
    }
    if let Some(names) = &args.methods {
        cfg.methods = names
            .iter()
            .map(|s| Method::parse(s.trim()))
            .collect::<Result<_>>()?;
    }
    cfg.seed = args.seed;

    let mut sweep = args.sweep.as_deref().map(SweepSpec::parse).transpose()?;
    if let Some(preset) = &args.preset {
        match preset.as_str() {
            "quick" => apply_quick_preset(&mut cfg, &mut sweep)?,
            other => {
                return Err(Error::parse(format!(
                    "unknown preset {other:?}; the only preset is \"quick\""
                )))
            }
        }
    }
    let threads = resolve_threads(args.threads)?;

    let t0 = Instant::now();
    let output = run_sim(&cfg, sweep.as_ref(), &args.out, threads)?;
    eprintln!(
        "{sim}: {} replications per configuration in {:.1} s",
        cfg.reps,
        t0.elapsed().as_secs_f64()
    );
    for path in output.csv_paths.iter().chain(&output.svg_paths) {
        println!("{}", path.display());
    }
    Ok(())
}

fn resolve_threads(flag: Option<usize>) -> Result<Option<usize>> {
    if flag.is_some() {
        return Ok(flag);
    }
    match std::env::var("ARCHCAL_THREADS") {
        Ok(s) => s
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Error::parse(format!("ARCHCAL_THREADS={s:?} is not a thread count"))),
        Err(_) => Ok(None),
    }
}

fn run_calibrate_command(args: CalibrateArgs) -> Result<()> {
    let stats = read_matrix_csv(&args.stats)?;
    let m = stats.cols();
    let method = Method::parse(&args.method)?;

    let (alpha_loc, diagnostics, generator) = match method {
        Method::Gnz => {
            let (gen, diag) = fit_generator_gnz(&stats)?;
            (calibrate(&gen, m, args.alpha)?, diag, Some(gen))
        }
        Method::Pairwise => {
            let (gen, diag) = fit_generator_pairwise(&stats, PairMode::AllPairs)?;
            (calibrate(&gen, m, args.alpha)?, diag, Some(gen))
        }
        Method::Bonferroni => (
            calibrate_bonferroni(m, args.alpha)?,
            FitDiagnostics::default(),
            None,
        ),
        Method::Oracle => {
            return Err(Error::domain(
                "oracle calibration needs a known copula parameter and is only \
                 available inside the simulations",
            ))
        }
    };

    let rejections = match &args.pvalues {
        Some(path) => {
            let pvalues = read_pvalue_csv(path, m)?;
            Some(decide(&pvalues, alpha_loc)?)
        }
        None => None,
    };

    let output = CalibrateOutput {
        result: CalibrationResult {
            method,
            alpha_loc,
            diagnostics,
        },
        m,
        alpha: args.alpha,
        generator,
        rejections,
    };
    println!("{}", serde_json::to_string_pretty(&output)?);
    Ok(())
}

/// Read a numeric CSV (header row required) into a matrix.
fn read_matrix_csv(path: &Path) -> Result<SampleMatrix> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
    let cols = reader.headers()?.len();
    let mut data = Vec::new();
    let mut rows = 0usize;
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::parse(format!("{}: {e}", path.display())))?;
        for (j, field) in record.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| {
                Error::parse(format!(
                    "{}: data row {}, column {}: {field:?} is not a number",
                    path.display(),
                    i + 1,
                    j + 1
                ))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::parse(format!(
            "{}: no data rows below the header",
            path.display()
        )));
    }
    SampleMatrix::new(rows, cols, data)
}

/// Read m p-values from a CSV laid out as one row or one column.
fn read_pvalue_csv(path: &Path, m: usize) -> Result<Vec<f64>> {
    let mat = read_matrix_csv(path)?;
    if mat.rows() == 1 && mat.cols() == m {
        Ok(mat.row(0).to_vec())
    } else if mat.cols() == 1 && mat.rows() == m {
        Ok((0..m).map(|i| mat.get(i, 0)).collect())
    } else {
        Err(Error::shape(format!(
            "{}: expected {m} p-values as one row or one column, found {} rows x {} columns",
            path.display(),
            mat.rows(),
            mat.cols()
        )))
    }
}
