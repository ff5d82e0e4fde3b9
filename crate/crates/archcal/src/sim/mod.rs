//! Simulation studies for the calibration pipeline.
//!
//! Three studies are provided, each driven by a [`SimConfig`]:
//!
//! 1. **Diagonal recovery** — draw a calibration sample from a Gumbel
//!    copula, fit generators, and compare fitted copula diagonals to the
//!    closed form on a grid.
//! 2. **Calibrated testing under a Gumbel model** — calibrate local levels
//!    from a Gumbel calibration sample, then test one vector of normal-margin
//!    statistics drawn from a (possibly shifted) Gumbel copula; record
//!    familywise errors and power.
//! 3. **Bootstrap calibration for Gaussian mean tests** — draw equicorrelated
//!    Gaussian data, build least-favourable bootstrap statistics, calibrate
//!    from those, and test the observed column means.
//!
//! Runs are deterministic: per-replication seeds are derived from the base
//! seed by counter, replications are collected in index order, and CSV/SVG
//! emission uses fixed formatting, so output bytes do not depend on the
//! worker thread count.

mod io;
mod run;

pub use io::emit_plots;
pub use run::{run_sim, RunOutput};

use crate::mtp::Method;
use crate::{Error, Result};

/// Which of the three simulation studies to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SimId {
    Sim1,
    Sim2,
    Sim3,
}

impl SimId {
    pub fn parse(s: &str) -> Result<SimId> {
        match s {
            "1" => Ok(SimId::Sim1),
            "2" => Ok(SimId::Sim2),
            "3" => Ok(SimId::Sim3),
            other => Err(Error::parse(format!(
                "unknown simulation id {other:?}; expected 1, 2, or 3"
            ))),
        }
    }

    pub fn number(self) -> u8 {
        match self {
            SimId::Sim1 => 1,
            SimId::Sim2 => 2,
            SimId::Sim3 => 3,
        }
    }
}

impl std::fmt::Display for SimId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "sim{}", self.number())
    }
}

/// Full parameterisation of one simulation run.
///
/// `rho` is only meaningful for simulation 3; leaving it unset uses the
/// equicorrelation `sin(pi * tau / 2)` implied by the Kendall tau target.
#[derive(Debug, Clone)]
pub struct SimConfig {
    pub sim: SimId,
    /// Kendall tau of the Gumbel calibration model.
    pub tau: f64,
    /// Calibration sample size (rows drawn or bootstrap replicates).
    pub calib_size: usize,
    /// Number of data observations behind each test statistic.
    pub n_data: usize,
    /// Number of hypotheses / columns.
    pub m: usize,
    /// Mean shift applied to non-null coordinates.
    pub mu: f64,
    /// Equicorrelation of the Gaussian data model (simulation 3 only).
    pub rho: Option<f64>,
    /// Fraction of true null hypotheses.
    pub pi0: f64,
    /// Global familywise error level.
    pub alpha: f64,
    /// Number of Monte Carlo replications.
    pub reps: usize,
    /// Number of sampled pairs for the Monte Carlo pairwise fit.
    pub mc_pairs: usize,
    /// Calibration methods to run, in output order.
    pub methods: Vec<Method>,
    /// Base seed; replication r uses stream r derived from it.
    pub seed: u64,
}

impl SimConfig {
    /// Defaults used by the command-line tool for the given study.
    pub fn defaults(sim: SimId) -> SimConfig {
        let methods = match sim {
            SimId::Sim1 => vec![Method::Gnz, Method::Pairwise, Method::Oracle],
            SimId::Sim2 => vec![
                Method::Gnz,
                Method::Pairwise,
                Method::Bonferroni,
                Method::Oracle,
            ],
            SimId::Sim3 => vec![Method::Gnz, Method::Pairwise, Method::Bonferroni],
        };
        SimConfig {
            sim,
            tau: 0.5,
            calib_size: 100,
            n_data: 100,
            m: 6,
            mu: 0.2,
            rho: None,
            pi0: 0.5,
            alpha: 0.05,
            reps: 1000,
            mc_pairs: 100,
            methods,
            seed: 1,
        }
    }

    /// Gumbel parameter implied by the Kendall tau target.
    pub fn theta_star(&self) -> Result<f64> {
        crate::sampling::tau_to_theta(self.tau)
    }

    /// Equicorrelation for the Gaussian data model.
    pub fn effective_rho(&self) -> f64 {
        self.rho
            .unwrap_or_else(|| (std::f64::consts::PI * self.tau / 2.0).sin())
    }

    /// Per-coordinate mean shifts: the first `round(pi0 * m)` coordinates
    /// are null (shift 0), the rest carry `mu`.
    pub fn mean_shifts(&self) -> Vec<f64> {
        let m0 = ((self.pi0 * self.m as f64).round() as usize).min(self.m);
        let mut shifts = vec![0.0; self.m];
        for s in shifts.iter_mut().skip(m0) {
            *s = self.mu;
        }
        shifts
    }

    /// True-null indicator per coordinate (shift exactly zero).
    pub fn null_flags(&self) -> Vec<bool> {
        self.mean_shifts().iter().map(|&s| s == 0.0).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 0.0 && self.tau < 1.0) {
            return Err(Error::domain(format!(
                "tau must lie in [0, 1), got {}",
                self.tau
            )));
        }
        if self.calib_size < 2 {
            return Err(Error::domain("calibration sample size B must be at least 2"));
        }
        if self.n_data < 2 {
            return Err(Error::domain("data size n must be at least 2"));
        }
        if self.m < 2 {
            return Err(Error::domain("number of hypotheses m must be at least 2"));
        }
        if !self.mu.is_finite() || self.mu < 0.0 {
            return Err(Error::domain(format!(
                "mean shift mu must be finite and non-negative, got {}",
                self.mu
            )));
        }
        if !(self.pi0 >= 0.0 && self.pi0 <= 1.0) {
            return Err(Error::domain(format!(
                "null fraction pi0 must lie in [0, 1], got {}",
                self.pi0
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.reps == 0 {
            return Err(Error::domain("replication count L must be positive"));
        }
        if self.mc_pairs == 0 {
            return Err(Error::domain("pair budget M must be positive"));
        }
        match self.rho {
            Some(r) if self.sim != SimId::Sim3 => {
                return Err(Error::domain(format!(
                    "rho = {r} only applies to simulation 3"
                )));
            }
            Some(r) if !(r >= 0.0 && r < 1.0) => {
                return Err(Error::domain(format!(
                    "rho must lie in [0, 1), got {r}"
                )));
            }
            _ => {}
        }
        if self.methods.is_empty() {
            return Err(Error::domain("at least one method is required"));
        }
        for (i, a) in self.methods.iter().enumerate() {
            if self.methods[..i].contains(a) {
                return Err(Error::domain(format!("duplicate method {}", a.name())));
            }
        }
        for meth in &self.methods {
            let allowed = match self.sim {
                SimId::Sim1 => !matches!(meth, Method::Bonferroni),
                SimId::Sim2 => true,
                SimId::Sim3 => !matches!(meth, Method::Oracle),
            };
            if !allowed {
                return Err(Error::domain(format!(
                    "method {} is not available in simulation {}: {}",
                    meth.name(),
                    self.sim.number(),
                    match self.sim {
                        SimId::Sim1 => "it produces no copula estimate to evaluate",
                        _ => "no closed-form reference exists for resampled statistics",
                    }
                )));
            }
        }
        Ok(())
    }
}

/// Outcome of one method in one replication.
///
/// `runtime_ms` is informational only and is deliberately excluded from CSV
/// output so that result files are byte-identical across machines and runs.
#[derive(Debug, Clone, PartialEq)]
pub struct SimRecord {
    pub rep: usize,
    pub method: Method,
    pub alpha_loc: f64,
    pub fwe: bool,
    pub power: f64,
    pub fit_failures: u32,
    pub runtime_ms: u64,
}

/// Per-method aggregate over all replications of one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub reps: usize,
    pub mean_alpha_loc: f64,
    pub sd_alpha_loc: f64,
    /// Fraction of replications with at least one false rejection.
    pub fwer: f64,
    pub mean_power: f64,
    pub fit_failures: u64,
}

/// Aggregate records per method, preserving first-appearance order.
pub fn summarize(records: &[SimRecord]) -> Vec<MethodSummary> {
    let mut order: Vec<Method> = Vec::new();
    for r in records {
        if !order.contains(&r.method) {
            order.push(r.method);
        }
    }
    order
        .into_iter()
        .map(|method| {
            let rows: Vec<&SimRecord> = records.iter().filter(|r| r.method == method).collect();
            let n = rows.len();
            let mean_alpha_loc = rows.iter().map(|r| r.alpha_loc).sum::<f64>() / n as f64;
            let sd_alpha_loc = if n >= 2 {
                let ss: f64 = rows
                    .iter()
                    .map(|r| (r.alpha_loc - mean_alpha_loc).powi(2))
                    .sum();
                (ss / (n - 1) as f64).sqrt()
            } else {
                0.0
            };
            MethodSummary {
                method,
                reps: n,
                mean_alpha_loc,
                sd_alpha_loc,
                fwer: rows.iter().filter(|r| r.fwe).count() as f64 / n as f64,
                mean_power: rows.iter().map(|r| r.power).sum::<f64>() / n as f64,
                fit_failures: rows.iter().map(|r| u64::from(r.fit_failures)).sum(),
            }
        })
        .collect()
}

/// Parameter that a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVar {
    Tau,
    CalibSize,
    NData,
    M,
    Mu,
    Rho,
    Pi0,
    Alpha,
    Reps,
    McPairs,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::Tau => "tau",
            SweepVar::CalibSize => "B",
            SweepVar::NData => "n",
            SweepVar::M => "m",
            SweepVar::Mu => "mu",
            SweepVar::Rho => "rho",
            SweepVar::Pi0 => "pi0",
            SweepVar::Alpha => "alpha",
            SweepVar::Reps => "L",
            SweepVar::McPairs => "M",
        }
    }

    fn from_name(s: &str) -> Option<SweepVar> {
        Some(match s {
            "tau" => SweepVar::Tau,
            "B" => SweepVar::CalibSize,
            "n" => SweepVar::NData,
            "m" => SweepVar::M,
            "mu" => SweepVar::Mu,
            "rho" => SweepVar::Rho,
            "pi0" => SweepVar::Pi0,
            "alpha" => SweepVar::Alpha,
            "L" => SweepVar::Reps,
            "M" => SweepVar::McPairs,
            _ => return None,
        })
    }

    fn is_integer(self) -> bool {
        matches!(
            self,
            SweepVar::CalibSize | SweepVar::NData | SweepVar::M | SweepVar::Reps | SweepVar::McPairs
        )
    }

    /// Canonical string form of a value of this parameter.
    pub fn format_value(self, v: f64) -> String {
        if self.is_integer() {
            format!("{}", v as u64)
        } else {
            format!("{v}")
        }
    }
}

/// A parameter sweep: one variable and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub var: SweepVar,
    pub values: Vec<f64>,
}

impl SweepSpec {
    /// Parse `"var=v1,v2,..."`, e.g. `"B=50,200,1000"`.
    pub fn parse(s: &str) -> Result<SweepSpec> {
        let (name, rest) = s
            .split_once('=')
            .ok_or_else(|| Error::parse(format!("sweep {s:?} is not of the form var=v1,v2,...")))?;
        let var = SweepVar::from_name(name.trim()).ok_or_else(|| {
            Error::parse(format!(
                "unknown sweep variable {:?}; expected one of tau, B, n, m, mu, rho, pi0, alpha, L, M",
                name.trim()
            ))
        })?;
        let mut values = Vec::new();
        for tok in rest.split(',') {
            let tok = tok.trim();
            let v: f64 = tok
                .parse()
                .map_err(|_| Error::parse(format!("sweep value {tok:?} is not a number")))?;
            if !v.is_finite() {
                return Err(Error::parse(format!("sweep value {tok:?} is not finite")));
            }
            if var.is_integer() && (v.fract() != 0.0 || v < 0.0) {
                return Err(Error::parse(format!(
                    "sweep variable {} takes non-negative integers, got {tok:?}",
                    var.name()
                )));
            }
            values.push(v);
        }
        if values.is_empty() {
            return Err(Error::parse("sweep value list is empty"));
        }
        Ok(SweepSpec { var, values })
    }
}

fn apply_sweep(cfg: &SimConfig, var: SweepVar, v: f64) -> SimConfig {
    let mut out = cfg.clone();
    match var {
        SweepVar::Tau => out.tau = v,
        SweepVar::CalibSize => out.calib_size = v as usize,
        SweepVar::NData => out.n_data = v as usize,
        SweepVar::M => out.m = v as usize,
        SweepVar::Mu => out.mu = v,
        SweepVar::Rho => out.rho = Some(v),
        SweepVar::Pi0 => out.pi0 = v,
        SweepVar::Alpha => out.alpha = v,
        SweepVar::Reps => out.reps = v as usize,
        SweepVar::McPairs => out.mc_pairs = v as usize,
    }
    out
}

/// One configuration to run, with its position in the sweep (if any).
#[derive(Debug, Clone)]
pub(crate) struct SweepPoint {
    /// Sweep variable name, or `"none"` for a plain run.
    pub var_name: String,
    /// Canonical value string; `"0"` for a plain run.
    pub value_str: String,
    pub cfg: SimConfig,
}

pub(crate) fn sweep_points(cfg: &SimConfig, sweep: Option<&SweepSpec>) -> Result<Vec<SweepPoint>> {
    match sweep {
        None => {
            cfg.validate()?;
            Ok(vec![SweepPoint {
                var_name: "none".to_string(),
                value_str: "0".to_string(),
                cfg: cfg.clone(),
            }])
        }
        Some(spec) => spec
            .values
            .iter()
            .map(|&v| {
                let point = apply_sweep(cfg, spec.var, v);
                point.validate().map_err(|e| {
                    Error::domain(format!("sweep {}={}: {e}", spec.var.name(), v))
                })?;
                Ok(SweepPoint {
                    var_name: spec.var.name().to_string(),
                    value_str: spec.var.format_value(v),
                    cfg: point,
                })
            })
            .collect(),
    }
}

/// Scale a configuration down for fast smoke runs: caps L at 200, B at 500,
/// and m at 100, and drops sweep values above those caps.
pub fn apply_quick_preset(cfg: &mut SimConfig, sweep: &mut Option<SweepSpec>) -> Result<()> {
    cfg.reps = cfg.reps.min(200);
    cfg.calib_size = cfg.calib_size.min(500);
    cfg.m = cfg.m.min(100);
    if let Some(spec) = sweep {
        let cap = match spec.var {
            SweepVar::Reps => Some(200.0),
            SweepVar::CalibSize => Some(500.0),
            SweepVar::M => Some(100.0),
            _ => None,
        };
        if let Some(cap) = cap {
            spec.values.retain(|&v| v <= cap);
            if spec.values.is_empty() {
                return Err(Error::domain(format!(
                    "quick preset removed every sweep value of {} (cap {cap})",
                    spec.var.name()
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate_for_each_study() {
        for sim in [SimId::Sim1, SimId::Sim2, SimId::Sim3] {
            SimConfig::defaults(sim).validate().unwrap();
        }
    }

    #[test]
    fn default_method_lists_match_study() {
        assert_eq!(
            SimConfig::defaults(SimId::Sim1).methods,
            vec![Method::Gnz, Method::Pairwise, Method::Oracle]
        );
        assert_eq!(SimConfig::defaults(SimId::Sim2).methods.len(), 4);
        assert_eq!(
            SimConfig::defaults(SimId::Sim3).methods,
            vec![Method::Gnz, Method::Pairwise, Method::Bonferroni]
        );
    }

    #[test]
    fn validation_rejects_out_of_range_parameters() {
        let base = SimConfig::defaults(SimId::Sim2);
        for (field, bad) in [
            ("tau", SimConfig { tau: 1.0, ..base.clone() }),
            ("tau", SimConfig { tau: -0.1, ..base.clone() }),
            ("B", SimConfig { calib_size: 1, ..base.clone() }),
            ("n", SimConfig { n_data: 1, ..base.clone() }),
            ("m", SimConfig { m: 1, ..base.clone() }),
            ("mu", SimConfig { mu: -0.5, ..base.clone() }),
            ("pi0", SimConfig { pi0: 1.5, ..base.clone() }),
            ("alpha", SimConfig { alpha: 0.0, ..base.clone() }),
            ("alpha", SimConfig { alpha: 1.0, ..base.clone() }),
            ("L", SimConfig { reps: 0, ..base.clone() }),
            ("M", SimConfig { mc_pairs: 0, ..base.clone() }),
            ("rho", SimConfig { rho: Some(0.5), ..base.clone() }),
            ("methods", SimConfig { methods: vec![], ..base.clone() }),
            (
                "methods",
                SimConfig {
                    methods: vec![Method::Gnz, Method::Gnz],
                    ..base.clone()
                },
            ),
        ] {
            assert!(bad.validate().is_err(), "expected {field} to be rejected");
        }
    }

    #[test]
    fn validation_enforces_per_study_method_lists() {
        let mut sim1 = SimConfig::defaults(SimId::Sim1);
        sim1.methods = vec![Method::Bonferroni];
        assert!(sim1.validate().is_err());

        let mut sim3 = SimConfig::defaults(SimId::Sim3);
        sim3.methods = vec![Method::Oracle];
        assert!(sim3.validate().is_err());

        let mut sim3_rho = SimConfig::defaults(SimId::Sim3);
        sim3_rho.rho = Some(0.9);
        sim3_rho.validate().unwrap();
        sim3_rho.rho = Some(1.0);
        assert!(sim3_rho.validate().is_err());
    }

    #[test]
    fn effective_rho_defaults_to_tau_implied_correlation() {
        let mut cfg = SimConfig::defaults(SimId::Sim3);
        cfg.tau = 0.5;
        let expect = (std::f64::consts::PI * 0.25).sin();
        assert!((cfg.effective_rho() - expect).abs() < 1e-15);
        cfg.rho = Some(0.3);
        assert_eq!(cfg.effective_rho(), 0.3);
    }

    #[test]
    fn mean_shifts_split_nulls_and_alternatives() {
        let mut cfg = SimConfig::defaults(SimId::Sim2);
        cfg.m = 6;
        cfg.pi0 = 0.5;
        cfg.mu = 0.2;
        assert_eq!(cfg.mean_shifts(), vec![0.0, 0.0, 0.0, 0.2, 0.2, 0.2]);
        assert_eq!(
            cfg.null_flags(),
            vec![true, true, true, false, false, false]
        );

        // A zero shift makes every hypothesis null regardless of pi0.
        cfg.mu = 0.0;
        assert!(cfg.null_flags().iter().all(|&b| b));

        cfg.mu = 0.2;
        cfg.pi0 = 1.0;
        assert!(cfg.null_flags().iter().all(|&b| b));
        cfg.pi0 = 0.0;
        assert!(cfg.null_flags().iter().all(|&b| !b));
    }

    #[test]
    fn sweep_parse_accepts_integer_and_float_variables() {
        let s = SweepSpec::parse("B=50,200,1000").unwrap();
        assert_eq!(s.var, SweepVar::CalibSize);
        assert_eq!(s.values, vec![50.0, 200.0, 1000.0]);
        assert_eq!(s.var.format_value(50.0), "50");

        let s = SweepSpec::parse("tau=0.3,0.6").unwrap();
        assert_eq!(s.var, SweepVar::Tau);
        assert_eq!(s.var.format_value(0.3), "0.3");

        let s = SweepSpec::parse(" rho = 0, 0.5 , 0.9 ").unwrap();
        assert_eq!(s.var, SweepVar::Rho);
        assert_eq!(s.values.len(), 3);
    }

    #[test]
    fn sweep_parse_rejects_malformed_input() {
        assert!(SweepSpec::parse("B").is_err());
        assert!(SweepSpec::parse("sigma=1,2").is_err());
        assert!(SweepSpec::parse("B=50.5").is_err());
        assert!(SweepSpec::parse("B=-3").is_err());
        assert!(SweepSpec::parse("tau=abc").is_err());
        assert!(SweepSpec::parse("tau=").is_err());
    }

    #[test]
    fn sweep_points_apply_and_validate_each_value() {
        let cfg = SimConfig::defaults(SimId::Sim2);
        let spec = SweepSpec::parse("B=50,200").unwrap();
        let points = sweep_points(&cfg, Some(&spec)).unwrap();
        assert_eq!(points.len(), 2);
        assert_eq!(points[0].cfg.calib_size, 50);
        assert_eq!(points[1].cfg.calib_size, 200);
        assert_eq!(points[0].var_name, "B");
        assert_eq!(points[1].value_str, "200");

        // A value that violates a domain constraint is reported.
        let bad = SweepSpec::parse("tau=0.3,1").unwrap();
        let err = sweep_points(&cfg, Some(&bad)).unwrap_err();
        assert!(err.to_string().contains("tau"));

        let none = sweep_points(&cfg, None).unwrap();
        assert_eq!(none.len(), 1);
        assert_eq!(none[0].var_name, "none");
        assert_eq!(none[0].value_str, "0");
    }

    #[test]
    fn summarize_computes_per_method_aggregates() {
        let mk = |rep, method, alpha_loc, fwe, power| SimRecord {
            rep,
            method,
            alpha_loc,
            fwe,
            power,
            fit_failures: 1,
            runtime_ms: 0,
        };
        let records = vec![
            mk(0, Method::Gnz, 0.01, false, 0.5),
            mk(0, Method::Bonferroni, 0.008, false, 0.25),
            mk(1, Method::Gnz, 0.03, true, 1.0),
            mk(1, Method::Bonferroni, 0.008, false, 0.75),
        ];
        let summary = summarize(&records);
        assert_eq!(summary.len(), 2);
        assert_eq!(summary[0].method, Method::Gnz);
        assert_eq!(summary[0].reps, 2);
        assert!((summary[0].mean_alpha_loc - 0.02).abs() < 1e-15);
        // Sample standard deviation of {0.01, 0.03}.
        assert!((summary[0].sd_alpha_loc - 0.01 * std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((summary[0].fwer - 0.5).abs() < 1e-15);
        assert!((summary[0].mean_power - 0.75).abs() < 1e-15);
        assert_eq!(summary[0].fit_failures, 2);
        assert_eq!(summary[1].method, Method::Bonferroni);
        assert!((summary[1].sd_alpha_loc).abs() < 1e-15);
        assert!((summary[1].fwer).abs() < 1e-15);
    }

    #[test]
    fn quick_preset_caps_size_parameters() {
        let mut cfg = SimConfig::defaults(SimId::Sim2);
        cfg.reps = 5000;
        cfg.calib_size = 2000;
        let mut sweep = Some(SweepSpec::parse("B=50,200,1000").unwrap());
        apply_quick_preset(&mut cfg, &mut sweep).unwrap();
        assert_eq!(cfg.reps, 200);
        assert_eq!(cfg.calib_size, 500);
        assert_eq!(sweep.unwrap().values, vec![50.0, 200.0]);

        // Dropping every value is an error rather than a silent no-op run.
        let mut cfg = SimConfig::defaults(SimId::Sim2);
        let mut sweep = Some(SweepSpec::parse("B=1000,2000").unwrap());
        assert!(apply_quick_preset(&mut cfg, &mut sweep).is_err());

        // Non-size sweeps pass through untouched.
        let mut cfg = SimConfig::defaults(SimId::Sim2);
        let mut sweep = Some(SweepSpec::parse("tau=0.3,0.6").unwrap());
        apply_quick_preset(&mut cfg, &mut sweep).unwrap();
        assert_eq!(sweep.unwrap().values, vec![0.3, 0.6]);
    }
}
