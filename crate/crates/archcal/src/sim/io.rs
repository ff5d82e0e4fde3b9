//! CSV emission and plot generation for simulation output.
//!
//! CSV files are assembled by hand with `Display` float formatting so the
//! bytes are reproducible; each file starts with a `# archcal v1 sim<k>`
//! comment identifying the schema.

use std::path::{Path, PathBuf};

use super::run::Sim1Curves;
use super::{MethodSummary, SimId, SimRecord, SweepPoint};
use crate::plot::{render_lines, PlotSpec, Series};
use crate::{Error, Result};

const FORMAT_TAG: &str = "# archcal v1";

const SIM1_HEADER: &str = "sweep_var,sweep_value,method,u,mean_copula,true_copula,mean_abs_dist";
const RECORDS_HEADER: &str = "sweep_var,sweep_value,rep,method,alpha_loc,fwe,power,fit_failures";
const SUMMARY_HEADER: &str =
    "sweep_var,sweep_value,method,reps,mean_alpha_loc,sd_alpha_loc,fwer,mean_power,fit_failures";

pub(crate) fn write_sim1_csv(path: &Path, points: &[(SweepPoint, Sim1Curves)]) -> Result<()> {
    let mut out = format!("{FORMAT_TAG} sim1\n{SIM1_HEADER}\n");
    for (point, curves) in points {
        for (mi, method) in curves.methods.iter().enumerate() {
            for (k, &u) in curves.grid.iter().enumerate() {
                out.push_str(&format!(
                    "{},{},{},{},{},{},{}\n",
                    point.var_name,
                    point.value_str,
                    method.name(),
                    u,
                    curves.mean_diag[mi][k],
                    curves.truth[k],
                    curves.mean_abs[mi][k],
                ));
            }
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub(crate) fn write_records_csv(
    path: &Path,
    sim: SimId,
    points: &[(SweepPoint, Vec<SimRecord>)],
) -> Result<()> {
    let mut out = format!("{FORMAT_TAG} {sim}\n{RECORDS_HEADER}\n");
    for (point, records) in points {
        for r in records {
            // runtime_ms is intentionally not written: it would break
            // byte-for-byte reproducibility of result files.
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                point.var_name,
                point.value_str,
                r.rep,
                r.method.name(),
                r.alpha_loc,
                u8::from(r.fwe),
                r.power,
                r.fit_failures,
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

pub(crate) fn write_summary_csv(
    path: &Path,
    sim: SimId,
    points: &[(SweepPoint, Vec<MethodSummary>)],
) -> Result<()> {
    let mut out = format!("{FORMAT_TAG} {sim}\n{SUMMARY_HEADER}\n");
    for (point, summaries) in points {
        for s in summaries {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                point.var_name,
                point.value_str,
                s.method.name(),
                s.reps,
                s.mean_alpha_loc,
                s.sd_alpha_loc,
                s.fwer,
                s.mean_power,
                s.fit_failures,
            ));
        }
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Render SVG plots from a simulation CSV file into `out_dir`.
///
/// The file's `# archcal v1 sim<k>` tag selects the schema: the study-1
/// pointwise file yields diagonal and distance plots per sweep value, and a
/// study-2/3 summary file yields local-level and power plots over the sweep.
pub fn emit_plots(csv_path: &Path, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let text = std::fs::read_to_string(csv_path)?;
    let first = text
        .lines()
        .next()
        .ok_or_else(|| Error::parse("empty CSV file"))?;
    let sim = first
        .strip_prefix(FORMAT_TAG)
        .map(str::trim)
        .and_then(|s| s.strip_prefix("sim"))
        .and_then(|s| SimId::parse(s).ok())
        .ok_or_else(|| {
            Error::parse(format!(
                "missing format tag: expected first line \"{FORMAT_TAG} sim<k>\", got {first:?}"
            ))
        })?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    let header_line = headers.join(",");

    std::fs::create_dir_all(out_dir)?;
    match sim {
        SimId::Sim1 => {
            if header_line != SIM1_HEADER {
                return Err(Error::parse(format!(
                    "unexpected columns for a study-1 pointwise file: {header_line}"
                )));
            }
            plots_sim1(&mut reader, out_dir)
        }
        _ => {
            if header_line == RECORDS_HEADER {
                return Err(Error::parse(
                    "this is a per-replication records file; plots are generated from the summary file",
                ));
            }
            if header_line != SUMMARY_HEADER {
                return Err(Error::parse(format!(
                    "unexpected columns for a summary file: {header_line}"
                )));
            }
            plots_summary(sim, &mut reader, out_dir)
        }
    }
}

fn field_f64(record: &csv::StringRecord, idx: usize, name: &str, row: usize) -> Result<f64> {
    record
        .get(idx)
        .and_then(|s| s.parse::<f64>().ok())
        .ok_or_else(|| Error::parse(format!("row {row}: column {name} is not a number")))
}

fn write_svg(path: PathBuf, spec: &PlotSpec, series: &[Series]) -> Result<PathBuf> {
    std::fs::write(&path, render_lines(spec, series))?;
    Ok(path)
}

/// Ordered grouping helper: pushes `item` under `key`, adding the key on
/// first sight so output order follows input order.
fn push_grouped<K: PartialEq, V>(groups: &mut Vec<(K, Vec<V>)>, key: K, item: V) {
    if let Some((_, bucket)) = groups.iter_mut().find(|(k, _)| *k == key) {
        bucket.push(item);
    } else {
        groups.push((key, vec![item]));
    }
}

struct PointwiseRow {
    method: String,
    u: f64,
    mean: f64,
    truth: f64,
    abs: f64,
}

fn plots_sim1(
    reader: &mut csv::Reader<&[u8]>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut groups: Vec<((String, String), Vec<PointwiseRow>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        let key = (
            record.get(0).unwrap_or_default().to_string(),
            record.get(1).unwrap_or_default().to_string(),
        );
        push_grouped(
            &mut groups,
            key,
            PointwiseRow {
                method: record.get(2).unwrap_or_default().to_string(),
                u: field_f64(&record, 3, "u", row)?,
                mean: field_f64(&record, 4, "mean_copula", row)?,
                truth: field_f64(&record, 5, "true_copula", row)?,
                abs: field_f64(&record, 6, "mean_abs_dist", row)?,
            },
        );
    }

    let mut paths = Vec::new();
    for ((var, value), rows) in &groups {
        let mut by_method: Vec<(String, Vec<&PointwiseRow>)> = Vec::new();
        for row in rows {
            push_grouped(&mut by_method, row.method.clone(), row);
        }
        let suffix = if var == "none" {
            String::new()
        } else {
            format!("_{var}_{value}")
        };
        let title_suffix = if var == "none" {
            String::new()
        } else {
            format!(" ({var} = {value})")
        };

        let mut diag_series: Vec<Series> = by_method
            .iter()
            .map(|(name, rows)| Series {
                name: name.clone(),
                points: rows.iter().map(|r| (r.u, r.mean)).collect(),
            })
            .collect();
        if let Some((_, rows)) = by_method.first() {
            diag_series.push(Series {
                name: "true".to_string(),
                points: rows.iter().map(|r| (r.u, r.truth)).collect(),
            });
        }
        paths.push(write_svg(
            out_dir.join(format!("sim1_diagonal{suffix}.svg")),
            &PlotSpec {
                title: format!("Mean fitted copula diagonal{title_suffix}"),
                x_label: "u".to_string(),
                y_label: "diagonal".to_string(),
            },
            &diag_series,
        )?);

        let dist_series: Vec<Series> = by_method
            .iter()
            .map(|(name, rows)| Series {
                name: name.clone(),
                points: rows.iter().map(|r| (r.u, r.abs)).collect(),
            })
            .collect();
        paths.push(write_svg(
            out_dir.join(format!("sim1_distance{suffix}.svg")),
            &PlotSpec {
                title: format!("Mean absolute diagonal distance{title_suffix}"),
                x_label: "u".to_string(),
                y_label: "mean abs distance".to_string(),
            },
            &dist_series,
        )?);
    }
    Ok(paths)
}

fn plots_summary(
    sim: SimId,
    reader: &mut csv::Reader<&[u8]>,
    out_dir: &Path,
) -> Result<Vec<PathBuf>> {
    let mut var_name = "none".to_string();
    // method -> (x, mean_alpha_loc, mean_power) points in file order.
    let mut by_method: Vec<(String, Vec<(f64, f64, f64)>)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        let row = i + 1;
        if i == 0 {
            var_name = record.get(0).unwrap_or_default().to_string();
        }
        let x = field_f64(&record, 1, "sweep_value", row)?;
        let level = field_f64(&record, 4, "mean_alpha_loc", row)?;
        let power = field_f64(&record, 7, "mean_power", row)?;
        push_grouped(
            &mut by_method,
            record.get(2).unwrap_or_default().to_string(),
            (x, level, power),
        );
    }

    let x_label = if var_name == "none" {
        "run".to_string()
    } else {
        var_name
    };
    let level_series: Vec<Series> = by_method
        .iter()
        .map(|(name, pts)| Series {
            name: name.clone(),
            points: pts.iter().map(|&(x, level, _)| (x, level)).collect(),
        })
        .collect();
    let power_series: Vec<Series> = by_method
        .iter()
        .map(|(name, pts)| Series {
            name: name.clone(),
            points: pts.iter().map(|&(x, _, power)| (x, power)).collect(),
        })
        .collect();

    let level_path = write_svg(
        out_dir.join(format!("{sim}_alpha_loc.svg")),
        &PlotSpec {
            title: "Mean calibrated local level".to_string(),
            x_label: x_label.clone(),
            y_label: "mean local level".to_string(),
        },
        &level_series,
    )?;
    let power_path = write_svg(
        out_dir.join(format!("{sim}_power.svg")),
        &PlotSpec {
            title: "Mean power".to_string(),
            x_label,
            y_label: "mean power".to_string(),
        },
        &power_series,
    )?;
    Ok(vec![level_path, power_path])
}
