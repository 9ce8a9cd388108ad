//! CSV and manifest output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::ExperimentConfig;
use super::spectrum::trailing_spectrum;
use super::sweep::{CellOutcome, ResultsTable, SweepOutput};
use crate::error::{Error, Result};
use crate::simulation::SimRecord;

pub const RESULTS_HEADER: &str =
    "case,f_dist,i_u,d_f,R_u,y_ol,y_cl,attenuation_db,saturation_fraction";

/// Failed cells keep their grid coordinates and carry `failed` in place of
/// the metric columns.
pub fn results_csv(table: &ResultsTable) -> String {
    let mut s = String::from(RESULTS_HEADER);
    s.push('\n');
    for r in &table.rows {
        let _ = write!(s, "{},{},{},{},{},", r.case, r.f_dist, r.i_u, r.d_f, r.r_u);
        match &r.outcome {
            CellOutcome::Done {
                metric,
                saturation_fraction,
            } => {
                let _ = writeln!(
                    s,
                    "{},{},{},{}",
                    metric.y_ol, metric.y_cl, metric.attenuation_db, saturation_fraction
                );
            }
            CellOutcome::Failed(_) => s.push_str("failed,failed,failed,failed\n"),
        }
    }
    s
}

/// `frequency_hz,<name>...` for spectra computed on equal-length series.
pub fn spectrum_csv(columns: &[(&str, Vec<(f64, f64)>)]) -> String {
    let mut s = String::from("frequency_hz");
    for (name, _) in columns {
        s.push(',');
        s.push_str(name);
    }
    s.push('\n');
    let rows = columns.iter().map(|(_, c)| c.len()).min().unwrap_or(0);
    for i in 0..rows {
        let _ = write!(s, "{}", columns[0].1[i].0);
        for (_, c) in columns {
            let _ = write!(s, ",{}", c[i].1);
        }
        s.push('\n');
    }
    s
}

pub fn theta_csv(rec: &SimRecord) -> String {
    let width = rec.theta_snapshots.first().map_or(0, |(_, th)| th.len());
    let mut s = String::from("t");
    for i in 1..=width {
        let _ = write!(s, ",theta_{i}");
    }
    s.push('\n');
    for (t, th) in &rec.theta_snapshots {
        let _ = write!(s, "{t}");
        for v in th {
            let _ = write!(s, ",{v}");
        }
        s.push('\n');
    }
    s
}

#[derive(Serialize)]
struct ManifestCell {
    f_dist: f64,
    i_u: usize,
    d_f: usize,
    #[serde(rename = "R_u")]
    r_u: f64,
    f_f: f64,
    substeps: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: &'static str,
    config: &'a ExperimentConfig,
    cells: Vec<ManifestCell>,
}

fn write(path: PathBuf, contents: &str) -> Result<PathBuf> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

fn mkdir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Write `results.csv`, `manifest.toml`, and per-cell trajectory, spectrum
/// and coefficient CSVs under `out_dir`. Returns the written paths.
pub fn emit_outputs(out: &SweepOutput, out_dir: &Path) -> Result<Vec<PathBuf>> {
    let spec = &out.spec;
    let case = spec.case();
    let window = spec.base.simulation.spectrum_window;
    let traj_dir = out_dir.join("trajectories");
    let spec_dir = out_dir.join("spectra");
    let theta_dir = out_dir.join("theta");
    for d in [out_dir, &traj_dir, &spec_dir, &theta_dir] {
        mkdir(d)?;
    }

    let mut written = vec![write(
        out_dir.join("results.csv"),
        &results_csv(&out.table),
    )?];

    for (fi, rec) in out.open_loop.iter().enumerate() {
        if let Some(rec) = rec {
            let f = spec.frequencies()[fi];
            let name = format!("{case}_f{f}_open_loop.csv");
            written.push(write(traj_dir.join(name), &rec.to_csv())?);
        }
    }

    let mut cells = Vec::new();
    for ((row, cl), &(fi, ii)) in out
        .table
        .rows
        .iter()
        .zip(&out.closed_loop)
        .zip(&spec.cells())
    {
        let cfg = spec.cell_config(fi, ii);
        let stem = format!("{case}_f{}_iu{}", row.f_dist, row.i_u);
        if let Some(cl) = cl {
            written.push(write(traj_dir.join(format!("{stem}.csv")), &cl.to_csv())?);
            written.push(write(
                theta_dir.join(format!("{stem}.csv")),
                &theta_csv(cl),
            )?);
            if let Some(ol) = &out.open_loop[fi] {
                let ts = cfg.simulation.t_s;
                let csv = spectrum_csv(&[
                    ("y_disp_ol", trailing_spectrum(&ol.y_disp, ts, window)),
                    ("y_disp_cl", trailing_spectrum(&cl.y_disp, ts, window)),
                    ("y_acc_ol", trailing_spectrum(&ol.y_acc, ts, window)),
                    ("y_acc_cl", trailing_spectrum(&cl.y_acc, ts, window)),
                ]);
                written.push(write(spec_dir.join(format!("{stem}.csv")), &csv)?);
            }
        }
        cells.push(ManifestCell {
            f_dist: row.f_dist,
            i_u: row.i_u,
            d_f: row.d_f,
            r_u: row.r_u,
            f_f: cfg.target_frequency(),
            substeps: cl.as_ref().map(|r| r.substeps),
            error: match &row.outcome {
                CellOutcome::Failed(e) => Some(e.clone()),
                CellOutcome::Done { .. } => None,
            },
        });
    }

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION"),
        config: &spec.base,
        cells,
    };
    let text = toml::to_string(&manifest).map_err(|e| Error::Config(e.to_string()))?;
    written.push(write(out_dir.join("manifest.toml"), &text)?);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_table_is_header_only() {
        let csv = results_csv(&ResultsTable::default());
        assert_eq!(csv, format!("{RESULTS_HEADER}\n"));
    }

    #[test]
    fn spectrum_columns() {
        let a = vec![(0.0, 1.0), (1.0, 2.0)];
        let b = vec![(0.0, 3.0), (1.0, 4.0)];
        let csv = spectrum_csv(&[("a", a), ("b", b)]);
        assert_eq!(csv, "frequency_hz,a,b\n0,1,3\n1,2,4\n");
    }
}
