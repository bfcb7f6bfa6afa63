//! CSV artifacts written by the command-line tool.
//!
//! | file | header |
//! |------|--------|
//! | `macro_t<time>.csv` | `i,j,x_center,y_center,u0,u1` |
//! | `micro_t<time>.csv` | `i,j,x_center,y_center,u_mic` |
//! | `macro_diagnostics.csv` | `t,dt,total_mass,mb_<cut>...` |
//! | `micro_replicates.csv` | `replicate,final_stopped_fraction,cross_<cut>...` |
//! | `micro_stopped.csv` | `t,mean_stopped_fraction` |
//! | `error_vs_time.csv` | `t,l1,l2` |
//! | `mass_balance.csv` | `t,micro_mb_<cut>...,macro_mb_<cut>...` |
//! | `crossing.csv` | `cut,micro_mean_time,micro_crossed,replicates,macro_time` |
//!
//! Numbers use Rust's shortest round-trip formatting; missing values are empty.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::macro_solver::{MacroField, MacroRun};
use crate::metrics::ComparisonReport;
use crate::micro::EnsembleResult;
use crate::{Grid, Result};

/// `<dir>/<tier>_t<time>.csv`.
pub fn snapshot_path(dir: &Path, tier: &str, t: f64) -> PathBuf {
    dir.join(format!("{tier}_t{t}.csv"))
}

fn writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(path)?)))
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn finish<W: Write>(w: csv::Writer<W>) -> Result<()> {
    let mut inner = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
    inner.flush()?;
    Ok(())
}

fn cell_columns(grid: &Grid, k: usize) -> [String; 4] {
    let (i, j) = grid.coords(k);
    let c = grid.center(i, j);
    [i.to_string(), j.to_string(), c.x.to_string(), c.y.to_string()]
}

pub fn write_macro_snapshot(path: &Path, grid: &Grid, field: &MacroField) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "x_center", "y_center", "u0", "u1"])?;
    for k in 0..grid.len() {
        let [i, j, x, y] = cell_columns(grid, k);
        w.write_record([i, j, x, y, field.u0[k].to_string(), field.u1[k].to_string()])?;
    }
    finish(w)
}

pub fn write_micro_snapshot(path: &Path, grid: &Grid, density: &[f64]) -> Result<()> {
    let mut w = writer(path)?;
    w.write_record(["i", "j", "x_center", "y_center", "u_mic"])?;
    for (k, u) in density.iter().enumerate() {
        let [i, j, x, y] = cell_columns(grid, k);
        w.write_record([i, j, x, y, u.to_string()])?;
    }
    finish(w)
}

/// Writes all macroscopic artifacts into `dir`.
pub fn write_macro_run(dir: &Path, run: &MacroRun) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for field in &run.snapshots {
        write_macro_snapshot(&snapshot_path(dir, "macro", field.t), &run.grid, field)?;
    }
    let mut w = writer(&dir.join("macro_diagnostics.csv"))?;
    let mut header = vec!["t".to_string(), "dt".into(), "total_mass".into()];
    header.extend(run.cuts.iter().map(|c| format!("mb_{c}")));
    w.write_record(&header)?;
    for d in &run.diagnostics {
        let mut row = vec![d.t.to_string(), d.dt.to_string(), d.total_mass.to_string()];
        row.extend(d.mass_balance.iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    finish(w)
}

/// Writes all microscopic artifacts into `dir`.
pub fn write_ensemble(dir: &Path, result: &EnsembleResult) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (t, density) in result.times.iter().zip(&result.densities) {
        write_micro_snapshot(&snapshot_path(dir, "micro", *t), &result.grid, density)?;
    }

    let mut w = writer(&dir.join("micro_replicates.csv"))?;
    let mut header = vec!["replicate".to_string(), "final_stopped_fraction".into()];
    header.extend(result.cuts.iter().map(|c| format!("cross_{c}")));
    w.write_record(&header)?;
    for (r, (stopped, crossing)) in result.stopped_fraction.iter().zip(&result.crossing_steps).enumerate() {
        let mut row = vec![r.to_string(), stopped.last().copied().unwrap_or(0.0).to_string()];
        row.extend(crossing.iter().map(|c| opt(c.map(|n| n as f64 * result.dt))));
        w.write_record(&row)?;
    }
    finish(w)?;

    let mut w = writer(&dir.join("micro_stopped.csv"))?;
    w.write_record(["t", "mean_stopped_fraction"])?;
    for (n, f) in result.mean_stopped_fraction().iter().enumerate() {
        w.write_record([(n as f64 * result.dt).to_string(), f.to_string()])?;
    }
    finish(w)
}

pub fn write_comparison(dir: &Path, report: &ComparisonReport) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut w = writer(&dir.join("error_vs_time.csv"))?;
    w.write_record(["t", "l1", "l2"])?;
    for ((t, l1), l2) in report.times.iter().zip(&report.l1).zip(&report.l2) {
        w.write_record([t.to_string(), l1.to_string(), l2.to_string()])?;
    }
    finish(w)?;

    let mut w = writer(&dir.join("mass_balance.csv"))?;
    let mut header = vec!["t".to_string()];
    header.extend(report.cuts.iter().map(|c| format!("micro_mb_{c}")));
    header.extend(report.cuts.iter().map(|c| format!("macro_mb_{c}")));
    w.write_record(&header)?;
    for (s, t) in report.times.iter().enumerate() {
        let mut row = vec![t.to_string()];
        row.extend(report.micro_mass_balance[s].iter().map(f64::to_string));
        row.extend(report.macro_mass_balance[s].iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    finish(w)?;

    let mut w = writer(&dir.join("crossing.csv"))?;
    w.write_record(["cut", "micro_mean_time", "micro_crossed", "replicates", "macro_time"])?;
    for (c, cut) in report.cuts.iter().enumerate() {
        let (mean, crossed) = report.micro_crossing[c];
        w.write_record([
            cut.to_string(),
            opt(mean),
            crossed.to_string(),
            report.replicates.to_string(),
            opt(report.macro_crossing[c]),
        ])?;
    }
    finish(w)
}
