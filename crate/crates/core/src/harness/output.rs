//! CSV and manifest writers. Cells are written 1-based; missing values are empty fields.

use std::fs;
use std::path::{Path, PathBuf};

use super::{render_config, ExperimentData, ExperimentSpec};
use crate::ensemble::{cell_average, EnsembleStats};
use crate::error::{Error, Result};

/// Paths written by [`write_outputs`], in write order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct OutputFiles {
    pub paths: Vec<PathBuf>,
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

struct Table {
    path: PathBuf,
    writer: csv::Writer<fs::File>,
}

impl Table {
    fn create(dir: &Path, name: &str, header: &[&str]) -> Result<Self> {
        let path = dir.join(name);
        let mut writer = csv::Writer::from_path(&path).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        writer.write_record(header).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        Ok(Self { path, writer })
    }

    fn row(&mut self, fields: &[String]) -> Result<()> {
        self.writer.write_record(fields).map_err(|source| Error::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self, files: &mut OutputFiles) -> Result<()> {
        self.writer.flush().map_err(|source| Error::Io {
            path: self.path.clone(),
            source,
        })?;
        files.paths.push(self.path);
        Ok(())
    }
}

pub fn write_outputs(spec: &ExperimentSpec, data: &ExperimentData) -> Result<OutputFiles> {
    let dir = &spec.output_dir;
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut files = OutputFiles::default();

    write_density(dir, spec, data, &mut files)?;
    if let Some(stats) = &data.stochastic {
        if !stats.lags.is_empty() {
            write_correlation(dir, stats, &mut files)?;
        }
        write_closure(dir, stats, spec.ensemble.smoothing_window, &mut files)?;
        write_a1(dir, stats, &mut files)?;
        write_expsigma(dir, stats, &mut files)?;
    }
    if !data.sweep.is_empty() {
        write_sensitivity(dir, spec, data, &mut files)?;
    }

    let path = dir.join("manifest.toml");
    let mut text = String::from("# Resolved experiment. Pass this file to `run` to reproduce the outputs.\n");
    if data.stochastic.as_ref().is_some_and(|s| s.generalized_closure) {
        text.push_str("# closure: generalized (closure_a1a2 uses the product factor over all M look-ahead cells)\n");
    }
    text.push_str(&render_config(spec));
    fs::write(&path, text).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    files.paths.push(path);
    Ok(files)
}

fn write_density(dir: &Path, spec: &ExperimentSpec, data: &ExperimentData, files: &mut OutputFiles) -> Result<()> {
    let mut t = Table::create(dir, "density.csv", &["time", "cell", "source", "value"])?;
    for (i, &time) in spec.ensemble.record_times.iter().enumerate() {
        let mut put = |source: &str, values: &[f64]| -> Result<()> {
            for (k, v) in values.iter().enumerate() {
                t.row(&[num(time), (k + 1).to_string(), source.to_string(), num(*v)])?;
            }
            Ok(())
        };
        if let Some(stats) = &data.stochastic {
            put("stochastic", &stats.snapshots[i].mean)?;
        }
        for (variant, fields) in &data.meso {
            put(variant.label(), fields[i].rho())?;
        }
        if let Some(pde) = &data.pde {
            put("pde", pde[i].rho_bar())?;
        }
    }
    t.finish(files)
}

fn write_correlation(dir: &Path, stats: &EnsembleStats, files: &mut OutputFiles) -> Result<()> {
    let mut t = Table::create(dir, "correlation.csv", &["time", "cell", "lag", "r"])?;
    for snap in &stats.snapshots {
        for k in 0..stats.n_cells {
            for (li, lag) in stats.lags.iter().enumerate() {
                let r = snap.correlation_at(li, k).map(num).unwrap_or_default();
                t.row(&[num(snap.time), (k + 1).to_string(), lag.to_string(), r])?;
            }
        }
    }
    t.finish(files)
}

fn write_closure(dir: &Path, stats: &EnsembleStats, window: usize, files: &mut OutputFiles) -> Result<()> {
    let mut t = Table::create(
        dir,
        "closure.csv",
        &["time", "cell", "exact", "closure_a1a2", "closure_nobeta"],
    )?;
    for snap in &stats.snapshots {
        let exact = cell_average(&snap.exact_rhs, window)?;
        let a1a2 = cell_average(&snap.closure_a1a2, window)?;
        let nobeta = cell_average(&snap.closure_nobeta, window)?;
        for k in 0..stats.n_cells {
            t.row(&[
                num(snap.time),
                (k + 1).to_string(),
                num(exact[k]),
                num(a1a2[k]),
                num(nobeta[k]),
            ])?;
        }
    }
    t.finish(files)
}

fn write_a1(dir: &Path, stats: &EnsembleStats, files: &mut OutputFiles) -> Result<()> {
    let mut t = Table::create(dir, "a1.csv", &["time", "cell", "lhs", "a1_rhs", "product_rhs"])?;
    for snap in &stats.snapshots {
        for k in 0..stats.n_cells {
            let a = snap.a1(k);
            t.row(&[
                num(snap.time),
                (k + 1).to_string(),
                num(a.lhs),
                num(a.a1_rhs),
                num(a.product_rhs),
            ])?;
        }
    }
    t.finish(files)
}

fn write_expsigma(dir: &Path, stats: &EnsembleStats, files: &mut OutputFiles) -> Result<()> {
    let mut t = Table::create(dir, "expsigma.csv", &["time", "cell", "lhs", "a1_rhs", "exact_rhs"])?;
    for snap in &stats.snapshots {
        for k in 0..stats.n_cells {
            t.row(&[
                num(snap.time),
                (k + 1).to_string(),
                num(snap.sigma_lhs[k]),
                num(snap.sigma_a1[k]),
                num(snap.sigma_exact[k]),
            ])?;
        }
    }
    t.finish(files)
}

/// Per sweep point and record time: the largest `|lhs - a1_rhs|` over cells and the
/// L1 distances of the smoothed closures from the smoothed exact right-hand side.
fn write_sensitivity(dir: &Path, spec: &ExperimentSpec, data: &ExperimentData, files: &mut OutputFiles) -> Result<()> {
    let mut t = Table::create(
        dir,
        "sensitivity.csv",
        &["c0_dt", "time", "a1_max_gap", "closure_l1_a1a2", "closure_l1_nobeta"],
    )?;
    let window = spec.ensemble.smoothing_window;
    for point in &data.sweep {
        for snap in &point.stats.snapshots {
            let gap = snap
                .a1_lhs
                .iter()
                .zip(&snap.a1_rhs)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            let exact = cell_average(&snap.exact_rhs, window)?;
            let l1 = |v: &[f64]| -> Result<f64> {
                let s = cell_average(v, window)?;
                super::l1_distance(&exact, &s)
            };
            t.row(&[
                num(point.c0_dt),
                num(snap.time),
                num(gap),
                num(l1(&snap.closure_a1a2)?),
                num(l1(&snap.closure_nobeta)?),
            ])?;
        }
    }
    t.finish(files)
}
