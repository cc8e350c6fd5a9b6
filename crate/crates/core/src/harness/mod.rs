//! Experiment presets, configuration and CSV output.

mod config;
mod output;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

pub use config::{default_record_times, parse_config, parse_config_with, render_config};
pub use output::{write_outputs, OutputFiles};

use crate::continuum::{self, GridField};
use crate::ensemble::{self, EnsembleConfig, EnsembleStats};
use crate::error::{Error, Result};
use crate::lattice::{red_light_ic, LatticeState, ModelParams};
use crate::meso::{self, DensityField, MesoModel, MesoVariant};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Preset {
    A1Check,
    FrontTracking,
    Correlations,
    ClosureTest,
    EmpiricalComparison,
    PdeConsistency,
    Custom,
}

/// Preset-dependent defaults for keys the document leaves out.
#[derive(Clone, Debug)]
pub struct PresetDefaults {
    pub beta: f64,
    pub look_ahead: usize,
    pub lags: Vec<usize>,
    pub stochastic: bool,
    pub variants: Vec<MesoVariant>,
    pub d: f64,
    pub pde: bool,
    pub dt_sweep: Vec<f64>,
}

impl Preset {
    pub const ALL: [Preset; 7] = [
        Preset::A1Check,
        Preset::FrontTracking,
        Preset::Correlations,
        Preset::ClosureTest,
        Preset::EmpiricalComparison,
        Preset::PdeConsistency,
        Preset::Custom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::A1Check => "a1_check",
            Preset::FrontTracking => "front_tracking",
            Preset::Correlations => "correlations",
            Preset::ClosureTest => "closure_test",
            Preset::EmpiricalComparison => "empirical_comparison",
            Preset::PdeConsistency => "pde_consistency",
            Preset::Custom => "custom",
        }
    }

    pub fn defaults(self) -> PresetDefaults {
        use MesoVariant::*;
        let base = PresetDefaults {
            beta: 3.0,
            look_ahead: 1,
            lags: Vec::new(),
            stochastic: true,
            variants: Vec::new(),
            d: 0.0,
            pde: false,
            dt_sweep: Vec::new(),
        };
        match self {
            Preset::A1Check => PresetDefaults {
                look_ahead: 5,
                dt_sweep: vec![0.05, 0.1, 0.2],
                ..base
            },
            Preset::FrontTracking => PresetDefaults {
                look_ahead: 5,
                variants: vec![Old, New],
                ..base
            },
            Preset::Correlations => PresetDefaults {
                lags: vec![1, 2, 3, 4],
                ..base
            },
            Preset::ClosureTest => PresetDefaults {
                variants: vec![New],
                dt_sweep: vec![0.05, 0.1, 0.2],
                ..base
            },
            Preset::EmpiricalComparison => PresetDefaults {
                d: 2.0,
                variants: vec![New, Empirical],
                ..base
            },
            Preset::PdeConsistency => PresetDefaults {
                look_ahead: 5,
                stochastic: false,
                variants: vec![Old, New],
                pde: true,
                ..base
            },
            Preset::Custom => base,
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key: String = s
            .chars()
            .filter(|c| *c != '_' && *c != '-')
            .collect::<String>()
            .to_ascii_lowercase();
        Preset::ALL
            .into_iter()
            .find(|p| p.name().replace('_', "") == key)
            .ok_or_else(|| {
                let names: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
                format!("unknown preset {s:?}; expected one of {}", names.join(", "))
            })
    }
}

/// Default lattice size and ensemble size.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scale {
    /// `N = 700`, `n = 5000`.
    Paper,
    /// `N = 200`, `n = 500`.
    Desk,
}

impl Scale {
    pub fn name(self) -> &'static str {
        match self {
            Scale::Paper => "paper",
            Scale::Desk => "desk",
        }
    }
}

impl FromStr for Scale {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "paper" => Ok(Scale::Paper),
            "desk" => Ok(Scale::Desk),
            _ => Err(format!("expected \"paper\" or \"desk\", got {s:?}")),
        }
    }
}

/// Fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub preset: Preset,
    pub scale: Scale,
    pub params: ModelParams,
    /// First occupied cell of the red-light initial condition (1-based).
    pub ic_start: usize,
    /// Last occupied cell (1-based).
    pub ic_last: usize,
    pub ensemble: EnsembleConfig,
    /// Run the stochastic ensemble.
    pub stochastic: bool,
    pub variants: Vec<MesoVariant>,
    /// Exponent of the empirical closure and of the PDE nonlocal term.
    pub d: f64,
    pub dt_ode: f64,
    pub pde: bool,
    /// Extra ensembles at these values of `c0 * dt`.
    pub dt_sweep: Vec<f64>,
    pub output_dir: PathBuf,
}

impl ExperimentSpec {
    pub fn initial_state(&self) -> Result<LatticeState> {
        red_light_ic(self.params.n_cells(), self.ic_start, self.ic_last)
    }

    /// PDE grid matching the lattice: `dx = h`, `D = N h`, `L = max(M, 1) h`.
    pub fn initial_grid(&self) -> Result<GridField> {
        let p = &self.params;
        let ic = self.initial_state()?;
        let rho = ic.cells().iter().map(|&c| c as f64).collect();
        GridField::new(rho, p.n_cells() as f64 * p.h(), p.look_ahead().max(1) as f64 * p.h())
    }
}

/// One point of a time-step sensitivity sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub c0_dt: f64,
    pub stats: EnsembleStats,
}

/// Everything an experiment computed.
#[derive(Clone, Debug, Default)]
pub struct ExperimentData {
    pub stochastic: Option<EnsembleStats>,
    pub meso: Vec<(MesoVariant, Vec<DensityField>)>,
    pub pde: Option<Vec<GridField>>,
    pub sweep: Vec<SweepPoint>,
}

/// Run every requested model without touching the file system.
pub fn compute(spec: &ExperimentSpec) -> Result<ExperimentData> {
    let ic = spec.initial_state()?;
    let times = &spec.ensemble.record_times;
    let mut data = ExperimentData::default();
    if spec.stochastic {
        data.stochastic = Some(ensemble::run_ensemble(&spec.params, &ic, &spec.ensemble)?);
    }
    let start = DensityField::from_state(&ic);
    for &variant in &spec.variants {
        let model = MesoModel::new(variant, spec.params, spec.d)?;
        data.meso
            .push((variant, meso::integrate(&start, &model, times, spec.dt_ode)?));
    }
    if spec.pde {
        let p = &spec.params;
        let grid = spec.initial_grid()?;
        data.pde = Some(continuum::evolve(&grid, p.v0(), p.beta(), spec.d, times, spec.dt_ode)?);
    }
    for &c0_dt in &spec.dt_sweep {
        let params = spec.params.with_dt(c0_dt / spec.params.c0())?;
        let stats = ensemble::run_ensemble(&params, &ic, &spec.ensemble)?;
        data.sweep.push(SweepPoint { c0_dt, stats });
    }
    Ok(data)
}

/// Compute an experiment and write its CSV files and manifest.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(ExperimentData, OutputFiles)> {
    let data = compute(spec)?;
    let files = write_outputs(spec, &data)?;
    Ok((data, files))
}

/// Parse a config file and run it.
pub fn run_config_file(path: &Path) -> Result<(ExperimentSpec, ExperimentData, OutputFiles)> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let spec = parse_config(&text)?;
    let (data, files) = run_experiment(&spec)?;
    Ok((spec, data, files))
}

/// Rightmost downward crossing of `threshold`, as a 1-based cell coordinate.
///
/// A step from cell `j` (value >= threshold) to cell `j + 1` (below) is located
/// by linear interpolation between the two, so a sharp 1 -> 0 step at
/// threshold 0.5 sits at `j + 0.5`.
pub fn front_position(profile: &[f64], threshold: f64) -> Option<f64> {
    (0..profile.len().saturating_sub(1)).rev().find_map(|j| {
        let (a, b) = (profile[j], profile[j + 1]);
        (a >= threshold && b < threshold).then(|| (j + 1) as f64 + (a - threshold) / (a - b))
    })
}

/// Leftmost upward crossing of `threshold`, as a 1-based cell coordinate.
pub fn trailing_front_position(profile: &[f64], threshold: f64) -> Option<f64> {
    (0..profile.len().saturating_sub(1)).find_map(|j| {
        let (a, b) = (profile[j], profile[j + 1]);
        (a < threshold && b >= threshold).then(|| (j + 1) as f64 + (threshold - a) / (b - a))
    })
}

/// `sum_k |a_k - b_k|`.
pub fn l1_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum())
}
