//! Flat `key = value` experiment documents (TOML syntax).
//!
//! Every key is optional except `preset` (which may instead be supplied by the
//! caller). Omitted keys take preset- and scale-dependent defaults.

use std::collections::BTreeSet;
use std::path::PathBuf;

use toml::{Table, Value};

use super::{ExperimentSpec, Preset, Scale};
use crate::ensemble::{EnsembleConfig, Stepper};
use crate::error::{Error, Result};
use crate::lattice::{ModelParams, DEFAULT_C0_DT, PAPER_C0, PAPER_CELL_FEET, PAPER_N};
use crate::meso::{MesoVariant, MAX_C0_DT_ODE};

const KEYS: &[&str] = &[
    "preset",
    "scale",
    "N",
    "M",
    "beta",
    "c0",
    "h",
    "dt",
    "start",
    "K",
    "n",
    "record_times",
    "seed",
    "stepper",
    "lags",
    "window",
    "stochastic",
    "variants",
    "d",
    "dt_ode",
    "pde",
    "dt_sweep",
    "output",
];

pub const PAPER_START: usize = 20;
pub const PAPER_K: usize = 60;
pub const PAPER_REALIZATIONS: usize = 5000;
pub const DESK_N: usize = 200;
pub const DESK_REALIZATIONS: usize = 500;
pub const DEFAULT_SEED: u64 = 20_130_401;

struct Doc<'a> {
    text: &'a str,
    table: Table,
}

impl<'a> Doc<'a> {
    fn line_of(&self, key: &str) -> usize {
        self.text
            .lines()
            .position(|l| {
                let l = l.trim_start();
                l.strip_prefix(key)
                    .map(|rest| rest.trim_start().starts_with('='))
                    .unwrap_or(false)
            })
            .map_or(0, |i| i + 1)
    }

    fn error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::Config {
            key: key.to_string(),
            line: self.line_of(key),
            message: message.into(),
        }
    }

    fn mismatch(&self, key: &str, expected: &str, got: &Value) -> Error {
        self.error(key, format!("expected {expected}, found {}", got.type_str()))
    }

    fn f64(&self, key: &str) -> Result<Option<f64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(v) => Err(self.mismatch(key, "a number", v)),
        }
    }

    fn int(&self, key: &str) -> Result<Option<i64>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) => Ok(Some(*i)),
            Some(v) => Err(self.mismatch(key, "an integer", v)),
        }
    }

    fn usize(&self, key: &str) -> Result<Option<usize>> {
        match self.int(key)? {
            None => Ok(None),
            Some(i) if i >= 0 => Ok(Some(i as usize)),
            Some(i) => Err(self.error(key, format!("must be >= 0, got {i}"))),
        }
    }

    fn str(&self, key: &str) -> Result<Option<&str>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s.as_str())),
            Some(v) => Err(self.mismatch(key, "a string", v)),
        }
    }

    fn bool(&self, key: &str) -> Result<Option<bool>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Boolean(b)) => Ok(Some(*b)),
            Some(v) => Err(self.mismatch(key, "a boolean", v)),
        }
    }

    fn array(&self, key: &str) -> Result<Option<&Vec<Value>>> {
        match self.table.get(key) {
            None => Ok(None),
            Some(Value::Array(a)) => Ok(Some(a)),
            Some(v) => Err(self.mismatch(key, "an array", v)),
        }
    }

    fn f64_list(&self, key: &str) -> Result<Option<Vec<f64>>> {
        let Some(items) = self.array(key)? else { return Ok(None) };
        items
            .iter()
            .map(|v| match v {
                Value::Float(f) => Ok(*f),
                Value::Integer(i) => Ok(*i as f64),
                other => Err(self.mismatch(key, "an array of numbers", other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn usize_list(&self, key: &str) -> Result<Option<Vec<usize>>> {
        let Some(items) = self.array(key)? else { return Ok(None) };
        items
            .iter()
            .map(|v| match v {
                Value::Integer(i) if *i >= 0 => Ok(*i as usize),
                other => Err(self.mismatch(key, "an array of non-negative integers", other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }

    fn str_list(&self, key: &str) -> Result<Option<Vec<&str>>> {
        let Some(items) = self.array(key)? else { return Ok(None) };
        items
            .iter()
            .map(|v| match v {
                Value::String(s) => Ok(s.as_str()),
                other => Err(self.mismatch(key, "an array of strings", other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some)
    }
}

/// Parse a document whose `preset` key is mandatory.
pub fn parse_config(text: &str) -> Result<ExperimentSpec> {
    parse_config_with(text, None)
}

/// Parse a document, using `preset` when the document does not name one.
pub fn parse_config_with(text: &str, preset: Option<Preset>) -> Result<ExperimentSpec> {
    let table: Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::ConfigSyntax(e.to_string()))?;
    let doc = Doc { text, table };

    let known: BTreeSet<&str> = KEYS.iter().copied().collect();
    for (key, value) in &doc.table {
        if !known.contains(key.as_str()) {
            return Err(doc.error(key, "unknown key"));
        }
        if matches!(value, Value::Table(_)) {
            return Err(doc.error(key, "nested tables are not supported"));
        }
    }

    let preset = match doc.str("preset")? {
        Some(name) => name.parse::<Preset>().map_err(|m| doc.error("preset", m))?,
        None => preset.ok_or_else(|| Error::Config {
            key: "preset".into(),
            line: 0,
            message: "missing required key".into(),
        })?,
    };
    let scale = match doc.str("scale")? {
        Some(s) => s.parse::<Scale>().map_err(|m| doc.error("scale", m))?,
        None => Scale::Paper,
    };
    let defaults = preset.defaults();

    if preset == Preset::Custom {
        for key in ["beta", "M"] {
            if !doc.table.contains_key(key) {
                return Err(Error::Config {
                    key: key.into(),
                    line: 0,
                    message: "missing required key for preset `custom`".into(),
                });
            }
        }
    }

    let n_cells = doc.usize("N")?.unwrap_or(match scale {
        Scale::Paper => PAPER_N,
        Scale::Desk => DESK_N,
    });
    let look_ahead = doc.usize("M")?.unwrap_or(defaults.look_ahead);
    let beta = doc.f64("beta")?.unwrap_or(defaults.beta);
    if beta < 0.0 || !beta.is_finite() {
        return Err(doc.error("beta", format!("interaction strength must be >= 0, got {beta}")));
    }
    let c0 = doc.f64("c0")?.unwrap_or(PAPER_C0);
    if !(c0.is_finite() && c0 > 0.0) {
        return Err(doc.error("c0", format!("base rate must be > 0, got {c0}")));
    }
    let h = doc.f64("h")?.unwrap_or(PAPER_CELL_FEET);
    let dt = doc.f64("dt")?.unwrap_or(DEFAULT_C0_DT / c0);
    if c0 * dt > 1.0 {
        return Err(doc.error(
            "dt",
            format!(
                "c0*dt = {} exceeds 1, so Metropolis move probabilities c0*exp(-beta*J)*dt would exceed 1",
                c0 * dt
            ),
        ));
    }
    let params = ModelParams::new(n_cells, look_ahead, beta, c0, h, dt).map_err(|e| {
        let key = match &e {
            Error::InvalidParams(m) if m.contains("look-ahead") => "M",
            Error::InvalidParams(m) if m.starts_with("h ") => "h",
            Error::InvalidParams(m) if m.starts_with("dt ") => "dt",
            _ => "N",
        };
        doc.error(key, e.to_string())
    })?;

    let ic_start = doc.usize("start")?.unwrap_or(PAPER_START);
    let ic_last = doc.usize("K")?.unwrap_or(PAPER_K);
    if ic_start == 0 || ic_start > ic_last {
        return Err(doc.error(
            "start",
            format!("need 1 <= start <= K, got start = {ic_start}, K = {ic_last}"),
        ));
    }
    if ic_last > n_cells {
        return Err(doc.error("K", format!("K = {ic_last} exceeds N = {n_cells}")));
    }

    let realizations = doc.usize("n")?.unwrap_or(match scale {
        Scale::Paper => PAPER_REALIZATIONS,
        Scale::Desk => DESK_REALIZATIONS,
    });
    let record_times = doc.f64_list("record_times")?.unwrap_or_else(default_record_times);
    let master_seed = match doc.int("seed")? {
        Some(s) if s >= 0 => s as u64,
        Some(s) => return Err(doc.error("seed", format!("must be >= 0, got {s}"))),
        None => DEFAULT_SEED,
    };
    let stepper = match doc.str("stepper")? {
        None | Some("metropolis") => Stepper::Metropolis,
        Some("kmc") => Stepper::Kmc,
        Some(other) => return Err(doc.error("stepper", format!("expected \"metropolis\" or \"kmc\", got {other:?}"))),
    };
    let correlation_lags = doc.usize_list("lags")?.unwrap_or_else(|| defaults.lags.clone());
    if preset == Preset::Correlations && correlation_lags.is_empty() {
        return Err(doc.error("lags", "preset `correlations` needs at least one lag"));
    }
    if let Some(&lag) = correlation_lags.iter().find(|&&l| l == 0 || l >= n_cells) {
        return Err(doc.error("lags", format!("lag {lag} must lie in 1..N")));
    }
    let smoothing_window = doc.usize("window")?.unwrap_or(5);
    let ensemble = EnsembleConfig {
        n: realizations,
        record_times,
        master_seed,
        stepper,
        correlation_lags,
        smoothing_window,
    };
    ensemble.validate().map_err(|e| {
        let key = match &e {
            Error::InvalidEnsemble(m) if m.contains("realizations") => "n",
            Error::InvalidEnsemble(m) if m.contains("smoothing") => "window",
            _ => "record_times",
        };
        doc.error(key, e.to_string())
    })?;

    let stochastic = doc.bool("stochastic")?.unwrap_or(defaults.stochastic);
    let variants = match doc.str_list("variants")? {
        None => defaults.variants.clone(),
        Some(names) => names
            .iter()
            .map(|s| parse_variant(s).ok_or_else(|| doc.error("variants", format!("unknown variant {s:?}"))))
            .collect::<Result<Vec<_>>>()?,
    };
    let d = doc.f64("d")?.unwrap_or(defaults.d);
    if !(d.is_finite() && d >= 0.0) {
        return Err(doc.error("d", format!("empirical exponent must be >= 0, got {d}")));
    }
    let dt_ode = doc.f64("dt_ode")?.unwrap_or(DEFAULT_C0_DT / c0);
    if dt_ode.is_nan() || dt_ode <= 0.0 || c0 * dt_ode > MAX_C0_DT_ODE {
        return Err(doc.error(
            "dt_ode",
            format!("need 0 < c0*dt_ode <= {MAX_C0_DT_ODE}, got {}", c0 * dt_ode),
        ));
    }
    let pde = doc.bool("pde")?.unwrap_or(defaults.pde);
    let dt_sweep = doc.f64_list("dt_sweep")?.unwrap_or_else(|| defaults.dt_sweep.clone());
    if let Some(bad) = dt_sweep.iter().find(|v| !(**v > 0.0 && **v <= 1.0)) {
        return Err(doc.error("dt_sweep", format!("c0*dt values must lie in (0, 1], got {bad}")));
    }
    let output_dir = PathBuf::from(
        doc.str("output")?
            .map(str::to_string)
            .unwrap_or_else(|| format!("out/{}", preset.name())),
    );

    Ok(ExperimentSpec {
        preset,
        scale,
        params,
        ic_start,
        ic_last,
        ensemble,
        stochastic,
        variants,
        d,
        dt_ode,
        pde,
        dt_sweep,
        output_dir,
    })
}

fn parse_variant(s: &str) -> Option<MesoVariant> {
    match s {
        "old" | "meso_old" => Some(MesoVariant::Old),
        "new" | "meso_new" => Some(MesoVariant::New),
        "emp" | "empirical" | "meso_emp" => Some(MesoVariant::Empirical),
        _ => None,
    }
}

fn variant_key(v: MesoVariant) -> &'static str {
    match v {
        MesoVariant::Old => "old",
        MesoVariant::New => "new",
        MesoVariant::Empirical => "empirical",
    }
}

/// `t = 0, 5, ..., 60` seconds.
pub fn default_record_times() -> Vec<f64> {
    (0..=12).map(|i| 5.0 * i as f64).collect()
}

fn float_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", items.join(", "))
}

/// Render a fully resolved spec as a document that parses back to the same spec.
pub fn render_config(spec: &ExperimentSpec) -> String {
    let p = &spec.params;
    let e = &spec.ensemble;
    let lags: Vec<String> = e.correlation_lags.iter().map(|l| l.to_string()).collect();
    let variants: Vec<String> = spec
        .variants
        .iter()
        .map(|v| format!("\"{}\"", variant_key(*v)))
        .collect();
    let stepper = match e.stepper {
        Stepper::Metropolis => "metropolis",
        Stepper::Kmc => "kmc",
    };
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        out.push_str(k);
        out.push_str(" = ");
        out.push_str(&v);
        out.push('\n');
    };
    line("preset", format!("\"{}\"", spec.preset.name()));
    line("scale", format!("\"{}\"", spec.scale.name()));
    line("N", p.n_cells().to_string());
    line("M", p.look_ahead().to_string());
    line("beta", format!("{:?}", p.beta()));
    line("c0", format!("{:?}", p.c0()));
    line("h", format!("{:?}", p.h()));
    line("dt", format!("{:?}", p.dt()));
    line("start", spec.ic_start.to_string());
    line("K", spec.ic_last.to_string());
    line("n", e.n.to_string());
    line("record_times", float_list(&e.record_times));
    line("seed", e.master_seed.to_string());
    line("stepper", format!("\"{stepper}\""));
    line("lags", format!("[{}]", lags.join(", ")));
    line("window", e.smoothing_window.to_string());
    line("stochastic", spec.stochastic.to_string());
    line("variants", format!("[{}]", variants.join(", ")));
    line("d", format!("{:?}", spec.d));
    line("dt_ode", format!("{:?}", spec.dt_ode));
    line("pde", spec.pde.to_string());
    line("dt_sweep", float_list(&spec.dt_sweep));
    line("output", format!("{:?}", spec.output_dir.display().to_string()));
    out
}
