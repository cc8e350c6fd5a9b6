use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid lattice state: {0}")]
    InvalidState(String),

    #[error("invalid ensemble configuration: {0}")]
    InvalidEnsemble(String),

    #[error("sample length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error(
        "density left [0, 1] at t = {time}, cell {cell}: rho = {value:e} (dt_ode = {dt_ode}; reduce the step size)"
    )]
    RangeViolation {
        time: f64,
        cell: usize,
        value: f64,
        dt_ode: f64,
    },

    #[error("CFL condition violated: dt*v0/dx = {courant} > {limit}")]
    Cfl { courant: f64, limit: f64 },

    #[error("config error at line {line}, key `{key}`: {message}")]
    Config { key: String, line: usize, message: String },

    #[error("config parse error: {0}")]
    ConfigSyntax(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}
