use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(
        "could not place {placed} of {requested} spins with min distance {min_distance} nm \
         in a {box_side:.3} nm box after {attempts} attempts"
    )]
    OverConstrained {
        placed: usize,
        requested: usize,
        min_distance: f64,
        box_side: f64,
        attempts: usize,
    },

    #[error("{n_spins} spins exceeds the supported limit of {max} for {what}")]
    DimensionLimit {
        n_spins: usize,
        max: usize,
        what: &'static str,
    },

    #[error("hamiltonian variant {variant} requires {requirement}")]
    VariantMismatch {
        variant: &'static str,
        requirement: &'static str,
    },

    #[error("krylov propagation failed to converge: {0}")]
    Convergence(String),

    #[error("time series sampling grids differ: {0}")]
    GridMismatch(String),

    #[error("analysis window [{lo:.6}, {hi:.6}] exceeds frequency grid [{grid_lo:.6}, {grid_hi:.6}]")]
    WindowOutOfRange {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("unknown preset `{0}` (expected one of fig1-short, fig1-long, fig2, fig3, fig4)")]
    UnknownPreset(String),

    #[error("failed to parse {path}: {message}")]
    ConfigParse { path: PathBuf, message: String },

    #[error("plot rendering failed: {0}")]
    Plot(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
