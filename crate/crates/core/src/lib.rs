//! Many-body spin dynamics for quasi-periodically driven dipolar ensembles.
//!
//! The crate is organised the way a run flows: [`ensemble`] draws a disorder
//! realization, [`hamiltonian`] turns it into a sparse static operator,
//! [`drive`] lays out the two incommensurate pulse trains and the measurement
//! grid, [`propagate`] evolves `|+x>` through the timeline, and [`analysis`]
//! turns time traces into spectra, crystalline fractions and phase boundaries.
//! [`experiment`] ties these into disorder-averaged sweeps driven by a
//! [`config::RunConfig`].
//!
//! Units: lengths in nm, times in µs, every energy or frequency stored as an
//! angular frequency in rad/µs (ℏ = 1). Configs take ordinary MHz and convert
//! at the boundary with [`units::mhz`].

// `!(x > 0.0)` is how validation rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod config;
pub mod drive;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod hamiltonian;
pub mod output;
pub mod plot;
pub mod propagate;
pub mod units;
pub mod validate;

pub use error::{Error, Result};
