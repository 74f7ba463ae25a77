//! Two-stage purity decay in local quantum circuits.
//!
//! Averaging a random circuit over its gates turns the purity of a
//! subsystem into the partition function of a classical "effective magnet".
//! Its slow modes — a domain wall and a magnon — set the decay rates before
//! and after the entanglement saturates. This crate provides
//!
//! - [`effective_magnet`]: pairing states, transfer weights, dual basis;
//! - [`propagator`]: gate schedules, coordinate-vector evolution, rate fits;
//! - [`resummation`]: irreducible-diagram (W/Z) resummation of a series;
//! - [`theory`]: closed-form membrane and channel predictions;
//! - [`exact_circuit`]: exact small-system checks on fixed Floquet gates.
//!
//! ```
//! use twostage::{propagator::*, GateFamily};
//!
//! let schedule = build_schedule(Geometry::Brickwall, Boundary::Open, 14)?;
//! let family = GateFamily::haar(2)?;
//! let series = partition_free_boundary(7, &schedule, &family, 12, EvolutionPath::Auto)?;
//! let fit = fit_rate(&series.times, &series.delta_z, FitWindow::new(2.0, 5.0))?;
//! assert!((fit.rate - (5.0f64 / 4.0).log2()).abs() < 1e-9);
//! # Ok::<(), twostage::Error>(())
//! ```

pub mod effective_magnet;
pub mod exact_circuit;
pub mod propagator;
pub mod resummation;
pub mod theory;

pub use effective_magnet::{GateFamily, Spin, SpinConfig};

/// Version string embedded in emitted artifacts.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Time-unit convention shared by every rate this crate reports.
pub const TIME_UNIT: &str =
    "rates in bits per time unit; brickwall: 1 unit per layer; staircase: 2 units per sweep";

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Invalid input: sizes, parameters, unsupported combinations.
    #[error("invalid configuration: {0}")]
    Config(String),
    /// A computation ran but could not produce a trustworthy number.
    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn numerical(msg: impl Into<String>) -> Self {
        Error::Numerical(msg.into())
    }
}

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../README.md")]
    mod readme {}
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/effective-magnet.md")]
    mod effective_magnet {}
    #[doc = include_str!("../../../book/src/propagation.md")]
    mod propagation {}
    #[doc = include_str!("../../../book/src/resummation.md")]
    mod resummation {}
    #[doc = include_str!("../../../book/src/predictions.md")]
    mod predictions {}
    #[doc = include_str!("../../../book/src/exact-circuits.md")]
    mod exact_circuits {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
