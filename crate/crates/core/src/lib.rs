//! Optimal control of the relative motion of two trapped Rydberg ions near an
//! engineered conical intersection.
//!
//! The crate builds the coupled two-surface model from trap parameters
//! ([`params`], [`surfaces`]), propagates the spinor Schrödinger equation
//! with a spectral split-operator scheme ([`propagator`]), shapes the control
//! field with a monotonically convergent two-sweep algorithm ([`control`])
//! and reports diagnostics ([`observables`]). [`runner`] ties these together
//! behind a config file and a fixed output layout.

pub mod config;
pub mod control;
pub mod error;
pub mod fft;
pub mod grid;
pub mod io;
pub mod observables;
pub mod params;
pub mod propagator;
pub mod runner;
pub mod surfaces;
pub mod units;

pub use error::{Error, Result};
