//! Two parametrically driven oscillators sharing an Ohmic heat bath.
//!
//! The crate simulates the exact Gaussian dynamics of the two system modes
//! together with an explicitly discretized reservoir, measures entanglement
//! through the logarithmic negativity, and optimizes piecewise-constant local
//! drive pulses to maximize the negativity at a final time.
//!
//! Module map:
//! - [`gaussian`]: covariance matrices, symplectic spectra, negativity, Wigner grids
//! - [`bath`]: spectral density and its discretization into harmonic modes
//! - [`pulse`]: piecewise-constant control pulses
//! - [`propagation`]: generator assembly and exact covariance propagation
//! - [`control`]: objective, adjoint gradient and multi-start optimizer
//! - [`analysis`]: normal modes, squeezing parameters and state classification
//! - [`io`]: CSV and JSON exchange formats

pub mod analysis;
pub mod bath;
pub mod control;
pub mod error;
pub mod gaussian;
pub mod io;
pub mod propagation;
pub mod pulse;

pub use error::{Error, Result};
