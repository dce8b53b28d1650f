//! Gaussian entropy, Li-Yau conformal volume and virtual-time functionals on
//! parametrized submanifolds of Euclidean space, with a grid laboratory for
//! heat flow and a curve-shortening flow driver.
//!
//! The crate is organized bottom-up:
//!
//! - [`manifold`]: charts, the geometry catalog, quadrature sampling, mean curvature.
//! - [`weights`]: closed-form weights, kernels and constants.
//! - [`functionals`]: weighted integrals and their suprema over centers and scales.
//! - [`heatlab`]: heat-kernel convolution and virtual-time estimation on grids.
//! - [`flow`]: curve-shortening flow with entropy checkpoints.
//! - [`acceptance`]: the end-to-end verification suite used by tests and the CLI.

pub mod acceptance;
pub mod error;
pub mod flow;
pub mod functionals;
pub mod heatlab;
pub mod manifold;
pub mod optimize;
pub mod quadrature;
pub mod weights;

pub use error::{Error, Result};
