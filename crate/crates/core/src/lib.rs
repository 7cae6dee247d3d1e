//! Numerical laboratory for the 3D cubic nonlinear Schrödinger equation with
//! a short-range potential, `i u_t + Δu - V u ± |u|^2 u = 0`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod forms;
pub mod grid;
pub mod ground_state;
pub mod potentials;
pub mod propagator;
pub mod quadrature;
pub mod thresholds;
pub mod virial;

pub use error::{Error, Result};
pub use grid::{Field, Grid, RealField, SpectralField};
