//! Simulation and analysis of the discrete nonlinear Schrödinger lattice in
//! its conservative and damped-driven forms.
//!
//! * [`lattice`]: states, parameters, difference operators, norms, functionals.
//! * [`dynamics`]: implicit-midpoint and RK4 time stepping, trajectories,
//!   decay and absorbing-ball audits.
//! * [`stationary`]: standing waves, the contraction map below the critical
//!   energy and the mountain-pass geometry.
//! * [`attractor`]: tail estimates, truncation convergence, semidistance and
//!   weighted-space diagnostics.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod attractor;
pub mod dynamics;
pub mod error;
pub mod lattice;
pub mod random;
pub mod stationary;
pub(crate) mod tridiag;

pub use error::{DnlsError, Result};
pub use lattice::{LatticeState, ModelParams};
