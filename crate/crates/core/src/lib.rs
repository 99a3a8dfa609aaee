//! Reduced Hamiltonian dynamics of a magnetized symmetric top in axially
//! symmetric magnetic and gravity fields.
//!
//! The crate is organised bottom-up:
//!
//! * [`state`] – reduced phase-space state `(x, p, ν, π)`, body parameters,
//!   Casimirs, the momentum `J₃` and the (augmented) Hamiltonian.
//! * [`fields`] – axisymmetric field models and their second-order jets.
//! * [`potential`] – the dipole-plus-gravity potential, gradients and the
//!   second-derivative blocks in the rotated in-plane basis.
//! * [`dynamics`] – equations of motion, RK4 integration with invariant
//!   monitoring and the analytic relative-equilibrium orbit.
//! * [`equilibrium`] – construction of relative equilibria.
//! * [`stability`] – constrained second variation, successive elimination of
//!   isolated squares, closed-form sufficient conditions and an eigenvalue
//!   oracle.
//! * [`scan`] – parameter sweeps. Grid cells run on rayon when the
//!   `parallel` feature (default) is enabled and sequentially otherwise.

// Guards are written as `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod fields;
pub mod linalg;
pub mod potential;
pub mod scan;
pub mod stability;
pub mod state;

pub use error::{Error, Result};

/// Cartesian 3-vector used for all state blocks.
pub type Vec3 = nalgebra::Vector3<f64>;
/// 3×3 matrix.
pub type Mat3 = nalgebra::Matrix3<f64>;
