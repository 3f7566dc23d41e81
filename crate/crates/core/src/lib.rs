//! Entanglement Hamiltonians of free-fermion chains after a global quench.
//!
//! The crate computes the exact single-particle entanglement Hamiltonian of an
//! interval from its correlation matrix and evaluates the quasiparticle
//! prediction for it: ballistic kernels built from the conserved mode
//! occupations, their stationary limit, and the matching Rényi entropies.
//!
//! Module map:
//! - [`model`]: dispersions, mode occupations, `η(k)`.
//! - [`specfun`]: rows of integer-order Bessel functions.
//! - [`quad`]: light-cone momentum windows and adaptive quadrature.
//! - [`corr`]: subsystem correlation matrices (dimer quench, stationary state, ring oracle).
//! - [`peschel`]: entanglement Hamiltonian from a correlation matrix.
//! - [`qpp`]: quasiparticle kernels and predictions.
//! - [`analysis`]: exact-versus-predicted comparisons and exact Rényi entropies.

// Argument checks are written as `!(x < y)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod corr;
pub mod model;
pub mod peschel;
pub mod qpp;
pub mod quad;
pub mod specfun;

pub use num_complex::Complex64 as C64;
