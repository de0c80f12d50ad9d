//! Discrete Toda and Lotka-Volterra lattices as eigenvalue algorithms.
//!
//! The exact side builds moment sequences `f_s^{(t)}` from spectral data,
//! their Hankel determinants, and the closed-form lattice variables, and
//! checks the identities that tie them together. The floating-point side
//! runs the qd, shifted qd and dLV sweeps as eigenvalue and singular value
//! solvers.

pub mod cli;
pub mod error;
pub mod hankel;
pub mod identities;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod matrix;
pub mod scalar;
pub mod solutions;
pub mod spectral;

pub use error::{Error, Result};
pub use scalar::Rational;
