//! Phase-space formulation of quantum mechanics on an extended configuration
//! space: both `p` and `q` are treated as independent coordinates carrying
//! conjugate derivative operators.
//!
//! The crate builds factorized phase-space wavefunctions from 1-D states,
//! maps them to Wigner and Husimi distributions, manipulates the generator
//! algebra `{q, p, pi_q, pi_p}` exactly, and verifies the dynamical and
//! Hamilton-Jacobi identities numerically on a grid.

pub mod algebra;
pub mod error;
pub mod cli;
pub mod evolution;
pub mod hamilton_jacobi;
pub mod io;
pub mod numerics;
pub mod states;
pub mod transforms;

pub use error::{Error, Result};
