//! Oscillator states and their factorized phase-space form.
//!
//! A 1-D state is described by a [`WavefunctionSpec`] that can evaluate both
//! `psi(q, t)` and its Fourier partner `phi(p, t)` anywhere in closed form.
//! [`build_eps_state`] samples the combined phase-space wavefunction
//! `chi = psi * conj(phi) * e^{-ipq/hbar}` on a grid, and
//! [`polar_decompose`] splits it into amplitude and phase-gradient fields.

mod eps_state;
mod hermite;
mod model;
mod polar;

pub use eps_state::{build_eps_state, EPSState};
pub use hermite::{hermite_function, hermite_functions, MAX_LEVEL};
pub use model::{
    coherent_center, minus_i_pow, OscillatorParams, StateKind, WavefunctionSpec,
};
pub use polar::{
    chi_derivatives, polar_decompose, ChiDerivs, PolarData, DEFAULT_POLAR_THRESHOLD,
};
