//! Grid, quadrature, differentiation, and smoothing primitives shared by the
//! physics modules.
//!
//! Conventions used throughout:
//! * fields are sampled on a [`PhaseSpaceGrid`] with `p` as the row index and
//!   `q` as the column index;
//! * integration is trapezoidal with fixed accumulation order;
//! * differentiation defaults to 4th-order finite differences with matching
//!   one-sided edge rows, with a trigonometric (FFT) alternative for fields
//!   that decay inside the window;
//! * Gaussian smoothing is an FFT convolution on a zero-padded copy with a
//!   unit-discrete-mass kernel.

mod convolve;
mod deriv;
pub mod fft;
mod field;
mod grid;
mod quadrature;

pub use convolve::{gaussian_convolve, gaussian_convolve_direct, Convolved};
pub use deriv::{fd_weights, partial_derivative_complex, partial_derivative_real, Axis, DerivMethod};
pub use field::{ComplexField, RealField};
pub use grid::{PhaseSpaceGrid, EDGE_EXCLUSION};
pub use quadrature::{integrate_1d, integrate_2d, integrate_2d_complex};
