//! Exact symbolic engine for the four-generator operator algebra.
//!
//! Operators are polynomials in `q, p, pi_q, pi_p` with complex-rational
//! coefficients and symbolic powers of `hbar, m, k, f, omega`.  Everything
//! is kept exact: products are normal-ordered through the canonical
//! commutators, so identities close to zero are recognized as exactly zero.
//!
//! Submodules: scalars ([`coeff`]), the expression engine ([`expr`]),
//! higher-level constructions ([`build`]), the text grammar ([`text`]) and
//! numeric grid evaluation ([`eval`]).

pub mod build;
pub mod coeff;
pub mod eval;
pub mod expr;
pub mod text;

pub use build::{
    adjoint_series, apply_linear_map, classical_flow_generator, extended_generator,
    harmonic_hamiltonian, smoothed_flow_generator, smoothing_exponent, smoothing_images,
    AdjointExpansion, ExtensionMethod, GeneratorImages,
};
pub use coeff::Coeff;
pub use eval::{apply_stencil, eval_scalar, to_stencil, ParamBindings, StencilTerm};
pub use expr::{Gen, OperatorExpr, TermKey, VarCase, MAX_GENERATOR_POWER, MAX_PARAM_EXPONENT, PARAM_NAMES};
pub use text::{parse_expr, print_expr, print_expr_grouped};
