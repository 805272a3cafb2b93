use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
///
/// Variants are grouped by failure mode rather than by module so callers
/// (CLI, FFI) can map them onto stable exit/status codes.
#[derive(Debug, Error)]
pub enum Error {
    /// A precondition on arguments was violated (shape mismatch, non-finite
    /// data, out-of-range parameter, malformed text, ...).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A requested order/mode is outside what the operation supports.
    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The grid does not cover the state's support well enough to trust
    /// quadrature (norm deficit, center too close to an edge, ...).
    #[error("domain coverage: {0}")]
    DomainCoverage(String),

    /// An internal cross-check failed (e.g. an imaginary residue that should
    /// vanish did not).
    #[error("numerical consistency: {0}")]
    NumericalConsistency(String),

    /// A truncated series was cut off while its terms were still growing.
    /// `term_norms` holds the last monitored term magnitudes for diagnostics.
    #[error("series truncation at order {order}: term norms not decreasing (last: {term_norms:?})")]
    SeriesDivergence { order: usize, term_norms: Vec<f64> },

    /// A commutator series failed to terminate within the allowed depth.
    #[error("commutator series did not terminate within {max_order} orders")]
    SeriesNonTerminating { max_order: usize },

    /// Exact-arithmetic term growth exceeded the configured exponent guards.
    #[error("expression blowup: {0}")]
    ExpressionBlowup(String),

    /// Numeric evaluation requested while a symbol has no binding.
    #[error("unbound symbol `{0}` in numeric evaluation")]
    UnboundSymbol(String),

    /// A basis expansion could not reach the required mass.
    #[error("expansion: {0}")]
    Expansion(String),

    /// A normalization integral was too small or inconsistent.
    #[error("normalization: {0}")]
    Normalization(String),

    /// A time step violates the stability bound of the chosen integrator.
    #[error("stability: {0}")]
    Stability(String),

    /// Configuration file / CLI argument problems.
    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
