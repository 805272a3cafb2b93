//! Phase-space distributions: the Wigner transform, its Gaussian smoothings,
//! and marginal densities.

pub mod distribution;
pub mod husimi;
pub mod marginals;
pub mod wigner;

pub use distribution::{
    build_wigner, smooth_distribution, DistributionKind, QuasiDistribution, SmoothingReport,
    SmoothingRoute, MASS_TOLERANCE, NONNEGATIVITY_FLOOR,
};
pub use husimi::{
    husimi_from_wigner, husimi_via_operator_series, SmoothedByOperator, SmoothingParams,
    AUTO_EXPONENT_CUTOFF, MAX_SERIES_ORDER, SERIES_REMAINDER_TOLERANCE, SPECTRAL_NOISE_FLOOR,
};
pub use marginals::{marginal_over_p, marginal_over_q};
pub use wigner::{wigner_transform, IMAG_RESIDUE_TOLERANCE};
