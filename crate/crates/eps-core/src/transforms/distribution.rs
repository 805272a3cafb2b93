//! Tagged phase-space distributions with provenance and invariant guards.
//!
//! A [`QuasiDistribution`] couples a sampled field with the state model and
//! time it came from, so downstream consumers (residual checks, file output)
//! can re-derive or document it.  Construction enforces unit mass, and the
//! smoothed kinds enforce non-negativity; the matched smoothing width is
//! flagged as its own kind.

use serde::{Deserialize, Serialize};

use super::husimi::{
    husimi_from_wigner, husimi_via_operator_series, SmoothedByOperator, SmoothingParams,
};
use super::wigner::wigner_transform;
use crate::error::{Error, Result};
use crate::numerics::{integrate_2d, PhaseSpaceGrid, RealField};
use crate::states::WavefunctionSpec;

/// Tolerated deviation of the total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// Smoothed distributions may dip below zero by at most this fraction of
/// their peak before the build is rejected as inconsistent.
pub const NONNEGATIVITY_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionKind {
    Wigner,
    Husimi { f: f64 },
    /// Husimi at the width matched to the oscillator, `f = hbar/(m omega)`:
    /// the overlap-with-coherent-states distribution.
    QFunction { f: f64 },
}

impl DistributionKind {
    pub fn smoothing_width(&self) -> Option<f64> {
        match self {
            DistributionKind::Wigner => None,
            DistributionKind::Husimi { f } | DistributionKind::QFunction { f } => Some(*f),
        }
    }
}

#[derive(Debug, Clone)]
pub struct QuasiDistribution {
    pub kind: DistributionKind,
    pub field: RealField,
    pub source: WavefunctionSpec,
    pub t: f64,
}

/// How smoothing is carried out; routes must agree and both are exposed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SmoothingRoute {
    Convolution,
    /// Truncated operator exponential; `None` picks the order automatically.
    OperatorSeries { order: Option<usize> },
}

/// Diagnostics attached to a smoothing run.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SmoothingReport {
    /// Input did not decay at the window edge (convolution route).
    pub edge_warning: bool,
    /// Truncation order actually used (series route).
    pub effective_order: Option<usize>,
    /// Sup-norm disagreement against the convolution route (series route).
    pub discrepancy_vs_convolution: Option<f64>,
    /// Fraction of spectral modes kept by the series filters (series route).
    pub kept_mode_fraction: Option<f64>,
}

fn check_mass(field: &RealField, what: &str) -> Result<()> {
    let mass = integrate_2d(field)?;
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Normalization(format!(
            "{what} mass is {mass:.12}, deviating from 1 by more than {MASS_TOLERANCE:.0e}"
        )));
    }
    Ok(())
}

/// Builds the Wigner distribution of a state at time `t` and checks its mass.
pub fn build_wigner(spec: &WavefunctionSpec, grid: PhaseSpaceGrid, t: f64) -> Result<QuasiDistribution> {
    let field = wigner_transform(spec, grid, t)?;
    check_mass(&field, "wigner distribution")?;
    Ok(QuasiDistribution { kind: DistributionKind::Wigner, field, source: spec.clone(), t })
}

/// Smooths a Wigner distribution into a Husimi-type one.
///
/// The output kind is `QFunction` when the width matches the oscillator of
/// the source state, `Husimi` otherwise.  Mass and non-negativity are
/// enforced on the result.
pub fn smooth_distribution(
    wigner: &QuasiDistribution,
    smoothing: SmoothingParams,
    route: SmoothingRoute,
) -> Result<(QuasiDistribution, SmoothingReport)> {
    if wigner.kind != DistributionKind::Wigner {
        return Err(Error::invalid(format!(
            "smoothing expects a wigner-kind input, got {:?}",
            wigner.kind
        )));
    }
    let params = &wigner.source.params;
    let mut report = SmoothingReport::default();
    let field = match route {
        SmoothingRoute::Convolution => {
            let out = husimi_from_wigner(&wigner.field, smoothing, params)?;
            report.edge_warning = out.edge_warning;
            out.field
        }
        SmoothingRoute::OperatorSeries { order } => {
            let SmoothedByOperator {
                field,
                effective_order,
                discrepancy_vs_convolution,
                kept_mode_fraction,
                ..
            } = husimi_via_operator_series(&wigner.field, smoothing, params, order)?;
            report.effective_order = Some(effective_order);
            report.discrepancy_vs_convolution = Some(discrepancy_vs_convolution);
            report.kept_mode_fraction = Some(kept_mode_fraction);
            field
        }
    };
    // identity pass-through (explicit order zero) is exempt from the
    // smoothed-field guarantees; everything else must be non-negative
    if route != (SmoothingRoute::OperatorSeries { order: Some(0) }) {
        check_mass(&field, "smoothed distribution")?;
        let floor = -NONNEGATIVITY_FLOOR * field.max_abs();
        if field.min() < floor {
            return Err(Error::NumericalConsistency(format!(
                "smoothed distribution dips to {:.3e}, below the floor {floor:.3e}",
                field.min()
            )));
        }
    }
    let kind = if smoothing.matches_ground_state(params) {
        DistributionKind::QFunction { f: smoothing.f }
    } else {
        DistributionKind::Husimi { f: smoothing.f }
    };
    Ok((QuasiDistribution { kind, field, source: wigner.source.clone(), t: wigner.t }, report))
}
