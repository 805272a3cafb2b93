use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::{integrate_1d, ComplexField, PhaseSpaceGrid};
use crate::states::model::{StateKind, WavefunctionSpec};

/// Maximum norm loss tolerated when a state is sampled onto a finite window.
const COVERAGE_DEFICIT: f64 = 1e-6;

/// How many ground-state widths a coherent center must keep from each edge.
const CENTER_MARGIN_SIGMAS: f64 = 4.0;

/// A factorized phase-space wavefunction sampled on a grid:
/// `chi(p, q) = psi(q) * conj(phi(p)) * e^{-i p q / hbar}`.
///
/// `psi`/`phi` keep the 1-D factors on the grid's axes so expectation values
/// and marginal checks can reuse them without re-evaluating the model.
#[derive(Debug, Clone)]
pub struct EPSState {
    pub spec: WavefunctionSpec,
    pub t: f64,
    pub grid: PhaseSpaceGrid,
    pub chi: ComplexField,
    pub psi: Vec<C64>,
    pub phi: Vec<C64>,
}

/// Sample a spec onto a grid at time `t`, checking that the window actually
/// contains the state.
pub fn build_eps_state(spec: &WavefunctionSpec, grid: PhaseSpaceGrid, t: f64) -> Result<EPSState> {
    grid.validate()?;
    spec.params.validate()?;
    if let StateKind::Coherent { q0, p0 } = spec.kind {
        let sigma_q = (spec.params.hbar / (2.0 * spec.params.m * spec.params.omega)).sqrt();
        let sigma_p = (spec.params.hbar * spec.params.m * spec.params.omega / 2.0).sqrt();
        let m = CENTER_MARGIN_SIGMAS;
        // the center moves on a circle through (q0, p0); bound its excursion
        let mw = spec.params.m * spec.params.omega;
        let q_reach = (q0 * q0 + (p0 / mw) * (p0 / mw)).sqrt();
        let p_reach = (p0 * p0 + (mw * q0) * (mw * q0)).sqrt();
        if q_reach + m * sigma_q > grid.q_max.min(-grid.q_min)
            || p_reach + m * sigma_p > grid.p_max.min(-grid.p_min)
        {
            return Err(Error::DomainCoverage(format!(
                "coherent orbit (reach q={q_reach:.3}, p={p_reach:.3}) runs within {m} widths of the grid edge"
            )));
        }
    }
    let psi: Vec<C64> = (0..grid.n_q).map(|i| spec.psi(grid.q(i), t)).collect();
    let phi: Vec<C64> = (0..grid.n_p).map(|i| spec.phi(grid.p(i), t)).collect();
    let norm_q = integrate_1d(&psi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(), grid.dq())?;
    let norm_p = integrate_1d(&phi.iter().map(|z| z.norm_sqr()).collect::<Vec<_>>(), grid.dp())?;
    for (name, norm) in [("psi", norm_q), ("phi", norm_p)] {
        if (1.0 - norm).abs() > COVERAGE_DEFICIT {
            return Err(Error::DomainCoverage(format!(
                "{name} norm on the window is {norm:.9}; the grid does not cover the state"
            )));
        }
    }
    let hbar = spec.params.hbar;
    let mut chi = ComplexField::zeros(grid, "chi");
    for ip in 0..grid.n_p {
        let p = grid.p(ip);
        let phi_c = phi[ip].conj();
        for iq in 0..grid.n_q {
            let q = grid.q(iq);
            let theta = -p * q / hbar;
            chi.values[[ip, iq]] = psi[iq] * phi_c * C64::new(theta.cos(), theta.sin());
        }
    }
    Ok(EPSState { spec: spec.clone(), t, grid, chi, psi, phi })
}
