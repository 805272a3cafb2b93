//! Marginal densities of a phase-space distribution.

use crate::error::Result;
use crate::numerics::{integrate_1d, RealField};

/// Integrates out `p`, returning the density over the `q` samples.
pub fn marginal_over_p(dist: &RealField) -> Result<Vec<f64>> {
    let g = dist.grid;
    let mut out = Vec::with_capacity(g.n_q);
    for iq in 0..g.n_q {
        let column: Vec<f64> = (0..g.n_p).map(|ip| dist.values[[ip, iq]]).collect();
        out.push(integrate_1d(&column, g.dp())?);
    }
    Ok(out)
}

/// Integrates out `q`, returning the density over the `p` samples.
pub fn marginal_over_q(dist: &RealField) -> Result<Vec<f64>> {
    let g = dist.grid;
    let mut out = Vec::with_capacity(g.n_p);
    for ip in 0..g.n_p {
        let row: Vec<f64> = (0..g.n_q).map(|iq| dist.values[[ip, iq]]).collect();
        out.push(integrate_1d(&row, g.dq())?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::PhaseSpaceGrid;
    use crate::states::{OscillatorParams, WavefunctionSpec};
    use crate::transforms::wigner::wigner_transform;

    #[test]
    fn wigner_marginals_are_the_densities() {
        let params = OscillatorParams::natural();
        let spec = WavefunctionSpec::eigenstate(2, params).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 200).unwrap();
        let w = wigner_transform(&spec, grid, 0.0).unwrap();
        let over_p = marginal_over_p(&w).unwrap();
        let over_q = marginal_over_q(&w).unwrap();
        for iq in (0..grid.n_q).step_by(31) {
            let expect = spec.psi(grid.q(iq), 0.0).norm_sqr();
            assert!((over_p[iq] - expect).abs() < 1e-10);
        }
        for ip in (0..grid.n_p).step_by(31) {
            let expect = spec.phi(grid.p(ip), 0.0).norm_sqr();
            assert!((over_q[ip] - expect).abs() < 1e-10);
        }
    }
}
