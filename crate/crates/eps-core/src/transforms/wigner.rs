//! Wigner distribution of a pure state on a phase-space grid.
//!
//! For each grid column `Q` the correlation product
//! `conj(psi(Q + y)) psi(Q - y)` is sampled on an auxiliary `y` grid whose
//! spacing is chosen so that one inverse FFT lands exactly on the momentum
//! rows of the target grid.  The wavefunction is evaluated analytically at
//! the shifted points, so no interpolation error enters; the quadrature is a
//! plain Riemann sum, which converges superexponentially because the
//! integrand decays like a Gaussian well inside the `y` window.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::fft::{fft_inverse, next_pow2};
use crate::numerics::{PhaseSpaceGrid, RealField};
use crate::states::WavefunctionSpec;

/// Fraction of the real part that the residual imaginary part may reach
/// before the transform is considered numerically inconsistent.
pub const IMAG_RESIDUE_TOLERANCE: f64 = 1e-8;

/// Computes the Wigner distribution `(1/pi hbar) int conj(psi(Q+y)) psi(Q-y)
/// e^{2ipy/hbar} dy` of the state at time `t`, sampled on `grid`.
///
/// The result of the integral is real for any pure state; the discretization
/// keeps the imaginary part as a consistency probe and fails with
/// [`Error::NumericalConsistency`] if it is not negligible.
pub fn wigner_transform(spec: &WavefunctionSpec, grid: PhaseSpaceGrid, t: f64) -> Result<RealField> {
    grid.validate()?;
    spec.params.validate()?;
    let hbar = spec.params.hbar;
    let n_y = next_pow2((2 * grid.n_q).max(grid.n_p).max(512));
    let dp = grid.dp();
    // dy ties the y sampling to the momentum rows: 2 dp dy / hbar = 2 pi / n_y
    let dy = std::f64::consts::PI * hbar / (n_y as f64 * dp);
    let half_window = 0.5 * n_y as f64 * dy;

    let mut values = ndarray::Array2::<f64>::zeros((grid.n_p, grid.n_q));
    let mut max_abs = 0.0f64;
    let mut max_imag = 0.0f64;
    let scale = dy / (std::f64::consts::PI * hbar);
    let mut buf: Vec<C64> = vec![C64::new(0.0, 0.0); n_y];
    for iq in 0..grid.n_q {
        let q_center = grid.q(iq);
        for (j, slot) in buf.iter_mut().enumerate() {
            let y = -half_window + j as f64 * dy;
            let corr = spec.psi(q_center + y, t).conj() * spec.psi(q_center - y, t);
            // carries the p_min part of e^{2ipy/hbar}; the k part is the DFT
            let phase = C64::from_polar(1.0, 2.0 * grid.p_min * (j as f64) * dy / hbar);
            *slot = corr * phase;
        }
        fft_inverse(&mut buf);
        for ip in 0..grid.n_p {
            let p = grid.p(ip);
            let edge = C64::from_polar(1.0, -2.0 * p * half_window / hbar);
            let w = scale * edge * buf[ip];
            values[[ip, iq]] = w.re;
            max_abs = max_abs.max(w.re.abs());
            max_imag = max_imag.max(w.im.abs());
        }
    }
    if max_imag > IMAG_RESIDUE_TOLERANCE * max_abs.max(f64::MIN_POSITIVE) {
        return Err(Error::NumericalConsistency(format!(
            "imaginary residue {max_imag:.3e} exceeds {IMAG_RESIDUE_TOLERANCE:.1e} of peak {max_abs:.3e}"
        )));
    }
    RealField::new(grid, values, "wigner")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate_1d;
    use crate::states::OscillatorParams;

    #[test]
    fn ground_state_is_gaussian() {
        let params = OscillatorParams::natural();
        let spec = WavefunctionSpec::eigenstate(0, params).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 128).unwrap();
        let w = wigner_transform(&spec, grid, 0.0).unwrap();
        let mut worst = 0.0f64;
        for ip in 0..grid.n_p {
            for iq in 0..grid.n_q {
                let (q, p) = (grid.q(iq), grid.p(ip));
                let expect = (-(q * q + p * p)).exp() / std::f64::consts::PI;
                worst = worst.max((w.values[[ip, iq]] - expect).abs());
            }
        }
        assert!(worst < 1e-12, "deviation {worst}");
    }

    #[test]
    fn first_excited_reaches_minus_one_over_pi() {
        // odd point count puts the origin on the grid, where the value is
        // exactly -1/pi
        let params = OscillatorParams::natural();
        let spec = WavefunctionSpec::eigenstate(1, params).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 257).unwrap();
        let w = wigner_transform(&spec, grid, 0.0).unwrap();
        let min = w.min();
        let expect = -1.0 / std::f64::consts::PI;
        assert!((min - expect).abs() < 1e-10, "min {min} vs {expect}");
    }

    #[test]
    fn marginals_match_wavefunction_densities() {
        let params = OscillatorParams { m: 1.3, omega: 0.8, hbar: 1.0 };
        let spec = WavefunctionSpec::coherent(0.7, -0.4, params).unwrap();
        let grid = PhaseSpaceGrid::square(9.0, 192).unwrap();
        let w = wigner_transform(&spec, grid, 0.3).unwrap();
        for iq in (0..grid.n_q).step_by(17) {
            let column: Vec<f64> = (0..grid.n_p).map(|ip| w.values[[ip, iq]]).collect();
            let got = integrate_1d(&column, grid.dp()).unwrap();
            let expect = spec.psi(grid.q(iq), 0.3).norm_sqr();
            assert!((got - expect).abs() < 1e-10, "column {iq}: {got} vs {expect}");
        }
        for ip in (0..grid.n_p).step_by(23) {
            let row: Vec<f64> = (0..grid.n_q).map(|iq| w.values[[ip, iq]]).collect();
            let got = integrate_1d(&row, grid.dq()).unwrap();
            let expect = spec.phi(grid.p(ip), 0.3).norm_sqr();
            assert!((got - expect).abs() < 1e-10, "row {ip}: {got} vs {expect}");
        }
    }

    #[test]
    fn total_mass_is_one() {
        let params = OscillatorParams::natural();
        let spec = WavefunctionSpec::eigenstate(2, params).unwrap();
        let grid = PhaseSpaceGrid::square(8.0, 160).unwrap();
        let w = wigner_transform(&spec, grid, 0.0).unwrap();
        let mass = crate::numerics::integrate_2d(&w).unwrap();
        assert!((mass - 1.0).abs() < 1e-10, "mass {mass}");
    }
}
