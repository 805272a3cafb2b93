use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::states::hermite::{hermite_functions, MAX_LEVEL};

/// Oscillator constants. The spring constant is not stored: `k()` derives it
/// as `m * omega^2` so the two can never drift apart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OscillatorParams {
    pub m: f64,
    pub omega: f64,
    pub hbar: f64,
}

impl OscillatorParams {
    pub fn natural() -> Self {
        OscillatorParams { m: 1.0, omega: 1.0, hbar: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::invalid("mass must be positive"));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid("hbar must be positive"));
        }
        if !(self.omega >= 0.0 && self.omega.is_finite()) {
            return Err(Error::invalid("omega must be non-negative"));
        }
        Ok(())
    }

    /// Spring constant `m * omega^2` (zero for the free particle).
    #[inline]
    pub fn k(&self) -> f64 {
        self.m * self.omega * self.omega
    }

    /// Smoothing width that turns the Husimi map into the minimum-uncertainty
    /// projection matched to this oscillator: `f = hbar / (m omega)`.
    pub fn matched_f(&self) -> Result<f64> {
        if self.omega == 0.0 {
            return Err(Error::invalid("matched smoothing width needs omega > 0"));
        }
        Ok(self.hbar / (self.m * self.omega))
    }

    /// Oscillator length `sqrt(hbar / (m omega))`.
    pub fn length(&self) -> f64 {
        (self.hbar / (self.m * self.omega)).sqrt()
    }

    pub fn energy(&self, n: u32) -> f64 {
        self.hbar * self.omega * (n as f64 + 0.5)
    }
}

/// Which 1-D state the phase-space construction starts from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateKind {
    Eigenstate { n: u32 },
    Coherent { q0: f64, p0: f64 },
    /// Coefficients in the eigenbasis (used internally by propagation; also
    /// accepted from configs for custom superpositions).
    Superposition { coefficients: Vec<(f64, f64)> },
}

/// A state plus the oscillator it lives in. All members evaluate `psi(q, t)`
/// and its Fourier partner `phi(p, t)` in closed form, so downstream
/// transforms can sample them anywhere without interpolation.
///
/// Fourier convention: `phi(p) = (2 pi hbar)^{-1/2} ∫ psi(q) e^{-i p q / hbar} dq`,
/// under which eigenstates map to themselves times `(-i)^n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavefunctionSpec {
    pub kind: StateKind,
    pub params: OscillatorParams,
}

impl WavefunctionSpec {
    pub fn eigenstate(n: u32, params: OscillatorParams) -> Result<Self> {
        params.validate()?;
        if params.omega == 0.0 {
            return Err(Error::invalid("eigenstates need omega > 0"));
        }
        if n > MAX_LEVEL {
            return Err(Error::Unsupported(format!(
                "level n={n} exceeds the supported maximum {MAX_LEVEL}"
            )));
        }
        Ok(WavefunctionSpec { kind: StateKind::Eigenstate { n }, params })
    }

    pub fn coherent(q0: f64, p0: f64, params: OscillatorParams) -> Result<Self> {
        params.validate()?;
        if params.omega == 0.0 {
            return Err(Error::invalid("coherent states need omega > 0"));
        }
        if !q0.is_finite() || !p0.is_finite() {
            return Err(Error::invalid("coherent center must be finite"));
        }
        Ok(WavefunctionSpec { kind: StateKind::Coherent { q0, p0 }, params })
    }

    /// Dimensionless coherent amplitude `alpha = sqrt(m w / 2 hbar) (q0 + i p0 / (m w))`.
    pub fn coherent_alpha(params: &OscillatorParams, q0: f64, p0: f64) -> C64 {
        let s = (params.m * params.omega / (2.0 * params.hbar)).sqrt();
        C64::new(s * q0, s * p0 / (params.m * params.omega))
    }

    /// Eigenbasis coefficients `c_n = e^{-|a|^2/2} a^n / sqrt(n!)`, truncated
    /// where `|c_n| < tail` (once past the Poisson peak).
    pub fn coherent_coefficients(
        params: &OscillatorParams,
        q0: f64,
        p0: f64,
        tail: f64,
    ) -> Result<Vec<C64>> {
        let alpha = Self::coherent_alpha(params, q0, p0);
        let a2 = alpha.norm_sqr();
        let mut coeffs = Vec::new();
        let mut c = C64::new((-0.5 * a2).exp(), 0.0);
        let peak = a2; // |c_n| peaks near n = |alpha|^2
        for n in 0..=MAX_LEVEL as usize {
            coeffs.push(c);
            if (n as f64) > peak && c.norm() < tail {
                break;
            }
            c = c * alpha / ((n + 1) as f64).sqrt();
        }
        let mass: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
        if 1.0 - mass > 1e-10 {
            return Err(Error::Expansion(format!(
                "coherent expansion truncated at {} terms reaches mass {mass:.12}, deficit above 1e-10",
                coeffs.len()
            )));
        }
        Ok(coeffs)
    }

    /// Position wavefunction at time `t` (closed form; eigenphases are exact).
    pub fn psi(&self, q: f64, t: f64) -> C64 {
        let pr = &self.params;
        match &self.kind {
            StateKind::Eigenstate { n } => {
                let scale = (pr.m * pr.omega / pr.hbar).sqrt();
                let amp = scale.sqrt() * crate::states::hermite::hermite_function(*n, scale * q);
                amp * phase(-pr.energy(*n) * t / pr.hbar)
            }
            StateKind::Coherent { q0, p0 } => {
                let (qc, pc) = coherent_center(pr, *q0, *p0, t);
                let norm = (pr.m * pr.omega / (std::f64::consts::PI * pr.hbar)).powf(0.25);
                let dq = q - qc;
                let re = -pr.m * pr.omega * dq * dq / (2.0 * pr.hbar);
                let im = pc * (q - 0.5 * qc) / pr.hbar - 0.5 * pr.omega * t;
                norm * C64::new(re, im).exp()
            }
            StateKind::Superposition { coefficients } => {
                let scale = (pr.m * pr.omega / pr.hbar).sqrt();
                let nmax = coefficients.len().saturating_sub(1) as u32;
                let h = hermite_functions(nmax, scale * q);
                let amp = scale.sqrt();
                let mut acc = C64::new(0.0, 0.0);
                for (n, (cr, ci)) in coefficients.iter().enumerate() {
                    let c = C64::new(*cr, *ci);
                    acc += c * phase(-pr.energy(n as u32) * t / pr.hbar) * (amp * h[n]);
                }
                acc
            }
        }
    }

    /// Momentum wavefunction at time `t` under the fixed Fourier convention.
    pub fn phi(&self, p: f64, t: f64) -> C64 {
        let pr = &self.params;
        match &self.kind {
            StateKind::Eigenstate { n } => {
                let scale = 1.0 / (pr.m * pr.omega * pr.hbar).sqrt();
                let amp =
                    scale.sqrt() * crate::states::hermite::hermite_function(*n, scale * p);
                amp * minus_i_pow(*n) * phase(-pr.energy(*n) * t / pr.hbar)
            }
            StateKind::Coherent { q0, p0 } => {
                let (qc, pc) = coherent_center(pr, *q0, *p0, t);
                let norm =
                    (std::f64::consts::PI * pr.hbar * pr.m * pr.omega).powf(-0.25);
                let dp = p - pc;
                let re = -dp * dp / (2.0 * pr.m * pr.omega * pr.hbar);
                let im = -qc * (p - 0.5 * pc) / pr.hbar - 0.5 * pr.omega * t;
                norm * C64::new(re, im).exp()
            }
            StateKind::Superposition { coefficients } => {
                let scale = 1.0 / (pr.m * pr.omega * pr.hbar).sqrt();
                let nmax = coefficients.len().saturating_sub(1) as u32;
                let h = hermite_functions(nmax, scale * p);
                let amp = scale.sqrt();
                let mut acc = C64::new(0.0, 0.0);
                for (n, (cr, ci)) in coefficients.iter().enumerate() {
                    let c = C64::new(*cr, *ci);
                    acc += c
                        * minus_i_pow(n as u32)
                        * phase(-pr.energy(n as u32) * t / pr.hbar)
                        * (amp * h[n]);
                }
                acc
            }
        }
    }
}

/// Classically transported coherent center: rigid rotation in phase space.
pub fn coherent_center(params: &OscillatorParams, q0: f64, p0: f64, t: f64) -> (f64, f64) {
    let (c, s) = ((params.omega * t).cos(), (params.omega * t).sin());
    let mw = params.m * params.omega;
    (q0 * c + p0 / mw * s, p0 * c - mw * q0 * s)
}

#[inline]
fn phase(theta: f64) -> C64 {
    C64::new(theta.cos(), theta.sin())
}

/// `(-i)^n` without trig.
#[inline]
pub fn minus_i_pow(n: u32) -> C64 {
    match n % 4 {
        0 => C64::new(1.0, 0.0),
        1 => C64::new(0.0, -1.0),
        2 => C64::new(-1.0, 0.0),
        _ => C64::new(0.0, 1.0),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn natural() -> OscillatorParams {
        OscillatorParams::natural()
    }

    #[test]
    fn ground_state_peak_value() {
        let s = WavefunctionSpec::eigenstate(0, natural()).unwrap();
        let v = s.psi(0.0, 0.0);
        assert!((v.re - 0.7511255444649425).abs() < 1e-15 && v.im == 0.0);
    }

    #[test]
    fn first_excited_momentum_carries_minus_i() {
        let s = WavefunctionSpec::eigenstate(1, natural()).unwrap();
        let p = 0.9_f64;
        let v = s.phi(p, 0.0);
        let magnitude = std::f64::consts::PI.powf(-0.25)
            * std::f64::consts::SQRT_2
            * p
            * (-0.5 * p * p).exp();
        assert!((v.im + magnitude).abs() < 1e-14, "expected -i * |psi_1|, got {v}");
        assert!(v.re.abs() < 1e-16);
    }

    #[test]
    fn level_guard() {
        assert!(WavefunctionSpec::eigenstate(MAX_LEVEL, natural()).is_ok());
        assert!(WavefunctionSpec::eigenstate(MAX_LEVEL + 1, natural()).is_err());
    }

    #[test]
    fn coherent_at_origin_is_ground_state() {
        let c = WavefunctionSpec::coherent(0.0, 0.0, natural()).unwrap();
        let e = WavefunctionSpec::eigenstate(0, natural()).unwrap();
        for q in [-2.0, -0.5, 0.0, 1.3] {
            assert!((c.psi(q, 0.0) - e.psi(q, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn coherent_expansion_matches_closed_form() {
        let params = natural();
        let (q0, p0) = (1.0, 0.5);
        let coeffs = WavefunctionSpec::coherent_coefficients(&params, q0, p0, 1e-12).unwrap();
        let sup = WavefunctionSpec {
            kind: StateKind::Superposition {
                coefficients: coeffs.iter().map(|c| (c.re, c.im)).collect(),
            },
            params,
        };
        let closed = WavefunctionSpec::coherent(q0, p0, params).unwrap();
        for t in [0.0, 0.37, 2.1] {
            for q in [-1.5, 0.0, 0.8, 2.2] {
                assert!(
                    (sup.psi(q, t) - closed.psi(q, t)).norm() < 1e-11,
                    "q={q}, t={t}"
                );
            }
            for p in [-2.0, 0.3, 1.7] {
                assert!((sup.phi(p, t) - closed.phi(p, t)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn coherent_center_rotates() {
        let (q, p) = coherent_center(&natural(), 1.0, 0.0, std::f64::consts::PI / 2.0);
        assert!(q.abs() < 1e-12 && (p + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spring_constant_is_derived() {
        let pr = OscillatorParams { m: 2.0, omega: 3.0, hbar: 1.0 };
        assert_eq!(pr.k(), 18.0);
    }
}
