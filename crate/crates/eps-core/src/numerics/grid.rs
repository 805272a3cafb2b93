use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Half-width of the band next to each grid edge where one-sided stencils
/// degrade; residual statistics exclude it.
pub const EDGE_EXCLUSION: usize = 3;

/// Uniform rectangular lattice over a `(q, p)` window.
///
/// Sample `i` along an axis is `min + i * step` computed directly from the
/// index, so there is no cumulative rounding when walking the axis. Endpoints
/// are included: `step = (max - min) / (n - 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseSpaceGrid {
    pub q_min: f64,
    pub q_max: f64,
    pub n_q: usize,
    pub p_min: f64,
    pub p_max: f64,
    pub n_p: usize,
}

impl PhaseSpaceGrid {
    pub fn new(
        q_min: f64,
        q_max: f64,
        n_q: usize,
        p_min: f64,
        p_max: f64,
        n_p: usize,
    ) -> Result<Self> {
        let g = PhaseSpaceGrid { q_min, q_max, n_q, p_min, p_max, n_p };
        g.validate()?;
        Ok(g)
    }

    /// Square window `[-half, half]^2` with `n` samples per axis.
    pub fn square(half: f64, n: usize) -> Result<Self> {
        Self::new(-half, half, n, -half, half, n)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, lo, hi, n) in [
            ("q", self.q_min, self.q_max, self.n_q),
            ("p", self.p_min, self.p_max, self.n_p),
        ] {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(Error::invalid(format!("{name} bounds must be finite")));
            }
            if hi <= lo {
                return Err(Error::invalid(format!(
                    "{name} axis empty or reversed: [{lo}, {hi}]"
                )));
            }
            if n < 8 {
                return Err(Error::invalid(format!(
                    "{name} axis needs at least 8 samples, got {n}"
                )));
            }
        }
        Ok(())
    }

    #[inline]
    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_q - 1) as f64
    }

    #[inline]
    pub fn dp(&self) -> f64 {
        (self.p_max - self.p_min) / (self.n_p - 1) as f64
    }

    #[inline]
    pub fn q(&self, i: usize) -> f64 {
        self.q_min + i as f64 * self.dq()
    }

    #[inline]
    pub fn p(&self, i: usize) -> f64 {
        self.p_min + i as f64 * self.dp()
    }

    pub fn q_samples(&self) -> Vec<f64> {
        (0..self.n_q).map(|i| self.q(i)).collect()
    }

    pub fn p_samples(&self) -> Vec<f64> {
        (0..self.n_p).map(|i| self.p(i)).collect()
    }

    /// True for samples at least [`EDGE_EXCLUSION`] cells away from every edge.
    pub fn is_interior(&self, ip: usize, iq: usize) -> bool {
        let m = EDGE_EXCLUSION;
        ip >= m && ip + m < self.n_p && iq >= m && iq + m < self.n_q
    }
}
