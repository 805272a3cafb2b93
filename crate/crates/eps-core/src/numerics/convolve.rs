use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::fft::{fft_forward, fft_inverse, next_pow2};
use crate::numerics::field::RealField;

/// Output of [`gaussian_convolve`]: the smoothed field plus a flag raised
/// when the input had not decayed at the window edge (the implicit
/// zero-extension then bends the result near the boundary).
#[derive(Debug, Clone)]
pub struct Convolved {
    pub field: RealField,
    pub edge_warning: bool,
}

const EDGE_DECAY: f64 = 1e-12;

fn edge_has_mass(field: &RealField) -> bool {
    let (np, nq) = field.values.dim();
    let cutoff = EDGE_DECAY * field.max_abs();
    let mut worst: f64 = 0.0;
    for iq in 0..nq {
        worst = worst.max(field.values[[0, iq]].abs());
        worst = worst.max(field.values[[np - 1, iq]].abs());
    }
    for ip in 0..np {
        worst = worst.max(field.values[[ip, 0]].abs());
        worst = worst.max(field.values[[ip, nq - 1]].abs());
    }
    worst > cutoff
}

/// Sampled Gaussian kernel of width `sigma` on a circular buffer of `n_pad`
/// cells of spacing `h`, centered on cell 0, normalized to unit discrete sum
/// so that convolving a constant reproduces it exactly.
fn kernel_fft(n_pad: usize, h: f64, sigma: f64) -> Vec<C64> {
    let mut k = vec![C64::new(0.0, 0.0); n_pad];
    let mut sum = 0.0;
    for (i, ki) in k.iter_mut().enumerate() {
        let d = i.min(n_pad - i) as f64 * h;
        let v = (-d * d / (2.0 * sigma * sigma)).exp();
        *ki = C64::new(v, 0.0);
        sum += v;
    }
    for ki in &mut k {
        *ki /= sum;
    }
    fft_forward(&mut k);
    k
}

/// Convolve one axis of a padded scratch matrix with a unit-mass Gaussian.
fn convolve_axis(data: &mut Array2<C64>, rows: bool, h: f64, sigma: f64) {
    let (nr, nc) = data.dim();
    let n_pad = if rows { nc } else { nr };
    let lanes = if rows { nr } else { nc };
    let khat = kernel_fft(n_pad, h, sigma);
    let mut buf = vec![C64::new(0.0, 0.0); n_pad];
    for lane in 0..lanes {
        for i in 0..n_pad {
            buf[i] = if rows { data[[lane, i]] } else { data[[i, lane]] };
        }
        fft_forward(&mut buf);
        for (b, k) in buf.iter_mut().zip(&khat) {
            *b *= *k;
        }
        fft_inverse(&mut buf);
        let scale = 1.0 / n_pad as f64;
        for i in 0..n_pad {
            let v = buf[i] * scale;
            if rows {
                data[[lane, i]] = v;
            } else {
                data[[i, lane]] = v;
            }
        }
    }
}

/// Separable Gaussian smoothing of a phase-space field.
///
/// Each axis is zero-padded to at least twice its length (next power of two)
/// so the circular FFT convolution equals the linear one for fields that
/// decay inside the window; the kernel is normalized to unit discrete mass.
pub fn gaussian_convolve(field: &RealField, sigma_q: f64, sigma_p: f64) -> Result<Convolved> {
    if !(sigma_q > 0.0 && sigma_q.is_finite() && sigma_p > 0.0 && sigma_p.is_finite()) {
        return Err(Error::invalid(format!(
            "kernel widths must be positive and finite, got sigma_q={sigma_q}, sigma_p={sigma_p}"
        )));
    }
    let g = field.grid;
    let edge_warning = edge_has_mass(field);
    let pad_q = next_pow2(2 * g.n_q);
    let pad_p = next_pow2(2 * g.n_p);
    let mut scratch = Array2::zeros((pad_p, pad_q));
    for ip in 0..g.n_p {
        for iq in 0..g.n_q {
            scratch[[ip, iq]] = C64::new(field.values[[ip, iq]], 0.0);
        }
    }
    convolve_axis(&mut scratch, true, g.dq(), sigma_q);
    convolve_axis(&mut scratch, false, g.dp(), sigma_p);
    let mut out = Array2::zeros((g.n_p, g.n_q));
    for ip in 0..g.n_p {
        for iq in 0..g.n_q {
            out[[ip, iq]] = scratch[[ip, iq]].re;
        }
    }
    Ok(Convolved {
        field: RealField { grid: g, values: out, label: format!("smooth({})", field.label) },
        edge_warning,
    })
}

/// Brute-force reference: direct double sum with the same discretely
/// normalized kernel and zero extension. O(N^2) per output sample; only for
/// small grids in tests.
pub fn gaussian_convolve_direct(field: &RealField, sigma_q: f64, sigma_p: f64) -> RealField {
    let g = field.grid;
    let (dq, dp) = (g.dq(), g.dp());
    let kernel_1d = |n: usize, h: f64, sigma: f64| -> Vec<f64> {
        // same support as the padded FFT kernel: wrapped distance on 2n-pow2
        let n_pad = next_pow2(2 * n);
        let mut k: Vec<f64> = (0..n_pad)
            .map(|i| {
                let d = i.min(n_pad - i) as f64 * h;
                (-d * d / (2.0 * sigma * sigma)).exp()
            })
            .collect();
        let sum: f64 = k.iter().sum();
        for v in &mut k {
            *v /= sum;
        }
        k
    };
    let kq = kernel_1d(g.n_q, dq, sigma_q);
    let kp = kernel_1d(g.n_p, dp, sigma_p);
    let wrap = |d: i64, n_pad: usize| -> usize {
        d.rem_euclid(n_pad as i64) as usize
    };
    let pad_q = next_pow2(2 * g.n_q);
    let pad_p = next_pow2(2 * g.n_p);
    let mut out = Array2::zeros((g.n_p, g.n_q));
    for ip in 0..g.n_p {
        for iq in 0..g.n_q {
            let mut acc = 0.0;
            for jp in 0..g.n_p {
                let wp = kp[wrap(ip as i64 - jp as i64, pad_p)];
                for jq in 0..g.n_q {
                    let wq = kq[wrap(iq as i64 - jq as i64, pad_q)];
                    acc += wp * wq * field.values[[jp, jq]];
                }
            }
            out[[ip, iq]] = acc;
        }
    }
    RealField { grid: g, values: out, label: format!("smooth_direct({})", field.label) }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::grid::PhaseSpaceGrid;
    use crate::numerics::quadrature::integrate_2d;

    #[test]
    fn constant_maps_to_itself() {
        let g = PhaseSpaceGrid::square(4.0, 32).unwrap();
        let f = RealField::from_fn(g, "c", |_, _| 2.5);
        // widths small enough that the zero-padding bleed (kernel tail mass
        // beyond the half-window, ~erfc(4/(sigma*sqrt(2)))) is below 1e-10
        let c = gaussian_convolve(&f, 0.3, 0.3).unwrap();
        // constants do not decay at the edge, so the flag must be raised
        assert!(c.edge_warning);
        let mid = c.field.values[[16, 16]];
        assert!((mid - 2.5).abs() < 1e-10, "mid={mid}");
    }

    #[test]
    fn preserves_mass_of_spike() {
        let g = PhaseSpaceGrid::square(6.0, 64).unwrap();
        let mut f = RealField::zeros(g, "spike");
        f.values[[32, 32]] = 1.0 / (g.dq() * g.dp()); // unit mass in one cell
        let c = gaussian_convolve(&f, 0.4, 0.4).unwrap();
        let mass = integrate_2d(&c.field).unwrap();
        assert!((mass - 1.0).abs() < 1e-8, "mass={mass}");
        assert!(!c.edge_warning);
    }

    #[test]
    fn nonnegativity_within_roundoff() {
        let g = PhaseSpaceGrid::square(6.0, 64).unwrap();
        let f = RealField::from_fn(g, "g", |p, q| (-(q * q + p * p)).exp());
        let c = gaussian_convolve(&f, 0.3, 0.6).unwrap();
        let max = c.field.max();
        assert!(c.field.min() >= -1e-12 * max);
    }

    #[test]
    fn gaussian_width_composition() {
        // unit-mass Gaussian sigma=a smoothed by sigma=b gives sigma=sqrt(a^2+b^2)
        let g = PhaseSpaceGrid::square(8.0, 256).unwrap();
        let (a, b) = (0.5, 0.7);
        let norm = 1.0 / (2.0 * std::f64::consts::PI * a * a);
        let f = RealField::from_fn(g, "g", |p, q| norm * (-(q * q + p * p) / (2.0 * a * a)).exp());
        let c = gaussian_convolve(&f, b, b).unwrap();
        let s2 = a * a + b * b;
        let expect = RealField::from_fn(g, "e", |p, q| {
            (-(q * q + p * p) / (2.0 * s2)).exp() / (2.0 * std::f64::consts::PI * s2)
        });
        let mut sup = 0.0f64;
        for ip in 0..g.n_p {
            for iq in 0..g.n_q {
                sup = sup.max((c.field.values[[ip, iq]] - expect.values[[ip, iq]]).abs());
            }
        }
        assert!(sup < 1e-8, "sup deviation {sup}");
    }

    #[test]
    fn fft_equals_direct_sum() {
        let g = PhaseSpaceGrid::square(3.0, 32).unwrap();
        let f = RealField::from_fn(g, "mix", |p, q| (-(q * q) - 0.5 * p * p).exp() * (1.0 + 0.3 * q));
        let a = gaussian_convolve(&f, 0.45, 0.7).unwrap().field;
        let b = gaussian_convolve_direct(&f, 0.45, 0.7);
        let scale = a.max_abs();
        for ip in 0..g.n_p {
            for iq in 0..g.n_q {
                let d = (a.values[[ip, iq]] - b.values[[ip, iq]]).abs();
                assert!(d <= 1e-10 * scale, "({ip},{iq}): {d}");
            }
        }
    }

    #[test]
    fn bad_widths_rejected() {
        let g = PhaseSpaceGrid::square(3.0, 16).unwrap();
        let f = RealField::zeros(g, "z");
        assert!(gaussian_convolve(&f, 0.0, 1.0).is_err());
        assert!(gaussian_convolve(&f, 1.0, -2.0).is_err());
        assert!(gaussian_convolve(&f, f64::NAN, 1.0).is_err());
    }
}
