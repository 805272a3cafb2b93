use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::fft::{fft_forward, fft_inverse, freq_index};
use crate::numerics::field::{ComplexField, RealField};

/// Differentiation axis; `Q` walks the column index, `P` the row index.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Q,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DerivMethod {
    /// 4th-order centered stencils, matching-order one-sided rows at the
    /// edges. Local: a bad sample only pollutes its neighborhood.
    #[default]
    Fd4,
    /// Trigonometric differentiation via FFT. Spectrally accurate for fields
    /// that decay below roundoff before the window edge.
    Spectral,
}

/// Finite-difference weights on arbitrary nodes (Fornberg's recurrence).
///
/// Returns `w[k][j]`: the weight of sample `x[j]` in the `k`-th derivative at
/// `z`, for `k = 0..=max_order`. Exact (up to roundoff) for polynomials of
/// degree `< x.len()`.
pub fn fd_weights(z: f64, x: &[f64], max_order: usize) -> Vec<Vec<f64>> {
    let n = x.len();
    assert!(n > max_order, "need more nodes than derivative order");
    let mut c = vec![vec![0.0; n]; max_order + 1];
    let mut c1 = 1.0;
    let mut c4 = x[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(max_order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = x[i] - z;
        for j in 0..i {
            let c3 = x[i] - x[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}

/// Stencil table for one axis: centered interior row plus the one-sided rows
/// used inside the first/last two samples. All rows are 4th-order accurate.
struct StencilSet {
    /// weights for offsets -2..=2
    central: [f64; 5],
    /// `edge[i]` = weights on samples `0..len` evaluated at sample `i` (i < 2)
    edge: Vec<Vec<f64>>,
}

fn build_stencils(order: usize, h: f64) -> StencilSet {
    let pts = order + 4; // one-sided width giving 4th-order accuracy
    let xs: Vec<f64> = (0..pts).map(|i| i as f64 * h).collect();
    let edge: Vec<Vec<f64>> =
        (0..2).map(|i| fd_weights(xs[i], &xs, order).swap_remove(order)).collect();
    let xc: Vec<f64> = (-2..=2).map(|i| i as f64 * h).collect();
    let wc = fd_weights(0.0, &xc, order).swap_remove(order);
    let mut central = [0.0; 5];
    central.copy_from_slice(&wc);
    StencilSet { central, edge }
}

/// Differentiate rows of a generic matrix; `get`/`set` bridge element types.
fn fd_axis_complex(values: &Array2<C64>, axis: Axis, order: usize, h: f64) -> Array2<C64> {
    let st = build_stencils(order, h);
    let (np, nq) = values.dim();
    let n = match axis {
        Axis::Q => nq,
        Axis::P => np,
    };
    let lanes = match axis {
        Axis::Q => np,
        Axis::P => nq,
    };
    let mut out = Array2::zeros((np, nq));
    let idx = |lane: usize, i: usize| -> (usize, usize) {
        match axis {
            Axis::Q => (lane, i),
            Axis::P => (i, lane),
        }
    };
    for lane in 0..lanes {
        for i in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            if i >= 2 && i + 2 < n {
                for (s, w) in st.central.iter().enumerate() {
                    acc += values[idx(lane, i + s - 2)] * *w;
                }
            } else if i < 2 {
                for (s, w) in st.edge[i].iter().enumerate() {
                    acc += values[idx(lane, s)] * *w;
                }
            } else {
                // mirror of the left edge: reversed offsets, sign flip for odd order
                let sign = if order % 2 == 1 { -1.0 } else { 1.0 };
                let e = n - 1 - i; // 0 or 1 from the right end
                for (s, w) in st.edge[e].iter().enumerate() {
                    acc += values[idx(lane, n - 1 - s)] * (*w * sign);
                }
            }
            out[idx(lane, i)] = acc;
        }
    }
    out
}

fn spectral_axis_complex(values: &Array2<C64>, axis: Axis, order: usize, h: f64) -> Array2<C64> {
    let (np, nq) = values.dim();
    let n = match axis {
        Axis::Q => nq,
        Axis::P => np,
    };
    let lanes = match axis {
        Axis::Q => np,
        Axis::P => nq,
    };
    // trig interpolation treats the n samples as one period of length n*h
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * h);
    let mut mult = vec![C64::new(0.0, 0.0); n];
    for (j, m) in mult.iter_mut().enumerate() {
        let k = freq_index(j, n) as f64 * dk;
        let ik = C64::new(0.0, k);
        *m = ik.powu(order as u32);
        // odd derivatives have no well-defined sign at the Nyquist bin
        if order % 2 == 1 && n % 2 == 0 && j == n / 2 {
            *m = C64::new(0.0, 0.0);
        }
    }
    let mut out = Array2::zeros((np, nq));
    let mut buf = vec![C64::new(0.0, 0.0); n];
    for lane in 0..lanes {
        for i in 0..n {
            buf[i] = match axis {
                Axis::Q => values[[lane, i]],
                Axis::P => values[[i, lane]],
            };
        }
        fft_forward(&mut buf);
        for (b, m) in buf.iter_mut().zip(&mult) {
            *b *= *m;
        }
        fft_inverse(&mut buf);
        let scale = 1.0 / n as f64;
        for i in 0..n {
            let v = buf[i] * scale;
            match axis {
                Axis::Q => out[[lane, i]] = v,
                Axis::P => out[[i, lane]] = v,
            }
        }
    }
    out
}

fn check_order(order: u32) -> Result<usize> {
    if order == 1 || order == 2 {
        Ok(order as usize)
    } else {
        Err(Error::invalid(format!("derivative order must be 1 or 2, got {order}")))
    }
}

pub fn partial_derivative_complex(
    field: &ComplexField,
    axis: Axis,
    order: u32,
    method: DerivMethod,
) -> Result<ComplexField> {
    let order = check_order(order)?;
    let h = match axis {
        Axis::Q => field.grid.dq(),
        Axis::P => field.grid.dp(),
    };
    let values = match method {
        DerivMethod::Fd4 => fd_axis_complex(&field.values, axis, order, h),
        DerivMethod::Spectral => spectral_axis_complex(&field.values, axis, order, h),
    };
    let tag = match axis {
        Axis::Q => "q",
        Axis::P => "p",
    };
    Ok(ComplexField {
        grid: field.grid,
        values,
        label: format!("d{order}{tag}({})", field.label),
    })
}

pub fn partial_derivative_real(
    field: &RealField,
    axis: Axis,
    order: u32,
    method: DerivMethod,
) -> Result<RealField> {
    let complex = ComplexField {
        grid: field.grid,
        values: field.values.mapv(|v| C64::new(v, 0.0)),
        label: field.label.clone(),
    };
    let d = partial_derivative_complex(&complex, axis, order, method)?;
    Ok(RealField { grid: field.grid, values: d.values.mapv(|z| z.re), label: d.label })
}
