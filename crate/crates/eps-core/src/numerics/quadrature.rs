use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::field::{ComplexField, RealField};

#[inline]
fn trapezoid_weight(i: usize, n: usize) -> f64 {
    if i == 0 || i + 1 == n {
        0.5
    } else {
        1.0
    }
}

/// Trapezoidal 2-D quadrature `∬ f dq dp` over the field's grid.
///
/// Rows are reduced in index order and the row sums accumulated in index
/// order, so the result does not depend on thread count.
pub fn integrate_2d(field: &RealField) -> Result<f64> {
    if field.values.is_empty() {
        return Err(Error::invalid("cannot integrate an empty field"));
    }
    let g = &field.grid;
    let mut total = 0.0;
    for ip in 0..g.n_p {
        let wp = trapezoid_weight(ip, g.n_p);
        let mut row = 0.0;
        for iq in 0..g.n_q {
            row += trapezoid_weight(iq, g.n_q) * field.values[[ip, iq]];
        }
        total += wp * row;
    }
    Ok(total * g.dq() * g.dp())
}

/// Complex version of [`integrate_2d`].
pub fn integrate_2d_complex(field: &ComplexField) -> Result<C64> {
    if field.values.is_empty() {
        return Err(Error::invalid("cannot integrate an empty field"));
    }
    let g = &field.grid;
    let mut total = C64::new(0.0, 0.0);
    for ip in 0..g.n_p {
        let wp = trapezoid_weight(ip, g.n_p);
        let mut row = C64::new(0.0, 0.0);
        for iq in 0..g.n_q {
            row += field.values[[ip, iq]] * trapezoid_weight(iq, g.n_q);
        }
        total += row * wp;
    }
    Ok(total * g.dq() * g.dp())
}

/// Trapezoidal 1-D quadrature over uniformly spaced samples.
pub fn integrate_1d(values: &[f64], step: f64) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::invalid("need at least two samples to integrate"));
    }
    let n = values.len();
    let sum: f64 =
        values.iter().enumerate().map(|(i, v)| trapezoid_weight(i, n) * v).sum();
    Ok(sum * step)
}
