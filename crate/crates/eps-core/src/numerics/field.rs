use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::numerics::grid::PhaseSpaceGrid;

/// Real-valued sample array over a phase-space grid.
///
/// Storage is row-major with `p` as the row index and `q` as the column
/// index: `values[[ip, iq]]` sits at `(grid.p(ip), grid.q(iq))`.
#[derive(Debug, Clone)]
pub struct RealField {
    pub grid: PhaseSpaceGrid,
    pub values: Array2<f64>,
    pub label: String,
}

/// Complex-valued counterpart of [`RealField`]; same layout.
#[derive(Debug, Clone)]
pub struct ComplexField {
    pub grid: PhaseSpaceGrid,
    pub values: Array2<C64>,
    pub label: String,
}

fn check_shape(grid: &PhaseSpaceGrid, shape: &[usize]) -> Result<()> {
    if shape != [grid.n_p, grid.n_q] {
        return Err(Error::invalid(format!(
            "field shape {:?} does not match grid (n_p={}, n_q={})",
            shape, grid.n_p, grid.n_q
        )));
    }
    Ok(())
}

impl RealField {
    pub fn new(grid: PhaseSpaceGrid, values: Array2<f64>, label: impl Into<String>) -> Result<Self> {
        grid.validate()?;
        check_shape(&grid, values.shape())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("field contains non-finite samples"));
        }
        Ok(RealField { grid, values, label: label.into() })
    }

    pub fn zeros(grid: PhaseSpaceGrid, label: impl Into<String>) -> Self {
        RealField { grid, values: Array2::zeros((grid.n_p, grid.n_q)), label: label.into() }
    }

    /// Tabulate `f(p, q)` over the grid.
    pub fn from_fn(grid: PhaseSpaceGrid, label: impl Into<String>, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Array2::zeros((grid.n_p, grid.n_q));
        for ip in 0..grid.n_p {
            let p = grid.p(ip);
            for iq in 0..grid.n_q {
                values[[ip, iq]] = f(p, grid.q(iq));
            }
        }
        RealField { grid, values, label: label.into() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |m, &v| m.min(v))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v))
    }

    /// Grid point of the largest sample.
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (0, 0);
        let mut bv = f64::NEG_INFINITY;
        for ip in 0..self.grid.n_p {
            for iq in 0..self.grid.n_q {
                if self.values[[ip, iq]] > bv {
                    bv = self.values[[ip, iq]];
                    best = (ip, iq);
                }
            }
        }
        (self.grid.p(best.0), self.grid.q(best.1))
    }
}

impl ComplexField {
    pub fn new(grid: PhaseSpaceGrid, values: Array2<C64>, label: impl Into<String>) -> Result<Self> {
        grid.validate()?;
        check_shape(&grid, values.shape())?;
        if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::invalid("field contains non-finite samples"));
        }
        Ok(ComplexField { grid, values, label: label.into() })
    }

    pub fn zeros(grid: PhaseSpaceGrid, label: impl Into<String>) -> Self {
        ComplexField { grid, values: Array2::zeros((grid.n_p, grid.n_q)), label: label.into() }
    }

    pub fn from_fn(grid: PhaseSpaceGrid, label: impl Into<String>, f: impl Fn(f64, f64) -> C64) -> Self {
        let mut values = Array2::zeros((grid.n_p, grid.n_q));
        for ip in 0..grid.n_p {
            let p = grid.p(ip);
            for iq in 0..grid.n_q {
                values[[ip, iq]] = f(p, grid.q(iq));
            }
        }
        ComplexField { grid, values, label: label.into() }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.norm()))
    }

    pub fn re(&self) -> RealField {
        RealField {
            grid: self.grid,
            values: self.values.mapv(|z| z.re),
            label: format!("re({})", self.label),
        }
    }
}
