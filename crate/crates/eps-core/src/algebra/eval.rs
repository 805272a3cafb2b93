//! Numeric evaluation of operator expressions on sampled fields.
//!
//! A conjugate momentum acts as `-i*hbar` times the partial derivative along
//! its coordinate, so each monomial becomes "multiply by a polynomial, then
//! differentiate".  Expressions are first flattened into stencil terms with
//! fully evaluated complex prefactors.

use std::collections::HashMap;

use ndarray::Array2;
use num_complex::Complex64;

use super::expr::{OperatorExpr, PARAM_NAMES};
use crate::error::{Error, Result};
use crate::numerics::{partial_derivative_complex, Axis, ComplexField, DerivMethod};

/// One flattened monomial: `factor * q^q_pow p^p_pow d^dq_order/dq d^dp_order/dp`.
#[derive(Clone, Copy, Debug)]
pub struct StencilTerm {
    pub factor: Complex64,
    pub q_pow: u32,
    pub p_pow: u32,
    pub dq_order: u32,
    pub dp_order: u32,
}

/// Numeric bindings for the symbolic parameters.
#[derive(Clone, Copy, Debug)]
pub struct ParamBindings {
    values: [Option<f64>; 5],
}

impl ParamBindings {
    pub fn new() -> Self {
        Self { values: [None; 5] }
    }

    pub fn set(mut self, name: &str, value: f64) -> Result<Self> {
        let idx = PARAM_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| Error::UnboundSymbol(name.to_string()))?;
        self.values[idx] = Some(value);
        Ok(self)
    }

    /// hbar, m, k, f, omega all bound at once.
    pub fn full(hbar: f64, m: f64, k: f64, f: f64, omega: f64) -> Self {
        Self { values: [Some(hbar), Some(m), Some(k), Some(f), Some(omega)] }
    }

    pub fn from_map(map: &HashMap<String, f64>) -> Result<Self> {
        let mut out = Self::new();
        for (name, value) in map {
            out = out.set(name, *value)?;
        }
        Ok(out)
    }

    fn get(&self, idx: usize) -> Result<f64> {
        self.values[idx].ok_or_else(|| Error::UnboundSymbol(PARAM_NAMES[idx].to_string()))
    }
}

impl Default for ParamBindings {
    fn default() -> Self {
        Self::new()
    }
}

/// Flattens an expression into stencil terms.  Fails with
/// [`Error::UnboundSymbol`] when a parameter that actually occurs (or `hbar`,
/// needed by any derivative factor) has no value.
pub fn to_stencil(expr: &OperatorExpr, bindings: &ParamBindings) -> Result<Vec<StencilTerm>> {
    let mut out = Vec::with_capacity(expr.num_terms());
    for (key, coeff) in expr.terms() {
        let mut factor = coeff.to_complex();
        for (idx, &e) in key.params.iter().enumerate() {
            if e != 0 {
                factor *= bindings.get(idx)?.powi(e as i32);
            }
        }
        let deriv_total = key.piq + key.pip;
        if deriv_total > 0 {
            let minus_i_hbar = Complex64::new(0.0, -bindings.get(0)?);
            factor *= minus_i_hbar.powu(deriv_total);
        }
        out.push(StencilTerm {
            factor,
            q_pow: key.q,
            p_pow: key.p,
            dq_order: key.piq,
            dp_order: key.pip,
        });
    }
    Ok(out)
}

fn derivative(field: &ComplexField, axis: Axis, order: u32, method: DerivMethod) -> Result<Array2<Complex64>> {
    match order {
        0 => Ok(field.values.clone()),
        1 | 2 => Ok(partial_derivative_complex(field, axis, order, method)?.values),
        _ => Err(Error::Unsupported(format!(
            "grid application supports derivative orders up to two, got {order}"
        ))),
    }
}

/// Applies a flattened operator to a sampled field.
pub fn apply_stencil(
    field: &ComplexField,
    stencil: &[StencilTerm],
    method: DerivMethod,
) -> Result<Array2<Complex64>> {
    let g = field.grid;
    let mut out = Array2::<Complex64>::zeros((g.n_p, g.n_q));
    for term in stencil {
        // differentiate first along q, then along p; the order is immaterial
        // because mixed partials commute on smooth data
        let dq = derivative(field, Axis::Q, term.dq_order, method)?;
        let d2 = if term.dp_order == 0 {
            dq
        } else {
            let tmp = ComplexField::new(g, dq, "stencil-tmp")?;
            derivative(&tmp, Axis::P, term.dp_order, method)?
        };
        for ip in 0..g.n_p {
            let p = g.p(ip);
            for iq in 0..g.n_q {
                let q = g.q(iq);
                let poly = q.powi(term.q_pow as i32) * p.powi(term.p_pow as i32);
                out[[ip, iq]] += term.factor * poly * d2[[ip, iq]];
            }
        }
    }
    Ok(out)
}

/// Convenience: evaluate a generator-free expression to a complex number.
pub fn eval_scalar(expr: &OperatorExpr, bindings: &ParamBindings) -> Result<Complex64> {
    if !expr.is_cnumber() {
        return Err(Error::invalid("expression contains operators; expected a pure scalar"));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for term in to_stencil(expr, bindings)? {
        total += term.factor;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::text::parse_expr;
    use crate::numerics::PhaseSpaceGrid;
    use crate::states::{build_eps_state, OscillatorParams, WavefunctionSpec};

    #[test]
    fn scalar_evaluation() {
        let e = parse_expr("hbar^2/(m*k) - 2*i").unwrap();
        let b = ParamBindings::full(2.0, 4.0, 0.5, 1.0, 1.0);
        let v = eval_scalar(&e, &b).unwrap();
        assert!((v.re - 2.0).abs() < 1e-15 && (v.im + 2.0).abs() < 1e-15);
    }

    #[test]
    fn unbound_parameter_is_reported() {
        let e = parse_expr("f*q").unwrap();
        let b = ParamBindings::new().set("hbar", 1.0).unwrap();
        match to_stencil(&e, &b) {
            Err(Error::UnboundSymbol(name)) => assert_eq!(name, "f"),
            other => panic!("expected unbound symbol, got {other:?}"),
        }
    }

    #[test]
    fn derivative_factor_requires_hbar() {
        let e = parse_expr("pi_q").unwrap();
        match to_stencil(&e, &ParamBindings::new()) {
            Err(Error::UnboundSymbol(name)) => assert_eq!(name, "hbar"),
            other => panic!("expected unbound symbol, got {other:?}"),
        }
    }

    #[test]
    fn annihilates_stationary_state() {
        // the harmonic generator applied to a stationary state vanishes
        let params = OscillatorParams::natural();
        let spec = WavefunctionSpec::eigenstate(0, params).unwrap();
        let state = build_eps_state(&spec, PhaseSpaceGrid::square(8.0, 128).unwrap(), 0.0).unwrap();
        let gen = parse_expr("(1/(2*m))*pi_q^2 + (1/m)*p*pi_q - (k/2)*pi_p^2 - k*q*pi_p").unwrap();
        let bindings = ParamBindings::full(1.0, 1.0, 1.0, 1.0, 1.0);
        let stencil = to_stencil(&gen, &bindings).unwrap();
        let applied = apply_stencil(&state.chi, &stencil, DerivMethod::Spectral).unwrap();
        let peak = state.chi.values.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        let worst = applied.iter().map(|c| c.norm()).fold(0.0f64, f64::max);
        assert!(worst < 1e-10 * peak.max(1.0), "residual {worst}");
    }

    #[test]
    fn high_order_application_unsupported() {
        let e = parse_expr("pi_q^3").unwrap();
        let b = ParamBindings::full(1.0, 1.0, 1.0, 1.0, 1.0);
        let stencil = to_stencil(&e, &b).unwrap();
        let g = PhaseSpaceGrid::square(4.0, 32).unwrap();
        let f = ComplexField::from_fn(g, "z", |_, _| Complex64::new(1.0, 0.0));
        assert!(matches!(
            apply_stencil(&f, &stencil, DerivMethod::Fd4),
            Err(Error::Unsupported(_))
        ));
    }
}
