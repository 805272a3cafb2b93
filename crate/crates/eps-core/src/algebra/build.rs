//! Constructions on top of the raw engine: lifting a classical Hamiltonian
//! to its phase-space generator, applying linear substitutions of the
//! generators, and the terminating similarity expansion
//! `exp(A) X exp(-A) = X + [A,X] + [A,[A,X]]/2! + ...`.

use super::coeff::Coeff;
use super::expr::{Gen, OperatorExpr, VarCase};
use crate::error::{Error, Result};

/// How to lift a classical `H(q, p)` to the evolution generator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExtensionMethod {
    /// Difference of argument shifts: `H(q, p + pi_q) - H(q + pi_p, p)`,
    /// expanding each monomial with its coordinate factor on the left.
    Shift,
    /// Taylor series in the conjugate momenta:
    /// `sum_n (1/n!) [ d^n H/dp^n pi_q^n - d^n H/dq^n pi_p^n ]`.
    Series,
}

/// Lifts a polynomial classical Hamiltonian (in `q`, `p` only) to the
/// generator that drives the phase-space wavefunction.  Both methods give
/// identical normal-ordered results; keeping them separate lets tests verify
/// that.
pub fn extended_generator(h: &OperatorExpr, method: ExtensionMethod) -> Result<OperatorExpr> {
    if h.case() == Some(VarCase::Upper) {
        return Err(Error::invalid("classical Hamiltonian must use the base alphabet q, p"));
    }
    if h.terms().any(|(k, _)| k.piq > 0 || k.pip > 0) {
        return Err(Error::invalid(
            "classical Hamiltonian must not contain conjugate momenta pi_q, pi_p",
        ));
    }
    match method {
        ExtensionMethod::Shift => extend_by_shift(h),
        ExtensionMethod::Series => extend_by_series(h),
    }
}

fn extend_by_shift(h: &OperatorExpr) -> Result<OperatorExpr> {
    let q = OperatorExpr::generator(Gen::Q, VarCase::Lower);
    let p = OperatorExpr::generator(Gen::P, VarCase::Lower);
    let p_shift = p.add(&OperatorExpr::generator(Gen::PiQ, VarCase::Lower))?;
    let q_shift = q.add(&OperatorExpr::generator(Gen::PiP, VarCase::Lower))?;
    let mut out = OperatorExpr::zero();
    for (key, coeff) in h.terms() {
        let mut scalar_key = key.clone();
        scalar_key.q = 0;
        scalar_key.p = 0;
        let prefactor = monomial(scalar_key.params, coeff.clone());
        // coordinate factor stays on the left in both pieces
        let first = prefactor
            .mul(&q.pow(key.q)?)?
            .mul(&p_shift.pow(key.p)?)?;
        let second = prefactor
            .mul(&p.pow(key.p)?)?
            .mul(&q_shift.pow(key.q)?)?;
        out = out.add(&first)?.sub(&second)?;
    }
    Ok(out)
}

fn extend_by_series(h: &OperatorExpr) -> Result<OperatorExpr> {
    let piq = OperatorExpr::generator(Gen::PiQ, VarCase::Lower);
    let pip = OperatorExpr::generator(Gen::PiP, VarCase::Lower);
    let mut out = OperatorExpr::zero();
    let mut dp = h.clone();
    let mut dq = h.clone();
    let mut factorial = num_bigint::BigInt::from(1);
    let mut n: u32 = 0;
    loop {
        dp = dp.formal_derivative(Gen::P)?;
        dq = dq.formal_derivative(Gen::Q)?;
        if dp.is_zero() && dq.is_zero() {
            break;
        }
        n += 1;
        factorial *= n;
        let inv_fact = Coeff::from_big(factorial.clone()).inv()?;
        let gain = dp.mul(&piq.pow(n)?)?.sub(&dq.mul(&pip.pow(n)?)?)?;
        out = out.add(&gain.scale(&inv_fact))?;
    }
    Ok(out)
}

fn monomial(params: [i16; 5], coeff: Coeff) -> OperatorExpr {
    let mut out = OperatorExpr::scalar(coeff);
    for (idx, &e) in params.iter().enumerate() {
        for _ in 0..e.unsigned_abs() {
            let p = OperatorExpr::param(idx);
            let factor = if e > 0 {
                p
            } else {
                // parameter inverses cannot fail: exponent magnitudes here
                // are bounded by the engine guard
                OperatorExpr::one().div_scalar_monomial(&p).unwrap()
            };
            out = out.mul(&factor).unwrap();
        }
    }
    out
}

/// Images of the four generators under a linear substitution.
#[derive(Clone, Debug)]
pub struct GeneratorImages {
    pub q: OperatorExpr,
    pub p: OperatorExpr,
    pub piq: OperatorExpr,
    pub pip: OperatorExpr,
}

impl GeneratorImages {
    pub fn image(&self, g: Gen) -> &OperatorExpr {
        match g {
            Gen::Q => &self.q,
            Gen::P => &self.p,
            Gen::PiQ => &self.piq,
            Gen::PiP => &self.pip,
        }
    }

    fn validate(&self) -> Result<()> {
        for g in [Gen::Q, Gen::P, Gen::PiQ, Gen::PiP] {
            if self.image(g).degree() > 1 {
                return Err(Error::invalid(
                    "generator image must be affine (total generator degree at most one)",
                ));
            }
        }
        Ok(())
    }
}

/// Substitutes generator images into an expression, factor by factor in the
/// canonical written order `q^a p^b pi_q^c pi_p^d`.
pub fn apply_linear_map(x: &OperatorExpr, images: &GeneratorImages) -> Result<OperatorExpr> {
    images.validate()?;
    let mut out = OperatorExpr::zero();
    for (key, coeff) in x.terms() {
        let mut scalar_key = key.clone();
        scalar_key.q = 0;
        scalar_key.p = 0;
        scalar_key.piq = 0;
        scalar_key.pip = 0;
        let mut term = monomial(scalar_key.params, coeff.clone());
        term = term.mul(&images.q.pow(key.q)?)?;
        term = term.mul(&images.p.pow(key.p)?)?;
        term = term.mul(&images.piq.pow(key.piq)?)?;
        term = term.mul(&images.pip.pow(key.pip)?)?;
        out = out.add(&term)?;
    }
    Ok(out)
}

/// The substitution that carries base-representation operators to the
/// representation acting on the Gaussian-smoothed density with width
/// parameter `f`:
///
/// ```text
/// q -> q + (i f / 2 hbar) pi_q + (1/2) pi_p
/// p -> p + (i hbar / 2 f) pi_p + (1/2) pi_q
/// pi_q -> pi_q,  pi_p -> pi_p
/// ```
///
/// It preserves all pairwise generator commutators.
pub fn smoothing_images() -> Result<GeneratorImages> {
    let q = OperatorExpr::generator(Gen::Q, VarCase::Lower);
    let p = OperatorExpr::generator(Gen::P, VarCase::Lower);
    let piq = OperatorExpr::generator(Gen::PiQ, VarCase::Lower);
    let pip = OperatorExpr::generator(Gen::PiP, VarCase::Lower);
    let hbar = OperatorExpr::param(0);
    let f = OperatorExpr::param(3);
    let half = Coeff::ratio(1, 2)?;
    let half_i = Coeff::ratio_i(1, 2)?;

    let f_over_hbar = f.div_scalar_monomial(&hbar)?;
    let hbar_over_f = hbar.div_scalar_monomial(&f)?;

    let q_img = q
        .add(&f_over_hbar.mul(&piq)?.scale(&half_i))?
        .add(&pip.scale(&half))?;
    let p_img = p
        .add(&hbar_over_f.mul(&pip)?.scale(&half_i))?
        .add(&piq.scale(&half))?;
    Ok(GeneratorImages { q: q_img, p: p_img, piq, pip })
}

/// Result of the similarity expansion `exp(A) X exp(-A)`.
#[derive(Clone, Debug)]
pub struct AdjointExpansion {
    /// The summed series.
    pub result: OperatorExpr,
    /// The nonzero nested-commutator contributions, starting with `X` itself.
    pub contributions: Vec<OperatorExpr>,
    /// Order at which the nested commutator first vanished identically.
    pub terminated_at: usize,
}

/// Expands `exp(A) X exp(-A)` as nested commutators, stopping when a level
/// is exactly zero.  Fails with [`Error::SeriesNonTerminating`] if no level
/// up to `max_order` vanishes.
pub fn adjoint_series(a: &OperatorExpr, x: &OperatorExpr, max_order: usize) -> Result<AdjointExpansion> {
    let mut contributions = vec![x.clone()];
    let mut result = x.clone();
    let mut level = x.clone();
    for order in 1..=max_order {
        // (1/n!) ad^n = (1/n) [A, previous level]
        level = a.commutator(&level)?.scale(&Coeff::ratio(1, order as i64)?);
        if level.is_zero() {
            return Ok(AdjointExpansion { result, contributions, terminated_at: order });
        }
        result = result.add(&level)?;
        contributions.push(level.clone());
    }
    Err(Error::SeriesNonTerminating { max_order })
}

/// The classical oscillator Hamiltonian `p^2/(2m) + (k/2) q^2` with
/// symbolic parameters, in the base alphabet.
pub fn harmonic_hamiltonian() -> Result<OperatorExpr> {
    let q = OperatorExpr::generator(Gen::Q, VarCase::Lower);
    let p = OperatorExpr::generator(Gen::P, VarCase::Lower);
    let m = OperatorExpr::param(1);
    let k = OperatorExpr::param(2);
    let two = OperatorExpr::int(2);
    let kinetic = p.pow(2)?.div_scalar_monomial(&two.mul(&m)?)?;
    let potential = k.mul(&q.pow(2)?)?.div_scalar_monomial(&two)?;
    kinetic.add(&potential)
}

/// First-order flow generator of the distribution evolution in the
/// transformed alphabet: `(P/m) pi_Q - k Q pi_P`.  Dividing its grid action
/// by `i hbar` reproduces minus the classical Liouville transport of a
/// density under the oscillator flow `dQ/dt = P/m`, `dP/dt = -k Q`.
pub fn classical_flow_generator() -> Result<OperatorExpr> {
    let q = OperatorExpr::generator(Gen::Q, VarCase::Upper);
    let p = OperatorExpr::generator(Gen::P, VarCase::Upper);
    let piq = OperatorExpr::generator(Gen::PiQ, VarCase::Upper);
    let pip = OperatorExpr::generator(Gen::PiP, VarCase::Upper);
    let m = OperatorExpr::param(1);
    let k = OperatorExpr::param(2);
    p.mul(&piq)?.div_scalar_monomial(&m)?.sub(&k.mul(&q)?.mul(&pip)?)
}

/// Exponent of the Gaussian smoothing operator with width parameter `f`:
/// `-(f/(4 hbar^2)) pi_Q^2 - (1/(4 f)) pi_P^2`.  In grid terms this is
/// `(f/4) d^2/dQ^2 + (hbar^2/(4 f)) d^2/dP^2`, whose exponential convolves
/// with a Gaussian of variances `f/2` and `hbar^2/(2 f)`.
pub fn smoothing_exponent() -> Result<OperatorExpr> {
    let piq = OperatorExpr::generator(Gen::PiQ, VarCase::Upper);
    let pip = OperatorExpr::generator(Gen::PiP, VarCase::Upper);
    let hbar = OperatorExpr::param(0);
    let f = OperatorExpr::param(3);
    let four = OperatorExpr::int(4);
    let first = f.mul(&piq.pow(2)?)?.div_scalar_monomial(&four.mul(&hbar.pow(2)?)?)?;
    let second = pip.pow(2)?.div_scalar_monomial(&four.mul(&f)?)?;
    Ok(first.add(&second)?.neg())
}

/// Conjugates the classical flow by the smoothing operator,
/// `exp(A) L exp(-A)`.  The nested commutators vanish identically at second
/// order, leaving the flow plus the single mixed-derivative correction
/// `(i hbar/(2 m f) - i f k/(2 hbar)) pi_Q pi_P`; the correction coefficient
/// is purely imaginary (the conjugated generator stays `i hbar d/dt`-
/// compatible) and cancels exactly when `f^2 = hbar^2/(m k)`.
pub fn smoothed_flow_generator() -> Result<AdjointExpansion> {
    adjoint_series(&smoothing_exponent()?, &classical_flow_generator()?, 4)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::expr::PARAM_NAMES;

    fn gen(g: Gen) -> OperatorExpr {
        OperatorExpr::generator(g, VarCase::Lower)
    }

    fn param(name: &str) -> OperatorExpr {
        OperatorExpr::param(PARAM_NAMES.iter().position(|&n| n == name).unwrap())
    }

    /// `p^2/(2m) + (k/2) q^2`
    fn harmonic() -> OperatorExpr {
        // keep an independently-built copy so the shared builder is itself
        // under test
        let kinetic = gen(Gen::P)
            .pow(2)
            .unwrap()
            .div_scalar_monomial(&param("m").scale(&Coeff::from_int(2)))
            .unwrap();
        let potential = param("k")
            .mul(&gen(Gen::Q).pow(2).unwrap())
            .unwrap()
            .scale(&Coeff::ratio(1, 2).unwrap());
        let h = kinetic.add(&potential).unwrap();
        assert_eq!(h, harmonic_hamiltonian().unwrap());
        h
    }

    #[test]
    fn harmonic_generator_matches_known_form() {
        // pi_q^2/(2m) + (p/m) pi_q - (k/2) pi_p^2 - k q pi_p
        let expect = gen(Gen::PiQ)
            .pow(2)
            .unwrap()
            .div_scalar_monomial(&param("m").scale(&Coeff::from_int(2)))
            .unwrap()
            .add(&gen(Gen::P).mul(&gen(Gen::PiQ)).unwrap().div_scalar_monomial(&param("m")).unwrap())
            .unwrap()
            .sub(&param("k").mul(&gen(Gen::PiP).pow(2).unwrap()).unwrap().scale(&Coeff::ratio(1, 2).unwrap()))
            .unwrap()
            .sub(&param("k").mul(&gen(Gen::Q)).unwrap().mul(&gen(Gen::PiP)).unwrap())
            .unwrap();
        for method in [ExtensionMethod::Shift, ExtensionMethod::Series] {
            assert_eq!(extended_generator(&harmonic(), method).unwrap(), expect);
        }
    }

    #[test]
    fn both_lifts_agree_on_cross_terms() {
        // q^2 p^2 exercises the ordering convention of the shift method
        let h = gen(Gen::Q).pow(2).unwrap().mul(&gen(Gen::P).pow(2).unwrap()).unwrap();
        let a = extended_generator(&h, ExtensionMethod::Shift).unwrap();
        let b = extended_generator(&h, ExtensionMethod::Series).unwrap();
        assert_eq!(a, b);
        // quartic with every mixed monomial
        let mix = h
            .add(&gen(Gen::Q).pow(3).unwrap().mul(&gen(Gen::P)).unwrap())
            .unwrap()
            .add(&gen(Gen::Q).mul(&gen(Gen::P).pow(3).unwrap()).unwrap().scale(&Coeff::ratio(-2, 3).unwrap()))
            .unwrap();
        let a = extended_generator(&mix, ExtensionMethod::Shift).unwrap();
        let b = extended_generator(&mix, ExtensionMethod::Series).unwrap();
        assert_eq!(a, b);
        assert!(!a.is_zero());
    }

    #[test]
    fn lift_rejects_momentum_polynomials() {
        let bad = gen(Gen::PiQ);
        assert!(extended_generator(&bad, ExtensionMethod::Shift).is_err());
    }

    #[test]
    fn smoothing_map_preserves_all_commutators() {
        let images = smoothing_images().unwrap();
        let gens = [Gen::Q, Gen::P, Gen::PiQ, Gen::PiP];
        for ga in gens {
            for gb in gens {
                let before = gen(ga).commutator(&gen(gb)).unwrap();
                let after = images.image(ga).commutator(images.image(gb)).unwrap();
                assert_eq!(before, after, "commutator [{ga:?}, {gb:?}] changed");
            }
        }
    }

    #[test]
    fn affine_validation() {
        let mut images = smoothing_images().unwrap();
        images.q = gen(Gen::Q).pow(2).unwrap();
        assert!(apply_linear_map(&gen(Gen::P), &images).is_err());
    }

    #[test]
    fn adjoint_series_terminates_on_nilpotent_pair() {
        // A = pi_q, X = q: [A, X] = -i hbar, [A, [A, X]] = 0
        let a = gen(Gen::PiQ);
        let x = gen(Gen::Q);
        let exp = adjoint_series(&a, &x, 10).unwrap();
        assert_eq!(exp.terminated_at, 2);
        let expect = x.add(&param("hbar").scale(&Coeff::i().neg())).unwrap();
        assert_eq!(exp.result, expect);
    }

    #[test]
    fn adjoint_series_detects_nontermination() {
        // A = q^2 + pi_q^2 rotates q into pi_q and back, so no nested
        // commutator ever vanishes
        let a = gen(Gen::Q).pow(2).unwrap().add(&gen(Gen::PiQ).pow(2).unwrap()).unwrap();
        let x = gen(Gen::Q);
        match adjoint_series(&a, &x, 6) {
            Err(Error::SeriesNonTerminating { max_order }) => assert_eq!(max_order, 6),
            other => panic!("expected non-terminating error, got {other:?}"),
        }
    }

    #[test]
    fn smoothed_flow_terminates_with_one_mixed_correction() {
        let exp = smoothed_flow_generator().unwrap();
        assert_eq!(exp.terminated_at, 2);
        assert_eq!(exp.contributions.len(), 2);
        // correction = (i hbar/(2 m f) - i f k/(2 hbar)) pi_Q pi_P
        let pi_mixed = OperatorExpr::generator(Gen::PiQ, VarCase::Upper)
            .mul(&OperatorExpr::generator(Gen::PiP, VarCase::Upper))
            .unwrap();
        let hbar = param("hbar");
        let m = param("m");
        let k = param("k");
        let f = param("f");
        let half_i = Coeff::ratio_i(1, 2).unwrap();
        let first = hbar
            .div_scalar_monomial(&m.mul(&f).unwrap())
            .unwrap()
            .scale(&half_i);
        let second = f.mul(&k).unwrap().div_scalar_monomial(&hbar).unwrap().scale(&half_i);
        let coeff = first.sub(&second).unwrap();
        let expect = classical_flow_generator()
            .unwrap()
            .add(&coeff.mul(&pi_mixed).unwrap())
            .unwrap();
        assert_eq!(exp.result, expect);
    }

    #[test]
    fn mixed_correction_vanishes_at_the_matched_width() {
        // substituting f -> hbar/sqrt(m k) must collapse the conjugated flow
        // back to the classical one; with symbolic square roots unavailable,
        // check on a parameter slice m = k = 1, f = hbar.
        let exp = smoothed_flow_generator().unwrap();
        let one = Coeff::ratio(1, 1).unwrap();
        let specialized = exp
            .result
            .substitute_params(&[
                (1, one.clone(), [0, 0, 0, 0, 0]),          // m -> 1
                (2, one.clone(), [0, 0, 0, 0, 0]),          // k -> 1
                (3, one.clone(), [1, 0, 0, 0, 0]),          // f -> hbar
            ])
            .unwrap();
        let flow = classical_flow_generator()
            .unwrap()
            .substitute_params(&[
                (1, one.clone(), [0, 0, 0, 0, 0]),
                (2, one, [0, 0, 0, 0, 0]),
            ])
            .unwrap();
        assert_eq!(specialized, flow);
    }
}
