//! Normal-ordered operator polynomials over an exact scalar field.
//!
//! An expression is a sum of monomials `coeff * hbar^e0 m^e1 k^e2 f^e3
//! omega^e4 * q^a p^b pi_q^c pi_p^d`, stored in a map keyed by the exponent
//! tuple.  The only nontrivial commutators are `[pi_q, q] = [pi_p, p] =
//! -i*hbar`; products are rewritten into the canonical order (coordinates
//! left of conjugate momenta) on the fly, so equal operators always have
//! equal representations and zero is always recognized exactly.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::One;

use super::coeff::{contraction_count, Coeff};
use crate::error::{Error, Result};

/// Model parameters that may appear symbolically in coefficients.
pub const PARAM_NAMES: [&str; 5] = ["hbar", "m", "k", "f", "omega"];

/// Largest symbolic parameter exponent before the engine refuses to continue.
pub const MAX_PARAM_EXPONENT: i16 = 16;

/// Largest power of a single generator before the engine refuses to continue.
pub const MAX_GENERATOR_POWER: u32 = 32;

/// Whether an expression is written in the base variables `q, p, pi_q, pi_p`
/// or the transformed variables `Q, P, pi_Q, pi_P`.  The two alphabets name
/// operators in different representations and must not be mixed in one
/// expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarCase {
    Lower,
    Upper,
}

/// The four generators of the algebra.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gen {
    Q,
    P,
    PiQ,
    PiP,
}

/// Exponent tuple of one monomial.  Ordering groups terms by conjugate-
/// momentum content first, which the printer walks in reverse so that
/// highest-order momentum terms lead.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct TermKey {
    pub piq: u32,
    pub pip: u32,
    pub q: u32,
    pub p: u32,
    pub params: [i16; 5],
}

impl TermKey {
    pub fn scalar() -> Self {
        Self { piq: 0, pip: 0, q: 0, p: 0, params: [0; 5] }
    }

    pub fn has_generators(&self) -> bool {
        self.piq > 0 || self.pip > 0 || self.q > 0 || self.p > 0
    }

    /// Total power in the four generators.
    pub fn generator_degree(&self) -> u32 {
        self.piq + self.pip + self.q + self.p
    }

    fn checked(self) -> Result<Self> {
        for e in self.params {
            if e.abs() > MAX_PARAM_EXPONENT {
                return Err(Error::ExpressionBlowup(format!(
                    "parameter exponent {e} exceeds {MAX_PARAM_EXPONENT}"
                )));
            }
        }
        for g in [self.piq, self.pip, self.q, self.p] {
            if g > MAX_GENERATOR_POWER {
                return Err(Error::ExpressionBlowup(format!(
                    "generator power {g} exceeds {MAX_GENERATOR_POWER}"
                )));
            }
        }
        Ok(self)
    }
}

/// A normal-ordered operator polynomial.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: BTreeMap<TermKey, Coeff>,
    case: Option<VarCase>,
}

impl OperatorExpr {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new(), case: None }
    }

    pub fn scalar(c: Coeff) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(TermKey::scalar(), c);
        }
        Self { terms, case: None }
    }

    pub fn one() -> Self {
        Self::scalar(Coeff::one())
    }

    pub fn imaginary_unit() -> Self {
        Self::scalar(Coeff::i())
    }

    pub fn int(n: i64) -> Self {
        Self::scalar(Coeff::from_int(n))
    }

    /// A single symbolic parameter (index into [`PARAM_NAMES`]).
    pub fn param(idx: usize) -> Self {
        let mut key = TermKey::scalar();
        key.params[idx] = 1;
        let mut terms = BTreeMap::new();
        terms.insert(key, Coeff::one());
        Self { terms, case: None }
    }

    pub fn param_by_name(name: &str) -> Result<Self> {
        let idx = PARAM_NAMES
            .iter()
            .position(|&n| n == name)
            .ok_or_else(|| Error::UnboundSymbol(name.to_string()))?;
        Ok(Self::param(idx))
    }

    /// A single generator in the given alphabet.
    pub fn generator(g: Gen, case: VarCase) -> Self {
        let mut key = TermKey::scalar();
        match g {
            Gen::Q => key.q = 1,
            Gen::P => key.p = 1,
            Gen::PiQ => key.piq = 1,
            Gen::PiP => key.pip = 1,
        }
        let mut terms = BTreeMap::new();
        terms.insert(key, Coeff::one());
        Self { terms, case: Some(case) }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn case(&self) -> Option<VarCase> {
        self.case
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Iterate monomials in storage order.
    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &Coeff)> {
        self.terms.iter()
    }

    /// True when no term contains a generator.
    pub fn is_cnumber(&self) -> bool {
        self.terms.keys().all(|k| !k.has_generators())
    }

    /// Highest total generator power over all terms.
    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|k| k.generator_degree()).max().unwrap_or(0)
    }

    /// If the expression is a single generator-free monomial, return it.
    pub fn as_scalar_monomial(&self) -> Option<(Coeff, [i16; 5])> {
        if self.terms.len() != 1 {
            return None;
        }
        let (key, coeff) = self.terms.iter().next()?;
        if key.has_generators() {
            return None;
        }
        Some((coeff.clone(), key.params))
    }

    fn unify_case(a: Option<VarCase>, b: Option<VarCase>) -> Result<Option<VarCase>> {
        match (a, b) {
            (None, x) | (x, None) => Ok(x),
            (Some(x), Some(y)) if x == y => Ok(Some(x)),
            _ => Err(Error::invalid(
                "cannot mix base variables (q, p, pi_q, pi_p) with transformed variables (Q, P, pi_Q, pi_P)",
            )),
        }
    }

    /// Drop the case tag when cancellation left only generator-free terms, so
    /// scalar results recombine freely with either alphabet.
    fn normalize_case(&mut self) {
        if self.terms.keys().all(|k| !k.has_generators()) {
            self.case = None;
        }
    }

    fn insert_term(terms: &mut BTreeMap<TermKey, Coeff>, key: TermKey, c: Coeff) -> Result<()> {
        if c.is_zero() {
            return Ok(());
        }
        let key = key.checked()?;
        match terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                let sum = e.get().add(&c);
                if sum.is_zero() {
                    e.remove();
                } else {
                    *e.get_mut() = sum;
                }
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        let case = Self::unify_case(self.case, other.case)?;
        let mut terms = self.terms.clone();
        for (k, c) in &other.terms {
            Self::insert_term(&mut terms, k.clone(), c.clone())?;
        }
        let mut out = Self { terms, case };
        out.normalize_case();
        Ok(out)
    }

    pub fn neg(&self) -> Self {
        let terms = self.terms.iter().map(|(k, c)| (k.clone(), c.neg())).collect();
        Self { terms, case: self.case }
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &Coeff) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        let terms = self.terms.iter().map(|(k, v)| (k.clone(), v.mul(c))).collect();
        Self { terms, case: self.case }
    }

    /// Product, rewritten to canonical order.  Moving `pi^c` across `x^a`
    /// contracts `j` pairs with weight `j! C(c,j) C(a,j) (-i hbar)^j`.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        let case = Self::unify_case(self.case, other.case)?;
        let mut terms = BTreeMap::new();
        for (k1, c1) in &self.terms {
            for (k2, c2) in &other.terms {
                let base = c1.mul(c2);
                let jmax = k1.piq.min(k2.q);
                let lmax = k1.pip.min(k2.p);
                for j in 0..=jmax {
                    for l in 0..=lmax {
                        let count = contraction_count(k1.piq, k2.q, j)
                            * contraction_count(k1.pip, k2.p, l);
                        let mut coeff = if count.is_one() {
                            base.clone()
                        } else {
                            base.mul(&Coeff::from_big(count))
                        };
                        coeff = coeff.mul_i_pow(j + l, true);
                        let mut params = k1.params;
                        for (e, o) in params.iter_mut().zip(k2.params) {
                            *e += o;
                        }
                        params[0] += (j + l) as i16; // each contraction carries one hbar
                        let key = TermKey {
                            piq: k1.piq + k2.piq - j,
                            pip: k1.pip + k2.pip - l,
                            q: k1.q + k2.q - j,
                            p: k1.p + k2.p - l,
                            params,
                        };
                        Self::insert_term(&mut terms, key, coeff)?;
                    }
                }
            }
        }
        let mut out = Self { terms, case };
        out.normalize_case();
        Ok(out)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn pow(&self, n: u32) -> Result<Self> {
        let mut out = Self::one();
        for _ in 0..n {
            out = out.mul(self)?;
        }
        Ok(out)
    }

    /// Multiplies by the inverse of a generator-free monomial.
    pub fn div_scalar_monomial(&self, divisor: &Self) -> Result<Self> {
        let (coeff, params) = divisor.as_scalar_monomial().ok_or_else(|| {
            Error::invalid("division is only defined by a single generator-free monomial")
        })?;
        let inv = coeff.inv()?;
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut key = k.clone();
            for (e, o) in key.params.iter_mut().zip(params) {
                *e -= o;
            }
            Self::insert_term(&mut terms, key, c.mul(&inv))?;
        }
        let mut out = Self { terms, case: self.case };
        out.normalize_case();
        Ok(out)
    }

    /// Replaces parameters by rational multiples of parameter monomials.
    /// Each binding maps a parameter index to `coeff * prod params^exps`;
    /// a bound parameter must not appear in any replacement.
    pub fn substitute_params(&self, bindings: &[(usize, Coeff, [i16; 5])]) -> Result<Self> {
        for (idx, coeff, exps) in bindings {
            if *idx >= PARAM_NAMES.len() {
                return Err(Error::invalid("parameter index out of range"));
            }
            if coeff.is_zero() {
                return Err(Error::invalid("cannot bind a parameter to zero"));
            }
            if bindings.iter().any(|(j, _, _)| exps[*j] != 0) {
                return Err(Error::invalid("parameter replacement refers to a bound parameter"));
            }
        }
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            let mut key = k.clone();
            let mut coeff = c.clone();
            for (idx, bc, exps) in bindings {
                let e = key.params[*idx];
                if e == 0 {
                    continue;
                }
                key.params[*idx] = 0;
                coeff = coeff.mul(&bc.powi(e as i32)?);
                for (t, o) in key.params.iter_mut().zip(exps) {
                    *t += e * o;
                }
            }
            Self::insert_term(&mut terms, key, coeff)?;
        }
        let mut out = Self { terms, case: self.case };
        out.normalize_case();
        Ok(out)
    }

    /// Formal partial derivative with respect to one generator, valid for
    /// expressions in which that generator commutes with everything present
    /// (used on classical polynomials in `q`, `p`).
    pub fn formal_derivative(&self, g: Gen) -> Result<Self> {
        let mut terms = BTreeMap::new();
        for (k, c) in &self.terms {
            if k.piq > 0 || k.pip > 0 {
                return Err(Error::invalid(
                    "formal derivative expects a polynomial in the coordinates only",
                ));
            }
            let mut key = k.clone();
            let power = match g {
                Gen::Q => &mut key.q,
                Gen::P => &mut key.p,
                Gen::PiQ => &mut key.piq,
                Gen::PiP => &mut key.pip,
            };
            if *power == 0 {
                continue;
            }
            let n = *power;
            *power -= 1;
            Self::insert_term(&mut terms, key, c.mul(&Coeff::from_big(BigInt::from(n))))?;
        }
        let mut out = Self { terms, case: self.case };
        out.normalize_case();
        Ok(out)
    }

    /// Rewrites the expression in the other alphabet without changing any
    /// exponents (a pure relabeling, used when a map's output is read in the
    /// transformed representation).
    pub fn with_case(&self, case: VarCase) -> Self {
        let mut out = self.clone();
        if out.terms.keys().any(|k| k.has_generators()) {
            out.case = Some(case);
        }
        out
    }
}
