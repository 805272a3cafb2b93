//! Exact complex scalars with rational real and imaginary parts.
//!
//! Every coefficient in the operator engine is kept exact so that algebraic
//! identities (commutators, series termination, cross-term cancellation) can
//! be decided by equality instead of by tolerance.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Complex number `re + im*i` with arbitrary-precision rational parts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coeff {
    pub re: BigRational,
    pub im: BigRational,
}

impl Coeff {
    pub fn zero() -> Self {
        Self { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn one() -> Self {
        Self { re: BigRational::one(), im: BigRational::zero() }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        Self { re: BigRational::zero(), im: BigRational::one() }
    }

    pub fn from_int(n: i64) -> Self {
        Self { re: BigRational::from_integer(BigInt::from(n)), im: BigRational::zero() }
    }

    pub fn from_big(n: BigInt) -> Self {
        Self { re: BigRational::from_integer(n), im: BigRational::zero() }
    }

    /// Real rational `num/den`.
    pub fn ratio(num: i64, den: i64) -> Result<Self> {
        if den == 0 {
            return Err(Error::invalid("zero denominator in rational"));
        }
        Ok(Self {
            re: BigRational::new(BigInt::from(num), BigInt::from(den)),
            im: BigRational::zero(),
        })
    }

    /// Rational multiple of the imaginary unit, `(num/den)*i`.
    pub fn ratio_i(num: i64, den: i64) -> Result<Self> {
        let r = Self::ratio(num, den)?;
        Ok(Self { re: BigRational::zero(), im: r.re })
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn is_imaginary(&self) -> bool {
        self.re.is_zero() && !self.im.is_zero()
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn neg(&self) -> Self {
        Self { re: -self.re.clone(), im: -self.im.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self {
            re: &self.re * &o.re - &self.im * &o.im,
            im: &self.re * &o.im + &self.im * &o.re,
        }
    }

    /// Multiplies by `i^n` (`negative: false`) or `(-i)^n` (`negative: true`).
    pub fn mul_i_pow(&self, n: u32, negative: bool) -> Self {
        let quarter = n % 4;
        let quarter = if negative { (4 - quarter) % 4 } else { quarter };
        match quarter {
            0 => self.clone(),
            1 => Self { re: -self.im.clone(), im: self.re.clone() },
            2 => self.neg(),
            _ => Self { re: self.im.clone(), im: -self.re.clone() },
        }
    }

    /// Multiplicative inverse; fails on zero.
    pub fn inv(&self) -> Result<Self> {
        let norm2 = &self.re * &self.re + &self.im * &self.im;
        if norm2.is_zero() {
            return Err(Error::invalid("division by zero scalar"));
        }
        Ok(Self { re: &self.re / &norm2, im: -(&self.im / &norm2) })
    }

    /// Integer power, negative exponents via the inverse.
    pub fn powi(&self, e: i32) -> Result<Self> {
        let base = if e < 0 { self.inv()? } else { self.clone() };
        let mut out = Self::one();
        for _ in 0..e.unsigned_abs() {
            out = out.mul(&base);
        }
        Ok(out)
    }

    pub fn to_complex(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    /// Sign used when printing a leading `+`/`-`: by the real part, falling
    /// back to the imaginary part for purely imaginary values.
    pub fn print_sign_negative(&self) -> bool {
        if !self.re.is_zero() {
            self.re.is_negative()
        } else {
            self.im.is_negative()
        }
    }
}

/// `j! * C(c, j) * C(a, j)` — the number of ways to contract `j` conjugate
/// pairs when moving `c` conjugate-momentum factors across `a` coordinate
/// factors.  Equals `falling(c, j) * C(a, j)`.
pub fn contraction_count(c: u32, a: u32, j: u32) -> BigInt {
    let mut out = BigInt::one();
    for t in 0..j {
        out *= BigInt::from(c - t);
    }
    // multiply by C(a, j) incrementally to stay integral
    let mut binom = BigInt::one();
    for t in 0..j {
        binom = binom * BigInt::from(a - t) / BigInt::from(t + 1);
    }
    out * binom
}
