//! Text form of operator expressions.
//!
//! The grammar accepts sums of products over the symbols `q p pi_q pi_p`
//! (base alphabet), `Q P pi_Q pi_P` (transformed alphabet), the parameters
//! `hbar m k f omega`, the imaginary unit `i`, integer and decimal literals,
//! parentheses, `*`, `/`, unary `+`/`-`, and `^` with integer exponents.
//! Division is defined only by generator-free monomials.  The printer emits
//! a canonical form (highest conjugate-momentum content first) that parses
//! back to the identical expression.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use super::coeff::Coeff;
use super::expr::{Gen, OperatorExpr, VarCase, PARAM_NAMES};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Number(BigRational),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    Open,
    Close,
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let chars: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Token::Plus);
                i += 1;
            }
            '-' => {
                out.push(Token::Minus);
                i += 1;
            }
            '*' => {
                out.push(Token::Star);
                i += 1;
            }
            '/' => {
                out.push(Token::Slash);
                i += 1;
            }
            '^' => {
                out.push(Token::Caret);
                i += 1;
            }
            '(' => {
                out.push(Token::Open);
                i += 1;
            }
            ')' => {
                out.push(Token::Close);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                let mut seen_dot = false;
                while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                    if chars[i] == '.' {
                        if seen_dot {
                            return Err(Error::invalid("malformed number: second decimal point"));
                        }
                        seen_dot = true;
                    }
                    i += 1;
                }
                let text: String = chars[start..i].iter().collect();
                out.push(Token::Number(decimal_to_rational(&text)?));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                out.push(Token::Ident(chars[start..i].iter().collect()));
            }
            other => return Err(Error::invalid(format!("unexpected character `{other}`"))),
        }
    }
    Ok(out)
}

fn decimal_to_rational(text: &str) -> Result<BigRational> {
    if text == "." {
        return Err(Error::invalid("malformed number `.`"));
    }
    let (int_part, frac_part) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    let digits: String = format!("{int_part}{frac_part}");
    let num: BigInt = digits.parse().map_err(|_| Error::invalid(format!("bad number `{text}`")))?;
    let den = BigInt::from(10u32).pow(frac_part.len() as u32);
    Ok(BigRational::new(num, den))
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn bump(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expr(&mut self) -> Result<OperatorExpr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    acc = acc.add(&self.term()?)?;
                }
                Some(Token::Minus) => {
                    self.bump();
                    acc = acc.sub(&self.term()?)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<OperatorExpr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    acc = acc.mul(&self.unary()?)?;
                }
                Some(Token::Slash) => {
                    self.bump();
                    let rhs = self.unary()?;
                    acc = acc.div_scalar_monomial(&rhs)?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<OperatorExpr> {
        let mut negate = false;
        loop {
            match self.peek() {
                Some(Token::Minus) => {
                    self.bump();
                    negate = !negate;
                }
                Some(Token::Plus) => {
                    self.bump();
                }
                _ => break,
            }
        }
        let e = self.power()?;
        Ok(if negate { e.neg() } else { e })
    }

    fn power(&mut self) -> Result<OperatorExpr> {
        let base = self.primary()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        self.bump();
        let exponent = self.exponent()?;
        if exponent >= 0 {
            base.pow(exponent as u32)
        } else {
            // negative powers only make sense for invertible scalars
            let inv = OperatorExpr::one().div_scalar_monomial(&base)?;
            inv.pow(exponent.unsigned_abs())
        }
    }

    fn exponent(&mut self) -> Result<i32> {
        let mut negate = false;
        let mut parens = false;
        if self.peek() == Some(&Token::Open) {
            self.bump();
            parens = true;
        }
        if self.peek() == Some(&Token::Minus) {
            self.bump();
            negate = true;
        }
        let value = match self.bump() {
            Some(Token::Number(r)) if r.is_integer() => {
                let n = r.to_integer();
                i32::try_from(&n).map_err(|_| Error::invalid("exponent out of range"))?
            }
            other => return Err(Error::invalid(format!("expected integer exponent, got {other:?}"))),
        };
        if parens && self.bump() != Some(Token::Close) {
            return Err(Error::invalid("unclosed parenthesis in exponent"));
        }
        Ok(if negate { -value } else { value })
    }

    fn primary(&mut self) -> Result<OperatorExpr> {
        match self.bump() {
            Some(Token::Number(r)) => Ok(OperatorExpr::scalar(Coeff { re: r, im: BigRational::zero() })),
            Some(Token::Ident(name)) => symbol(&name),
            Some(Token::Open) => {
                let inner = self.expr()?;
                if self.bump() != Some(Token::Close) {
                    return Err(Error::invalid("unclosed parenthesis"));
                }
                Ok(inner)
            }
            other => Err(Error::invalid(format!("expected a value, got {other:?}"))),
        }
    }
}

fn symbol(name: &str) -> Result<OperatorExpr> {
    let gen = |g, case| Ok(OperatorExpr::generator(g, case));
    match name {
        "q" => gen(Gen::Q, VarCase::Lower),
        "p" => gen(Gen::P, VarCase::Lower),
        "pi_q" => gen(Gen::PiQ, VarCase::Lower),
        "pi_p" => gen(Gen::PiP, VarCase::Lower),
        "Q" => gen(Gen::Q, VarCase::Upper),
        "P" => gen(Gen::P, VarCase::Upper),
        "pi_Q" => gen(Gen::PiQ, VarCase::Upper),
        "pi_P" => gen(Gen::PiP, VarCase::Upper),
        "i" => Ok(OperatorExpr::imaginary_unit()),
        _ => OperatorExpr::param_by_name(name),
    }
}

/// Parses the textual form of an operator expression.
pub fn parse_expr(src: &str) -> Result<OperatorExpr> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(Error::invalid("empty expression"));
    }
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    if parser.pos != parser.tokens.len() {
        return Err(Error::invalid(format!(
            "trailing input after position {}",
            parser.pos
        )));
    }
    Ok(expr)
}

fn big_str(n: &BigInt) -> String {
    n.to_string()
}

/// `"3"` or `"3/4"` for positive rationals.
fn rational_tokens(r: &BigRational, numerator: &mut Vec<String>, denominator: &mut Vec<String>) {
    if !r.numer().is_one() {
        numerator.push(big_str(r.numer()));
    }
    if !r.denom().is_one() {
        denominator.push(big_str(r.denom()));
    }
}

fn signed_rational_str(r: &BigRational) -> String {
    if r.denom().is_one() {
        big_str(r.numer())
    } else {
        format!("{}/{}", big_str(r.numer()), big_str(r.denom()))
    }
}

fn param_tokens(params: &[i16; 5], numerator: &mut Vec<String>, denominator: &mut Vec<String>) {
    // the width parameter prints before the spring constant, matching the
    // conventional factored form of the mixed correction
    const DISPLAY_ORDER: [usize; 5] = [0, 1, 3, 2, 4];
    for idx in DISPLAY_ORDER {
        let e = params[idx];
        if e == 0 {
            continue;
        }
        let mag = e.unsigned_abs();
        let token = if mag == 1 {
            PARAM_NAMES[idx].to_string()
        } else {
            format!("{}^{}", PARAM_NAMES[idx], mag)
        };
        if e > 0 {
            numerator.push(token);
        } else {
            denominator.push(token);
        }
    }
}

/// Coefficient and parameter part of one term without outer parentheses;
/// the flag reports whether it is a fraction (and so needs them when it
/// multiplies generators on its own).
fn coefficient_str_parts(c: &Coeff, params: &[i16; 5]) -> (String, bool) {
    let mut numerator: Vec<String> = Vec::new();
    let mut denominator: Vec<String> = Vec::new();
    if c.is_real() {
        rational_tokens(&c.re, &mut numerator, &mut denominator);
    } else if c.is_imaginary() {
        rational_tokens(&c.im, &mut numerator, &mut denominator);
        numerator.push("i".to_string());
    } else {
        numerator.push(format!(
            "({} + {}*i)",
            signed_rational_str(&c.re),
            signed_rational_str(&c.im)
        ));
    }
    param_tokens(params, &mut numerator, &mut denominator);
    if denominator.is_empty() {
        (numerator.join("*"), false)
    } else {
        let num = if numerator.is_empty() { "1".to_string() } else { numerator.join("*") };
        let den = if denominator.len() == 1 {
            denominator[0].clone()
        } else {
            format!("({})", denominator.join("*"))
        };
        (format!("{num}/{den}"), true)
    }
}

/// Coefficient and parameter part of one term; empty string when it is
/// exactly one.
fn coefficient_str(c: &Coeff, params: &[i16; 5]) -> String {
    let (bare, fraction) = coefficient_str_parts(c, params);
    if fraction {
        format!("({bare})")
    } else {
        bare
    }
}

fn generator_tokens(key: &super::expr::TermKey, case: VarCase) -> Vec<String> {
    let names = match case {
        VarCase::Lower => ["q", "p", "pi_q", "pi_p"],
        VarCase::Upper => ["Q", "P", "pi_Q", "pi_P"],
    };
    let mut out = Vec::new();
    for (power, name) in [key.q, key.p, key.piq, key.pip].iter().zip([names[0], names[1], names[2], names[3]]) {
        match power {
            0 => {}
            1 => out.push(name.to_string()),
            n => out.push(format!("{name}^{n}")),
        }
    }
    out
}

/// Renders the canonical text form.  Terms are ordered with the highest
/// conjugate-momentum powers first; the output parses back to an expression
/// equal to the input.
pub fn print_expr(expr: &OperatorExpr) -> String {
    if expr.is_zero() {
        return "0".to_string();
    }
    let case = expr.case().unwrap_or(VarCase::Lower);
    let terms: Vec<_> = expr.terms().collect();
    let mut out = String::new();
    for (idx, (key, coeff)) in terms.iter().rev().enumerate() {
        let negative = coeff.print_sign_negative();
        let magnitude = if negative { coeff.neg() } else { (*coeff).clone() };
        if idx == 0 {
            if negative {
                out.push_str("- ");
            }
        } else if negative {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        let coeff_part = coefficient_str(&magnitude, &key.params);
        let mut tokens: Vec<String> = Vec::new();
        if !coeff_part.is_empty() {
            tokens.push(coeff_part);
        }
        tokens.extend(generator_tokens(key, case));
        if tokens.is_empty() {
            tokens.push("1".to_string());
        }
        out.push_str(&tokens.join("*"));
    }
    out
}

/// Like [`print_expr`], but terms sharing one generator monomial print it
/// once, with their scalar coefficients collected in a single set of
/// parentheses: `(i*hbar/(2*m*f) - i*f*k/(2*hbar))*pi_Q*pi_P`.  The output
/// still parses back to an expression equal to the input, and expressions
/// with no shared monomials print exactly as [`print_expr`] does.
pub fn print_expr_grouped(expr: &OperatorExpr) -> String {
    if expr.is_zero() {
        return "0".to_string();
    }
    let case = expr.case().unwrap_or(VarCase::Lower);
    let terms: Vec<_> = expr.terms().collect();
    // descending key order keeps equal generator monomials adjacent
    let mut groups: Vec<Vec<(&super::expr::TermKey, &Coeff)>> = Vec::new();
    for (key, coeff) in terms.iter().rev() {
        let same = groups.last().is_some_and(|g| {
            let k = g[0].0;
            (k.piq, k.pip, k.q, k.p) == (key.piq, key.pip, key.q, key.p)
        });
        if same {
            groups.last_mut().unwrap().push((key, coeff));
        } else {
            groups.push(vec![(key, coeff)]);
        }
    }
    let mut out = String::new();
    for (gi, group) in groups.iter().enumerate() {
        if group.len() == 1 {
            let (key, coeff) = group[0];
            let negative = coeff.print_sign_negative();
            let magnitude = if negative { coeff.neg() } else { coeff.clone() };
            if gi == 0 {
                if negative {
                    out.push_str("- ");
                }
            } else if negative {
                out.push_str(" - ");
            } else {
                out.push_str(" + ");
            }
            let coeff_part = coefficient_str(&magnitude, &key.params);
            let mut tokens: Vec<String> = Vec::new();
            if !coeff_part.is_empty() {
                tokens.push(coeff_part);
            }
            tokens.extend(generator_tokens(key, case));
            if tokens.is_empty() {
                tokens.push("1".to_string());
            }
            out.push_str(&tokens.join("*"));
            continue;
        }
        if gi > 0 {
            out.push_str(" + ");
        }
        let mut inner = String::new();
        for (i, (key, coeff)) in group.iter().enumerate() {
            let negative = coeff.print_sign_negative();
            let magnitude = if negative { coeff.neg() } else { (*coeff).clone() };
            if i == 0 {
                if negative {
                    inner.push_str("- ");
                }
            } else if negative {
                inner.push_str(" - ");
            } else {
                inner.push_str(" + ");
            }
            let (bare, _) = coefficient_str_parts(&magnitude, &key.params);
            inner.push_str(if bare.is_empty() { "1" } else { &bare });
        }
        let mut tokens = vec![format!("({inner})")];
        tokens.extend(generator_tokens(group[0].0, case));
        out.push_str(&tokens.join("*"));
    }
    out
}
