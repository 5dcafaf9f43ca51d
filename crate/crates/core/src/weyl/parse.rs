//! Text form of operator polynomials.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := term (("+" | "-") term)*
//! term   := unary (("*" | "/") unary)*
//! unary  := "-" unary | "+" unary | power
//! power  := atom ("^" "-"? integer)?
//! atom   := number | identifier | "(" expr ")"
//! ```
//!
//! Operator identifiers are `q Q p P`, `q1 p1 q2 p2` and `x p lambda_x
//! lambda_p`; scalar identifiers are `rho rhodot k i` and `sqrt_half`
//! (`1/√2`). Division and negative powers are allowed only on invertible
//! scalars (`ρ` powers and nonzero numbers). The printer writes the same
//! grammar, one flattened term per coefficient monomial.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::coeff::{Coeff, CoeffMonomial};
use super::frame::Frame;
use super::poly::WeylPolynomial;
use super::scalar::GaussianRational;
use super::WeylError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(BigRational),
    Ident(String),
    Op(char),
}

fn tokenize(text: &str) -> Result<Vec<(usize, Tok)>, WeylError> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let (pos, c) = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_digit() || chars[i].1 == '.') {
                i += 1;
            }
            let lit: String = chars[start..i].iter().map(|(_, c)| *c).collect();
            out.push((pos, Tok::Num(parse_decimal(&lit).ok_or_else(|| WeylError::Syntax { pos, msg: format!("bad number '{lit}'") })?)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].1.is_ascii_alphanumeric() || chars[i].1 == '_') {
                i += 1;
            }
            out.push((pos, Tok::Ident(chars[start..i].iter().map(|(_, c)| *c).collect())));
        } else if "+-*/^()".contains(c) {
            out.push((pos, Tok::Op(c)));
            i += 1;
        } else {
            return Err(WeylError::Syntax { pos, msg: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

fn parse_decimal(lit: &str) -> Option<BigRational> {
    let (int, frac) = match lit.split_once('.') {
        Some((a, b)) => (a, b),
        None => (lit, ""),
    };
    if (int.is_empty() && frac.is_empty()) || frac.contains('.') {
        return None;
    }
    let digits = format!("{int}{frac}");
    let num: BigInt = digits.parse().ok()?;
    let den = num_traits::pow(BigInt::from(10), frac.len());
    Some(BigRational::new(num, den))
}

#[derive(Debug, Clone)]
enum Ast {
    Num(BigRational),
    Ident(usize, String),
    Neg(Box<Ast>),
    Bin(usize, char, Box<Ast>, Box<Ast>),
    Pow(usize, Box<Ast>, i64),
}

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map(|(p, _)| *p).unwrap_or(self.end)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Tok::Op(op)) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Ast, WeylError> {
        let mut lhs = self.term()?;
        loop {
            let pos = self.pos();
            let op = match self.peek() {
                Some(Tok::Op(c @ ('+' | '-'))) => *c,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.term()?;
            lhs = Ast::Bin(pos, op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Ast, WeylError> {
        let mut lhs = self.unary()?;
        loop {
            let pos = self.pos();
            let op = match self.peek() {
                Some(Tok::Op(c @ ('*' | '/'))) => *c,
                _ => return Ok(lhs),
            };
            self.at += 1;
            let rhs = self.unary()?;
            lhs = Ast::Bin(pos, op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Ast, WeylError> {
        if self.eat('-') {
            return Ok(Ast::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Ast, WeylError> {
        let base = self.atom()?;
        let pos = self.pos();
        if !self.eat('^') {
            return Ok(base);
        }
        let negative = self.eat('-');
        match self.peek().cloned() {
            Some(Tok::Num(n)) if n.is_integer() => {
                self.at += 1;
                let e: i64 = n.to_integer().try_into().map_err(|_| WeylError::Syntax { pos, msg: "exponent too large".into() })?;
                Ok(Ast::Pow(pos, Box::new(base), if negative { -e } else { e }))
            }
            _ => Err(WeylError::Syntax { pos: self.pos(), msg: "expected an integer exponent".into() }),
        }
    }

    fn atom(&mut self) -> Result<Ast, WeylError> {
        let pos = self.pos();
        match self.peek().cloned() {
            Some(Tok::Num(n)) => {
                self.at += 1;
                Ok(Ast::Num(n))
            }
            Some(Tok::Ident(name)) => {
                self.at += 1;
                Ok(Ast::Ident(pos, name))
            }
            Some(Tok::Op('(')) => {
                self.at += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(WeylError::Syntax { pos: self.pos(), msg: "expected ')'".into() });
                }
                Ok(inner)
            }
            Some(Tok::Op(c)) => Err(WeylError::Syntax { pos, msg: format!("unexpected '{c}'") }),
            None => Err(WeylError::Syntax { pos, msg: "unexpected end of input".into() }),
        }
    }
}

const SCALAR_NAMES: [&str; 5] = ["rho", "rhodot", "k", "i", "sqrt_half"];

fn collect_identifiers(ast: &Ast, out: &mut Vec<(usize, String)>) {
    match ast {
        Ast::Num(_) => {}
        Ast::Ident(pos, name) => out.push((*pos, name.clone())),
        Ast::Neg(a) | Ast::Pow(_, a, _) => collect_identifiers(a, out),
        Ast::Bin(_, _, a, b) => {
            collect_identifiers(a, out);
            collect_identifiers(b, out);
        }
    }
}

fn scalar_coeff(name: &str) -> Option<Coeff> {
    Some(match name {
        "rho" => Coeff::rho(),
        "rhodot" => Coeff::rhodot(),
        "k" => Coeff::k(),
        "i" => Coeff::i(),
        "sqrt_half" => Coeff::sqrt_half(),
        _ => return None,
    })
}

fn invertible(p: &WeylPolynomial) -> Option<Coeff> {
    p.as_constant()?.try_inv()
}

fn eval(ast: &Ast, frame: Frame) -> Result<WeylPolynomial, WeylError> {
    match ast {
        Ast::Num(n) => Ok(WeylPolynomial::constant(frame, Coeff::scalar(GaussianRational::real(n.clone())))),
        Ast::Ident(pos, name) => match scalar_coeff(name) {
            Some(c) => Ok(WeylPolynomial::constant(frame, c)),
            None => WeylPolynomial::var(frame, name).map_err(|_| WeylError::UnknownSymbol { name: name.clone(), pos: Some(*pos) }),
        },
        Ast::Neg(a) => Ok(eval(a, frame)?.neg()),
        Ast::Bin(pos, op, a, b) => {
            let (a, b) = (eval(a, frame)?, eval(b, frame)?);
            match op {
                '+' => a.add(&b),
                '-' => a.sub(&b),
                '*' => a.mul(&b),
                _ => {
                    let inv = invertible(&b).ok_or(WeylError::BadDivision { pos: *pos })?;
                    Ok(a.scale(&inv))
                }
            }
        }
        Ast::Pow(pos, base, e) => {
            let base = eval(base, frame)?;
            if *e >= 0 {
                Ok(base.pow(*e as u32))
            } else {
                let inv = invertible(&base).ok_or(WeylError::BadDivision { pos: *pos })?;
                Ok(WeylPolynomial::constant(frame, Coeff::one()).scale(&inv).pow(e.unsigned_abs() as u32))
            }
        }
    }
}

fn parse_ast(text: &str) -> Result<Ast, WeylError> {
    let toks = tokenize(text)?;
    let mut parser = Parser { toks, at: 0, end: text.len() };
    let ast = parser.expr()?;
    if parser.at != parser.toks.len() {
        return Err(WeylError::Syntax { pos: parser.pos(), msg: "trailing input".into() });
    }
    Ok(ast)
}

fn frames_for(ast: &Ast) -> Result<BTreeSet<Frame>, WeylError> {
    let mut idents = Vec::new();
    collect_identifiers(ast, &mut idents);
    let mut candidates: BTreeSet<Frame> = Frame::ALL.into_iter().collect();
    for (pos, name) in idents {
        if SCALAR_NAMES.contains(&name.as_str()) {
            continue;
        }
        let frames: BTreeSet<Frame> = Frame::frames_with(&name).into_iter().collect();
        if frames.is_empty() {
            return Err(WeylError::UnknownSymbol { name, pos: Some(pos) });
        }
        candidates = candidates.intersection(&frames).copied().collect();
        if candidates.is_empty() {
            return Err(WeylError::MixedFrames { pos, name });
        }
    }
    Ok(candidates)
}

/// Parses an operator expression, inferring its frame from the variables used.
pub fn parse_operator(text: &str) -> Result<WeylPolynomial, WeylError> {
    let ast = parse_ast(text)?;
    let frames = frames_for(&ast)?;
    if frames.len() != 1 {
        return Err(WeylError::AmbiguousFrame { candidates: frames.into_iter().collect() });
    }
    eval(&ast, *frames.iter().next().expect("one frame"))
}

/// Parses in a given frame; the variables used must belong to it.
pub fn parse_operator_in(text: &str, frame: Frame) -> Result<WeylPolynomial, WeylError> {
    let ast = parse_ast(text)?;
    let frames = frames_for(&ast)?;
    if !frames.contains(&frame) {
        return Err(WeylError::AmbiguousFrame { candidates: frames.into_iter().collect() });
    }
    eval(&ast, frame)
}

fn write_factor(parts: &mut Vec<String>, name: &str, e: i64) {
    match e {
        0 => {}
        1 => parts.push(name.to_string()),
        e => parts.push(format!("{name}^{e}")),
    }
}

fn write_term(
    f: &mut fmt::Formatter<'_>,
    first: bool,
    mag: &BigRational,
    imaginary: bool,
    cm: &CoeffMonomial,
    mono: &[u32; 4],
    frame: Frame,
) -> fmt::Result {
    let negative = mag.is_negative();
    if first {
        if negative {
            f.write_str("-")?;
        }
    } else {
        f.write_str(if negative { " - " } else { " + " })?;
    }
    let mag = mag.abs();
    let mut parts = Vec::new();
    if imaginary {
        parts.push("i".to_string());
    }
    write_factor(&mut parts, "rho", cm.rho as i64);
    write_factor(&mut parts, "rhodot", cm.rhodot as i64);
    write_factor(&mut parts, "k", cm.k as i64);
    write_factor(&mut parts, "sqrt_half", cm.s as i64);
    for (slot, name) in frame.names().iter().enumerate() {
        write_factor(&mut parts, name, mono[slot] as i64);
    }
    let scalar = if mag.denom().is_one() { mag.numer().to_string() } else { format!("{}/{}", mag.numer(), mag.denom()) };
    if parts.is_empty() || !mag.is_one() {
        parts.insert(0, scalar);
    }
    f.write_str(&parts.join("*"))
}

impl fmt::Display for WeylPolynomial {
    /// Terms are sorted by operator degree, then exponents, then coefficient
    /// monomial; real parts precede imaginary parts.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut terms: Vec<(&[u32; 4], &Coeff)> = self.terms().collect();
        terms.sort_by_key(|(m, _)| (m.iter().sum::<u32>(), **m));
        let mut first = true;
        for (mono, coeff) in terms {
            for (cm, c) in coeff.terms() {
                for (part, imaginary) in [(&c.re, false), (&c.im, true)] {
                    if part.is_zero() {
                        continue;
                    }
                    write_term(f, first, part, imaginary, cm, mono, self.frame())?;
                    first = false;
                }
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weyl::build::{build_hamiltonian, build_invariant, InvariantForm};

    #[test]
    fn hamiltonian_text() {
        assert_eq!(parse_operator("p*P + k*q*Q").unwrap(), build_hamiltonian(Frame::Hidden));
        assert_eq!(parse_operator("p*lambda_x - k*x*lambda_p").unwrap(), build_hamiltonian(Frame::Liouville));
    }

    #[test]
    fn scaled_square() {
        let p = parse_operator("(q1/rho)^2/2").unwrap();
        let expect = WeylPolynomial::from_term(Frame::Split, [2, 0, 0, 0], Coeff::rho_pow(-2).mul(&Coeff::ratio(1, 2)));
        assert_eq!(p, expect);
    }

    #[test]
    fn commutator_by_construction() {
        assert_eq!(parse_operator("q1*p1 - p1*q1").unwrap(), WeylPolynomial::constant(Frame::Split, Coeff::i()));
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_operator("0.5*q").unwrap(), parse_operator("q/2").unwrap());
        assert_eq!(parse_operator("rho^-2*Q").unwrap(), parse_operator("Q/rho^2").unwrap());
    }

    #[test]
    fn errors() {
        assert!(matches!(parse_operator("q1 + * p1"), Err(WeylError::Syntax { pos: 5, .. })));
        assert!(matches!(parse_operator("q1 + z"), Err(WeylError::UnknownSymbol { pos: Some(5), .. })));
        assert!(matches!(parse_operator("q1 + x"), Err(WeylError::MixedFrames { .. })));
        assert!(matches!(parse_operator("p*k"), Err(WeylError::AmbiguousFrame { .. })));
        assert!(matches!(parse_operator("q1/p1"), Err(WeylError::BadDivision { .. })));
        assert!(matches!(parse_operator("q1/rhodot"), Err(WeylError::BadDivision { .. })));
        assert!(matches!(parse_operator("q1^-1"), Err(WeylError::BadDivision { .. })));
        assert!(matches!(parse_operator("(q1 + p1"), Err(WeylError::Syntax { .. })));
        assert!(matches!(parse_operator("q1^x"), Err(WeylError::Syntax { .. })));
        assert!(matches!(parse_operator("q1 $"), Err(WeylError::Syntax { pos: 3, .. })));
        assert_eq!(parse_operator_in("p*k", Frame::Liouville).unwrap().frame(), Frame::Liouville);
        assert!(parse_operator_in("q1", Frame::Hidden).is_err());
    }

    #[test]
    fn printer_output() {
        assert_eq!(WeylPolynomial::zero(Frame::Split).to_string(), "0");
        assert_eq!(build_hamiltonian(Frame::Hidden).to_string(), "p*P + k*q*Q");
        assert_eq!(parse_operator("q1*p1 - p1*q1").unwrap().to_string(), "i");
        assert_eq!(parse_operator("-3/4*i*rho^-2*q2^2").unwrap().to_string(), "-3/4*i*rho^-2*q2^2");
    }

    #[test]
    fn invariants_round_trip() {
        for form in InvariantForm::ALL {
            let p = build_invariant(form);
            let text = p.to_string();
            assert_eq!(parse_operator_in(&text, p.frame()).unwrap(), p, "{text}");
        }
    }
}
