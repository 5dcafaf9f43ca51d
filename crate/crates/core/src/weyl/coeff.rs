//! Time-dependent coefficients: exact combinations of `ρ^a ρ̇^b k^c s^e`.
//!
//! `a` may be negative, `b, c ≥ 0`, and `s` is the positive root of `1/2`
//! (`e ∈ {0, 1}`, with `s² → 1/2` applied on multiplication). `ρ̈` never
//! appears: differentiation replaces it by `ρ⁻³ - kρ` on the spot.

use std::collections::BTreeMap;

use num_complex::Complex64;
use num_traits::Zero;

use super::scalar::GaussianRational;

/// Exponents of one coefficient monomial `ρ^rho ρ̇^rhodot k^k s^s`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct CoeffMonomial {
    pub rho: i32,
    pub rhodot: u32,
    pub k: u32,
    pub s: u8,
}

impl CoeffMonomial {
    pub const ONE: CoeffMonomial = CoeffMonomial { rho: 0, rhodot: 0, k: 0, s: 0 };

    pub fn is_one(&self) -> bool {
        *self == Self::ONE
    }

    /// Product of two monomials plus the rational factor produced by `s² = 1/2`.
    fn mul(&self, other: &CoeffMonomial) -> (CoeffMonomial, bool) {
        let s = self.s + other.s;
        (
            CoeffMonomial { rho: self.rho + other.rho, rhodot: self.rhodot + other.rhodot, k: self.k + other.k, s: s % 2 },
            s >= 2,
        )
    }
}

/// An element of the coefficient ring. No zero entries are stored, so the
/// empty map is the unique zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct Coeff {
    terms: BTreeMap<CoeffMonomial, GaussianRational>,
}

impl Coeff {
    pub fn zero() -> Self {
        Coeff::default()
    }

    pub fn one() -> Self {
        Coeff::scalar(GaussianRational::one())
    }

    pub fn scalar(c: GaussianRational) -> Self {
        Coeff::term(c, CoeffMonomial::ONE)
    }

    pub fn term(c: GaussianRational, mono: CoeffMonomial) -> Self {
        let mut out = Coeff::zero();
        out.add_term(mono, &c);
        out
    }

    pub fn int(n: i64) -> Self {
        Coeff::scalar(GaussianRational::from_int(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Coeff::scalar(GaussianRational::from_ratio(num, den))
    }

    pub fn i() -> Self {
        Coeff::scalar(GaussianRational::i())
    }

    /// `ρ^n`.
    pub fn rho_pow(n: i32) -> Self {
        Coeff::term(GaussianRational::one(), CoeffMonomial { rho: n, ..Default::default() })
    }

    pub fn rho() -> Self {
        Coeff::rho_pow(1)
    }

    pub fn rhodot() -> Self {
        Coeff::term(GaussianRational::one(), CoeffMonomial { rhodot: 1, ..Default::default() })
    }

    pub fn k() -> Self {
        Coeff::term(GaussianRational::one(), CoeffMonomial { k: 1, ..Default::default() })
    }

    /// `s = 1/√2`.
    pub fn sqrt_half() -> Self {
        Coeff::term(GaussianRational::one(), CoeffMonomial { s: 1, ..Default::default() })
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&CoeffMonomial, &GaussianRational)> {
        self.terms.iter()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub(crate) fn add_term(&mut self, mono: CoeffMonomial, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        let entry = self.terms.entry(mono).or_insert_with(GaussianRational::zero);
        *entry += c;
        if entry.is_zero() {
            self.terms.remove(&mono);
        }
    }

    pub fn add(&self, other: &Coeff) -> Coeff {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c);
        }
        out
    }

    pub fn neg(&self) -> Coeff {
        Coeff { terms: self.terms.iter().map(|(m, c)| (*m, -c.clone())).collect() }
    }

    pub fn sub(&self, other: &Coeff) -> Coeff {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Coeff) -> Coeff {
        let half = GaussianRational::from_ratio(1, 2);
        let mut out = Coeff::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let (m, halve) = ma.mul(mb);
                let mut c = ca * cb;
                if halve {
                    c = &c * &half;
                }
                out.add_term(m, &c);
            }
        }
        out
    }

    pub fn scale(&self, c: &GaussianRational) -> Coeff {
        let mut out = Coeff::zero();
        for (m, v) in &self.terms {
            out.add_term(*m, &(v * c));
        }
        out
    }

    /// Complex conjugate; `ρ, ρ̇, k, s` are real symbols.
    pub fn conj(&self) -> Coeff {
        Coeff { terms: self.terms.iter().map(|(m, c)| (*m, c.conj())).collect() }
    }

    /// Inverse of a single-term coefficient `c ρ^a s^e`; anything else
    /// (sums, `ρ̇`, `k`) is not invertible in this ring.
    pub fn try_inv(&self) -> Option<Coeff> {
        if self.terms.len() != 1 {
            return None;
        }
        let (m, c) = self.terms.iter().next()?;
        if m.rhodot != 0 || m.k != 0 {
            return None;
        }
        let mut inv = Coeff::term(c.inv()?, CoeffMonomial { rho: -m.rho, ..Default::default() });
        if m.s == 1 {
            // 1/s = 2s
            inv = inv.mul(&Coeff::sqrt_half()).scale(&GaussianRational::from_int(2));
        }
        Some(inv)
    }

    /// Total time derivative with `ρ̇' = ρ̈ = ρ⁻³ - kρ`; `k` is constant here.
    pub fn time_derivative(&self) -> Coeff {
        let mut out = Coeff::zero();
        for (m, c) in &self.terms {
            if m.rho != 0 {
                let d = CoeffMonomial { rho: m.rho - 1, rhodot: m.rhodot + 1, ..*m };
                out.add_term(d, &(c * &GaussianRational::from_int(m.rho as i64)));
            }
            if m.rhodot != 0 {
                let b = c * &GaussianRational::from_int(m.rhodot as i64);
                out.add_term(CoeffMonomial { rho: m.rho - 3, rhodot: m.rhodot - 1, ..*m }, &b);
                out.add_term(CoeffMonomial { rho: m.rho + 1, rhodot: m.rhodot - 1, k: m.k + 1, ..*m }, &-b);
            }
        }
        out
    }

    /// The scalar value if this coefficient is a plain number.
    pub fn as_scalar(&self) -> Option<GaussianRational> {
        match self.terms.len() {
            0 => Some(GaussianRational::zero()),
            1 => {
                let (m, c) = self.terms.iter().next()?;
                m.is_one().then(|| c.clone())
            }
            _ => None,
        }
    }

    /// Numeric value at given `ρ, ρ̇, k`.
    pub fn eval(&self, rho: f64, rhodot: f64, k: f64) -> Complex64 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        self.terms.iter().fold(Complex64::zero(), |acc, (m, c)| {
            let (re, im) = c.to_f64_parts();
            let mag = rho.powi(m.rho) * rhodot.powi(m.rhodot as i32) * k.powi(m.k as i32) * if m.s == 1 { s } else { 1.0 };
            acc + Complex64::new(re, im) * mag
        })
    }
}
