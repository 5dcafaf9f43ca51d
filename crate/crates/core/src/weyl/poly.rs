use std::collections::BTreeMap;

use super::coeff::Coeff;
use super::frame::{Frame, Variable};
use super::scalar::GaussianRational;
use super::WeylError;

/// Exponents over a frame's four slots, read in normal (slot) order.
pub type Monomial = [u32; 4];

/// A polynomial in one frame's operators, stored in normal order.
///
/// The map never holds zero coefficients, so equality of two polynomials is
/// equality of the operators they denote.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WeylPolynomial {
    frame: Frame,
    terms: BTreeMap<Monomial, Coeff>,
}

fn binomial(n: u32, k: u32) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j + 1) as i64)
}

fn factorial(n: u32) -> i64 {
    (1..=n as i64).product()
}

/// `(x^a p^b)(x^c p^d)` in normal order for one pair with `[x, p] = i`, as
/// `(k, coefficient)` with result `x^(a+c-k) p^(b+d-k)`.
fn pair_product(b: u32, c: u32) -> Vec<(u32, GaussianRational)> {
    // p^b x^c = Σ_k k! C(b,k) C(c,k) (-i)^k x^(c-k) p^(b-k)
    (0..=b.min(c))
        .map(|k| {
            let n = factorial(k) * binomial(b, k) * binomial(c, k);
            let phase = GaussianRational::i_pow(-(k as i64));
            (k, &phase * &GaussianRational::from_int(n))
        })
        .collect()
}

impl WeylPolynomial {
    pub fn zero(frame: Frame) -> Self {
        WeylPolynomial { frame, terms: BTreeMap::new() }
    }

    pub fn constant(frame: Frame, c: Coeff) -> Self {
        WeylPolynomial::from_term(frame, [0; 4], c)
    }

    pub fn one(frame: Frame) -> Self {
        WeylPolynomial::constant(frame, Coeff::one())
    }

    pub fn from_term(frame: Frame, mono: Monomial, c: Coeff) -> Self {
        let mut p = WeylPolynomial::zero(frame);
        p.add_term(mono, &c);
        p
    }

    pub fn variable(v: Variable) -> Self {
        let mut mono = [0; 4];
        mono[v.slot] = 1;
        WeylPolynomial::from_term(v.frame, mono, Coeff::one())
    }

    /// The variable named `name` in `frame`.
    pub fn var(frame: Frame, name: &str) -> Result<Self, WeylError> {
        frame
            .var(name)
            .map(WeylPolynomial::variable)
            .ok_or_else(|| WeylError::UnknownSymbol { name: name.into(), pos: None })
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Coeff)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, mono: &Monomial) -> Option<&Coeff> {
        self.terms.get(mono)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// The coefficient if the polynomial is a multiple of the identity.
    pub fn as_constant(&self) -> Option<Coeff> {
        match self.terms.len() {
            0 => Some(Coeff::zero()),
            1 => self.terms.get(&[0; 4]).cloned(),
            _ => None,
        }
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|m| m.iter().sum()).max().unwrap_or(0)
    }

    fn add_term(&mut self, mono: Monomial, c: &Coeff) {
        if c.is_zero() {
            return;
        }
        let sum = match self.terms.get(&mono) {
            Some(existing) => existing.add(c),
            None => c.clone(),
        };
        if sum.is_zero() {
            self.terms.remove(&mono);
        } else {
            self.terms.insert(mono, sum);
        }
    }

    fn same_frame(&self, other: &WeylPolynomial) -> Result<(), WeylError> {
        if self.frame != other.frame {
            return Err(WeylError::FrameMismatch { left: self.frame, right: other.frame });
        }
        Ok(())
    }

    pub fn add(&self, other: &WeylPolynomial) -> Result<WeylPolynomial, WeylError> {
        self.same_frame(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(*m, c);
        }
        Ok(out)
    }

    pub fn neg(&self) -> WeylPolynomial {
        WeylPolynomial { frame: self.frame, terms: self.terms.iter().map(|(m, c)| (*m, c.neg())).collect() }
    }

    pub fn sub(&self, other: &WeylPolynomial) -> Result<WeylPolynomial, WeylError> {
        self.add(&other.neg())
    }

    /// Multiplies every coefficient by `c`.
    pub fn scale(&self, c: &Coeff) -> WeylPolynomial {
        let mut out = WeylPolynomial::zero(self.frame);
        for (m, v) in &self.terms {
            out.add_term(*m, &v.mul(c));
        }
        out
    }

    /// Normal-ordered product of two monomials.
    fn monomial_product(&self, a: &Monomial, b: &Monomial) -> Vec<(Monomial, GaussianRational)> {
        let [(x1, p1), (x2, p2)] = self.frame.pairs();
        let first = pair_product(a[p1], b[x1]);
        let second = pair_product(a[p2], b[x2]);
        let mut out = Vec::with_capacity(first.len() * second.len());
        for (k1, c1) in &first {
            for (k2, c2) in &second {
                let mut m = [0u32; 4];
                for s in 0..4 {
                    m[s] = a[s] + b[s];
                }
                m[x1] -= k1;
                m[p1] -= k1;
                m[x2] -= k2;
                m[p2] -= k2;
                out.push((m, c1 * c2));
            }
        }
        out
    }

    /// Noncommutative product, renormalized via the frame's commutation rules.
    pub fn mul(&self, other: &WeylPolynomial) -> Result<WeylPolynomial, WeylError> {
        self.same_frame(other)?;
        let mut out = WeylPolynomial::zero(self.frame);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                let cab = ca.mul(cb);
                for (m, z) in self.monomial_product(ma, mb) {
                    out.add_term(m, &cab.scale(&z));
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, n: u32) -> WeylPolynomial {
        (0..n).fold(WeylPolynomial::one(self.frame), |acc, _| acc.mul(self).expect("same frame"))
    }

    /// `ab - ba`.
    pub fn commutator(&self, other: &WeylPolynomial) -> Result<WeylPolynomial, WeylError> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    /// Formal adjoint: reverse each monomial's factors, conjugate its
    /// coefficient and bring the result back to normal order.
    pub fn adjoint(&self) -> WeylPolynomial {
        let mut out = WeylPolynomial::zero(self.frame);
        for (m, c) in &self.terms {
            let mut reversed = WeylPolynomial::constant(self.frame, c.conj());
            for slot in (0..4).rev() {
                let v = WeylPolynomial::variable(Variable { frame: self.frame, slot });
                reversed = reversed.mul(&v.pow(m[slot])).expect("same frame");
            }
            out = out.add(&reversed).expect("same frame");
        }
        out
    }

    /// `∂/∂t` acting on coefficients only, with the Ermakov reduction of `ρ̈`.
    pub fn time_derivative(&self) -> WeylPolynomial {
        let mut out = WeylPolynomial::zero(self.frame);
        for (m, c) in &self.terms {
            out.add_term(*m, &c.time_derivative());
        }
        out
    }

    /// Rebuilds `self` in another frame from each slot's image there.
    pub(crate) fn map_variables(&self, target: Frame, images: &[WeylPolynomial; 4]) -> WeylPolynomial {
        let mut out = WeylPolynomial::zero(target);
        for (m, c) in &self.terms {
            let mut prod = WeylPolynomial::constant(target, c.clone());
            for slot in 0..4 {
                prod = prod.mul(&images[slot].pow(m[slot])).expect("images live in the target frame");
            }
            out = out.add(&prod).expect("same frame");
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(frame: Frame, name: &str) -> WeylPolynomial {
        WeylPolynomial::var(frame, name).unwrap()
    }

    #[test]
    fn addition_merges_and_cancels() {
        let q = v(Frame::Hidden, "q");
        assert_eq!(q.add(&q).unwrap(), q.scale(&Coeff::int(2)));
        assert!(q.add(&q.neg()).unwrap().is_zero());
    }

    #[test]
    fn single_swap() {
        let (q1, p1) = (v(Frame::Split, "q1"), v(Frame::Split, "p1"));
        let expect = q1.mul(&p1).unwrap().sub(&WeylPolynomial::constant(Frame::Split, Coeff::i())).unwrap();
        assert_eq!(p1.mul(&q1).unwrap(), expect);
    }

    #[test]
    fn other_pair_commutes() {
        let (q1, p2) = (v(Frame::Split, "q1"), v(Frame::Split, "p2"));
        assert!(q1.commutator(&p2).unwrap().is_zero());
    }

    #[test]
    fn higher_reordering() {
        // p² x² = x²p² - 4i xp - 2
        let (x, p) = (v(Frame::Split, "q1"), v(Frame::Split, "p1"));
        let lhs = p.pow(2).mul(&x.pow(2)).unwrap();
        let expect = WeylPolynomial::from_term(Frame::Split, [2, 2, 0, 0], Coeff::one())
            .add(&WeylPolynomial::from_term(Frame::Split, [1, 1, 0, 0], Coeff::i().scale(&GaussianRational::from_int(-4))))
            .unwrap()
            .add(&WeylPolynomial::constant(Frame::Split, Coeff::int(-2)))
            .unwrap();
        assert_eq!(lhs, expect);
    }

    #[test]
    fn frame_mismatch() {
        let e = v(Frame::Split, "q1").add(&v(Frame::Hidden, "q")).unwrap_err();
        assert!(matches!(e, WeylError::FrameMismatch { .. }));
        assert!(v(Frame::Split, "q1").mul(&v(Frame::Liouville, "x")).is_err());
    }

    #[test]
    fn adjoint_of_ordered_product() {
        // (x p)† = p x = x p - i
        let (x, p) = (v(Frame::Liouville, "x"), v(Frame::Liouville, "lambda_x"));
        let xp = x.mul(&p).unwrap();
        assert_eq!(xp.adjoint(), p.mul(&x).unwrap());
        let i = WeylPolynomial::constant(Frame::Liouville, Coeff::i());
        assert_eq!(i.adjoint(), i.neg());
    }
}
