//! The oscillator's Hamiltonians and Ermakov-Lewis invariants as exact
//! polynomials, and the invariance defect `∂I/∂t ∓ i[I, H]`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::coeff::Coeff;
use super::frame::Frame;
use super::poly::WeylPolynomial;
use super::WeylError;

fn v(frame: Frame, name: &str) -> WeylPolynomial {
    WeylPolynomial::var(frame, name).expect("frame variable")
}

fn sum(parts: &[WeylPolynomial]) -> WeylPolynomial {
    parts.iter().fold(WeylPolynomial::zero(parts[0].frame()), |acc, p| acc.add(p).expect("same frame"))
}

fn prod(a: &WeylPolynomial, b: &WeylPolynomial) -> WeylPolynomial {
    a.mul(b).expect("same frame")
}

/// The Hamiltonian written in `frame`, with `k` a symbolic coefficient:
///
/// * hidden frame: `p P + k q Q`
/// * split frame: `(p1² + k q1²)/2 - (p2² + k q2²)/2`
/// * Liouville frame: `p λx - k x λp`
pub fn build_hamiltonian(frame: Frame) -> WeylPolynomial {
    let k = Coeff::k();
    match frame {
        Frame::Hidden => sum(&[prod(&v(frame, "p"), &v(frame, "P")), prod(&v(frame, "q"), &v(frame, "Q")).scale(&k)]),
        Frame::Split => build_sub_hamiltonian(1).sub(&build_sub_hamiltonian(2)).expect("same frame"),
        Frame::Liouville => sum(&[
            prod(&v(frame, "p"), &v(frame, "lambda_x")),
            prod(&v(frame, "x"), &v(frame, "lambda_p")).scale(&k.neg()),
        ]),
    }
}

/// `p_n²/2 + k q_n²/2` for pair `n ∈ {1, 2}` of the split frame.
pub fn build_sub_hamiltonian(n: u8) -> WeylPolynomial {
    let f = Frame::Split;
    let (q, p) = (v(f, &format!("q{n}")), v(f, &format!("p{n}")));
    sum(&[p.pow(2), q.pow(2).scale(&Coeff::k())]).scale(&Coeff::ratio(1, 2))
}

/// Which invariant [`build_invariant`] constructs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantForm {
    /// `½[(q1/ρ)² + (ρ p1 - ρ̇ q1)²]`.
    I1,
    /// `½[(q2/ρ)² + (ρ p2 + ρ̇ q2)²]`, the time-reversed partner.
    I2,
    /// `I1 + I2` in the split frame.
    TotalSplit,
    /// `Q²/2ρ² + q²/2ρ² + ½[(ρ̇q - ρp)² + (ρ̇Q - ρP)²]`.
    TotalHidden,
    /// `½[x²/ρ² + (ρ̇x - ρp)² + λp²/ρ² + (ρ̇λp + ρλx)²]`.
    TotalLiouville,
}

impl InvariantForm {
    pub const ALL: [InvariantForm; 5] =
        [InvariantForm::I1, InvariantForm::I2, InvariantForm::TotalSplit, InvariantForm::TotalHidden, InvariantForm::TotalLiouville];

    pub fn name(self) -> &'static str {
        match self {
            InvariantForm::I1 => "i1",
            InvariantForm::I2 => "i2",
            InvariantForm::TotalSplit => "total-split",
            InvariantForm::TotalHidden => "total-hidden",
            InvariantForm::TotalLiouville => "total-liouville",
        }
    }

    pub fn frame(self) -> Frame {
        match self {
            InvariantForm::I1 | InvariantForm::I2 | InvariantForm::TotalSplit => Frame::Split,
            InvariantForm::TotalHidden => Frame::Hidden,
            InvariantForm::TotalLiouville => Frame::Liouville,
        }
    }
}

impl fmt::Display for InvariantForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for InvariantForm {
    type Err = WeylError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        InvariantForm::ALL.into_iter().find(|f| f.name() == s).ok_or_else(|| WeylError::UnknownIdentity(s.into()))
    }
}

/// `½[(x/ρ)² + (a ρ m + b ρ̇ x)²]` for a position `x` and momentum `m`, with
/// `a, b = ±1` fixing the signs inside the second square.
fn ermakov_form(x: &WeylPolynomial, m: &WeylPolynomial, a: i64, b: i64) -> WeylPolynomial {
    let scaled = x.scale(&Coeff::rho_pow(-1)).pow(2);
    let inner = sum(&[m.scale(&Coeff::rho().mul(&Coeff::int(a))), x.scale(&Coeff::rhodot().mul(&Coeff::int(b)))]);
    sum(&[scaled, inner.pow(2)]).scale(&Coeff::ratio(1, 2))
}

pub fn build_invariant(form: InvariantForm) -> WeylPolynomial {
    let f = form.frame();
    match form {
        InvariantForm::I1 => ermakov_form(&v(f, "q1"), &v(f, "p1"), 1, -1),
        InvariantForm::I2 => ermakov_form(&v(f, "q2"), &v(f, "p2"), 1, 1),
        InvariantForm::TotalSplit => {
            build_invariant(InvariantForm::I1).add(&build_invariant(InvariantForm::I2)).expect("same frame")
        }
        InvariantForm::TotalHidden => {
            let half_inv_rho2 = Coeff::rho_pow(-2).mul(&Coeff::ratio(1, 2));
            let sq = |x: &str, m: &str| {
                sum(&[v(f, x).scale(&Coeff::rhodot()), v(f, m).scale(&Coeff::rho().neg())]).pow(2)
            };
            sum(&[
                v(f, "Q").pow(2).scale(&half_inv_rho2),
                v(f, "q").pow(2).scale(&half_inv_rho2),
                sum(&[sq("q", "p"), sq("Q", "P")]).scale(&Coeff::ratio(1, 2)),
            ])
        }
        InvariantForm::TotalLiouville => {
            let inv_rho = Coeff::rho_pow(-1);
            sum(&[
                v(f, "x").scale(&inv_rho).pow(2),
                sum(&[v(f, "x").scale(&Coeff::rhodot()), v(f, "p").scale(&Coeff::rho().neg())]).pow(2),
                v(f, "lambda_p").scale(&inv_rho).pow(2),
                sum(&[v(f, "lambda_p").scale(&Coeff::rhodot()), v(f, "lambda_x").scale(&Coeff::rho())]).pow(2),
            ])
            .scale(&Coeff::ratio(1, 2))
        }
    }
}

/// `∂I/∂t - sign·i[I, H]`, fully reduced. The zero polynomial certifies that
/// `I` is conserved by `H` (`sign = +1`) or by `-H` (`sign = -1`).
pub fn invariance_defect(invariant: &WeylPolynomial, hamiltonian: &WeylPolynomial, sign: i8) -> Result<WeylPolynomial, WeylError> {
    if sign != 1 && sign != -1 {
        return Err(WeylError::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let bracket = invariant.commutator(hamiltonian)?.scale(&Coeff::i().mul(&Coeff::int(sign as i64)));
    invariant.time_derivative().sub(&bracket)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hamiltonians_have_expected_shape() {
        let h = build_hamiltonian(Frame::Hidden);
        assert_eq!(h.len(), 2);
        assert_eq!(h.coefficient(&[0, 0, 1, 1]), Some(&Coeff::one()));
        assert_eq!(h.coefficient(&[1, 1, 0, 0]), Some(&Coeff::k()));
        let h12 = build_hamiltonian(Frame::Split);
        assert_eq!(h12.coefficient(&[0, 2, 0, 0]), Some(&Coeff::ratio(1, 2)));
        assert_eq!(h12.coefficient(&[0, 0, 2, 0]), Some(&Coeff::k().mul(&Coeff::ratio(-1, 2))));
    }

    #[test]
    fn i1_expands_with_one_commutator_constant() {
        // ½ρ⁻²q1² + ½ρ²p1² - ρρ̇ q1p1 + ½ρ̇² q1² + ½iρρ̇
        let i1 = build_invariant(InvariantForm::I1);
        let half = Coeff::ratio(1, 2);
        assert_eq!(i1.coefficient(&[2, 0, 0, 0]), Some(&Coeff::rho_pow(-2).add(&Coeff::rhodot().mul(&Coeff::rhodot())).mul(&half)));
        assert_eq!(i1.coefficient(&[0, 2, 0, 0]), Some(&Coeff::rho_pow(2).mul(&half)));
        assert_eq!(i1.coefficient(&[1, 1, 0, 0]), Some(&Coeff::rho().mul(&Coeff::rhodot()).neg()));
        assert_eq!(i1.coefficient(&[0, 0, 0, 0]), Some(&Coeff::rho().mul(&Coeff::rhodot()).mul(&Coeff::i()).mul(&half)));
        assert_eq!(i1.len(), 4);
    }

    #[test]
    fn sub_invariants_are_conserved() {
        let d1 = invariance_defect(&build_invariant(InvariantForm::I1), &build_sub_hamiltonian(1), 1).unwrap();
        assert!(d1.is_zero(), "{d1:?}");
        let d2 = invariance_defect(&build_invariant(InvariantForm::I2), &build_sub_hamiltonian(2), -1).unwrap();
        assert!(d2.is_zero(), "{d2:?}");
    }

    #[test]
    fn wrong_time_direction_is_not_conserved() {
        let d = invariance_defect(&build_invariant(InvariantForm::I2), &build_sub_hamiltonian(2), 1).unwrap();
        assert!(!d.is_zero());
    }

    #[test]
    fn bad_sign() {
        assert!(invariance_defect(&build_invariant(InvariantForm::I1), &build_sub_hamiltonian(1), 0).is_err());
    }

    #[test]
    fn form_names_round_trip() {
        for f in InvariantForm::ALL {
            assert_eq!(f.name().parse::<InvariantForm>().unwrap(), f);
        }
    }
}
