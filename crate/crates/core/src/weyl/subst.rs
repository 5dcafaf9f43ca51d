//! Linear changes of variables between frames.

use super::coeff::Coeff;
use super::frame::Frame;
use super::poly::WeylPolynomial;
use super::WeylError;

/// Replaces each variable of `from` by a linear combination of `to`'s variables.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearSubstitution {
    pub name: String,
    pub from: Frame,
    pub to: Frame,
    /// Image of each `from` slot, in `to`.
    pub images: [WeylPolynomial; 4],
}

/// A pair whose commutator the substitution fails to preserve.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorDefect {
    pub left: &'static str,
    pub right: &'static str,
    pub expected: WeylPolynomial,
    pub found: WeylPolynomial,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CanonicalityReport {
    pub canonical: bool,
    pub defects: Vec<CommutatorDefect>,
}

/// Names accepted by [`LinearSubstitution::builtin`].
pub const BUILTIN_MAPS: [&str; 4] = ["rotation", "rotation-inverse", "relabel", "relabel-inverse"];

fn lin(frame: Frame, parts: &[(Coeff, &str)]) -> WeylPolynomial {
    parts.iter().fold(WeylPolynomial::zero(frame), |acc, (c, name)| {
        acc.add(&WeylPolynomial::var(frame, name).expect("frame variable").scale(c)).expect("same frame")
    })
}

impl LinearSubstitution {
    /// `(q, Q, p, P) → (q1, p1, q2, p2)`:
    /// `q = s(q1 - q2), Q = s(q1 + q2), p = s(p1 + p2), P = s(p1 - p2)`, `s = 1/√2`.
    pub fn rotation() -> Self {
        let s = Coeff::sqrt_half();
        let ms = s.neg();
        let f = Frame::Split;
        LinearSubstitution {
            name: "rotation".into(),
            from: Frame::Hidden,
            to: f,
            images: [
                lin(f, &[(s.clone(), "q1"), (ms.clone(), "q2")]),
                lin(f, &[(s.clone(), "q1"), (s.clone(), "q2")]),
                lin(f, &[(s.clone(), "p1"), (s.clone(), "p2")]),
                lin(f, &[(s, "p1"), (ms, "p2")]),
            ],
        }
    }

    /// `(q1, p1, q2, p2) → (q, Q, p, P)`:
    /// `q1 = s(q + Q), p1 = s(p + P), q2 = s(Q - q), p2 = s(p - P)`.
    pub fn rotation_inverse() -> Self {
        let s = Coeff::sqrt_half();
        let ms = s.neg();
        let f = Frame::Hidden;
        LinearSubstitution {
            name: "rotation-inverse".into(),
            from: Frame::Split,
            to: f,
            images: [
                lin(f, &[(s.clone(), "q"), (s.clone(), "Q")]),
                lin(f, &[(s.clone(), "p"), (s.clone(), "P")]),
                lin(f, &[(ms.clone(), "q"), (s.clone(), "Q")]),
                lin(f, &[(s, "p"), (ms, "P")]),
            ],
        }
    }

    /// `(x, p, λx, λp) → (q, Q, p, P)`: `x = q, p = p, λx = P, λp = -Q`.
    pub fn relabel() -> Self {
        let f = Frame::Hidden;
        LinearSubstitution {
            name: "relabel".into(),
            from: Frame::Liouville,
            to: f,
            images: [
                lin(f, &[(Coeff::one(), "q")]),
                lin(f, &[(Coeff::one(), "p")]),
                lin(f, &[(Coeff::one(), "P")]),
                lin(f, &[(Coeff::int(-1), "Q")]),
            ],
        }
    }

    /// `(q, Q, p, P) → (x, p, λx, λp)`: `q = x, Q = -λp, p = p, P = λx`.
    pub fn relabel_inverse() -> Self {
        let f = Frame::Liouville;
        LinearSubstitution {
            name: "relabel-inverse".into(),
            from: Frame::Hidden,
            to: f,
            images: [
                lin(f, &[(Coeff::one(), "x")]),
                lin(f, &[(Coeff::int(-1), "lambda_p")]),
                lin(f, &[(Coeff::one(), "p")]),
                lin(f, &[(Coeff::one(), "lambda_x")]),
            ],
        }
    }

    pub fn builtin(name: &str) -> Result<Self, WeylError> {
        match name {
            "rotation" => Ok(Self::rotation()),
            "rotation-inverse" => Ok(Self::rotation_inverse()),
            "relabel" => Ok(Self::relabel()),
            "relabel-inverse" => Ok(Self::relabel_inverse()),
            other => Err(WeylError::UnknownMap(other.into())),
        }
    }

    /// The built-in map from `from` to `to`, if one exists.
    pub fn between(from: Frame, to: Frame) -> Option<Self> {
        BUILTIN_MAPS.iter().map(|n| Self::builtin(n).expect("builtin")).find(|m| m.from == from && m.to == to)
    }

    /// Builds a custom substitution; every image must live in `to`.
    pub fn custom(name: &str, from: Frame, to: Frame, images: [WeylPolynomial; 4]) -> Result<Self, WeylError> {
        if let Some(bad) = images.iter().find(|p| p.frame() != to) {
            return Err(WeylError::FrameMismatch { left: to, right: bad.frame() });
        }
        Ok(LinearSubstitution { name: name.into(), from, to, images })
    }
}

/// Rewrites `poly` in the substitution's target frame and re-normal-orders.
pub fn substitute_linear(poly: &WeylPolynomial, map: &LinearSubstitution) -> Result<WeylPolynomial, WeylError> {
    if poly.frame() != map.from {
        return Err(WeylError::FrameMismatch { left: map.from, right: poly.frame() });
    }
    Ok(poly.map_variables(map.to, &map.images))
}

/// Checks that every commutator of transformed variables reproduces the
/// source frame's commutation table.
pub fn verify_canonical(map: &LinearSubstitution) -> CanonicalityReport {
    let names = map.from.names();
    let mut defects = Vec::new();
    for a in 0..4 {
        for b in (a + 1)..4 {
            let expected = WeylPolynomial::constant(map.to, Coeff::i().scale(
                &super::scalar::GaussianRational::from_int(map.from.commutator_sign(a, b)),
            ));
            let found = map.images[a].commutator(&map.images[b]).expect("images share the target frame");
            if found != expected {
                defects.push(CommutatorDefect { left: names[a], right: names[b], expected, found });
            }
        }
    }
    CanonicalityReport { canonical: defects.is_empty(), defects }
}
