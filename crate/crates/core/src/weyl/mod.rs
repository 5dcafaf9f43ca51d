//! Exact normal-ordered operator polynomials over two canonical pairs.
//!
//! Coefficients are Gaussian rationals times monomials in `ρ` (any integer
//! power), `ρ̇`, `k` and `s = 1/√2`. Nothing in this module touches floating
//! point except [`Coeff::eval`].

mod build;
mod coeff;
mod frame;
mod parse;
mod poly;
mod scalar;
mod subst;

pub use build::{build_hamiltonian, build_invariant, build_sub_hamiltonian, invariance_defect, InvariantForm};
pub use coeff::{Coeff, CoeffMonomial};
pub use frame::{Frame, Variable};
pub use parse::{parse_operator, parse_operator_in};
pub use poly::{Monomial, WeylPolynomial};
pub use scalar::GaussianRational;
pub use subst::{substitute_linear, verify_canonical, CanonicalityReport, CommutatorDefect, LinearSubstitution, BUILTIN_MAPS};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WeylError {
    #[error("frame mismatch: {left} vs {right}")]
    FrameMismatch { left: Frame, right: Frame },
    #[error("unknown symbol '{name}'{}", pos.map(|p| format!(" at {p}")).unwrap_or_default())]
    UnknownSymbol { name: String, pos: Option<usize> },
    #[error("unknown map '{0}' (expected one of rotation, rotation-inverse, relabel, relabel-inverse)")]
    UnknownMap(String),
    #[error("unknown identity '{0}'")]
    UnknownIdentity(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("'{name}' at {pos} does not share a frame with the preceding variables")]
    MixedFrames { pos: usize, name: String },
    #[error("cannot infer the frame; candidates {candidates:?}")]
    AmbiguousFrame { candidates: Vec<Frame> },
    #[error("division at {pos} by a non-invertible factor (only powers of rho and nonzero numbers)")]
    BadDivision { pos: usize },
}
