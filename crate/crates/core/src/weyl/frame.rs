use std::fmt;

use serde::{Deserialize, Serialize};

/// One of the three coordinate systems for the doubled phase space.
///
/// Each frame has four operator slots forming two canonical pairs; slots in
/// different pairs commute. The slot order is the normal order, and in every
/// frame the position-like member of a pair sits before its momentum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Frame {
    /// `(q, Q, p, P)` with `[q, P] = [Q, p] = i`.
    Hidden,
    /// `(q1, p1, q2, p2)` with `[q_i, p_j] = i δ_ij`.
    Split,
    /// `(x, p, lambda_x, lambda_p)` with `[x, λx] = [p, λp] = i`.
    Liouville,
}

/// An operator variable: a slot of a frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Variable {
    pub frame: Frame,
    pub slot: usize,
}

impl Frame {
    pub const ALL: [Frame; 3] = [Frame::Hidden, Frame::Split, Frame::Liouville];

    pub fn names(self) -> [&'static str; 4] {
        match self {
            Frame::Hidden => ["q", "Q", "p", "P"],
            Frame::Split => ["q1", "p1", "q2", "p2"],
            Frame::Liouville => ["x", "p", "lambda_x", "lambda_p"],
        }
    }

    /// The two canonical pairs as `(position slot, momentum slot)`.
    pub fn pairs(self) -> [(usize, usize); 2] {
        match self {
            Frame::Hidden => [(0, 3), (1, 2)],
            Frame::Split => [(0, 1), (2, 3)],
            Frame::Liouville => [(0, 2), (1, 3)],
        }
    }

    pub fn var(self, name: &str) -> Option<Variable> {
        self.names().iter().position(|n| *n == name).map(|slot| Variable { frame: self, slot })
    }

    /// Frames that define a variable called `name`.
    pub fn frames_with(name: &str) -> Vec<Frame> {
        Frame::ALL.into_iter().filter(|f| f.var(name).is_some()).collect()
    }

    /// `[v_a, v_b]` as a multiple of `i`: `+1`, `-1` or `0`.
    pub fn commutator_sign(self, a: usize, b: usize) -> i64 {
        for (x, p) in self.pairs() {
            if (a, b) == (x, p) {
                return 1;
            }
            if (a, b) == (p, x) {
                return -1;
            }
        }
        0
    }
}

impl Variable {
    pub fn name(&self) -> &'static str {
        self.frame.names()[self.slot]
    }
}

impl fmt::Display for Frame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c, d] = self.names();
        write!(f, "({a}, {b}, {c}, {d})")
    }
}
