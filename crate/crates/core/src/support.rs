use serde::{Deserialize, Serialize};

use crate::error::{Result, SteinError};

/// An interval `[a, b]`, `(a, b)`, ... on the extended real line.
///
/// `a_closed` (resp. `b_closed`) marks a finite endpoint at which the density
/// is strictly positive. Those are the endpoints carrying a boundary atom in
/// the distributional derivative of `f·p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    pub a: f64,
    pub b: f64,
    pub a_closed: bool,
    pub b_closed: bool,
}

impl Support {
    pub fn new(a: f64, b: f64, a_closed: bool, b_closed: bool) -> Result<Self> {
        if a.is_nan() || b.is_nan() || a >= b {
            return Err(SteinError::InvalidSupport(format!("need a < b, got [{a}, {b}]")));
        }
        if (a_closed && !a.is_finite()) || (b_closed && !b.is_finite()) {
            return Err(SteinError::InvalidSupport("a closed endpoint must be finite".into()));
        }
        Ok(Self {
            a,
            b,
            a_closed,
            b_closed,
        })
    }

    pub fn real_line() -> Self {
        Self {
            a: f64::NEG_INFINITY,
            b: f64::INFINITY,
            a_closed: false,
            b_closed: false,
        }
    }

    pub fn open(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, false, false)
    }

    pub fn closed(a: f64, b: f64) -> Result<Self> {
        Self::new(a, b, true, true)
    }

    /// `x` lies strictly between the endpoints.
    pub fn contains_interior(&self, x: f64) -> bool {
        self.a < x && x < self.b
    }

    /// `x` belongs to the support proper (interior plus closed endpoints).
    pub fn contains(&self, x: f64) -> bool {
        self.contains_interior(x) || (self.a_closed && x == self.a) || (self.b_closed && x == self.b)
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite() && self.b.is_finite()
    }

    /// Same endpoints and same closure flags.
    pub fn same_as(&self, other: &Support) -> bool {
        self.a == other.a && self.b == other.b && self.a_closed == other.a_closed && self.b_closed == other.b_closed
    }

    pub fn ensure_same(&self, other: &Support) -> Result<()> {
        if self.same_as(other) {
            Ok(())
        } else {
            Err(SteinError::SupportMismatch {
                left: self.to_string(),
                right: other.to_string(),
            })
        }
    }

    /// Sub-interval `[lo, hi]` of this support, keeping closure only where the
    /// endpoint is unchanged.
    pub fn restrict(&self, lo: f64, hi: f64) -> Result<Support> {
        let lo = lo.max(self.a);
        let hi = hi.min(self.b);
        Support::new(
            lo,
            hi,
            lo.is_finite() && (lo > self.a || self.a_closed),
            hi.is_finite() && (hi < self.b || self.b_closed),
        )
    }
}

impl std::fmt::Display for Support {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let l = if self.a_closed { '[' } else { '(' };
        let r = if self.b_closed { ']' } else { ')' };
        write!(f, "{l}{}, {}{r}", self.a, self.b)
    }
}
