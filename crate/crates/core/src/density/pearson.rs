//! Pearson densities, `(s·p)′ = τ·p` with `deg s ≤ 2` and `deg τ = 1`.
//!
//! The equation integrates to `p = exp(∫ τ/s) / s` up to normalization, and
//! `∫ τ/s` has a closed form for every polynomial `s` of degree at most two.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteinError};
use crate::support::Support;

/// Coefficients are stored in ascending order: `s(x) = s[0] + s[1]x + s[2]x²`,
/// `τ(x) = tau[0] + tau[1]x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PearsonSpec {
    pub s: [f64; 3],
    pub tau: [f64; 2],
    pub support: Support,
}

impl PearsonSpec {
    pub fn new(s: &[f64], tau: &[f64], support: Support) -> Result<Self> {
        if s.is_empty() || s.len() > 3 || tau.len() != 2 {
            return Err(SteinError::InvalidParameter(
                "pearson needs at most 3 coefficients for s and exactly 2 for tau".into(),
            ));
        }
        let mut sc = [0.0; 3];
        sc[..s.len()].copy_from_slice(s);
        let spec = Self {
            s: sc,
            tau: [tau[0], tau[1]],
            support,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Like [`PearsonSpec::new`] with endpoint closure inferred: a finite
    /// endpoint is closed when the density has a finite positive limit there.
    pub fn with_inferred_closure(s: &[f64], tau: &[f64], a: f64, b: f64) -> Result<Self> {
        let open = Support::open(a, b)?;
        let mut spec = Self::new(s, tau, open)?;
        let log = PearsonLog::new(&spec);
        let w = if open.is_finite() { b - a } else { 1.0 };
        let finite_limit = |end: f64, dir: f64| {
            let l1 = log.log_unnorm(end + dir * 1e-9 * w);
            let l2 = log.log_unnorm(end + dir * 1e-11 * w);
            l1.is_finite() && l2.is_finite() && (l1 - l2).abs() < 1e-6
        };
        let a_closed = a.is_finite() && finite_limit(a, 1.0);
        let b_closed = b.is_finite() && finite_limit(b, -1.0);
        spec.support = Support::new(a, b, a_closed, b_closed)?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau[1] == 0.0 || !self.tau.iter().all(|c| c.is_finite()) {
            return Err(SteinError::InvalidParameter("tau must have exact degree one".into()));
        }
        if !self.s.iter().all(|c| c.is_finite()) || self.s.iter().all(|c| *c == 0.0) {
            return Err(SteinError::InvalidParameter("s must be a nonzero polynomial".into()));
        }
        // s > 0 on the interior; checked on a scan grid.
        let (a, b) = (self.support.a, self.support.b);
        let probe: Vec<f64> = if self.support.is_finite() {
            (1..512).map(|i| a + (b - a) * i as f64 / 512.0).collect()
        } else {
            let c = if a.is_finite() {
                a
            } else if b.is_finite() {
                b
            } else {
                0.0
            };
            (-40..=40)
                .flat_map(|k| {
                    let r = 2f64.powf(k as f64 / 2.0);
                    [c + r, c - r, c]
                })
                .filter(|x| self.support.contains_interior(*x))
                .collect()
        };
        if let Some(x) = probe.into_iter().find(|x| self.s_at(*x) <= 0.0) {
            return Err(SteinError::InvalidParameter(format!(
                "s must be positive on the interior of the support, s({x}) = {}",
                self.s_at(x)
            )));
        }
        Ok(())
    }

    pub fn s_at(&self, x: f64) -> f64 {
        self.s[0] + x * (self.s[1] + x * self.s[2])
    }

    pub fn ds_at(&self, x: f64) -> f64 {
        self.s[1] + 2.0 * x * self.s[2]
    }

    pub fn tau_at(&self, x: f64) -> f64 {
        self.tau[0] + self.tau[1] * x
    }

    /// `(τ − s′)/s`.
    pub fn score(&self, x: f64) -> f64 {
        (self.tau_at(x) - self.ds_at(x)) / self.s_at(x)
    }
}

/// Closed-form `log p` up to an additive constant.
#[derive(Debug, Clone)]
pub(crate) struct PearsonLog {
    spec: PearsonSpec,
}

impl PearsonLog {
    pub fn new(spec: &PearsonSpec) -> Self {
        Self { spec: spec.clone() }
    }

    pub fn spec(&self) -> &PearsonSpec {
        &self.spec
    }

    /// `∫ τ/s − ln s`.
    pub fn log_unnorm(&self, x: f64) -> f64 {
        let [s0, s1, s2] = self.spec.s;
        let [t0, t1] = self.spec.tau;
        let sx = self.spec.s_at(x);
        if !(sx > 0.0) {
            return f64::NEG_INFINITY;
        }
        let integral = if s2 == 0.0 && s1 == 0.0 {
            (0.5 * t1 * x * x + t0 * x) / s0
        } else if s2 == 0.0 {
            // τ/s = t1/s1 + (t0 − t1 s0/s1)/(s1 x + s0)
            let c = t0 - t1 * s0 / s1;
            t1 * x / s1 + c / s1 * sx.abs().ln()
        } else {
            // τ = (t1/(2 s2)) s′ + (t0 − t1 s1/(2 s2))
            let k = t1 / (2.0 * s2);
            let c = t0 - k * s1;
            k * sx.abs().ln() + c * inv_quadratic_antiderivative(s0, s1, s2, x)
        };
        integral - sx.ln()
    }
}

/// `∫ dx / (s2 x² + s1 x + s0)`, `s2 ≠ 0`, up to a constant.
fn inv_quadratic_antiderivative(s0: f64, s1: f64, s2: f64, x: f64) -> f64 {
    let disc = s1 * s1 - 4.0 * s2 * s0;
    let y = 2.0 * s2 * x + s1;
    if disc < 0.0 {
        let r = (-disc).sqrt();
        2.0 / r * (y / r).atan()
    } else if disc > 0.0 {
        let r = disc.sqrt();
        // 1/s = 1/(s2 (x − x1)(x − x2)), x1,2 = (−s1 ± r)/(2 s2)
        ((y - r) / (y + r)).abs().ln() / r
    } else {
        -2.0 / y
    }
}
