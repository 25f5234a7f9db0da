//! Solutions of the Stein equation `T(f, p) = l − E_p[l]`.
//!
//! The solution is
//!
//! ```text
//! f(x) =  (1/p(x)) ∫_a^x (l − E_p l) p     (x ≤ median of p)
//!      = −(1/p(x)) ∫_x^b (l − E_p l) p     (x > median of p)
//! ```
//!
//! Both integrals are formed with the weight `p(u)/p(x) = exp(log p(u) − log p(x))`
//! so that nothing overflows in the tails.

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::density::{Density, ScalarFn, Side};
use crate::error::{Result, SteinError};
use crate::quadrature::{sign_change_roots, QuadratureSpec};
use crate::report::BoundReport;
use crate::stein::{stein_operator, TestFunction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ObservableKind {
    Smooth,
    IndicatorHalfline(f64),
    TvSign,
    Dirac(f64),
}

/// A function `l` whose expectation is compared under two densities.
#[derive(Clone)]
pub struct Observable {
    label: String,
    kind: ObservableKind,
    l: ScalarFn,
    breaks: Vec<f64>,
    constant: Option<f64>,
}

impl fmt::Debug for Observable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Observable")
            .field("label", &self.label)
            .field("kind", &self.kind)
            .field("breaks", &self.breaks)
            .finish()
    }
}

impl Observable {
    pub fn smooth<F>(label: &str, l: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.to_string(),
            kind: ObservableKind::Smooth,
            l: Arc::new(l),
            breaks: Vec::new(),
            constant: None,
        }
    }

    /// `c[0] + c[1]x + …`
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c: Vec<f64> = coeffs.to_vec();
        let parts: Vec<String> = coeffs.iter().map(|v| format!("{v}")).collect();
        let constant = if coeffs.iter().skip(1).all(|v| *v == 0.0) {
            Some(coeffs.first().copied().unwrap_or(0.0))
        } else {
            None
        };
        let mut l = Self::smooth(&format!("poly({})", parts.join(",")), move |x| {
            c.iter().rev().fold(0.0, |acc, v| acc * x + v)
        });
        l.constant = constant;
        l
    }

    /// `l(u) = 1` for `u ≤ z`, else 0.
    pub fn indicator(z: f64) -> Self {
        Self {
            label: format!("indicator({z})"),
            kind: ObservableKind::IndicatorHalfline(z),
            l: Arc::new(move |u| if u <= z { 1.0 } else { 0.0 }),
            breaks: vec![z],
            constant: None,
        }
    }

    /// `l = I{p ≤ q} − I{p ≥ q}`; ties give 0. Sign changes of `p − q` are
    /// located by a scan over the quantiles of both densities and refined by
    /// bisection.
    pub fn tv_sign(p: &Density, q: &Density) -> Result<Self> {
        p.support().ensure_same(&q.support())?;
        let breaks = crossings(p, q);
        let (p1, q1) = (p.clone(), q.clone());
        Ok(Self {
            label: "tv_sign".to_string(),
            kind: ObservableKind::TvSign,
            l: Arc::new(move |u| {
                let (lp, lq) = (p1.log_pdf(u), q1.log_pdf(u));
                if lp == f64::NEG_INFINITY && lq == f64::NEG_INFINITY {
                    0.0
                } else if lp < lq {
                    1.0
                } else if lp > lq {
                    -1.0
                } else {
                    0.0
                }
            }),
            breaks,
            constant: None,
        })
    }

    /// Point mass at `x0`. It has no pointwise values; only the metrics
    /// module uses it, through the closed-form solution.
    pub fn dirac(x0: f64) -> Self {
        Self {
            label: format!("dirac({x0})"),
            kind: ObservableKind::Dirac(x0),
            l: Arc::new(|_| f64::NAN),
            breaks: vec![x0],
            constant: None,
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    /// Points where `l` jumps.
    pub fn breaks(&self) -> &[f64] {
        &self.breaks
    }

    pub fn is_smooth(&self) -> bool {
        matches!(self.kind, ObservableKind::Smooth)
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.l)(x)
    }

    fn require_pointwise(&self) -> Result<()> {
        match self.kind {
            ObservableKind::Dirac(_) => Err(SteinError::NotPointwise(self.label.clone())),
            _ => Ok(()),
        }
    }

    /// `E_p[l]` with the support split at the jumps; exact for constants.
    pub fn mean_under(&self, p: &Density, spec: &QuadratureSpec) -> Result<f64> {
        self.require_pointwise()?;
        if let Some(c) = self.constant {
            return Ok(c);
        }
        Ok(p.expect(|x| self.value(x), &self.breaks, spec)?
            .require_converged()?
            .value)
    }
}

/// Nodes at the quantiles of both densities, for scans over a shared support.
pub fn scan_nodes(p: &Density, q: &Density, per_density: usize) -> Vec<f64> {
    let lo = 1e-10;
    let mut nodes = p.quantile_grid(per_density, lo, 1.0 - lo);
    nodes.extend(q.quantile_grid(per_density, lo, 1.0 - lo));
    let s = p.support();
    nodes.retain(|x| s.contains_interior(*x));
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// Interior points where `p − q` changes sign.
pub fn crossings(p: &Density, q: &Density) -> Vec<f64> {
    let nodes = scan_nodes(p, q, 512);
    let s = p.support();
    sign_change_roots(
        |x| {
            if s.contains_interior(x) {
                p.log_pdf(x) - q.log_pdf(x)
            } else {
                f64::NAN
            }
        },
        &nodes,
    )
}

/// Observable descriptions for configs and the command line:
/// `poly:C0,C1,…`, `indicator:Z`, `tv_sign`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObservableSpec {
    Poly { coeffs: Vec<f64> },
    Indicator { z: f64 },
    TvSign,
}

impl ObservableSpec {
    /// `tv_sign` needs the alternative `q`.
    pub fn build(&self, p: &Density, q: Option<&Density>) -> Result<Observable> {
        match self {
            ObservableSpec::Poly { coeffs } => Ok(Observable::polynomial(coeffs)),
            ObservableSpec::Indicator { z } => Ok(Observable::indicator(*z)),
            ObservableSpec::TvSign => match q {
                Some(q) => Observable::tv_sign(p, q),
                None => Err(SteinError::InvalidParameter(
                    "tv_sign needs an alternative density".into(),
                )),
            },
        }
    }

    pub fn label(&self) -> String {
        match self {
            ObservableSpec::Poly { coeffs } => Observable::polynomial(coeffs).label,
            ObservableSpec::Indicator { z } => format!("indicator({z})"),
            ObservableSpec::TvSign => "tv_sign".into(),
        }
    }
}

impl FromStr for ObservableSpec {
    type Err = SteinError;

    fn from_str(text: &str) -> Result<Self> {
        let text = text.trim();
        let (head, rest) = match text.split_once(':') {
            Some((h, r)) => (h.trim(), r.trim()),
            None => (text, ""),
        };
        let numbers = || -> Result<Vec<f64>> {
            rest.split(',')
                .map(|v| {
                    v.trim()
                        .parse::<f64>()
                        .map_err(|_| SteinError::Parse(format!("bad number `{}` in `{text}`", v.trim())))
                })
                .collect()
        };
        match head {
            "poly" => Ok(ObservableSpec::Poly { coeffs: numbers()? }),
            "indicator" => {
                let v = numbers()?;
                if v.len() != 1 {
                    return Err(SteinError::Parse(format!("expected indicator:Z, got `{text}`")));
                }
                Ok(ObservableSpec::Indicator { z: v[0] })
            }
            "tv_sign" => Ok(ObservableSpec::TvSign),
            other => Err(SteinError::Parse(format!("unknown observable `{other}`"))),
        }
    }
}

#[derive(Clone)]
struct Multiplier {
    s: ScalarFn,
    ds: ScalarFn,
}

struct Solver {
    p: Density,
    l: Observable,
    mean: f64,
    split: f64,
    spec: QuadratureSpec,
    failures: AtomicUsize,
}

impl Solver {
    fn centred(&self, u: f64) -> f64 {
        self.l.value(u) - self.mean
    }

    fn form(&self, x: f64, side: Side) -> f64 {
        let s = self.p.support();
        if !s.contains_interior(x) {
            return 0.0;
        }
        let r = self
            .p
            .relative_integral(x, |u| self.centred(u), side, &self.l.breaks, &self.spec);
        match r {
            Ok(r) => {
                if !r.converged {
                    self.failures.fetch_add(1, Ordering::Relaxed);
                }
                match side {
                    Side::Below => r.value,
                    Side::Above => -r.value,
                }
            }
            Err(_) => {
                self.failures.fetch_add(1, Ordering::Relaxed);
                f64::NAN
            }
        }
    }

    fn f(&self, x: f64) -> f64 {
        if x <= self.split {
            self.form(x, Side::Below)
        } else {
            self.form(x, Side::Above)
        }
    }
}

/// `f` solving `T(f, p) = l − E_p[l]`.
#[derive(Clone)]
pub struct SteinSolution {
    inner: Arc<Solver>,
    f: TestFunction,
    multiplier: Option<Multiplier>,
}

impl fmt::Debug for SteinSolution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SteinSolution")
            .field("target", &self.inner.p.label())
            .field("observable", &self.inner.l.label())
            .field("centered_mean", &self.inner.mean)
            .field("split", &self.inner.split)
            .finish()
    }
}

impl SteinSolution {
    pub fn f(&self) -> &TestFunction {
        &self.f
    }

    pub fn value(&self, x: f64) -> f64 {
        self.f.value(x)
    }

    /// `f₀ = f/s` for a solution built by [`solve_in_f0_form`].
    pub fn f0(&self, x: f64) -> Option<f64> {
        self.multiplier.as_ref().map(|m| {
            if self.inner.p.support().contains_interior(x) {
                self.f.value(x) / (m.s)(x)
            } else {
                0.0
            }
        })
    }

    /// `f₀` as a test function, with derivative `(f′ − f₀ s′)/s`.
    pub fn f0_function(&self) -> Option<TestFunction> {
        let m = self.multiplier.clone()?;
        let (f1, f2, m2) = (self.f.clone(), self.f.clone(), m.clone());
        let support = self.inner.p.support();
        Some(TestFunction::with_derivative(
            &format!("f0[{}]", self.f.label()),
            move |x| {
                if support.contains_interior(x) {
                    f1.value(x) / (m.s)(x)
                } else {
                    0.0
                }
            },
            move |x| {
                let s = (m2.s)(x);
                let f0 = f2.value(x) / s;
                (f2.derivative(x) - f0 * (m2.ds)(x)) / s
            },
        ))
    }

    /// `E_p[l]`.
    pub fn centered_mean(&self) -> f64 {
        self.inner.mean
    }

    /// Below this point the left integral form is used, above it the right.
    pub fn split_point(&self) -> f64 {
        self.inner.split
    }

    pub fn left_form(&self, x: f64) -> f64 {
        self.inner.form(x, Side::Below)
    }

    pub fn right_form(&self, x: f64) -> f64 {
        self.inner.form(x, Side::Above)
    }

    /// Inner integrals that missed their tolerance so far.
    pub fn quadrature_failures(&self) -> usize {
        self.inner.failures.load(Ordering::Relaxed)
    }

    pub fn target(&self) -> &Density {
        &self.inner.p
    }

    pub fn observable(&self) -> &Observable {
        &self.inner.l
    }
}

fn build(p: &Density, l: &Observable, spec: &QuadratureSpec, multiplier: Option<Multiplier>) -> Result<SteinSolution> {
    spec.validate()?;
    l.require_pointwise()?;
    let mean = l.mean_under(p, spec)?;
    let inner = Arc::new(Solver {
        p: p.clone(),
        l: l.clone(),
        mean,
        split: p.median(),
        spec: *spec,
        failures: AtomicUsize::new(0),
    });
    let (a, b) = (Arc::clone(&inner), Arc::clone(&inner));
    let f = TestFunction::with_derivative(
        &format!("stein[{}|{}]", p.label(), l.label()),
        move |x| a.f(x),
        move |x| {
            if !b.p.support().contains_interior(x) {
                return 0.0;
            }
            b.centred(x) - b.f(x) * b.p.score(x)
        },
    );
    Ok(SteinSolution { inner, f, multiplier })
}

/// Quadrature settings used by the solver when none are given.
pub fn default_solver_spec() -> QuadratureSpec {
    QuadratureSpec::tight()
}

/// Solve `T(f, p) = l − E_p[l]`. The derivative of the returned `f` is taken
/// from the equation, `f′ = l − E_p[l] − f·score`.
pub fn solve_stein_equation(p: &Density, l: &Observable) -> Result<SteinSolution> {
    solve_with_spec(p, l, &default_solver_spec())
}

pub fn solve_with_spec(p: &Density, l: &Observable, spec: &QuadratureSpec) -> Result<SteinSolution> {
    build(p, l, spec, None)
}

/// Same solution expressed as `f = f₀·s`; `s` must be positive on the interior.
pub fn solve_in_f0_form(p: &Density, s: ScalarFn, ds: ScalarFn, l: &Observable) -> Result<SteinSolution> {
    for x in p.quantile_grid(257, 1e-6, 1.0 - 1e-6) {
        let v = s(x);
        if !(v > 0.0) {
            return Err(SteinError::InvalidParameter(format!(
                "multiplier must be positive on the interior, s({x}) = {v}"
            )));
        }
    }
    build(p, l, &default_solver_spec(), Some(Multiplier { s, ds }))
}

/// Solution for `l = I(· ≤ z)`.
pub fn solve_indicator(p: &Density, z: f64) -> Result<SteinSolution> {
    let s = p.support();
    if !s.contains_interior(z) {
        return Err(SteinError::OutsideSupport {
            x: z,
            support: s.to_string(),
        });
    }
    solve_stein_equation(p, &Observable::indicator(z))
}

/// `(P(x ∧ z) − P(x)P(z))/p(x)`, the classical closed form of the indicator
/// solution.
pub fn indicator_closed_form(p: &Density, z: f64, x: f64) -> f64 {
    if !p.support().contains_interior(x) {
        return 0.0;
    }
    let px = p.pdf(x);
    if x <= z {
        p.cdf(x) * p.sf(z) / px
    } else {
        p.cdf(z) * p.sf(x) / px
    }
}

/// Fourth-order central difference with a fixed step.
pub fn fixed_step_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

pub const RESIDUAL_TOL_SMOOTH: f64 = 1e-6;
pub const RESIDUAL_TOL_JUMP: f64 = 1e-4;

/// Max over an interior quantile grid of `|f′ + f·score − (l − E_p l)|`, with
/// `f′` from a finite difference of `f` itself. Grid points within one cell of
/// a jump of `l` are skipped.
pub fn residual_check(p: &Density, l: &Observable, sol: &SteinSolution, grid_size: usize) -> BoundReport {
    let grid = p.quantile_grid(grid_size.max(3), 0.01, 0.99);
    let (_, scale) = p.location_scale();
    let s = p.support();
    let mean = sol.centered_mean();
    let before = sol.quadrature_failures();
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    let mut skipped = 0usize;
    for (i, &x) in grid.iter().enumerate() {
        let cell = {
            let left = if i > 0 { x - grid[i - 1] } else { 0.0 };
            let right = if i + 1 < grid.len() { grid[i + 1] - x } else { 0.0 };
            left.max(right)
        };
        if l.breaks().iter().any(|b| (x - b).abs() <= cell) {
            skipped += 1;
            continue;
        }
        let room = (x - s.a).min(s.b - x);
        let mut h = 1e-3 * scale;
        if room.is_finite() {
            h = h.min(room / 4.0);
        }
        if let Some(b) = l.breaks().iter().map(|b| (x - b).abs()).reduce(f64::min) {
            h = h.min(b / 4.0);
        }
        let df = fixed_step_derivative(|u| sol.value(u), x, h);
        let lhs = df + sol.value(x) * p.score(x);
        let dev = (lhs - (l.value(x) - mean)).abs();
        if !(dev <= worst) {
            worst = dev;
            at = x;
        }
    }
    let tol = if l.is_smooth() {
        RESIDUAL_TOL_SMOOTH
    } else {
        RESIDUAL_TOL_JUMP
    };
    let failures = sol.quadrature_failures() - before;
    let mut r = BoundReport::inequality("stein_equation_residual", worst, 0.0, tol)
        .with_pair(p.label(), p.label())
        .with_observable(l.label())
        .detail("argmax", at)
        .detail("skipped_points", skipped as f64)
        .detail("quadrature_failures", failures as f64);
    if failures > 0 {
        r = r.failed();
    }
    r
}

/// `T(f, p)` of the solution via its equation-derived derivative; equal to
/// `l − E_p l` up to rounding by construction.
pub fn operator_of_solution(sol: &SteinSolution, x: f64) -> f64 {
    stein_operator(sol.f(), sol.target()).interior(x)
}

/// `|left form − right form|` at the split point.
pub fn dual_form_gap(sol: &SteinSolution) -> f64 {
    let x = sol.split_point();
    (sol.left_form(x) - sol.right_form(x)).abs()
}
