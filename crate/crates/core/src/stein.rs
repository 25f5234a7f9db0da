//! The density-based Stein operator `T(f, p) = (f·p)′/p`, the score
//! difference between two densities, and checks of the identities that
//! connect them.
//!
//! On the interior of the support the operator is evaluated as
//! `f′ + f·(p′/p)`. The distributional derivative of `f·p` also has point
//! masses at the closed endpoints; these are kept separately as atoms with
//! coefficient `f(a)` at `a` and `−f(b)` at `b`.

use std::fmt;
use std::sync::Arc;

use crate::density::{Density, Family, PearsonSpec, ScalarFn};
use crate::error::{Result, SteinError};
use crate::quadrature::QuadratureSpec;
use crate::report::BoundReport;
use crate::support::Support;

/// A test function `f` with its derivative.
#[derive(Clone)]
pub struct TestFunction {
    label: String,
    f: ScalarFn,
    df: Option<ScalarFn>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TestFunction")
            .field("label", &self.label)
            .field("analytic_derivative", &self.df.is_some())
            .finish()
    }
}

impl TestFunction {
    /// Derivative taken numerically.
    pub fn new<F>(label: &str, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.to_string(),
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn with_derivative<F, D>(label: &str, f: F, df: D) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        D: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self {
            label: label.to_string(),
            f: Arc::new(f),
            df: Some(Arc::new(df)),
        }
    }

    pub fn constant(c: f64) -> Self {
        Self::with_derivative(&format!("{c}"), move |_| c, |_| 0.0)
    }

    /// `c[0] + c[1]x + c[2]x² + …`
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c: Arc<[f64]> = coeffs.into();
        let d: Arc<[f64]> = coeffs.iter().enumerate().skip(1).map(|(k, v)| k as f64 * v).collect();
        Self::with_derivative(&poly_label(coeffs), move |x| horner(&c, x), move |x| horner(&d, x))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_derivative(&self) -> bool {
        self.df.is_some()
    }

    pub fn value(&self, x: f64) -> f64 {
        (self.f)(x)
    }

    /// Analytic derivative if known, otherwise [`TestFunction::numeric_derivative`].
    pub fn derivative(&self, x: f64) -> f64 {
        match &self.df {
            Some(d) => d(x),
            None => self.numeric_derivative(x),
        }
    }

    /// Fourth-order central difference. The step starts at `1e-3·max(1, |x|)`
    /// and is halved until two successive estimates agree, which keeps the
    /// stencil clear of nearby singularities.
    pub fn numeric_derivative(&self, x: f64) -> f64 {
        let f = &self.f;
        let five_point = |h: f64| (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h);
        let mut h = 1e-3 * x.abs().max(1.0);
        let mut prev = five_point(h);
        for _ in 0..16 {
            h *= 0.5;
            let next = five_point(h);
            if prev.is_finite() && next.is_finite() && (next - prev).abs() <= 1e-10 * next.abs().max(1.0) {
                return next;
            }
            prev = next;
        }
        prev
    }

    /// `f₀·s`, with product-rule derivative when both parts are analytic.
    pub fn times(&self, s: ScalarFn, ds: ScalarFn, s_label: &str) -> TestFunction {
        let label = format!("({})*{}", self.label, s_label);
        let (f0, s1) = (self.f.clone(), s.clone());
        let f: ScalarFn = Arc::new(move |x| f0(x) * s1(x));
        let df: Option<ScalarFn> = match &self.df {
            Some(df0) => {
                let (f0, df0) = (self.f.clone(), df0.clone());
                Some(Arc::new(move |x| df0(x) * s(x) + f0(x) * ds(x)))
            }
            None => None,
        };
        TestFunction { label, f, df }
    }

    /// `α·self + β·g`.
    pub fn combine(&self, alpha: f64, beta: f64, g: &TestFunction) -> TestFunction {
        let label = format!("{alpha}*({}) + {beta}*({})", self.label, g.label);
        let (f1, f2) = (self.f.clone(), g.f.clone());
        let f: ScalarFn = Arc::new(move |x| alpha * f1(x) + beta * f2(x));
        let df: Option<ScalarFn> = match (&self.df, &g.df) {
            (Some(d1), Some(d2)) => {
                let (d1, d2) = (d1.clone(), d2.clone());
                Some(Arc::new(move |x| alpha * d1(x) + beta * d2(x)))
            }
            _ => None,
        };
        TestFunction { label, f, df }
    }
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, v| acc * x + v)
}

fn poly_label(coeffs: &[f64]) -> String {
    let parts: Vec<String> = coeffs.iter().map(|c| format!("{c}")).collect();
    format!("poly({})", parts.join(","))
}

/// `T(f, p)`: an interior function plus point masses at closed endpoints.
#[derive(Clone)]
pub struct SteinValue {
    interior: ScalarFn,
    pub atoms: Vec<(f64, f64)>,
    pub support: Support,
}

impl fmt::Debug for SteinValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SteinValue")
            .field("atoms", &self.atoms)
            .field("support", &self.support)
            .finish()
    }
}

impl SteinValue {
    pub fn new(interior: ScalarFn, atoms: Vec<(f64, f64)>, support: Support) -> Self {
        Self {
            interior,
            atoms,
            support,
        }
    }

    /// The absolutely continuous part; 0 off the interior.
    pub fn interior(&self, x: f64) -> f64 {
        if self.support.contains_interior(x) {
            (self.interior)(x)
        } else {
            0.0
        }
    }

    pub fn atom_at(&self, x: f64) -> Option<f64> {
        self.atoms.iter().find(|(loc, _)| *loc == x).map(|(_, c)| *c)
    }
}

fn boundary_atoms(f: &TestFunction, s: &Support) -> Vec<(f64, f64)> {
    let mut atoms = Vec::new();
    if s.a_closed {
        atoms.push((s.a, f.value(s.a)));
    }
    if s.b_closed {
        atoms.push((s.b, -f.value(s.b)));
    }
    atoms
}

/// `T(f, p)` with interior part `f′ + f·score_p`.
pub fn stein_operator(f: &TestFunction, p: &Density) -> SteinValue {
    let support = p.support();
    let atoms = boundary_atoms(f, &support);
    let (f, p) = (f.clone(), p.clone());
    let interior: ScalarFn = Arc::new(move |x| f.derivative(x) + f.value(x) * p.score(x));
    SteinValue::new(interior, atoms, support)
}

/// Result of scanning `|f·p|` for boundedness.
#[derive(Debug, Clone, PartialEq)]
pub struct Membership {
    pub max_abs: f64,
    /// `|f·p|` at the extreme scan points near each end of the support.
    pub edge_abs: [f64; 2],
    pub bounded: bool,
}

/// Heuristic check that `f·p` is bounded: finite on a scan grid reaching
/// deep into both tails, and not growing towards either end.
pub fn scan_membership(f: &TestFunction, p: &Density) -> Membership {
    let levels: Vec<f64> = (1..=12)
        .map(|k| 10f64.powi(-k))
        .chain((1..100).map(|i| i as f64 / 100.0))
        .chain((1..=12).map(|k| 1.0 - 10f64.powi(-k)))
        .collect();
    let mut max_abs = 0.0f64;
    let mut finite = true;
    let mut values = Vec::with_capacity(levels.len());
    for u in levels {
        let x = p.quantile(u);
        let v = (f.value(x) * p.pdf(x)).abs();
        finite &= v.is_finite();
        max_abs = max_abs.max(v);
        values.push(v);
    }
    let edge_abs = [values[0], values[values.len() - 1]];
    let bulk = values[12..values.len() - 12].iter().cloned().fold(0.0, f64::max);
    let bounded = finite && edge_abs.iter().all(|e| *e <= 10.0 * bulk.max(1.0));
    Membership {
        max_abs,
        edge_abs,
        bounded,
    }
}

/// The examples with a hand-derived operator. For the last three the
/// argument is `f₀` and the test function is `f = f₀·s`.
#[derive(Debug, Clone, PartialEq)]
pub enum ExampleOperator {
    Gaussian,
    Exponential,
    Uniform,
    Semicircle,
    Arcsine,
    Pearson(PearsonSpec),
}

impl ExampleOperator {
    pub fn name(&self) -> String {
        match self {
            ExampleOperator::Gaussian => "gaussian".into(),
            ExampleOperator::Exponential => "exponential".into(),
            ExampleOperator::Uniform => "uniform".into(),
            ExampleOperator::Semicircle => "semicircle".into(),
            ExampleOperator::Arcsine => "arcsine".into(),
            ExampleOperator::Pearson(s) => format!("pearson({:?}|{:?})", s.s, s.tau),
        }
    }

    /// The six examples, with Gamma(2, 1) (`s = x`, `τ = 2 − x`) as the
    /// Pearson representative.
    pub fn all() -> Vec<ExampleOperator> {
        vec![
            ExampleOperator::Gaussian,
            ExampleOperator::Exponential,
            ExampleOperator::Uniform,
            ExampleOperator::Semicircle,
            ExampleOperator::Arcsine,
            ExampleOperator::Pearson(gamma2_spec()),
        ]
    }

    pub fn density(&self) -> Result<Density> {
        match self {
            ExampleOperator::Gaussian => Ok(Density::standard_gaussian()),
            ExampleOperator::Exponential => Density::exponential(1.0),
            ExampleOperator::Uniform => Ok(Density::uniform()),
            ExampleOperator::Semicircle => Ok(Density::semicircle()),
            ExampleOperator::Arcsine => Ok(Density::arcsine()),
            ExampleOperator::Pearson(spec) => Density::pearson(spec),
        }
    }

    /// The multiplier `s` with its derivative, for the `f₀` forms.
    pub fn multiplier(&self) -> Option<(ScalarFn, ScalarFn, String)> {
        match self {
            ExampleOperator::Semicircle => Some((
                Arc::new(|x: f64| 4.0 - x * x),
                Arc::new(|x: f64| -2.0 * x),
                "(4-x^2)".into(),
            )),
            ExampleOperator::Arcsine => Some((
                Arc::new(|x: f64| (x * (1.0 - x)).sqrt()),
                Arc::new(|x: f64| (1.0 - 2.0 * x) / (2.0 * (x * (1.0 - x)).sqrt())),
                "sqrt(x(1-x))".into(),
            )),
            ExampleOperator::Pearson(spec) => {
                let (s1, s2) = (spec.clone(), spec.clone());
                Some((
                    Arc::new(move |x| s1.s_at(x)),
                    Arc::new(move |x| s2.ds_at(x)),
                    "s".into(),
                ))
            }
            _ => None,
        }
    }

    /// The test function `f` an argument stands for.
    pub fn test_function(&self, arg: &TestFunction) -> TestFunction {
        match self.multiplier() {
            Some((s, ds, label)) => arg.times(s, ds, &label),
            None => arg.clone(),
        }
    }

    /// Hand-coded operator value.
    pub fn closed_form(&self, arg: &TestFunction) -> Result<SteinValue> {
        let p = self.density()?;
        let support = p.support();
        let g = arg.clone();
        let interior: ScalarFn = match self {
            ExampleOperator::Gaussian => Arc::new(move |x| g.derivative(x) - x * g.value(x)),
            ExampleOperator::Exponential => Arc::new(move |x| g.derivative(x) - g.value(x)),
            ExampleOperator::Uniform => Arc::new(move |x| g.derivative(x)),
            ExampleOperator::Semicircle => Arc::new(move |x| (4.0 - x * x) * g.derivative(x) - 3.0 * x * g.value(x)),
            ExampleOperator::Arcsine => Arc::new(move |x| (x * (1.0 - x)).sqrt() * g.derivative(x)),
            ExampleOperator::Pearson(spec) => {
                let spec = spec.clone();
                Arc::new(move |x| spec.s_at(x) * g.derivative(x) + spec.tau_at(x) * g.value(x))
            }
        };
        let atoms = match self {
            ExampleOperator::Exponential => vec![(0.0, arg.value(0.0))],
            ExampleOperator::Uniform => vec![(0.0, arg.value(0.0)), (1.0, -arg.value(1.0))],
            _ => Vec::new(),
        };
        Ok(SteinValue::new(interior, atoms, support))
    }

    /// Five arguments (`f` or `f₀`) for which the zero-mean property holds.
    pub fn dictionary(&self) -> Vec<TestFunction> {
        use std::f64::consts::PI;
        match self {
            ExampleOperator::Gaussian => gaussian_like_dictionary(),
            ExampleOperator::Exponential => half_line_dictionary(),
            ExampleOperator::Uniform => vec![
                TestFunction::constant(1.0),
                TestFunction::polynomial(&[0.0, 1.0]),
                TestFunction::polynomial(&[0.0, 0.0, 1.0]),
                TestFunction::with_derivative("sin(pi x)", |x| (PI * x).sin(), |x| PI * (PI * x).cos()),
                TestFunction::with_derivative("exp(x)", f64::exp, f64::exp),
            ],
            ExampleOperator::Semicircle => vec![
                TestFunction::constant(1.0),
                TestFunction::polynomial(&[0.0, 1.0]),
                TestFunction::polynomial(&[0.0, 0.0, 1.0]),
                TestFunction::with_derivative("sin(x)", f64::sin, f64::cos),
                TestFunction::with_derivative("cos(x)", f64::cos, |x| -x.sin()),
            ],
            // f·p = f₀/π does not vanish at 0 or 1, so only f₀ with
            // f₀(0) = f₀(1) give a zero mean.
            ExampleOperator::Arcsine => vec![
                TestFunction::constant(1.0),
                TestFunction::polynomial(&[0.0, 1.0, -1.0]),
                TestFunction::with_derivative("sin(pi x)", |x| (PI * x).sin(), |x| PI * (PI * x).cos()),
                TestFunction::with_derivative(
                    "cos(2 pi x)",
                    |x| (2.0 * PI * x).cos(),
                    |x| -2.0 * PI * (2.0 * PI * x).sin(),
                ),
                TestFunction::polynomial(&[0.25, -1.0, 1.0]),
            ],
            ExampleOperator::Pearson(_) => vec![
                TestFunction::constant(1.0),
                TestFunction::polynomial(&[0.0, 1.0]),
                TestFunction::with_derivative("exp(-x)", |x| (-x).exp(), |x| -(-x).exp()),
                TestFunction::with_derivative("sin(x)", f64::sin, f64::cos),
                TestFunction::with_derivative("1/(1+x)", |x| 1.0 / (1.0 + x), |x| -1.0 / ((1.0 + x) * (1.0 + x))),
            ],
        }
    }
}

/// `s = x`, `τ = 2 − x` on `(0, ∞)`: the density `x e^{−x}`.
pub fn gamma2_spec() -> PearsonSpec {
    PearsonSpec::new(
        &[0.0, 1.0],
        &[2.0, -1.0],
        Support::open(0.0, f64::INFINITY).expect("valid"),
    )
    .expect("valid spec")
}

fn gaussian_like_dictionary() -> Vec<TestFunction> {
    vec![
        TestFunction::constant(1.0),
        TestFunction::polynomial(&[0.0, 1.0]),
        TestFunction::polynomial(&[0.0, 0.0, 1.0]),
        TestFunction::with_derivative("sin(x)", f64::sin, f64::cos),
        TestFunction::with_derivative("exp(-x^2)", |x| (-x * x).exp(), |x| -2.0 * x * (-x * x).exp()),
    ]
}

fn half_line_dictionary() -> Vec<TestFunction> {
    vec![
        TestFunction::constant(1.0),
        TestFunction::polynomial(&[0.0, 1.0]),
        TestFunction::with_derivative("x exp(-x)", |x| x * (-x).exp(), |x| (1.0 - x) * (-x).exp()),
        TestFunction::with_derivative("sin(x)", f64::sin, f64::cos),
        TestFunction::with_derivative("1/(1+x)", |x| 1.0 / (1.0 + x), |x| -1.0 / ((1.0 + x) * (1.0 + x))),
    ]
}

/// Five test functions `f` (not `f₀`) in `F(p)` for a built-in target.
pub fn dictionary(family: Family) -> Vec<TestFunction> {
    let example = match family {
        Family::Gaussian | Family::Quartic => return gaussian_like_dictionary(),
        Family::Exponential => return half_line_dictionary(),
        Family::Uniform => ExampleOperator::Uniform,
        Family::Semicircle => ExampleOperator::Semicircle,
        Family::Arcsine => ExampleOperator::Arcsine,
    };
    example.dictionary().iter().map(|g| example.test_function(g)).collect()
}

/// Operator-form closed form for a family name. The argument is `f₀` for
/// semicircle and arcsine.
pub fn stein_operator_closed_form(family: Family, arg: &TestFunction) -> Result<SteinValue> {
    let op = match family {
        Family::Gaussian => ExampleOperator::Gaussian,
        Family::Exponential => ExampleOperator::Exponential,
        Family::Uniform => ExampleOperator::Uniform,
        Family::Semicircle => ExampleOperator::Semicircle,
        Family::Arcsine => ExampleOperator::Arcsine,
        Family::Quartic => {
            return Err(SteinError::UnknownFamily(
                "quartic has no hand-derived operator; use stein_operator".into(),
            ))
        }
    };
    op.closed_form(arg)
}

/// Score difference `p′/p − q′/q` on a shared support.
#[derive(Clone)]
pub struct Residual {
    p: Density,
    q: Density,
    pub support: Support,
    /// Whether each endpoint carries a live boundary atom.
    pub boundary_atoms_live: [bool; 2],
}

impl fmt::Debug for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Residual")
            .field("p", &self.p.label())
            .field("q", &self.q.label())
            .field("support", &self.support)
            .finish()
    }
}

impl Residual {
    pub fn interior(&self, x: f64) -> f64 {
        if self.support.contains_interior(x) {
            self.p.score(x) - self.q.score(x)
        } else {
            0.0
        }
    }

    pub fn p(&self) -> &Density {
        &self.p
    }

    pub fn q(&self) -> &Density {
        &self.q
    }
}

pub fn residual(p: &Density, q: &Density) -> Result<Residual> {
    let support = p.support();
    support.ensure_same(&q.support())?;
    Ok(Residual {
        p: p.clone(),
        q: q.clone(),
        support,
        boundary_atoms_live: [support.a_closed, support.b_closed],
    })
}

/// `E_w[T]` with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expectation {
    pub value: f64,
    pub error_estimate: f64,
}

/// `∫ interior·w + Σ coefficient·w(location)`.
pub fn expect_stein(v: &SteinValue, w: &Density, spec: &QuadratureSpec) -> Result<Expectation> {
    let r = w.expect(|x| v.interior(x), &[], spec)?.require_converged()?;
    let atoms: f64 = v.atoms.iter().map(|(loc, c)| c * w.pdf(*loc)).sum();
    Ok(Expectation {
        value: r.value + atoms,
        error_estimate: r.error_estimate,
    })
}

pub const FACTORIZATION_TOL_ANALYTIC: f64 = 1e-10;
pub const FACTORIZATION_TOL_NUMERIC: f64 = 1e-4;

/// Max over an interior quantile grid of
/// `|T(f,p) − T(f,q) − f·r(p,q)|` on the interior.
pub fn check_factorization(p: &Density, q: &Density, f: &TestFunction, grid_size: usize) -> Result<BoundReport> {
    let r = residual(p, q)?;
    let (tp, tq) = (stein_operator(f, p), stein_operator(f, q));
    let mut worst = 0.0f64;
    let mut at = f64::NAN;
    for x in p.quantile_grid(grid_size.max(2), 0.005, 0.995) {
        let dev = (tp.interior(x) - tq.interior(x) - f.value(x) * r.interior(x)).abs();
        if !(dev <= worst) {
            worst = dev;
            at = x;
        }
    }
    let analytic = p.has_analytic_score() && q.has_analytic_score();
    let tol = if analytic {
        FACTORIZATION_TOL_ANALYTIC
    } else {
        FACTORIZATION_TOL_NUMERIC
    };
    let (mp, mq) = (scan_membership(f, p), scan_membership(f, q));
    Ok(BoundReport::inequality("factorization", worst, 0.0, tol)
        .with_pair(p.label(), q.label())
        .with_observable(f.label())
        .detail("argmax", at)
        .detail("f_in_F_p", if mp.bounded { 1.0 } else { 0.0 })
        .detail("f_in_F_q", if mq.bounded { 1.0 } else { 0.0 }))
}

pub const ZERO_MEAN_TOL: f64 = 1e-7;
/// Threshold on `max_f |E_w[T(f,p)]|` taken as evidence that `w ≠ p`.
pub const SEPARATION_THRESHOLD: f64 = 1e-3;

/// `E_w[T(f,p)]` for each `f`. With `w = p` each value must vanish; otherwise
/// one extra report asks that some `f` separates `w` from `p`.
pub fn check_characterization(
    p: &Density,
    fs: &[TestFunction],
    w: &Density,
    spec: &QuadratureSpec,
) -> Result<Vec<BoundReport>> {
    let same = p.same_law(w);
    let mut out = Vec::with_capacity(fs.len() + 1);
    let mut largest = 0.0f64;
    let mut quad_error = 0.0f64;
    let mut values = Vec::with_capacity(fs.len());
    for f in fs {
        let e = expect_stein(&stein_operator(f, p), w, spec)?;
        largest = largest.max(e.value.abs());
        quad_error = quad_error.max(e.error_estimate);
        values.push((f.label().to_string(), e.value));
        if same {
            let m = scan_membership(f, p);
            out.push(
                BoundReport::inequality("zero_mean", e.value.abs(), 0.0, ZERO_MEAN_TOL)
                    .with_pair(p.label(), w.label())
                    .with_observable(f.label())
                    .with_quad_error(e.error_estimate)
                    .detail("expectation", e.value)
                    .detail("f_in_F_p", if m.bounded { 1.0 } else { 0.0 }),
            );
        }
    }
    if !same {
        let mut report = BoundReport::exceeds("separation", largest, SEPARATION_THRESHOLD)
            .with_pair(p.label(), w.label())
            .with_observable("dictionary")
            .with_quad_error(quad_error);
        for (label, v) in values {
            report = report.detail(&label, v);
        }
        out.push(report);
    }
    Ok(out)
}
