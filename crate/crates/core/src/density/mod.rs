//! Univariate densities with explicit support, score and cdf.
//!
//! A [`Density`] is immutable and cheap to clone. Every evaluator is
//! hard-zeroed outside the support: `pdf` is 0, `score` is 0 and `log_pdf` is
//! `−∞` there, so expressions such as `p(x)/p(x)` are never formed off `S`.

pub mod expr;
pub mod kde;
pub mod pearson;
pub mod spec;
mod table;

use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, OnceLock};

use libm::erfc;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SteinError};
use crate::quadrature::{integrate_placed, Placement, QuadResult, QuadratureSpec};
use crate::support::Support;

pub use kde::{Bandwidth, Kde};
use pearson::PearsonLog;
pub use pearson::PearsonSpec;
use table::CdfTable;

/// Tolerance on the total mass of a constructed density.
pub const MASS_TOLERANCE: f64 = 1e-9;

/// Log-density drop used to cut infinite tails for tabulation and scans.
const TAIL_DROP: f64 = 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Gaussian,
    Exponential,
    Uniform,
    Semicircle,
    Arcsine,
    Quartic,
}

impl Family {
    pub const ALL: [Family; 6] = [
        Family::Gaussian,
        Family::Exponential,
        Family::Uniform,
        Family::Semicircle,
        Family::Arcsine,
        Family::Quartic,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Family::Gaussian => "gaussian",
            Family::Exponential => "exponential",
            Family::Uniform => "uniform",
            Family::Semicircle => "semicircle",
            Family::Arcsine => "arcsine",
            Family::Quartic => "quartic",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = SteinError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "gauss" | "normal" => Family::Gaussian,
            "exponential" | "exp" => Family::Exponential,
            "uniform" | "unif" => Family::Uniform,
            "semicircle" => Family::Semicircle,
            "arcsine" => Family::Arcsine,
            "quartic" => Family::Quartic,
            other => return Err(SteinError::UnknownFamily(other.to_string())),
        })
    }
}

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Model {
    Gaussian { mu: f64, sigma: f64 },
    Exponential { rate: f64 },
    Uniform { lo: f64, hi: f64 },
    Semicircle { radius: f64 },
    Arcsine { lo: f64, hi: f64 },
    Quartic { mu: f64, scale: f64 },
    Pearson(PearsonLog),
    Custom { log_f: ScalarFn, score: Option<ScalarFn> },
    Kde(Kde),
}

impl Model {
    fn log_unnorm(&self, x: f64) -> f64 {
        match self {
            Model::Gaussian { mu, sigma } => {
                let z = (x - mu) / sigma;
                -0.5 * z * z
            }
            Model::Exponential { rate } => -rate * x,
            Model::Uniform { .. } => 0.0,
            Model::Semicircle { radius } => 0.5 * ((radius - x) * (radius + x)).ln(),
            Model::Arcsine { lo, hi } => -0.5 * ((x - lo) * (hi - x)).ln(),
            Model::Quartic { mu, scale } => {
                let z = (x - mu) / scale;
                let z2 = z * z;
                -z2 * z2 / 12.0
            }
            Model::Pearson(p) => p.log_unnorm(x),
            Model::Custom { log_f, .. } => log_f(x),
            Model::Kde(k) => k.log_pdf_and_score(x).0,
        }
    }

    fn analytic_score(&self, x: f64) -> Option<f64> {
        Some(match self {
            Model::Gaussian { mu, sigma } => -(x - mu) / (sigma * sigma),
            Model::Exponential { rate } => -rate,
            Model::Uniform { .. } => 0.0,
            Model::Semicircle { radius } => -x / ((radius - x) * (radius + x)),
            Model::Arcsine { lo, hi } => -0.5 * (1.0 / (x - lo) - 1.0 / (hi - x)),
            Model::Quartic { mu, scale } => {
                let z = (x - mu) / scale;
                -z * z * z / (3.0 * scale)
            }
            Model::Pearson(p) => p.spec().score(x),
            Model::Custom { score, .. } => return score.as_ref().map(|s| s(x)),
            Model::Kde(k) => k.log_pdf_and_score(x).1,
        })
    }

    fn has_analytic_score(&self) -> bool {
        !matches!(self, Model::Custom { score: None, .. })
    }

    fn closed_log_norm(&self) -> Option<f64> {
        use std::f64::consts::PI;
        match self {
            Model::Gaussian { sigma, .. } => Some((sigma * (2.0 * PI).sqrt()).ln()),
            Model::Exponential { rate } => Some(-rate.ln()),
            Model::Uniform { lo, hi } => Some((hi - lo).ln()),
            Model::Semicircle { radius } => Some((0.5 * PI * radius * radius).ln()),
            Model::Arcsine { .. } => Some(PI.ln()),
            Model::Kde(_) => Some(0.0),
            _ => None,
        }
    }

    /// Closed-form cdf at an interior point.
    fn closed_cdf(&self, x: f64) -> Option<f64> {
        use std::f64::consts::{FRAC_1_SQRT_2, PI};
        match self {
            Model::Gaussian { mu, sigma } => Some(0.5 * erfc(-(x - mu) / sigma * FRAC_1_SQRT_2)),
            Model::Exponential { rate } => Some(-(-rate * x).exp_m1()),
            Model::Uniform { lo, hi } => Some((x - lo) / (hi - lo)),
            Model::Semicircle { radius } => {
                let r2 = radius * radius;
                Some(0.5 + x * (r2 - x * x).max(0.0).sqrt() / (PI * r2) + (x / radius).asin() / PI)
            }
            Model::Arcsine { lo, hi } => Some(2.0 / PI * ((x - lo) / (hi - lo)).sqrt().asin()),
            _ => None,
        }
    }

    /// Closed-form upper tail, where it is more accurate than `1 − cdf`.
    fn closed_sf(&self, x: f64) -> Option<f64> {
        use std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Model::Gaussian { mu, sigma } => Some(0.5 * erfc((x - mu) / sigma * FRAC_1_SQRT_2)),
            Model::Exponential { rate } => Some((-rate * x).exp()),
            _ => self.closed_cdf(x).map(|c| 1.0 - c),
        }
    }

    fn family(&self) -> Option<Family> {
        match self {
            Model::Gaussian { .. } => Some(Family::Gaussian),
            Model::Exponential { .. } => Some(Family::Exponential),
            Model::Uniform { .. } => Some(Family::Uniform),
            Model::Semicircle { .. } => Some(Family::Semicircle),
            Model::Arcsine { .. } => Some(Family::Arcsine),
            Model::Quartic { .. } => Some(Family::Quartic),
            _ => None,
        }
    }
}

struct Inner {
    label: String,
    support: Support,
    model: Model,
    log_norm: f64,
    center: f64,
    scale: f64,
    range: (f64, f64),
    table: OnceLock<CdfTable>,
}

/// A probability density on an interval.
#[derive(Clone)]
pub struct Density(Arc<Inner>);

impl fmt::Debug for Density {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Density")
            .field("label", &self.0.label)
            .field("support", &self.0.support)
            .field("log_norm", &self.0.log_norm)
            .finish()
    }
}

/// Which side of a point an integral runs over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    /// `(a, x)`
    Below,
    /// `(x, b)`
    Above,
}

fn invalid(msg: impl Into<String>) -> SteinError {
    SteinError::InvalidParameter(msg.into())
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

impl Density {
    // -- construction -----------------------------------------------------

    /// One of the built-in targets. Parameters, all optional with the
    /// defaults in brackets:
    /// gaussian `[mu=0, sigma=1]`, exponential `[rate=1]`, uniform `[lo=0, hi=1]`,
    /// semicircle `[radius=2]`, arcsine `[lo=0, hi=1]`, quartic `[mu=0, scale=1]`.
    pub fn builtin(family: Family, params: &[f64]) -> Result<Density> {
        let get = |i: usize, default: f64| params.get(i).copied().unwrap_or(default);
        let max_params = match family {
            Family::Exponential | Family::Semicircle => 1,
            _ => 2,
        };
        if params.len() > max_params {
            return Err(invalid(format!(
                "{family} takes at most {max_params} parameters, got {}",
                params.len()
            )));
        }
        if let Some(v) = params.iter().find(|v| !v.is_finite()) {
            return Err(invalid(format!("non-finite parameter {v}")));
        }
        let (model, support, label) = match family {
            Family::Gaussian => {
                let (mu, sigma) = (get(0, 0.0), get(1, 1.0));
                if !(sigma > 0.0) {
                    return Err(invalid(format!("gaussian sigma must be positive, got {sigma}")));
                }
                (
                    Model::Gaussian { mu, sigma },
                    Support::real_line(),
                    format!("gaussian({},{})", fmt_num(mu), fmt_num(sigma)),
                )
            }
            Family::Exponential => {
                let rate = get(0, 1.0);
                if !(rate > 0.0) {
                    return Err(invalid(format!("exponential rate must be positive, got {rate}")));
                }
                (
                    Model::Exponential { rate },
                    Support::new(0.0, f64::INFINITY, true, false)?,
                    format!("exponential({})", fmt_num(rate)),
                )
            }
            Family::Uniform => {
                let (lo, hi) = (get(0, 0.0), get(1, 1.0));
                if !(lo < hi) {
                    return Err(invalid(format!("uniform needs lo < hi, got [{lo}, {hi}]")));
                }
                (
                    Model::Uniform { lo, hi },
                    Support::closed(lo, hi)?,
                    format!("uniform({},{})", fmt_num(lo), fmt_num(hi)),
                )
            }
            Family::Semicircle => {
                let radius = get(0, 2.0);
                if !(radius > 0.0) {
                    return Err(invalid(format!("semicircle radius must be positive, got {radius}")));
                }
                (
                    Model::Semicircle { radius },
                    Support::open(-radius, radius)?,
                    format!("semicircle({})", fmt_num(radius)),
                )
            }
            Family::Arcsine => {
                let (lo, hi) = (get(0, 0.0), get(1, 1.0));
                if !(lo < hi) {
                    return Err(invalid(format!("arcsine needs lo < hi, got [{lo}, {hi}]")));
                }
                (
                    Model::Arcsine { lo, hi },
                    Support::open(lo, hi)?,
                    format!("arcsine({},{})", fmt_num(lo), fmt_num(hi)),
                )
            }
            Family::Quartic => {
                let (mu, scale) = (get(0, 0.0), get(1, 1.0));
                if !(scale > 0.0) {
                    return Err(invalid(format!("quartic scale must be positive, got {scale}")));
                }
                (
                    Model::Quartic { mu, scale },
                    Support::real_line(),
                    format!("quartic({},{})", fmt_num(mu), fmt_num(scale)),
                )
            }
        };
        let hint = match model {
            Model::Gaussian { mu, sigma } => Some((mu, sigma)),
            Model::Exponential { rate } => Some((0.0, 1.0 / rate)),
            Model::Uniform { lo, hi } | Model::Arcsine { lo, hi } => Some((0.5 * (lo + hi), hi - lo)),
            Model::Semicircle { radius } => Some((0.0, radius)),
            Model::Quartic { mu, scale } => Some((mu, scale)),
            _ => None,
        };
        Self::assemble(label, support, model, hint)
    }

    pub fn gaussian(mu: f64, sigma: f64) -> Result<Density> {
        Self::builtin(Family::Gaussian, &[mu, sigma])
    }

    pub fn standard_gaussian() -> Density {
        Self::builtin(Family::Gaussian, &[]).expect("valid defaults")
    }

    pub fn exponential(rate: f64) -> Result<Density> {
        Self::builtin(Family::Exponential, &[rate])
    }

    pub fn uniform() -> Density {
        Self::builtin(Family::Uniform, &[]).expect("valid defaults")
    }

    pub fn semicircle() -> Density {
        Self::builtin(Family::Semicircle, &[]).expect("valid defaults")
    }

    pub fn arcsine() -> Density {
        Self::builtin(Family::Arcsine, &[]).expect("valid defaults")
    }

    /// `∝ e^{−x⁴/12}`.
    pub fn quartic() -> Density {
        Self::builtin(Family::Quartic, &[]).expect("valid defaults")
    }

    /// `∝ e^{−(x−mu)⁴/12}`.
    pub fn quartic_shifted(mu: f64) -> Result<Density> {
        Self::builtin(Family::Quartic, &[mu])
    }

    /// Density solving `(s·p)′ = τ·p`, normalised by quadrature.
    pub fn pearson(spec: &PearsonSpec) -> Result<Density> {
        spec.validate()?;
        let [s0, s1, s2] = spec.s;
        let [t0, t1] = spec.tau;
        let label = format!("pearson({s2},{s1},{s0}|{t1},{t0})");
        Self::assemble(label, spec.support, Model::Pearson(PearsonLog::new(spec)), None)
    }

    /// Normalise a nonnegative function on `support`. Without a score hint the
    /// score is a numerical log-derivative.
    pub fn from_unnormalized<F>(f: F, support: Support, score_hint: Option<ScalarFn>, label: &str) -> Result<Density>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        let log_f: ScalarFn = Arc::new(move |x| {
            let v = f(x);
            if v > 0.0 {
                v.ln()
            } else {
                f64::NEG_INFINITY
            }
        });
        Self::assemble(
            label.to_string(),
            support,
            Model::Custom {
                log_f,
                score: score_hint,
            },
            None,
        )
    }

    /// Same as [`Density::from_unnormalized`] but from `ln f`, which keeps far
    /// tails representable.
    pub fn from_log_unnormalized<F>(
        log_f: F,
        support: Support,
        score_hint: Option<ScalarFn>,
        label: &str,
    ) -> Result<Density>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::assemble(
            label.to_string(),
            support,
            Model::Custom {
                log_f: Arc::new(log_f),
                score: score_hint,
            },
            None,
        )
    }

    pub fn from_kde(kde: Kde, label: &str) -> Result<Density> {
        let support = kde.support();
        let hint = Some(kde.hint());
        Self::assemble(label.to_string(), support, Model::Kde(kde), hint)
    }

    /// Same density under a different label.
    pub fn relabeled(&self, label: &str) -> Density {
        let i = &self.0;
        Density(Arc::new(Inner {
            label: label.to_string(),
            support: i.support,
            model: i.model.clone(),
            log_norm: i.log_norm,
            center: i.center,
            scale: i.scale,
            range: i.range,
            table: match i.table.get() {
                Some(t) => OnceLock::from(t.clone()),
                None => OnceLock::new(),
            },
        }))
    }

    fn assemble(label: String, support: Support, model: Model, hint: Option<(f64, f64)>) -> Result<Density> {
        let lp = |x: f64| {
            if support.contains(x) {
                model.log_unnorm(x)
            } else {
                f64::NEG_INFINITY
            }
        };
        let (center, scale) = match hint {
            Some(h) => h,
            None => scan_mode(&lp, &support)?,
        };
        let lp_center = lp(center);
        if !lp_center.is_finite() {
            return Err(SteinError::NonIntegrable {
                support: support.to_string(),
                reason: format!("log density is not finite at the reference point {center}"),
            });
        }
        let range = effective_range(&lp, &support, center, scale, lp_center);
        let log_norm = match model.closed_log_norm() {
            Some(v) => v,
            None => {
                let r = integrate_placed(
                    |x| {
                        let l = lp(x) - lp_center;
                        if l == f64::NEG_INFINITY {
                            0.0
                        } else {
                            l.exp()
                        }
                    },
                    support.a,
                    support.b,
                    &[],
                    &QuadratureSpec::tight(),
                    Placement { center, scale },
                )
                .map_err(|e| SteinError::NonIntegrable {
                    support: support.to_string(),
                    reason: e.to_string(),
                })?;
                if !r.converged || !(r.value > 0.0) || !r.value.is_finite() {
                    return Err(SteinError::NonIntegrable {
                        support: support.to_string(),
                        reason: format!(
                            "normalisation quadrature did not converge (value {}, error {})",
                            r.value, r.error_estimate
                        ),
                    });
                }
                lp_center + r.value.ln()
            }
        };
        Ok(Density(Arc::new(Inner {
            label,
            support,
            model,
            log_norm,
            center,
            scale,
            range,
            table: OnceLock::new(),
        })))
    }

    // -- accessors ----------------------------------------------------------

    pub fn label(&self) -> &str {
        &self.0.label
    }

    pub fn support(&self) -> Support {
        self.0.support
    }

    /// Built-in family, if this is one.
    pub fn family(&self) -> Option<Family> {
        self.0.model.family()
    }

    /// `Z` in `p = f/Z`, as actually used.
    pub fn log_partition(&self) -> f64 {
        self.0.log_norm
    }

    /// Finite window outside of which the density is negligible (the support
    /// itself when finite).
    pub fn effective_range(&self) -> (f64, f64) {
        self.0.range
    }

    /// Rough location and spread, used to place quadrature transforms.
    pub fn location_scale(&self) -> (f64, f64) {
        (self.0.center, self.0.scale)
    }

    pub(crate) fn placement(&self) -> Placement {
        Placement {
            center: self.0.center,
            scale: self.0.scale,
        }
    }

    /// Same object, or same label, support and normalisation.
    pub fn same_law(&self, other: &Density) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
            || (self.0.label == other.0.label
                && self.0.support.same_as(&other.0.support)
                && self.0.log_norm == other.0.log_norm)
    }

    pub fn has_analytic_score(&self) -> bool {
        self.0.model.has_analytic_score()
    }

    // -- evaluators ---------------------------------------------------------

    pub fn log_pdf(&self, x: f64) -> f64 {
        if self.0.support.contains(x) {
            self.0.model.log_unnorm(x) - self.0.log_norm
        } else {
            f64::NEG_INFINITY
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let l = self.log_pdf(x);
        if l == f64::NEG_INFINITY {
            0.0
        } else {
            l.exp()
        }
    }

    /// `p′/p` on the support, 0 elsewhere.
    pub fn score(&self, x: f64) -> f64 {
        if !self.0.support.contains(x) {
            return 0.0;
        }
        match self.0.model.analytic_score(x) {
            Some(v) => v,
            None => self.numeric_score(x),
        }
    }

    /// Finite-difference derivative of `log p`; one-sided near an endpoint.
    pub fn numeric_score(&self, x: f64) -> f64 {
        if !self.0.support.contains(x) {
            return 0.0;
        }
        let s = &self.0.support;
        // At an open finite endpoint log p is typically singular, so the step
        // shrinks with the distance to it. A closed endpoint carries a finite
        // positive density and is handled by the one-sided stencils instead.
        let mut room = f64::INFINITY;
        if s.a.is_finite() && !s.a_closed {
            room = room.min(x - s.a);
        }
        if s.b.is_finite() && !s.b_closed {
            room = room.min(s.b - x);
        }
        let width = s.b - s.a;
        let base = x.abs().max(1.0).min(width / 4.0);
        let h = if room > 0.0 { base.min(room) } else { base } * f64::EPSILON.cbrt();
        let lp = |u: f64| self.0.model.log_unnorm(u);
        if s.contains(x - h) && s.contains(x + h) {
            (lp(x + h) - lp(x - h)) / (2.0 * h)
        } else if s.contains(x + 2.0 * h) {
            (-3.0 * lp(x) + 4.0 * lp(x + h) - lp(x + 2.0 * h)) / (2.0 * h)
        } else {
            (3.0 * lp(x) - 4.0 * lp(x - h) + lp(x - 2.0 * h)) / (2.0 * h)
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let s = &self.0.support;
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= s.a {
            return 0.0;
        }
        if x >= s.b {
            return 1.0;
        }
        match self.0.model.closed_cdf(x) {
            Some(v) => v.clamp(0.0, 1.0),
            None => self.table().eval(x),
        }
    }

    /// `1 − cdf`, computed directly where a closed form exists.
    pub fn sf(&self, x: f64) -> f64 {
        let s = &self.0.support;
        if x <= s.a {
            return 1.0;
        }
        if x >= s.b {
            return 0.0;
        }
        match self.0.model.closed_sf(x) {
            Some(v) => v.clamp(0.0, 1.0),
            None => 1.0 - self.table().eval(x),
        }
    }

    fn table(&self) -> &CdfTable {
        self.0.table.get_or_init(|| {
            let (lo, hi) = self.0.range;
            CdfTable::build(|x| self.pdf(x), lo, hi, self.placement())
                .expect("density was normalised on construction, so its cdf converges")
        })
    }

    /// Inverse cdf by bisection within the effective range.
    pub fn quantile(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = self.0.range;
        if u <= 0.0 {
            return lo;
        }
        if u >= 1.0 {
            return hi;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    pub fn median(&self) -> f64 {
        self.quantile(0.5)
    }

    /// `n` points at equally spaced probability levels in `[lo_level, hi_level]`.
    pub fn quantile_grid(&self, n: usize, lo_level: f64, hi_level: f64) -> Vec<f64> {
        if n == 1 {
            return vec![self.quantile(0.5 * (lo_level + hi_level))];
        }
        (0..n)
            .map(|i| self.quantile(lo_level + (hi_level - lo_level) * i as f64 / (n - 1) as f64))
            .collect()
    }

    // -- integrals ----------------------------------------------------------

    /// `E_p[g(X)] = ∫ g p` over the support.
    pub fn expect<G: Fn(f64) -> f64>(&self, g: G, breaks: &[f64], spec: &QuadratureSpec) -> Result<QuadResult> {
        let s = self.0.support;
        integrate_placed(
            |x| {
                let p = self.pdf(x);
                if p == 0.0 {
                    0.0
                } else {
                    g(x) * p
                }
            },
            s.a,
            s.b,
            breaks,
            spec,
            self.placement(),
        )
    }

    /// `∫ g(u) p(u)/p(x) du` over `(a, x)` or `(x, b)`. The ratio is formed
    /// from log densities, so it stays finite where `p(x)` underflows.
    pub fn relative_integral<G: Fn(f64) -> f64>(
        &self,
        x: f64,
        g: G,
        side: Side,
        breaks: &[f64],
        spec: &QuadratureSpec,
    ) -> Result<QuadResult> {
        let lx = self.log_pdf(x);
        if !lx.is_finite() {
            return Ok(QuadResult {
                value: 0.0,
                error_estimate: 0.0,
                subdivisions_used: 0,
                converged: true,
            });
        }
        let s = self.0.support;
        let (lo, hi) = match side {
            Side::Below => (s.a, x),
            Side::Above => (x, s.b),
        };
        integrate_placed(
            |u| {
                let l = self.log_pdf(u);
                if l == f64::NEG_INFINITY {
                    return 0.0;
                }
                let w = (l - lx).exp();
                if w == 0.0 {
                    0.0
                } else {
                    g(u) * w
                }
            },
            lo,
            hi,
            breaks,
            spec,
            Placement {
                center: x,
                scale: self.0.scale,
            },
        )
    }
}

/// `P_p(X ≤ x)`.
pub fn cdf_at(p: &Density, x: f64) -> f64 {
    p.cdf(x)
}

/// Locate a reference point (approximate mode) and a length scale for a
/// log density given only pointwise.
fn scan_mode<L: Fn(f64) -> f64>(lp: &L, support: &Support) -> Result<(f64, f64)> {
    let (a, b) = (support.a, support.b);
    let candidates: Vec<f64> = if support.is_finite() {
        (1..1024).map(|i| a + (b - a) * i as f64 / 1024.0).collect()
    } else {
        let base = if a.is_finite() {
            a
        } else if b.is_finite() {
            b
        } else {
            0.0
        };
        let mut c = vec![base];
        for k in -40..=60 {
            let r = 2f64.powf(k as f64 / 2.0);
            c.push(base + r);
            c.push(base - r);
        }
        c.into_iter().filter(|x| support.contains_interior(*x)).collect()
    };
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    for x in candidates {
        let v = lp(x);
        if v > best.1 && v.is_finite() {
            best = (x, v);
        }
    }
    let (center, top) = best;
    if !top.is_finite() {
        return Err(SteinError::NonIntegrable {
            support: support.to_string(),
            reason: "function is zero or non-finite everywhere on the scan grid".into(),
        });
    }
    // Length scale: distance at which the log density first drops by ½.
    let mut scale = None;
    for k in -40..=80 {
        let r = 2f64.powf(k as f64 / 4.0);
        let drop = [center - r, center + r]
            .into_iter()
            .filter(|x| support.contains_interior(*x))
            .any(|x| lp(x) < top - 0.5);
        if drop {
            scale = Some(r);
            break;
        }
    }
    let scale = scale.unwrap_or(if support.is_finite() { 0.25 * (b - a) } else { 1.0 });
    Ok((center, scale))
}

/// Finite window `[lo, hi]`: finite endpoints are kept; an infinite end is
/// cut where the log density has dropped by [`TAIL_DROP`] below the reference.
fn effective_range<L: Fn(f64) -> f64>(lp: &L, support: &Support, center: f64, scale: f64, top: f64) -> (f64, f64) {
    let cut = |dir: f64| {
        let mut r_in = 0.0;
        let mut r = scale;
        for _ in 0..2000 {
            let v = lp(center + dir * r);
            if v < top - TAIL_DROP || !v.is_finite() {
                break;
            }
            r_in = r;
            r *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (r_in + r);
            let v = lp(center + dir * mid);
            if v < top - TAIL_DROP || !v.is_finite() {
                r = mid;
            } else {
                r_in = mid;
            }
        }
        center + dir * r
    };
    let lo = if support.a.is_finite() { support.a } else { cut(-1.0) };
    let hi = if support.b.is_finite() { support.b } else { cut(1.0) };
    (lo, hi)
}
