//! Adaptive Gauss–Kronrod quadrature on finite, semi-infinite and doubly
//! infinite intervals.
//!
//! Infinite ranges are mapped onto a bounded parameter interval:
//! `x = a + s·t/(1−t)` for `[a, ∞)`, `x = b − s·t/(1−t)` for `(−∞, b]` and
//! `x = c + s·t/(1−t²)` for the whole line. The 21-point Kronrod rule never
//! samples the ends of a panel, so integrable endpoint singularities (the
//! arcsine law, say) need no special casing.
//!
//! Besides plain integration the module offers [`cumulative`], which keeps the
//! converged panel decomposition around so that `x ↦ ∫_a^x f` can be evaluated
//! cheaply many times, and [`sup_on_interval`], a grid scan followed by Brent
//! refinement.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SteinError};
use crate::support::Support;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transform {
    None,
    SemiInfinite,
    DoublyInfinite,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_subdivisions: usize,
    pub transform: Transform,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            abs_tol: 1e-10,
            rel_tol: 1e-9,
            max_subdivisions: 2000,
            transform: Transform::Auto,
        }
    }
}

impl QuadratureSpec {
    pub fn new(abs_tol: f64, rel_tol: f64, max_subdivisions: usize) -> Result<Self> {
        let spec = Self {
            abs_tol,
            rel_tol,
            max_subdivisions,
            transform: Transform::Auto,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Tolerances used for inner integrals that feed an outer quadrature.
    pub fn tight() -> Self {
        Self {
            abs_tol: 1e-13,
            rel_tol: 1e-12,
            max_subdivisions: 2000,
            transform: Transform::Auto,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) || self.max_subdivisions < 1 {
            return Err(SteinError::InvalidParameter(format!(
                "quadrature tolerances must be positive and max_subdivisions >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    fn target(&self, value: f64) -> f64 {
        self.abs_tol.max(self.rel_tol * value.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
    pub subdivisions_used: usize,
    pub converged: bool,
}

impl QuadResult {
    /// Turn a non-converged result into an error.
    pub fn require_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(SteinError::NonConvergence {
                value: self.value,
                error_estimate: self.error_estimate,
                subdivisions: self.subdivisions_used,
            })
        }
    }
}

// ---------------------------------------------------------------------------
// Variable changes

#[derive(Debug, Clone, Copy)]
enum Map {
    Finite { a: f64, b: f64 },
    Upper { a: f64, s: f64 },
    Lower { b: f64, s: f64 },
    Both { c: f64, s: f64 },
}

impl Map {
    fn new(lo: f64, hi: f64, transform: Transform, center: f64, scale: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo > hi {
            return Err(SteinError::InvalidSupport(format!(
                "bad integration range [{lo}, {hi}]"
            )));
        }
        let s = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };
        let map = match (lo.is_finite(), hi.is_finite()) {
            (true, true) => Map::Finite { a: lo, b: hi },
            (true, false) => Map::Upper { a: lo, s },
            (false, true) => Map::Lower { b: hi, s },
            (false, false) => Map::Both {
                c: if center.is_finite() { center } else { 0.0 },
                s,
            },
        };
        let ok = match (transform, map) {
            (Transform::Auto, _) | (_, Map::Finite { .. }) => true,
            (Transform::None, _) => false,
            (Transform::SemiInfinite, m) => matches!(m, Map::Upper { .. } | Map::Lower { .. }),
            (Transform::DoublyInfinite, m) => matches!(m, Map::Both { .. }),
        };
        if !ok {
            return Err(SteinError::InvalidParameter(format!(
                "transform {transform:?} cannot handle range [{lo}, {hi}]"
            )));
        }
        Ok(map)
    }

    fn t_range(&self) -> (f64, f64) {
        match *self {
            Map::Finite { a, b } => (a, b),
            Map::Upper { .. } | Map::Lower { .. } => (0.0, 1.0),
            Map::Both { .. } => (-1.0, 1.0),
        }
    }

    fn x(&self, t: f64) -> f64 {
        match *self {
            Map::Finite { .. } => t,
            Map::Upper { a, s } => a + s * t / (1.0 - t),
            Map::Lower { b, s } => b - s * t / (1.0 - t),
            Map::Both { c, s } => c + s * t / ((1.0 - t) * (1.0 + t)),
        }
    }

    fn jacobian(&self, t: f64) -> f64 {
        match *self {
            Map::Finite { .. } => 1.0,
            Map::Upper { s, .. } | Map::Lower { s, .. } => s / ((1.0 - t) * (1.0 - t)),
            Map::Both { s, .. } => {
                let d = (1.0 - t) * (1.0 + t);
                s * (1.0 + t * t) / (d * d)
            }
        }
    }

    /// Inverse of [`Map::x`].
    fn t(&self, x: f64) -> f64 {
        let (t0, t1) = self.t_range();
        let t = match *self {
            Map::Finite { .. } => x,
            Map::Upper { a, s } => {
                let y = x - a;
                if y.is_infinite() {
                    1.0
                } else {
                    y / (s + y)
                }
            }
            Map::Lower { b, s } => {
                let y = b - x;
                if y.is_infinite() {
                    1.0
                } else {
                    y / (s + y)
                }
            }
            Map::Both { c, s } => {
                let y = x - c;
                if y.is_infinite() {
                    y.signum()
                } else if y == 0.0 {
                    0.0
                } else {
                    2.0 * y / (s + (s * s + 4.0 * y * y).sqrt())
                }
            }
        };
        t.clamp(t0, t1)
    }

    /// Parameter-space endpoints in integration order.
    fn oriented(&self, x_lo: f64, x_hi: f64) -> (f64, f64) {
        match self {
            Map::Lower { .. } => (self.t(x_hi), self.t(x_lo)),
            _ => (self.t(x_lo), self.t(x_hi)),
        }
    }
}

/// A [`Map`] restricted to `[t_lo, t_hi]` and composed with the smoothstep
/// `t = t_lo + (t_hi − t_lo)(3u² − 2u³)`, `u ∈ [0, 1]`. The warp has zero
/// slope at both ends, which turns algebraic endpoint singularities such as
/// `1/√x` into smooth integrands.
#[derive(Debug, Clone, Copy)]
struct Chart {
    map: Map,
    t_lo: f64,
    t_hi: f64,
}

impl Chart {
    fn new(map: Map, x_lo: f64, x_hi: f64) -> Self {
        let (t_lo, t_hi) = map.oriented(x_lo, x_hi);
        Self { map, t_lo, t_hi }
    }

    fn t(&self, u: f64) -> f64 {
        self.t_lo + (self.t_hi - self.t_lo) * u * u * (3.0 - 2.0 * u)
    }

    #[cfg(test)]
    fn x(&self, u: f64) -> f64 {
        self.map.x(self.t(u))
    }

    fn jacobian(&self, u: f64) -> f64 {
        (self.t_hi - self.t_lo) * 6.0 * u * (1.0 - u) * self.map.jacobian(self.t(u))
    }

    /// Inverse of [`Chart::x`].
    fn u(&self, x: f64) -> f64 {
        let v = ((self.map.t(x) - self.t_lo) / (self.t_hi - self.t_lo)).clamp(0.0, 1.0);
        if v == 0.0 || v == 1.0 {
            return v;
        }
        (0.5 - ((1.0 - 2.0 * v).asin() / 3.0).sin()).clamp(0.0, 1.0)
    }

    fn reversed(&self) -> bool {
        matches!(self.map, Map::Lower { .. })
    }
}

// ---------------------------------------------------------------------------
// Gauss–Kronrod 10/21

#[allow(clippy::excessive_precision)]
const XGK: [f64; 11] = [
    0.995_657_163_025_808_080_735_527_280_689_003,
    0.973_906_528_517_171_720_077_964_012_084_452,
    0.930_157_491_355_708_226_001_207_180_059_508,
    0.865_063_366_688_984_510_732_096_688_423_493,
    0.780_817_726_586_416_897_063_717_578_345_042,
    0.679_409_568_299_024_406_234_327_365_114_874,
    0.562_757_134_668_604_683_339_000_099_272_694,
    0.433_395_394_129_247_190_799_265_943_165_784,
    0.294_392_862_701_460_198_131_126_603_103_866,
    0.148_874_338_981_631_210_884_826_001_129_720,
    0.0,
];

// Gauss weights for the odd-indexed Kronrod nodes.
#[allow(clippy::excessive_precision)]
const WG: [f64; 5] = [
    0.066_671_344_308_688_137_593_568_809_893_332,
    0.149_451_349_150_580_593_145_776_339_657_697,
    0.219_086_362_515_982_043_995_534_934_228_163,
    0.269_266_719_309_996_355_091_226_921_569_469,
    0.295_524_224_714_752_870_173_892_994_651_338,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 11] = [
    0.011_694_638_867_371_874_278_064_396_062_192,
    0.032_558_162_307_964_727_478_818_972_459_390,
    0.054_755_896_574_351_996_031_381_300_244_580,
    0.075_039_674_810_919_952_767_043_140_916_190,
    0.093_125_454_583_697_605_535_065_465_083_366,
    0.109_387_158_802_297_641_899_210_590_325_805,
    0.123_491_976_262_065_851_077_958_109_831_074,
    0.134_709_217_311_473_325_928_054_001_771_707,
    0.142_775_938_577_060_080_797_094_273_138_717,
    0.147_739_104_901_338_491_374_841_515_972_068,
    0.149_445_554_002_916_905_664_936_468_389_821,
];

#[derive(Debug, Clone, Copy)]
struct Panel {
    t0: f64,
    t1: f64,
    value: f64,
    error: f64,
}

/// Evaluate `f` in parameter space, `f(x(u))·x'(u)`.
fn mapped<F: Fn(f64) -> f64>(f: &F, chart: &Chart, u: f64) -> Result<f64> {
    if u <= 0.0 || u >= 1.0 {
        return Ok(0.0);
    }
    let t = chart.t(u);
    let (lo, hi) = chart.map.t_range();
    if t <= lo || t >= hi || t <= chart.t_lo || t >= chart.t_hi {
        return Ok(0.0);
    }
    let x = chart.map.x(t);
    if !x.is_finite() {
        return Ok(0.0);
    }
    let fx = f(x);
    if fx == 0.0 {
        return Ok(0.0);
    }
    if !fx.is_finite() {
        return Err(SteinError::NonFiniteIntegrand { x, value: fx });
    }
    Ok(fx * chart.jacobian(u))
}

fn gk21<F: Fn(f64) -> f64>(f: &F, chart: &Chart, t0: f64, t1: f64) -> Result<Panel> {
    let center = 0.5 * (t0 + t1);
    let half = 0.5 * (t1 - t0);
    let fc = mapped(f, chart, center)?;
    let mut kronrod = fc * WGK[10];
    let mut gauss = 0.0;
    let mut resabs = kronrod.abs();
    let mut fv1 = [0.0; 10];
    let mut fv2 = [0.0; 10];
    for j in 0..10 {
        let dx = half * XGK[j];
        let f1 = mapped(f, chart, center - dx)?;
        let f2 = mapped(f, chart, center + dx)?;
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        resabs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut resasc = WGK[10] * (fc - mean).abs();
    for j in 0..10 {
        resasc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let value = kronrod * half;
    let resabs = resabs * half.abs();
    let resasc = resasc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && error != 0.0 {
        error = resasc * (200.0 * error / resasc).powf(1.5).min(1.0);
    }
    if resabs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * resabs);
    }
    Ok(Panel { t0, t1, value, error })
}

struct ByError(Panel);

impl PartialEq for ByError {
    fn eq(&self, other: &Self) -> bool {
        self.0.error == other.0.error
    }
}
impl Eq for ByError {}
impl PartialOrd for ByError {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for ByError {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.error.total_cmp(&other.0.error)
    }
}

struct Adaptive {
    panels: Vec<Panel>,
    result: QuadResult,
}

fn adapt<F: Fn(f64) -> f64>(
    f: &F,
    chart: &Chart,
    t_lo: f64,
    t_hi: f64,
    breaks_t: &[f64],
    spec: &QuadratureSpec,
) -> Result<Adaptive> {
    spec.validate()?;
    let mut cuts = vec![t_lo];
    let mut inner: Vec<f64> = breaks_t.iter().copied().filter(|t| *t > t_lo && *t < t_hi).collect();
    inner.sort_by(f64::total_cmp);
    inner.dedup();
    cuts.extend(inner);
    cuts.push(t_hi);

    let mut heap = BinaryHeap::new();
    let mut frozen = Vec::new();
    let mut value = 0.0;
    let mut error = 0.0;
    for w in cuts.windows(2) {
        if w[1] > w[0] {
            let p = gk21(f, chart, w[0], w[1])?;
            value += p.value;
            error += p.error;
            heap.push(ByError(p));
        }
    }

    let mut subdivisions = 0;
    while error > spec.target(value) && subdivisions < spec.max_subdivisions {
        let Some(ByError(worst)) = heap.pop() else {
            break;
        };
        let mid = 0.5 * (worst.t0 + worst.t1);
        let width = worst.t1 - worst.t0;
        if !(mid > worst.t0 && mid < worst.t1)
            || width <= 4.0 * f64::EPSILON * worst.t0.abs().max(worst.t1.abs()).max(1e-300)
        {
            frozen.push(worst);
            if heap.is_empty() {
                break;
            }
            continue;
        }
        let left = gk21(f, chart, worst.t0, mid)?;
        let right = gk21(f, chart, mid, worst.t1)?;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(ByError(left));
        heap.push(ByError(right));
        subdivisions += 1;
    }

    let mut panels: Vec<Panel> = heap.into_iter().map(|p| p.0).chain(frozen).collect();
    panels.sort_by(|a, b| a.t0.total_cmp(&b.t0));
    // Re-sum to shed the drift of the incremental updates.
    let value: f64 = panels.iter().map(|p| p.value).sum();
    let error: f64 = panels.iter().map(|p| p.error).sum();
    Ok(Adaptive {
        panels,
        result: QuadResult {
            value,
            error_estimate: error,
            subdivisions_used: subdivisions,
            converged: error <= spec.target(value),
        },
    })
}

/// Options beyond [`QuadratureSpec`] that only internal callers need.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Placement {
    pub center: f64,
    pub scale: f64,
}

impl Default for Placement {
    fn default() -> Self {
        Self {
            center: 0.0,
            scale: 1.0,
        }
    }
}

fn run<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
    placement: Placement,
) -> Result<(Chart, Adaptive)> {
    let map = Map::new(lo, hi, spec.transform, placement.center, placement.scale)?;
    let chart = Chart::new(map, lo, hi);
    let breaks_u: Vec<f64> = breaks
        .iter()
        .filter(|x| x.is_finite() && **x > lo && **x < hi)
        .map(|x| chart.u(*x))
        .collect();
    let out = adapt(f, &chart, 0.0, 1.0, &breaks_u, spec)?;
    Ok((chart, out))
}

/// `∫ f` over `interval`; endpoints are never evaluated.
pub fn integrate<F: Fn(f64) -> f64>(f: F, interval: &Support, spec: &QuadratureSpec) -> Result<QuadResult> {
    integrate_with_breaks(f, interval, &[], spec)
}

/// Like [`integrate`], with the initial panels split at `breaks` (points
/// where `f` or one of its derivatives jumps).
pub fn integrate_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    interval: &Support,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    integrate_between(f, interval.a, interval.b, breaks, spec)
}

/// `∫_lo^hi f` for a possibly infinite range, `lo ≤ hi`.
pub fn integrate_between<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<QuadResult> {
    integrate_placed(f, lo, hi, breaks, spec, Placement::default())
}

pub(crate) fn integrate_placed<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
    placement: Placement,
) -> Result<QuadResult> {
    if lo == hi {
        return Ok(QuadResult {
            value: 0.0,
            error_estimate: 0.0,
            subdivisions_used: 0,
            converged: true,
        });
    }
    Ok(run(&f, lo, hi, breaks, spec, placement)?.1.result)
}

/// `x ↦ ∫_a^x f`, backed by the converged panels of the full integral.
pub struct Cumulative<F> {
    f: F,
    chart: Chart,
    lo: f64,
    hi: f64,
    panels: Vec<Panel>,
    prefix: Vec<f64>,
    total: QuadResult,
}

impl<F: Fn(f64) -> f64> Cumulative<F> {
    pub fn total(&self) -> &QuadResult {
        &self.total
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x.is_nan() {
            return f64::NAN;
        }
        if x <= self.lo {
            return 0.0;
        }
        if x >= self.hi {
            return self.total.value;
        }
        let reversed = self.chart.reversed();
        let t = self.chart.u(x);
        // Panels are sorted by u. For the lower map, u grows as x decreases, so
        // ∫_lo^x = ∫ over u in [u(x), 1).
        let idx = self.panels.partition_point(|p| p.t1 <= t);
        if idx >= self.panels.len() {
            return if reversed { 0.0 } else { self.total.value };
        }
        let p = self.panels[idx];
        let partial = if t > p.t0 {
            gk21(&self.f, &self.chart, p.t0, t).map(|q| q.value).unwrap_or(f64::NAN)
        } else {
            0.0
        };
        if reversed {
            // value of panels with t0 >= t plus the rest of panel idx
            self.total.value - self.prefix[idx] - partial
        } else {
            self.prefix[idx] + partial
        }
    }

    /// Panel boundaries in x, useful for diagnostics.
    pub fn panel_count(&self) -> usize {
        self.panels.len()
    }
}

/// Running integral `x ↦ ∫_a^x f` over `interval`.
pub fn cumulative<F: Fn(f64) -> f64>(f: F, interval: &Support, spec: &QuadratureSpec) -> Result<Cumulative<F>> {
    cumulative_with_breaks(f, interval, &[], spec)
}

pub fn cumulative_with_breaks<F: Fn(f64) -> f64>(
    f: F,
    interval: &Support,
    breaks: &[f64],
    spec: &QuadratureSpec,
) -> Result<Cumulative<F>> {
    cumulative_placed(f, interval.a, interval.b, breaks, spec, Placement::default())
}

pub(crate) fn cumulative_placed<F: Fn(f64) -> f64>(
    f: F,
    lo: f64,
    hi: f64,
    breaks: &[f64],
    spec: &QuadratureSpec,
    placement: Placement,
) -> Result<Cumulative<F>> {
    let (chart, out) = run(&f, lo, hi, breaks, spec, placement)?;
    let total = out.result.require_converged()?;
    let mut prefix = Vec::with_capacity(out.panels.len());
    let mut acc = 0.0;
    for p in &out.panels {
        prefix.push(acc);
        acc += p.value;
    }
    Ok(Cumulative {
        f,
        chart,
        lo,
        hi,
        panels: out.panels,
        prefix,
        total,
    })
}

// ---------------------------------------------------------------------------
// Maximisation

/// Maximise `f` over `interval`: scan `grid_size` nodes spread uniformly in
/// the compactified coordinate, then refine around the best node.
/// Finite endpoints are scanned only when the interval is closed there.
pub fn sup_on_interval<F: Fn(f64) -> f64>(f: F, interval: &Support, grid_size: usize) -> (f64, f64) {
    let n = grid_size.max(3);
    let map = Map::new(interval.a, interval.b, Transform::Auto, 0.0, 1.0).expect("Support guarantees a valid range");
    let (t0, t1) = map.t_range();
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let t = t0 + (t1 - t0) * i as f64 / (n - 1) as f64;
        let x = map.x(t);
        let keep = if i == 0 || i == n - 1 {
            x.is_finite() && interval.contains(x)
        } else {
            x.is_finite()
        };
        if keep {
            nodes.push(x);
        }
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    sup_on_grid(f, &nodes, interval.a, interval.b)
}

/// Maximise `f` given scan nodes; the refinement bracket is clamped to `[lo, hi]`.
pub fn sup_on_grid<F: Fn(f64) -> f64>(f: F, nodes: &[f64], lo: f64, hi: f64) -> (f64, f64) {
    let mut best = (f64::NAN, f64::NEG_INFINITY);
    let mut best_i = 0;
    for (i, &x) in nodes.iter().enumerate() {
        let v = f(x);
        if v > best.1 {
            best = (x, v);
            best_i = i;
        }
    }
    if nodes.len() < 2 || !best.1.is_finite() {
        return best;
    }
    let left = if best_i > 0 {
        nodes[best_i - 1]
    } else {
        // Best at the first node: bracket towards the (open) lower end.
        let x = nodes[0];
        let step = (nodes[1] - x).abs().max(1e-12);
        (x - step).max(lo)
    };
    let right = if best_i + 1 < nodes.len() {
        nodes[best_i + 1]
    } else {
        let x = nodes[best_i];
        let step = (x - nodes[best_i - 1]).abs().max(1e-12);
        (x + step).min(hi)
    };
    let (bl, br) = (left.max(lo), right.min(hi));
    if bl < br {
        let (x, v) = brent_max(&f, bl, br, best.0);
        if v > best.1 {
            best = (x, v);
        }
    }
    best
}

/// Brent's golden-section search with parabolic steps, maximising `f` on `[a, b]`.
fn brent_max<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, start: f64) -> (f64, f64) {
    const GOLD: f64 = 0.381_966_011_250_105_1;
    let g = |x: f64| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };
    let (mut a, mut b) = (a, b);
    let mut x = if start > a && start < b {
        start
    } else {
        a + GOLD * (b - a)
    };
    let (mut w, mut v) = (x, x);
    let mut fx = g(x);
    let (mut fw, mut fv) = (fx, fx);
    let mut d: f64 = 0.0;
    let mut e: f64 = 0.0;
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let tol = 1e-10 * x.abs() + 1e-14;
        let t2 = 2.0 * tol;
        if (x - m).abs() <= t2 - 0.5 * (b - a) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            } else {
                q = -q;
            }
            if p.abs() < (0.5 * q * e).abs() && p > q * (a - x) && p < q * (b - x) {
                e = d;
                d = p / q;
                let u = x + d;
                if u - a < t2 || b - u < t2 {
                    d = if x < m { tol } else { -tol };
                }
                golden = false;
            }
        }
        if golden {
            e = if x < m { b - x } else { a - x };
            d = GOLD * e;
        }
        let u = if d.abs() >= tol {
            x + d
        } else if d > 0.0 {
            x + tol
        } else {
            x - tol
        };
        let fu = g(u);
        if fu <= fx {
            if u < x {
                b = x;
            } else {
                a = x;
            }
            v = w;
            fv = fw;
            w = x;
            fw = fx;
            x = u;
            fx = fu;
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                v = w;
                fv = fw;
                w = u;
                fw = fu;
            } else if fu <= fv || v == x || v == w {
                v = u;
                fv = fu;
            }
        }
    }
    (x, -fx)
}

// ---------------------------------------------------------------------------
// Root scanning

/// Sign changes of `g` between consecutive `nodes`, each refined by bisection
/// until the bracket is below `1e-12·max(1, |x|)`.
pub(crate) fn sign_change_roots<G: Fn(f64) -> f64>(g: G, nodes: &[f64]) -> Vec<f64> {
    let mut roots = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &x in nodes {
        let v = g(x);
        if !v.is_finite() {
            prev = None;
            continue;
        }
        if let Some((xp, vp)) = prev {
            if vp == 0.0 {
                // exact zero at a node already recorded
            } else if v == 0.0 {
                roots.push(x);
            } else if (vp < 0.0) != (v < 0.0) {
                roots.push(bisect(&g, xp, x, vp));
            }
        } else if v == 0.0 {
            roots.push(x);
        }
        prev = Some((x, v));
    }
    roots.dedup();
    roots
}

fn bisect<G: Fn(f64) -> f64>(g: &G, mut lo: f64, mut hi: f64, mut g_lo: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-12 * mid.abs().max(1.0) || mid <= lo || mid >= hi {
            break;
        }
        let gm = g(mid);
        if gm == 0.0 {
            return mid;
        }
        if (gm < 0.0) == (g_lo < 0.0) {
            lo = mid;
            g_lo = gm;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}
