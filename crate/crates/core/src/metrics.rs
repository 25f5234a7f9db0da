//! Distances between densities and the bounds that tie them to the Fisher
//! information distance `J(p, q) = E_q[(p′/p − q′/q)²]`.

use serde::{Deserialize, Serialize};

use crate::density::{Density, Family, Side};
use crate::error::{Result, SteinError};
use crate::quadrature::{integrate_placed, sign_change_roots, sup_on_grid, Placement, QuadratureSpec};
use crate::report::BoundReport;
use crate::solver::{crossings, scan_nodes, solve_with_spec, Observable};
use crate::stein::{residual, scan_membership};

/// A computed quantity with its quadrature error estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub error_estimate: f64,
}

/// `κ_l = sqrt(E_q[f_l²])` for the Stein solution `f_l` of the target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KappaEstimate {
    pub kappa: f64,
    pub observable: String,
    pub target: String,
    pub alternative: String,
    pub error_estimate: f64,
    /// Inner solver integrals that missed their tolerance.
    pub inner_failures: usize,
}

/// `sup_x p(x)·sqrt(E_q[(I[X ≥ x] − P(X))²/p(X)²])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kappa2Estimate {
    pub kappa: f64,
    pub argmax: f64,
}

/// Quadrature settings for the metric integrals.
pub fn metric_spec() -> QuadratureSpec {
    QuadratureSpec::tight()
}

fn joint_placement(p: &Density, q: &Density) -> Placement {
    let (c, s) = p.location_scale();
    let (_, t) = q.location_scale();
    Placement {
        center: c,
        scale: s.max(t),
    }
}

/// `E_q[(score_p − score_q)²]` over the interior; boundary atoms are left out.
pub fn fisher_info_distance(p: &Density, q: &Density) -> Result<Estimate> {
    fisher_info_distance_with(p, q, &metric_spec())
}

pub fn fisher_info_distance_with(p: &Density, q: &Density, spec: &QuadratureSpec) -> Result<Estimate> {
    let r = residual(p, q)?;
    let divergent = |reason: String| SteinError::DivergentFisher {
        target: p.label().to_string(),
        alternative: q.label().to_string(),
        reason,
    };
    let out = q
        .expect(
            |x| {
                let d = r.interior(x);
                d * d
            },
            &[],
            spec,
        )
        .map_err(|e| divergent(e.to_string()))?;
    if !out.converged || !out.value.is_finite() {
        return Err(divergent(format!(
            "E_q[r²] did not converge (value {}, error {}, {} panels)",
            out.value, out.error_estimate, out.subdivisions_used
        )));
    }
    Ok(Estimate {
        value: out.value,
        error_estimate: out.error_estimate,
    })
}

/// Solve the Stein equation for `(p, l)` and integrate `f²` against `q`.
pub fn kappa_functional(p: &Density, q: &Density, l: &Observable) -> Result<KappaEstimate> {
    p.support().ensure_same(&q.support())?;
    let sol = solve_with_spec(p, l, &QuadratureSpec::tight())?;
    let r = q
        .expect(
            |x| {
                let f = sol.value(x);
                f * f
            },
            l.breaks(),
            &QuadratureSpec::default(),
        )?
        .require_converged()?;
    Ok(KappaEstimate {
        kappa: r.value.max(0.0).sqrt(),
        observable: l.label().to_string(),
        target: p.label().to_string(),
        alternative: q.label().to_string(),
        error_estimate: r.error_estimate,
        inner_failures: sol.quadrature_failures(),
    })
}

/// `∫ |p − q|`, with panels split where `p − q` changes sign.
pub fn tv_l1_distance(p: &Density, q: &Density) -> Result<Estimate> {
    p.support().ensure_same(&q.support())?;
    let s = p.support();
    let breaks = crossings(p, q);
    let r = integrate_placed(
        |x| (p.pdf(x) - q.pdf(x)).abs(),
        s.a,
        s.b,
        &breaks,
        &metric_spec(),
        joint_placement(p, q),
    )?
    .require_converged()?;
    Ok(Estimate {
        value: r.value,
        error_estimate: r.error_estimate,
    })
}

fn support_nodes(p: &Density, q: &Density, extra: &[f64]) -> Vec<f64> {
    let s = p.support();
    let mut nodes = scan_nodes(p, q, 1024);
    nodes.extend_from_slice(extra);
    if s.a_closed {
        nodes.push(s.a);
    }
    if s.b_closed {
        nodes.push(s.b);
    }
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    nodes
}

/// `sup_x |p(x) − q(x)|` with its location.
pub fn sup_density_distance(p: &Density, q: &Density) -> Result<(f64, f64)> {
    p.support().ensure_same(&q.support())?;
    let s = p.support();
    let nodes = support_nodes(p, q, &[]);
    Ok(sup_on_grid(|x| (p.pdf(x) - q.pdf(x)).abs(), &nodes, s.a, s.b))
}

/// `F_p − F_q`, taken from the upper tails above the median of `p`.
fn cdf_gap(p: &Density, q: &Density, median: f64, x: f64) -> f64 {
    if x <= median {
        p.cdf(x) - q.cdf(x)
    } else {
        q.sf(x) - p.sf(x)
    }
}

/// `sup_x |F_p(x) − F_q(x)|`. The maximum sits where `p = q`, so the
/// crossings are scanned as well.
pub fn kolmogorov_distance(p: &Density, q: &Density) -> Result<f64> {
    p.support().ensure_same(&q.support())?;
    let s = p.support();
    let m = p.median();
    let nodes = support_nodes(p, q, &crossings(p, q));
    let (_, v) = sup_on_grid(|x| cdf_gap(p, q, m, x).abs(), &nodes, s.a, s.b);
    Ok(v)
}

/// `∫ |F_p − F_q|`.
pub fn wasserstein1_distance(p: &Density, q: &Density) -> Result<Estimate> {
    p.support().ensure_same(&q.support())?;
    let s = p.support();
    let m = p.median();
    let nodes = scan_nodes(p, q, 512);
    let breaks = sign_change_roots(|x| cdf_gap(p, q, m, x), &nodes);
    let r = integrate_placed(
        |x| cdf_gap(p, q, m, x).abs(),
        s.a,
        s.b,
        &breaks,
        &metric_spec(),
        joint_placement(p, q),
    )?
    .require_converged()?;
    Ok(Estimate {
        value: r.value,
        error_estimate: r.error_estimate,
    })
}

/// `P(u)/p(u)` and `(1 − P(u))/p(u)`. The tail closer to `u` comes from a
/// weighted integral and the other from `1/p − (that tail)`, which loses at
/// most a factor two to cancellation.
fn mills_pair(p: &Density, median: f64, u: f64, spec: &QuadratureSpec) -> Result<(f64, f64)> {
    let inv = (-p.log_pdf(u)).exp();
    if u <= median {
        let lo = p.relative_integral(u, |_| 1.0, Side::Below, &[], spec)?.value;
        Ok((lo, (inv - lo).max(0.0)))
    } else {
        let hi = p.relative_integral(u, |_| 1.0, Side::Above, &[], spec)?.value;
        Ok(((inv - hi).max(0.0), hi))
    }
}

/// κ₂ for the pair, evaluated as `sup_x p(x)·sqrt(A(x) + B(x))` with
/// `A(x) = ∫_a^x q·(P/p)²` and `B(x) = ∫_x^b q·((1−P)/p)²`.
///
/// Either integrand may blow up in the tail it is never integrated over, so
/// `A` is accumulated from the left and `B` from the right, one scan cell at
/// a time, and no running total is ever differenced.
pub fn kappa2(p: &Density, q: &Density) -> Result<Kappa2Estimate> {
    p.support().ensure_same(&q.support())?;
    let s = p.support();
    let median = p.median();
    let inner = QuadratureSpec::tight();
    let outer = QuadratureSpec::default();
    let placement = joint_placement(p, q);
    let weight = |u: f64, upper: bool| -> f64 {
        let qu = q.pdf(u);
        if qu == 0.0 || !s.contains_interior(u) {
            return 0.0;
        }
        match mills_pair(p, median, u, &inner) {
            Ok((m_lo, m_hi)) => {
                let m = if upper { m_hi } else { m_lo };
                qu * m * m
            }
            Err(_) => f64::NAN,
        }
    };
    let piece = |lo: f64, hi: f64, upper: bool| -> Result<f64> {
        if lo >= hi {
            return Ok(0.0);
        }
        let r = integrate_placed(|u| weight(u, upper), lo, hi, &[], &outer, placement)?.require_converged()?;
        Ok(r.value)
    };

    let mut nodes = scan_nodes(p, q, 512);
    nodes.push(median);
    if s.a_closed {
        nodes.push(s.a);
    }
    if s.b_closed {
        nodes.push(s.b);
    }
    nodes.retain(|x| x.is_finite() && *x >= s.a && *x <= s.b);
    nodes.sort_by(f64::total_cmp);
    nodes.dedup();
    let n = nodes.len();
    if n == 0 {
        return Err(SteinError::InvalidSupport(format!(
            "no scan nodes inside the support of {}",
            p.label()
        )));
    }

    let mut a_cum = vec![0.0; n];
    a_cum[0] = piece(s.a, nodes[0], false)?;
    for k in 1..n {
        a_cum[k] = a_cum[k - 1] + piece(nodes[k - 1], nodes[k], false)?;
    }
    let mut b_suf = vec![0.0; n];
    b_suf[n - 1] = piece(nodes[n - 1], s.b, true)?;
    for k in (0..n - 1).rev() {
        b_suf[k] = b_suf[k + 1] + piece(nodes[k], nodes[k + 1], true)?;
    }

    let scale = |x: f64, inside: f64| p.pdf(x) * inside.max(0.0).sqrt();
    let at_node: Vec<f64> = (0..n).map(|k| scale(nodes[k], a_cum[k] + b_suf[k])).collect();
    if let Some(bad) = at_node.iter().find(|v| !v.is_finite()) {
        return Err(SteinError::NonConvergence {
            value: *bad,
            error_estimate: f64::INFINITY,
            subdivisions: n,
        });
    }
    let g = |x: f64| -> f64 {
        if let Ok(k) = nodes.binary_search_by(|v| v.total_cmp(&x)) {
            return at_node[k];
        }
        let k = nodes.partition_point(|v| *v <= x);
        let a = if k == 0 {
            piece(s.a, x, false)
        } else {
            piece(nodes[k - 1], x, false).map(|v| a_cum[k - 1] + v)
        };
        let b = if k == n {
            piece(x, s.b, true)
        } else {
            piece(x, nodes[k], true).map(|v| v + b_suf[k])
        };
        match (a, b) {
            (Ok(a), Ok(b)) => scale(x, a + b),
            _ => f64::NAN,
        }
    };
    let (argmax, kappa) = sup_on_grid(g, &nodes, s.a, s.b);
    Ok(Kappa2Estimate { kappa, argmax })
}

pub const IDENTITY_TOL: f64 = 1e-6;
pub const BOUND_TOL: f64 = 1e-6;

/// `E_q[l] − E_p[l]` against `E_q[f_l·r]`.
pub fn check_expectation_identity(p: &Density, q: &Density, l: &Observable) -> Result<BoundReport> {
    let r = residual(p, q)?;
    let spec = QuadratureSpec::tight();
    let sol = solve_with_spec(p, l, &spec)?;
    let eq = q.expect(|x| l.value(x), l.breaks(), &spec)?.require_converged()?;
    let lhs = eq.value - sol.centered_mean();
    let rhs = q
        .expect(|x| sol.value(x) * r.interior(x), l.breaks(), &QuadratureSpec::default())?
        .require_converged()?;
    let m = scan_membership(sol.f(), q);
    let mut report = BoundReport::identity("expectation_identity", lhs, rhs.value, IDENTITY_TOL)
        .with_pair(p.label(), q.label())
        .with_observable(l.label())
        .with_quad_error(rhs.error_estimate + eq.error_estimate)
        .detail("f_in_F_q", if m.bounded { 1.0 } else { 0.0 })
        .detail("inner_failures", sol.quadrature_failures() as f64);
    if sol.quadrature_failures() > 0 {
        report = report.failed();
    }
    Ok(report)
}

/// `|E_q l − E_p l| ≤ κ_l·sqrt(J)`.
pub fn check_holder_bound(p: &Density, q: &Density, l: &Observable) -> Result<BoundReport> {
    let spec = QuadratureSpec::tight();
    let ep = l.mean_under(p, &spec)?;
    let eq = l.mean_under(q, &spec)?;
    let k = kappa_functional(p, q, l)?;
    let j = fisher_info_distance(p, q)?;
    let lhs = (eq - ep).abs();
    let rhs = k.kappa * j.value.sqrt();
    Ok(BoundReport::inequality("holder_bound", lhs, rhs, BOUND_TOL)
        .with_pair(p.label(), q.label())
        .with_observable(l.label())
        .with_quad_error(k.error_estimate + j.error_estimate)
        .detail("kappa", k.kappa)
        .detail("J", j.value))
}

/// The three targets with published constants.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorollaryConstants {
    pub kappa1: f64,
    pub kappa2: f64,
}

/// Constants for exponential(1), the standard gaussian and the quartic;
/// `None` for any other target.
pub fn corollary_constants(target: &Density) -> Option<CorollaryConstants> {
    let (c, s) = target.location_scale();
    let kappa1 = match target.family()? {
        Family::Exponential if s == 1.0 => 1.0,
        Family::Gaussian if c == 0.0 && s == 1.0 => std::f64::consts::SQRT_2,
        Family::Quartic if c == 0.0 && s == 1.0 => (2.0 * std::f64::consts::SQRT_2).sqrt(),
        _ => return None,
    };
    Some(CorollaryConstants { kappa1, kappa2: 1.0 })
}

/// For each alternative: κ̂₁ against the published κ₁, `∫|p − q| ≤ κ₁·sqrt(J)`,
/// κ̂₂ ≤ 1, and `sup|p − q| ≤ κ̂₂·sqrt(J)`.
pub fn verify_corollary_constants(target: &Density, family: &[Density]) -> Result<Vec<BoundReport>> {
    let k = corollary_constants(target).ok_or_else(|| {
        SteinError::InvalidParameter(format!(
            "no published constants for target {}; expected exponential(1), gaussian(0,1) or quartic(0,1)",
            target.label()
        ))
    })?;
    let mut out = Vec::with_capacity(4 * family.len());
    for q in family {
        target.support().ensure_same(&q.support())?;
        let tv_sign = Observable::tv_sign(target, q)?;
        let k1 = kappa_functional(target, q, &tv_sign)?;
        let j = fisher_info_distance(target, q)?;
        let tv = tv_l1_distance(target, q)?;
        let k2 = kappa2(target, q)?;
        let (sup_at, sup) = sup_density_distance(target, q)?;
        let sqrt_j = j.value.sqrt();
        let pair = |r: BoundReport| r.with_pair(target.label(), q.label());
        out.push(
            pair(BoundReport::inequality("kappa1", k1.kappa, k.kappa1, BOUND_TOL))
                .with_observable("tv_sign")
                .with_quad_error(k1.error_estimate)
                .detail("inner_failures", k1.inner_failures as f64),
        );
        out.push(
            pair(BoundReport::inequality(
                "tv_bound",
                tv.value,
                k.kappa1 * sqrt_j,
                BOUND_TOL,
            ))
            .with_observable("tv_sign")
            .with_quad_error(tv.error_estimate + j.error_estimate)
            .detail("J", j.value)
            .detail("kappa1_hat", k1.kappa),
        );
        out.push(
            pair(BoundReport::inequality("kappa2", k2.kappa, k.kappa2, BOUND_TOL))
                .with_observable("dirac")
                .detail("argmax", k2.argmax),
        );
        out.push(
            pair(BoundReport::inequality("sup_bound", sup, k2.kappa * sqrt_j, BOUND_TOL))
                .with_observable("dirac")
                .with_quad_error(j.error_estimate)
                .detail("J", j.value)
                .detail("kappa2_hat", k2.kappa)
                .detail("sup_at", sup_at),
        );
    }
    Ok(out)
}
