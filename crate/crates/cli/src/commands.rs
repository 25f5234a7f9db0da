use std::path::Path;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Exp, Normal};
use rayon::prelude::*;
use stein_core::density::kde::{Bandwidth, Kde};
use stein_core::density::spec::SampleSet;
use stein_core::metrics::{
    check_expectation_identity, check_holder_bound, corollary_constants, fisher_info_distance_with,
    kolmogorov_distance, sup_density_distance, tv_l1_distance, verify_corollary_constants, wasserstein1_distance,
};
use stein_core::report::sort_reports;
use stein_core::solver::{dual_form_gap, residual_check, solve_stein_equation};
use stein_core::stein::{check_characterization, check_factorization, dictionary};
use stein_core::{BoundReport, Density, Family, ObservableSpec, QuadratureSpec, Result, Support, TestFunction};

use crate::config::Resolved;
use crate::output::MetricRow;

pub const DUAL_FORM_TOL: f64 = 1e-7;

/// Every check for one alternative: separation from the target, the score
/// factorization, and for each observable the Stein-equation residual, the
/// expectation identity and its Hölder bound.
fn pair_checks(
    p: &Density,
    q: &Density,
    dict: Option<&[TestFunction]>,
    observables: &[ObservableSpec],
    run: &Resolved,
) -> Result<Vec<BoundReport>> {
    // Diagnose a divergent J before anything else is integrated against q.
    fisher_info_distance_with(p, q, &run.quad)?;
    let mut out = Vec::new();
    if let Some(fs) = dict {
        if !q.same_law(p) {
            out.extend(check_characterization(p, fs, q, &run.quad)?);
        }
        for f in fs {
            out.push(check_factorization(p, q, f, run.grid.factorization)?);
        }
    }
    for spec in observables {
        let l = spec.build(p, Some(q))?;
        let sol = solve_stein_equation(p, &l)?;
        out.push(residual_check(p, &l, &sol, run.grid.residual).with_pair(p.label(), q.label()));
        out.push(
            BoundReport::identity("dual_form", dual_form_gap(&sol), 0.0, DUAL_FORM_TOL)
                .with_pair(p.label(), q.label())
                .with_observable(l.label())
                .detail("split_point", sol.split_point()),
        );
        out.push(check_expectation_identity(p, q, &l)?);
        out.push(check_holder_bound(p, q, &l)?);
    }
    Ok(out)
}

pub fn verify(run: &Resolved) -> Result<Vec<BoundReport>> {
    let p = &run.target;
    let dict = p.family().map(dictionary);
    let mut reports = Vec::new();
    if let Some(fs) = &dict {
        reports.extend(check_characterization(p, fs, p, &run.quad)?);
    }
    let per_pair: Vec<Result<Vec<BoundReport>>> = run
        .alternatives
        .par_iter()
        .map(|q| pair_checks(p, q, dict.as_deref(), &run.observables, run))
        .collect();
    for r in per_pair {
        reports.extend(r?);
    }
    if corollary_constants(p).is_some() {
        reports.extend(verify_corollary_constants(p, &run.alternatives)?);
    }
    sort_reports(&mut reports);
    Ok(reports)
}

pub fn characterize(p: &Density, w: &Density, quad: &QuadratureSpec) -> Result<Vec<BoundReport>> {
    let family = p.family().ok_or_else(|| {
        stein_core::SteinError::InvalidParameter(format!(
            "no test-function dictionary for {}; characterize needs a built-in target",
            p.label()
        ))
    })?;
    let mut reports = check_characterization(p, &dictionary(family), w, quad)?;
    sort_reports(&mut reports);
    Ok(reports)
}

pub fn distance(p: &Density, q: &Density, quad: &QuadratureSpec) -> Result<Vec<MetricRow>> {
    let row = |metric: &str, value: f64, error_estimate: f64, at: Option<f64>| MetricRow {
        metric: metric.into(),
        target: p.label().into(),
        alternative: q.label().into(),
        value,
        error_estimate,
        at,
    };
    let j = fisher_info_distance_with(p, q, quad)?;
    let tv = tv_l1_distance(p, q)?;
    let k = kolmogorov_distance(p, q)?;
    let w = wasserstein1_distance(p, q)?;
    let (at, sup) = sup_density_distance(p, q)?;
    Ok(vec![
        row("fisher_J", j.value, j.error_estimate, None),
        row("tv_l1", tv.value, tv.error_estimate, None),
        row("kolmogorov", k, 0.0, None),
        row("wasserstein1", w.value, w.error_estimate, None),
        row("sup_density", sup, 0.0, Some(at)),
    ])
}

pub struct SolveOutput {
    pub points: Vec<(f64, f64)>,
    pub residual: BoundReport,
}

pub fn solve(p: &Density, q: Option<&Density>, obs: &ObservableSpec, at: &[f64], grid: usize) -> Result<SolveOutput> {
    let l = obs.build(p, q)?;
    let sol = solve_stein_equation(p, &l)?;
    let points = at.iter().map(|&x| (x, sol.value(x))).collect();
    Ok(SolveOutput {
        points,
        residual: residual_check(p, &l, &sol, grid),
    })
}

pub struct Ingested {
    pub density: Density,
    pub count: usize,
    pub bandwidth: f64,
}

pub fn ingest(path: &Path, bandwidth: Bandwidth, hint: Option<Support>) -> Result<Ingested> {
    let set = SampleSet::read(path)?;
    let support = hint.unwrap_or_else(Support::real_line);
    let kde = Kde::new(&set.values, bandwidth, support)?;
    let h = kde.bandwidth();
    let density = Density::from_kde(kde, &format!("kde({})", set.source_path))?;
    Ok(Ingested {
        density,
        count: set.values.len(),
        bandwidth: h,
    })
}

/// `n` seeded draws from `p`: the standard samplers for gaussian and
/// exponential laws, inverse-cdf sampling otherwise.
pub fn draw(p: &Density, n: usize, seed: u64) -> Vec<f64> {
    let mut rng = StdRng::seed_from_u64(seed);
    let (c, s) = p.location_scale();
    match p.family() {
        Some(Family::Gaussian) => {
            let d = Normal::new(c, s).expect("gaussian parameters were validated");
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        Some(Family::Exponential) => {
            let d = Exp::new(1.0 / s).expect("rate was validated");
            (0..n).map(|_| d.sample(&mut rng)).collect()
        }
        _ => (0..n)
            .map(|_| p.quantile(rng.gen_range(f64::EPSILON..1.0 - f64::EPSILON)))
            .collect(),
    }
}
