use libm::erf;
use stein_core::metrics::*;
use stein_core::{Density, Family, Observable, Support};

fn phi_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn exp(rate: f64) -> Density {
    Density::exponential(rate).unwrap()
}

fn gauss(mu: f64, sigma: f64) -> Density {
    Density::gaussian(mu, sigma).unwrap()
}

#[test]
fn fisher_distance_closed_forms() {
    let g = Density::standard_gaussian();
    assert!((fisher_info_distance(&g, &gauss(1.0, 1.0)).unwrap().value - 1.0).abs() < 1e-8);
    assert_eq!(fisher_info_distance(&g, &g).unwrap().value, 0.0);
    assert!((fisher_info_distance(&exp(1.0), &exp(2.0)).unwrap().value - 1.0).abs() < 1e-8);
    for lambda in [0.5, 0.8, 1.25, 2.0, 4.0] {
        let j = fisher_info_distance(&exp(1.0), &exp(lambda)).unwrap().value;
        assert!((j - (lambda - 1.0) * (lambda - 1.0)).abs() < 1e-7, "{lambda}: {j}");
    }
    // Scale change: r = x(1/σ² − 1), so J = σ²(1/σ² − 1)².
    let s: f64 = 1.2;
    let want = s * s * (1.0 / (s * s) - 1.0).powi(2);
    assert!((fisher_info_distance(&g, &gauss(0.0, s)).unwrap().value - want).abs() < 1e-9);
}

#[test]
fn fisher_distance_rejects_mismatched_supports() {
    assert!(fisher_info_distance(&Density::standard_gaussian(), &exp(1.0)).is_err());
}

#[test]
fn kappa_functional_examples() {
    let l = Observable::polynomial(&[0.0, 1.0]);
    let k = kappa_functional(&exp(1.0), &exp(2.0), &l).unwrap();
    assert!((k.kappa - 0.5f64.sqrt()).abs() < 1e-9, "{k:?}");
    assert_eq!(k.inner_failures, 0);
    let k = kappa_functional(&exp(1.0), &exp(2.0), &Observable::polynomial(&[4.0])).unwrap();
    assert_eq!(k.kappa, 0.0);
    let g = Density::standard_gaussian();
    let q = gauss(1.0, 1.0);
    let k = kappa_functional(&g, &q, &Observable::tv_sign(&g, &q).unwrap()).unwrap();
    assert!(k.kappa <= std::f64::consts::SQRT_2 + 1e-6);
}

#[test]
fn total_variation_examples() {
    assert!((tv_l1_distance(&exp(1.0), &exp(2.0)).unwrap().value - 0.5).abs() < 1e-8);
    let g = Density::standard_gaussian();
    assert!(tv_l1_distance(&g, &g).unwrap().value <= 1e-12);
    // Densities cross once at 1/2: ∫|p − q| = 2(F_p(½) − F_q(½)) = 2(2Φ(½) − 1).
    let want = 2.0 * (2.0 * phi_cdf(0.5) - 1.0);
    assert!((tv_l1_distance(&g, &gauss(1.0, 1.0)).unwrap().value - want).abs() < 1e-7);
}

#[test]
fn sup_density_examples() {
    let (x, v) = sup_density_distance(&exp(1.0), &exp(2.0)).unwrap();
    assert_eq!(x, 0.0);
    assert!((v - 1.0).abs() < 1e-6);
    let g = Density::standard_gaussian();
    assert_eq!(sup_density_distance(&g, &g).unwrap().1, 0.0);
    // Brute-force scan of |φ(x) − φ(x − 1)| on a 1e-5 grid over [−5, 5].
    let (x, v) = sup_density_distance(&g, &gauss(1.0, 1.0)).unwrap();
    assert!((v - 0.222_943_164_328_88).abs() < 1e-9, "{v}");
    assert!((x - 1.543_63).abs() < 1e-4 || (x + 0.543_63).abs() < 1e-4, "{x}");
}

#[test]
fn kolmogorov_examples() {
    assert!((kolmogorov_distance(&exp(1.0), &exp(2.0)).unwrap() - 0.25).abs() < 1e-7);
    let g = Density::standard_gaussian();
    assert!(kolmogorov_distance(&g, &g).unwrap() <= 1e-15);
    let want = 2.0 * phi_cdf(0.5) - 1.0;
    assert!((kolmogorov_distance(&g, &gauss(1.0, 1.0)).unwrap() - want).abs() < 1e-9);
}

#[test]
fn wasserstein_examples() {
    let g = Density::standard_gaussian();
    assert!((wasserstein1_distance(&g, &gauss(1.0, 1.0)).unwrap().value - 1.0).abs() < 1e-7);
    assert!(wasserstein1_distance(&g, &g).unwrap().value <= 1e-12);
    assert!((wasserstein1_distance(&exp(1.0), &exp(2.0)).unwrap().value - 0.5).abs() < 1e-8);
    // Same mean, different spread: W₁ = |σ₁ − σ₂|·E|Z| = 0.2·sqrt(2/π).
    let want = 0.2 * (2.0 / std::f64::consts::PI).sqrt();
    assert!((wasserstein1_distance(&g, &gauss(0.0, 1.2)).unwrap().value - want).abs() < 1e-8);
}

fn pairs() -> Vec<(Density, Density)> {
    let g = Density::standard_gaussian();
    let w = Density::quartic();
    let u = Density::uniform();
    let ramp = Density::from_unnormalized(|x| 1.0 + x, Support::closed(0.0, 1.0).unwrap(), None, "ramp").unwrap();
    vec![
        (exp(1.0), exp(2.0)),
        (exp(1.0), exp(0.5)),
        (g.clone(), gauss(1.0, 1.0)),
        (g.clone(), gauss(0.0, 1.2)),
        (g.clone(), gauss(-0.5, 0.8)),
        (w.clone(), Density::quartic_shifted(0.5).unwrap()),
        (w, g),
        (u, ramp),
    ]
}

#[test]
fn distances_vanish_on_the_diagonal() {
    for family in Family::ALL {
        let p = Density::builtin(family, &[]).unwrap();
        assert!(tv_l1_distance(&p, &p).unwrap().value <= 1e-9, "{family}");
        assert!(kolmogorov_distance(&p, &p).unwrap() <= 1e-9, "{family}");
        assert!(wasserstein1_distance(&p, &p).unwrap().value <= 1e-9, "{family}");
        assert!(sup_density_distance(&p, &p).unwrap().1 <= 1e-9, "{family}");
        assert!(fisher_info_distance(&p, &p).unwrap().value <= 1e-9, "{family}");
    }
}

#[test]
fn kolmogorov_is_at_most_half_l1() {
    for (p, q) in pairs() {
        let k = kolmogorov_distance(&p, &q).unwrap();
        let tv = tv_l1_distance(&p, &q).unwrap().value;
        assert!(k >= 0.0 && tv >= 0.0);
        assert!(k <= tv / 2.0 + 1e-8, "{} {}: {k} vs {tv}", p.label(), q.label());
    }
}

#[test]
fn kappa2_exponential_target_is_one() {
    // p(x)²·E_q[...] = e^{−2x}(1 + ∫_0^x q(y)e^{2y}(1 − 2e^{−y})dy); its sup is 1 at 0
    // for each of these rates.
    for lambda in [0.5, 0.8, 1.25, 2.0, 4.0] {
        let k = kappa2(&exp(1.0), &exp(lambda)).unwrap();
        assert!((k.kappa - 1.0).abs() < 1e-9, "{lambda}: {k:?}");
        assert_eq!(k.argmax, 0.0);
    }
}

#[test]
fn kappa2_gaussian_target_matches_mills_oracle() {
    // Oracle: Mills ratios through erfcx, nested adaptive quadrature and a
    // scalar maximiser, computed outside this crate.
    let g = Density::standard_gaussian();
    for (mu, sigma, want, at) in [
        (1.0, 1.0, 0.349_815_261_273_736_7, 1.244_607f64),
        (0.0, 1.2, 0.325_365_133_443_833_7, -0.665_452),
        (0.0, 0.8, 0.370_355_543_025_728_4, -0.627_757),
        (0.5, 1.0, 0.354_467_061_965_916_3, 0.941_055),
    ] {
        let k = kappa2(&g, &gauss(mu, sigma)).unwrap();
        assert!((k.kappa - want).abs() < 1e-8, "({mu},{sigma}): {} vs {want}", k.kappa);
        assert!((k.argmax.abs() - at.abs()).abs() < 1e-3, "({mu},{sigma}): {}", k.argmax);
    }
}

#[test]
fn kappa2_of_identical_laws_bounds_nothing_above_one() {
    for family in [Family::Exponential, Family::Gaussian, Family::Quartic] {
        let p = Density::builtin(family, &[]).unwrap();
        let k = kappa2(&p, &p).unwrap();
        assert!(k.kappa.is_finite() && k.kappa <= 1.0 + 1e-9, "{family}: {k:?}");
    }
}

#[test]
fn expectation_identity_examples() {
    let x = Observable::polynomial(&[0.0, 1.0]);
    let r = check_expectation_identity(&exp(1.0), &exp(2.0), &x).unwrap();
    assert!(
        (r.lhs + 0.5).abs() < 1e-10 && (r.rhs + 0.5).abs() < 1e-10 && r.pass,
        "{r:?}"
    );
    let g = Density::standard_gaussian();
    let r = check_expectation_identity(&g, &g, &x).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs.abs() < 1e-12 && r.pass);
    let r = check_expectation_identity(&g, &gauss(1.0, 1.0), &x).unwrap();
    assert!(
        (r.lhs - 1.0).abs() < 1e-10 && (r.rhs - 1.0).abs() < 1e-9 && r.pass,
        "{r:?}"
    );
}

#[test]
fn expectation_identity_matrix() {
    for (p, q) in pairs() {
        let mut observables = vec![
            Observable::polynomial(&[0.0, 1.0]),
            Observable::polynomial(&[0.0, 0.0, 1.0]),
            Observable::tv_sign(&p, &q).unwrap(),
        ];
        for level in [0.25, 0.5, 0.75] {
            observables.push(Observable::indicator(p.quantile(level)));
        }
        for l in &observables {
            let r = check_expectation_identity(&p, &q, l).unwrap();
            assert!(
                r.pass,
                "{} {} {}: {} vs {}",
                p.label(),
                q.label(),
                l.label(),
                r.lhs,
                r.rhs
            );
            let h = check_holder_bound(&p, &q, l).unwrap();
            assert!(
                h.pass,
                "{} {} {}: {} > {}",
                p.label(),
                q.label(),
                l.label(),
                h.lhs,
                h.rhs
            );
        }
    }
}

#[test]
fn holder_bound_examples() {
    let x = Observable::polynomial(&[0.0, 1.0]);
    let r = check_holder_bound(&exp(1.0), &exp(2.0), &x).unwrap();
    assert!((r.lhs - 0.5).abs() < 1e-10 && (r.rhs - 0.5f64.sqrt()).abs() < 1e-9 && r.pass);
    let g = Density::standard_gaussian();
    let r = check_holder_bound(&g, &g, &x).unwrap();
    assert!(r.lhs.abs() < 1e-12 && r.rhs == 0.0 && r.pass);
    // With l = tv_sign, |E_q l − E_p l| is the full L1 distance.
    let q = gauss(1.0, 1.0);
    let r = check_holder_bound(&g, &q, &Observable::tv_sign(&g, &q).unwrap()).unwrap();
    assert!((r.lhs - tv_l1_distance(&g, &q).unwrap().value).abs() < 1e-9);
    assert!(r.pass && r.details["kappa"] <= std::f64::consts::SQRT_2 + 1e-6);
}

#[test]
fn corollary_constants_lookup() {
    assert_eq!(corollary_constants(&exp(1.0)).unwrap().kappa1, 1.0);
    assert_eq!(
        corollary_constants(&Density::standard_gaussian()).unwrap().kappa1,
        std::f64::consts::SQRT_2
    );
    let k = corollary_constants(&Density::quartic()).unwrap();
    assert!((k.kappa1 - 1.681_792_830_507_429).abs() < 1e-15);
    assert!(corollary_constants(&exp(2.0)).is_none());
    assert!(corollary_constants(&gauss(1.0, 1.0)).is_none());
    assert!(corollary_constants(&Density::uniform()).is_none());
    assert!(verify_corollary_constants(&Density::uniform(), &[Density::uniform()]).is_err());
}

#[test]
fn corollary_checks_gaussian_and_quartic() {
    let g = Density::standard_gaussian();
    let family: Vec<Density> = [(0.5, 1.0), (-0.5, 1.0), (1.0, 1.0), (0.0, 1.2), (0.0, 0.8)]
        .iter()
        .map(|(m, s)| gauss(*m, *s))
        .collect();
    let reports = verify_corollary_constants(&g, &family).unwrap();
    assert_eq!(reports.len(), 20);
    assert!(
        reports.iter().all(|r| r.pass),
        "{:?}",
        reports.iter().filter(|r| !r.pass).collect::<Vec<_>>()
    );

    let w = Density::quartic();
    let family: Vec<Density> = [0.5, -0.5, 1.0]
        .iter()
        .map(|m| Density::quartic_shifted(*m).unwrap())
        .collect();
    let reports = verify_corollary_constants(&w, &family).unwrap();
    assert!(
        reports.iter().all(|r| r.pass),
        "{:?}",
        reports.iter().filter(|r| !r.pass).collect::<Vec<_>>()
    );
}

#[test]
fn exponential_kappa1_exceeds_one_for_a_slower_rate() {
    // f solves the equation with l = sign(q − p) against Exp(1); for q = Exp(½)
    // the crossing sits at 2 ln 2 and E_q[f²] works out to 4/3.
    let reports = verify_corollary_constants(&exp(1.0), &[exp(0.5)]).unwrap();
    let k1 = reports.iter().find(|r| r.name == "kappa1").unwrap();
    assert!((k1.lhs - 2.0 / 3f64.sqrt()).abs() < 1e-9, "{}", k1.lhs);
    assert!(!k1.pass);
    for r in reports.iter().filter(|r| r.name != "kappa1") {
        assert!(r.pass, "{r:?}");
    }
}

#[test]
fn corollary_checks_other_exponential_rates() {
    let family: Vec<Density> = [0.8, 1.25, 2.0, 4.0].iter().map(|l| exp(*l)).collect();
    let reports = verify_corollary_constants(&exp(1.0), &family).unwrap();
    assert!(
        reports.iter().all(|r| r.pass),
        "{:?}",
        reports.iter().filter(|r| !r.pass).collect::<Vec<_>>()
    );
}
