use proptest::prelude::*;
use stein_core::stein::*;
use stein_core::{Density, Family, QuadratureSpec, SteinError, TestFunction};

fn spec() -> QuadratureSpec {
    QuadratureSpec::tight()
}

#[test]
fn operator_examples() {
    let g = Density::standard_gaussian();
    let v = stein_operator(&TestFunction::polynomial(&[0.0, 1.0]), &g);
    assert_eq!(v.interior(0.0), 1.0);
    assert!((v.interior(2.0) - (1.0 - 4.0)).abs() < 1e-15);
    assert!(v.atoms.is_empty());

    let e = Density::exponential(1.0).unwrap();
    let v = stein_operator(&TestFunction::constant(1.0), &e);
    assert_eq!(v.interior(0.7), -1.0);
    assert_eq!(v.atoms, vec![(0.0, 1.0)]);

    let u = Density::uniform();
    let v = stein_operator(&TestFunction::polynomial(&[0.0, 1.0]), &u);
    assert_eq!(v.interior(0.3), 1.0);
    assert_eq!(v.atoms, vec![(0.0, 0.0), (1.0, -1.0)]);
    assert_eq!(v.interior(1.5), 0.0);
}

#[test]
fn closed_form_examples() {
    let sc = ExampleOperator::Semicircle
        .closed_form(&TestFunction::constant(1.0))
        .unwrap();
    assert!((sc.interior(1.1) + 3.3).abs() < 1e-15);
    let asn = ExampleOperator::Arcsine
        .closed_form(&TestFunction::polynomial(&[0.0, 1.0]))
        .unwrap();
    assert!((asn.interior(0.3) - (0.3f64 * 0.7).sqrt()).abs() < 1e-15);
    let gs = stein_core::PearsonSpec::new(&[1.0], &[0.0, -1.0], stein_core::Support::real_line()).unwrap();
    let pv = ExampleOperator::Pearson(gs)
        .closed_form(&TestFunction::constant(1.0))
        .unwrap();
    assert_eq!(pv.interior(0.8), -0.8);
    assert!(matches!(
        stein_operator_closed_form(Family::Quartic, &TestFunction::constant(1.0)),
        Err(SteinError::UnknownFamily(_))
    ));
}

#[test]
fn generic_operator_matches_closed_forms() {
    for op in ExampleOperator::all() {
        let p = op.density().unwrap();
        for arg in op.dictionary() {
            let f = op.test_function(&arg);
            let generic = stein_operator(&f, &p);
            let closed = op.closed_form(&arg).unwrap();
            assert_eq!(generic.atoms, closed.atoms, "{} {}", op.name(), arg.label());
            for x in p.quantile_grid(101, 0.01, 0.99) {
                let d = (generic.interior(x) - closed.interior(x)).abs();
                assert!(d <= 1e-8, "{} {} at {x}: {d}", op.name(), arg.label());
            }
        }
    }
}

#[test]
fn zero_mean_under_the_target() {
    for family in Family::ALL {
        let p = Density::builtin(family, &[]).unwrap();
        for f in dictionary(family) {
            let e = expect_stein(&stein_operator(&f, &p), &p, &spec()).unwrap();
            assert!(e.value.abs() <= 1e-7, "{family} {}: {}", f.label(), e.value);
        }
    }
    let op = ExampleOperator::Pearson(gamma2_spec());
    let p = op.density().unwrap();
    for g in op.dictionary() {
        let e = expect_stein(&stein_operator(&op.test_function(&g), &p), &p, &spec()).unwrap();
        assert!(e.value.abs() <= 1e-7, "gamma {}: {}", g.label(), e.value);
    }
}

#[test]
fn arcsine_zero_mean_needs_matching_endpoint_values() {
    // f₀(x) = x: E[√(x(1−x)) f₀′] = 1/π, not 0.
    let op = ExampleOperator::Arcsine;
    let f = op.test_function(&TestFunction::polynomial(&[0.0, 1.0]));
    let p = Density::arcsine();
    let e = expect_stein(&stein_operator(&f, &p), &p, &spec()).unwrap();
    assert!((e.value - 1.0 / std::f64::consts::PI).abs() < 1e-9);
}

#[test]
fn expect_stein_examples() {
    let e2 = Density::exponential(2.0).unwrap();
    let v = stein_operator(&TestFunction::constant(1.0), &Density::exponential(1.0).unwrap());
    let r = expect_stein(&v, &e2, &spec()).unwrap();
    assert!((r.value - 1.0).abs() < 1e-10);
    let one = stein_core::SteinValue::new(std::sync::Arc::new(|_| 1.0), vec![], stein_core::Support::real_line());
    assert!((expect_stein(&one, &Density::quartic(), &spec()).unwrap().value - 1.0).abs() < 1e-10);
}

#[test]
fn residual_examples() {
    let g = Density::standard_gaussian();
    let g1 = Density::gaussian(1.0, 1.0).unwrap();
    let r = residual(&g, &g1).unwrap();
    for x in [-3.0, 0.0, 2.5] {
        assert!((r.interior(x) + 1.0).abs() < 1e-15);
    }
    assert_eq!(residual(&g, &g).unwrap().interior(1.3), 0.0);
    let r = residual(&Density::exponential(1.0).unwrap(), &Density::exponential(2.0).unwrap()).unwrap();
    assert_eq!(r.interior(0.4), 1.0);
    assert_eq!(r.boundary_atoms_live, [true, false]);
    assert!(matches!(
        residual(&g, &Density::exponential(1.0).unwrap()),
        Err(SteinError::SupportMismatch { .. })
    ));
    assert!(residual(&Density::uniform(), &Density::arcsine()).is_err());
}

#[test]
fn factorization_examples() {
    let g = Density::standard_gaussian();
    let g1 = Density::gaussian(1.0, 1.0).unwrap();
    let bump = TestFunction::with_derivative("exp(-x^2)", |x| (-x * x).exp(), |x| -2.0 * x * (-x * x).exp());
    let r = check_factorization(&g, &g1, &bump, 201).unwrap();
    assert!(r.pass && r.lhs <= 1e-10, "{r:?}");
    let r = check_factorization(&g, &g, &bump, 201).unwrap();
    assert_eq!(r.lhs, 0.0);
    let xe = TestFunction::with_derivative("x exp(-x)", |x| x * (-x).exp(), |x| (1.0 - x) * (-x).exp());
    let r = check_factorization(
        &Density::exponential(1.0).unwrap(),
        &Density::exponential(2.0).unwrap(),
        &xe,
        201,
    )
    .unwrap();
    assert!(r.pass && r.lhs <= 1e-10);
}

#[test]
fn factorization_over_pairs() {
    let line = [
        Density::standard_gaussian(),
        Density::gaussian(1.0, 1.0).unwrap(),
        Density::quartic(),
    ];
    let half = [Density::exponential(1.0).unwrap(), Density::exponential(2.5).unwrap()];
    for group in [&line[..], &half[..]] {
        for p in group {
            for q in group {
                let fam = if p.support().a.is_finite() {
                    Family::Exponential
                } else {
                    Family::Gaussian
                };
                for f in dictionary(fam) {
                    let r = check_factorization(p, q, &f, 101).unwrap();
                    assert!(r.pass, "{} {} {}: {}", p.label(), q.label(), f.label(), r.lhs);
                }
            }
        }
    }
}

#[test]
fn characterization_examples() {
    let sc = Density::semicircle();
    let op = ExampleOperator::Semicircle;
    let fs: Vec<TestFunction> = [vec![1.0], vec![0.0, 1.0], vec![0.0, 0.0, 1.0]]
        .iter()
        .map(|c| op.test_function(&TestFunction::polynomial(c)))
        .collect();
    let reports = check_characterization(&sc, &fs, &sc, &spec()).unwrap();
    assert_eq!(reports.len(), 3);
    assert!(reports.iter().all(|r| r.pass), "{reports:?}");

    let g = Density::standard_gaussian();
    let reports = check_characterization(&g, &dictionary(Family::Gaussian), &g.clone(), &spec()).unwrap();
    assert!(reports.iter().all(|r| r.pass && r.lhs <= 1e-7));

    let x = TestFunction::polynomial(&[0.0, 1.0]);
    let reports = check_characterization(&g, &[x], &Density::quartic(), &spec()).unwrap();
    let sep = &reports[0];
    assert_eq!(sep.name, "separation");
    let m2 = Density::quartic().expect(|x| x * x, &[], &spec()).unwrap().value;
    // E_w[x²] = √12·Γ(3/4)/Γ(1/4) for the quartic.
    let oracle = 12f64.sqrt() * libm::tgamma(0.75) / libm::tgamma(0.25);
    assert!((m2 - oracle).abs() < 1e-10);
    assert!((sep.lhs - (1.0 - oracle).abs()).abs() < 1e-9);
    assert!(sep.pass);
}

#[test]
fn numeric_derivative_agrees_with_analytic() {
    for family in Family::ALL {
        for f in dictionary(family) {
            let p = Density::builtin(family, &[]).unwrap();
            for x in p.quantile_grid(41, 0.02, 0.98) {
                let (a, n) = (f.derivative(x), f.numeric_derivative(x));
                assert!((a - n).abs() <= 1e-5 * a.abs().max(1.0), "{} at {x}", f.label());
            }
        }
    }
}

#[test]
fn membership_scan() {
    let g = Density::standard_gaussian();
    assert!(scan_membership(&TestFunction::polynomial(&[0.0, 0.0, 1.0]), &g).bounded);
    let wild = TestFunction::new("exp(x^2)", |x| (x * x).exp());
    assert!(!scan_membership(&wild, &g).bounded);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn operator_is_linear_in_f(alpha in -3.0f64..3.0, beta in -3.0f64..3.0, x in -4.0f64..4.0, fam in 0usize..6) {
        let family = Family::ALL[fam];
        let p = Density::builtin(family, &[]).unwrap();
        let d = dictionary(family);
        let (f, g) = (&d[1], &d[3]);
        let (lo, hi) = p.effective_range();
        let x = lo + (hi - lo) * (x + 4.0) / 8.0;
        prop_assume!(p.support().contains_interior(x));
        let h = f.combine(alpha, beta, g);
        let lhs = stein_operator(&h, &p).interior(x);
        let rhs = alpha * stein_operator(f, &p).interior(x) + beta * stein_operator(g, &p).interior(x);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs() + rhs.abs()));
    }
}
