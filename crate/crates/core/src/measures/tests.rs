use std::f64::consts::{E, PI};

use proptest::prelude::*;

use super::*;
use crate::quadrature::{Axis, Scheme};

fn q() -> QuadratureSpec<f64> {
    QuadratureSpec::default()
}

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "got {got}, want {want} ± {tol}");
}

#[test]
fn variance_examples() {
    close(variance(&standard_gaussian::<f64>(1), &q()).unwrap(), 1.0, 1e-6);
    close(variance(&uniform(0.0, 1.0), &q()).unwrap(), 1.0 / 12.0, 1e-6);
    close(variance(&standard_gaussian::<f64>(3), &q()).unwrap(), 3.0, 1e-6);
}

#[test]
fn variance_is_the_infimum_over_centers() {
    let d = exponential(1.0);
    let (b, v) = barycenter_and_variance(&d, &q()).unwrap();
    close(b[0], 1.0, 1e-8);
    for c in [-0.1, -0.01, 0.01, 0.1] {
        let shifted = second_moment_about(&d, &q(), &[b[0] + c]).unwrap();
        assert!(shifted > v);
        close(shifted - v, c * c, 1e-9);
    }
}

#[test]
fn fisher_information_examples() {
    close(fisher_information_j(&gaussian(0.0, 2.0), &q()).unwrap(), 0.5, 1e-4);
    assert_eq!(fisher_information_j(&uniform(0.0, 1.0), &q()).unwrap(), f64::INFINITY);
    close(fisher_information_j(&laplace(0.0, 1.0), &q()).unwrap(), 1.0, 1e-3);
    assert_eq!(fisher_information_j(&exponential(1.0), &q()).unwrap(), f64::INFINITY);
}

#[test]
fn finite_difference_score_matches_analytic() {
    let analytic = quartic::<f64>();
    let bare = DensityOnRn::new(analytic.support().clone(), {
        let a = analytic.clone();
        move |x: &[f64]| a.log_density(x)
    });
    assert!(!bare.has_analytic_score());
    for x in [-1.3, -0.2, 0.0, 0.7, 1.9] {
        close(bare.score(&[x])[0], analytic.score(&[x])[0], 1e-6 * (1.0 + x.abs().powi(3)));
    }
    let j_fd = fisher_information_j(&bare, &q()).unwrap();
    let j_an = fisher_information_j(&analytic, &q()).unwrap();
    close(j_fd, j_an, 1e-6);
}

#[test]
fn differential_entropy_examples() {
    let h1 = 0.5 * (2.0 * PI * E).ln();
    close(differential_entropy(&standard_gaussian::<f64>(1), &q()).unwrap(), h1, 1e-5);
    close(differential_entropy(&uniform(0.0, 1.0), &q()).unwrap(), 0.0, 1e-6);
    close(differential_entropy(&standard_gaussian::<f64>(2), &q()).unwrap(), 2.0 * h1, 1e-4);
}

#[test]
fn relative_entropy_examples() {
    let mu = standard_gaussian::<f64>(1);
    close(relative_entropy(&mu, &mu, &q()).unwrap(), 0.0, 1e-8);
    close(relative_entropy(&gaussian(1.0, 1.0), &mu, &q()).unwrap(), 0.5, 1e-5);
    let expect = 0.5 * (0.5 - 1.0 - 0.5_f64.ln());
    close(relative_entropy(&gaussian(0.0, 0.5), &mu, &q()).unwrap(), expect, 1e-5);
}

#[test]
fn relative_entropy_rejects_missing_absolute_continuity() {
    let err = relative_entropy(&standard_gaussian::<f64>(1), &uniform(0.0, 1.0), &q()).unwrap_err();
    assert!(matches!(err, Error::AbsoluteContinuity(_)), "{err}");
}

#[test]
fn relative_fisher_examples() {
    let mu = standard_gaussian::<f64>(1);
    close(relative_fisher_information(&mu, &mu, &q()).unwrap(), 0.0, 1e-8);
    close(relative_fisher_information(&gaussian(1.0, 1.0), &mu, &q()).unwrap(), 1.0, 1e-4);
    assert_eq!(
        relative_fisher_information(&uniform(0.0, 1.0), &mu, &q()).unwrap(),
        f64::INFINITY
    );
}

#[test]
fn lsi_check_examples() {
    let mu = ReferenceMeasure::gaussian_standard(1);
    assert_eq!(mu.lsi_constant(), 1.0);
    let c = lsi_check(&mu, &gaussian(1.0, 1.0), &q()).unwrap();
    close(c.lhs, 0.5, 1e-5);
    close(c.rhs, 0.5, 1e-5);
    assert!(c.satisfied);
    let c = lsi_check(&mu, mu.density(), &q()).unwrap();
    close(c.lhs, 0.0, 1e-8);
    close(c.rhs, 0.0, 1e-8);
    assert!(c.satisfied);
    let c = lsi_check(&mu, &gaussian(0.0, 0.5), &q()).unwrap();
    close(c.lhs, 0.5 * (0.5 - 1.0 - 0.5_f64.ln()), 1e-5);
    close(c.rhs, 0.25, 1e-5);
    assert!(c.satisfied);
}

#[test]
fn bakry_emery_constant_is_reciprocal_curvature() {
    let mu = ReferenceMeasure::bakry_emery(gaussian(0.0, 0.5), 2.0).unwrap();
    assert_eq!(mu.lsi_constant() * 2.0, 1.0);
    assert_eq!(mu.provenance(), LsiProvenance::BakryEmery);
    assert!(ReferenceMeasure::bakry_emery(gaussian(0.0, 1.0), 0.0).is_err());
}

#[test]
fn lsi_holds_for_bakry_emery_pairs() {
    let refs = [
        ReferenceMeasure::gaussian_standard(1),
        ReferenceMeasure::bakry_emery(gaussian(0.5, 0.25), 4.0).unwrap(),
        ReferenceMeasure::bakry_emery(gaussian(-1.0, 2.0), 0.5).unwrap(),
    ];
    let nus = [gaussian(0.3, 0.7), laplace(0.2, 0.5), quartic(), gaussian(-0.5, 1.5)];
    for mu in &refs {
        for nu in &nus {
            let c = lsi_check(mu, nu, &q()).unwrap();
            assert!(c.satisfied, "{} vs {}: {c:?}", nu.label(), mu.density().label());
            assert!(c.lhs >= -1e-8);
        }
    }
}

#[test]
fn truncated_domain_is_an_integration_domain_error() {
    let narrow = q().with_domain(SupportBox::new(vec![Axis::soft(-2.0, 2.0)]));
    let err = variance(&standard_gaussian::<f64>(1), &narrow).unwrap_err();
    assert!(matches!(err, Error::IntegrationDomain { .. }));
}

#[test]
fn normalization_of_every_family() {
    let family = [
        standard_gaussian::<f64>(1),
        gaussian(2.0, 3.0),
        laplace(0.0, 1.0),
        laplace(1.0, 1.0 / 2f64.sqrt()),
        uniform(0.0, 1.0),
        exponential(1.0),
        quartic(),
        standard_gaussian(2),
        product(vec![laplace(0.0, 1.0), uniform(-1.0, 2.0)]),
    ];
    for d in &family {
        let m = check_normalization(d, &q()).unwrap();
        close(m, 1.0, 1e-6);
    }
    let trap = QuadratureSpec::new(20_001, Scheme::Trapezoid).unwrap();
    close(check_normalization(&quartic::<f64>(), &trap).unwrap(), 1.0, 1e-6);
}

#[test]
fn hard_faces_give_minus_infinity_outside() {
    let d = uniform(0.0_f64, 1.0);
    assert_eq!(d.log_density(&[-0.1]), f64::NEG_INFINITY);
    assert_eq!(d.log_density(&[1.1]), f64::NEG_INFINITY);
    assert_eq!(d.log_density(&[0.5]), 0.0);
}

#[test]
fn priors_cache_moments() {
    let p = LogConcavePrior::gaussian(&[2.0], 3.0).unwrap();
    close(p.barycenter()[0], 2.0, 1e-9);
    close(p.variance(), 3.0, 1e-6);
    close(p.fisher_j(), 1.0 / 3.0, 1e-6);
    close(p.kp(), 1.0, 1e-6);
    let u = LogConcavePrior::uniform(0.0, 1.0).unwrap();
    assert_eq!(u.fisher_j(), f64::INFINITY);
    assert_eq!(u.k(), 0.0);
}

#[test]
fn brascamp_lieb_rejects_overstated_curvature() {
    let err = LogConcavePrior::new(gaussian(0.0, 1.0), 1.5, &q()).unwrap_err();
    assert!(matches!(err, Error::InvariantViolation(_)));
}

#[test]
fn nonconvex_potential_is_rejected() {
    let support = SupportBox::new(vec![Axis::soft(-6.0, 6.0)]);
    let (bimodal, _) =
        normalized_from_potential(support, |x: &[f64]| (x[0] * x[0] - 4.0).powi(2) / 4.0, &q()).unwrap();
    let err = LogConcavePrior::new(bimodal, 0.0, &q()).unwrap_err();
    assert!(matches!(err, Error::InvariantViolation(_)));
}

#[test]
fn potential_normalization_matches_closed_form() {
    let support = SupportBox::new(vec![Axis::soft(-2.5, 2.5)]);
    let (d, log_z) = normalized_from_potential(support, |x: &[f64]| x[0].powi(4), &q()).unwrap();
    close(log_z, QUARTIC_NORMALIZER.ln(), 1e-10);
    close(d.log_density(&[0.3]), quartic::<f64>().log_density(&[0.3]), 1e-10);
}

#[test]
fn single_precision_smoke() {
    let qf = QuadratureSpec::<f32>::default();
    let v = variance(&gaussian(0.0_f32, 2.0), &qf).unwrap();
    assert!((v - 2.0).abs() < 1e-4);
    let j = fisher_information_j(&laplace(0.0_f32, 1.0), &qf).unwrap();
    assert!((j - 1.0).abs() < 1e-3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn variance_is_translation_invariant(c in -5.0..5.0f64) {
        for d in [laplace(0.0, 0.8), exponential(2.0), quartic()] {
            let v0 = variance(&d, &q()).unwrap();
            let v1 = variance(&d.translated(&[c]), &q()).unwrap();
            prop_assert!((v0 - v1).abs() < 1e-8, "{} {} {}", d.label(), v0, v1);
        }
    }

    #[test]
    fn fisher_information_scales_inverse_square(s in 0.2..5.0f64) {
        for d in [gaussian(0.0, 1.0), laplace(0.0, 1.0), quartic()] {
            let j = fisher_information_j(&d, &q()).unwrap();
            let js = fisher_information_j(&d.scaled(s), &q()).unwrap();
            prop_assert!((js * s * s / j - 1.0).abs() < 1e-4);
        }
    }

    #[test]
    fn relative_entropy_is_nonnegative(m in -2.0..2.0f64, v in 0.3..3.0f64, b in 0.3..2.0f64) {
        let mu = gaussian(0.0, 1.0);
        for nu in [gaussian(m, v), laplace(m, b)] {
            prop_assert!(relative_entropy(&nu, &mu, &q()).unwrap() >= -1e-8);
        }
        prop_assert!(relative_entropy(&mu, &gaussian(m, v), &q()).unwrap() >= -1e-8);
    }
}
