use std::f64::consts::{E, PI};

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::measures::{gaussian, laplace, ReferenceMeasure};
use crate::models::{make_bernoulli_mean, make_constant_channel, make_gaussian_location};
use crate::oracles::oracle_values;
use crate::scalar::log_spaced;

fn q() -> QuadratureSpec<f64> {
    QuadratureSpec::default()
}

fn close(got: f64, want: f64, tol: f64) {
    assert!((got - want).abs() <= tol, "got {got}, want {want} ± {tol}");
}

/// Golden-section minimum of a unimodal function on `[lo, hi]`.
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..300 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) < f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    f(0.5 * (lo + hi))
}

#[test]
fn phi_examples() {
    assert_eq!(phi(0.0).unwrap(), 0.0);
    assert_eq!(phi(1.0).unwrap(), 1.0);
    close(phi(E).unwrap(), 2.0, 1e-15);
    assert!(phi(-1e-3).is_err());
    close(phi(1.0 - 1e-12).unwrap(), phi(1.0).unwrap(), 1e-11);
}

#[test]
fn psi_examples() {
    assert_eq!(psi(0.0, 0.0).unwrap(), 0.0);
    close(psi(0.0, 0.25).unwrap(), 0.5, 1e-15);
    // second branch against a direct minimization of the per-dimension objective
    let oracle = golden_min(|t| theorem2_objective(1.0, 1.0, 8.0, t), 1.0, 50.0);
    close(psi(1.0, 8.0).unwrap(), oracle, 1e-8);
    assert!(psi(1.5, 1.0).is_err());
    assert!(psi(0.5, -1.0).is_err());
}

#[test]
fn delta_star_examples() {
    let d = delta_star(0.0, 1.0, 0.25).unwrap();
    close(d.delta, 0.5, 1e-15);
    assert_eq!(d.branch, Branch::Small);
    let d = delta_star(0.0, 1.0, 4.0).unwrap();
    close(d.delta, 4.0, 1e-12);
    assert_eq!(d.branch, Branch::Large);
    let d = delta_star(1.0, 1.0, 3.0).unwrap();
    assert_eq!(d.branch, Branch::Large);
    close(d.delta, 1.0, 1e-12);
    assert!(delta_star(0.0, 0.0, 1.0).is_err());
}

#[test]
fn psi_is_the_objective_at_delta_star() {
    for (k, p, j) in [(0.0, 1.0, 0.3), (0.5, 2.0, 0.1), (0.5, 2.0, 10.0), (1.0, 1.0, 100.0), (0.2, 0.7, 5.0)] {
        let d = delta_star(k, p, j).unwrap();
        close(theorem2_objective(k, p, j, d.delta), psi(k * p, j * p).unwrap(), 1e-12);
    }
}

#[test]
fn theorem2_examples() {
    assert_eq!(theorem2_bound(0.5, 1.0, 0.0, 3, Theorem2Form::Phi).unwrap(), 0.0);
    assert_eq!(theorem2_bound(0.5, 1.0, 0.0, 3, Theorem2Form::Psi).unwrap(), 0.0);
    close(theorem2_bound(0.0, 1.0, 0.25, 2, Theorem2Form::Phi).unwrap(), 1.0, 1e-15);
    let b = theorem2_bound(1.0, 1.0, 3.0, 1, Theorem2Form::Phi).unwrap();
    close(b, 1.0, 1e-15);
    assert!(0.5 * 4f64.ln() <= b);
    let err = theorem2_bound(1.2, 1.0, 1.0, 1, Theorem2Form::Phi).unwrap_err();
    assert!(matches!(err, Error::InvariantViolation(_)));
}

#[test]
fn theorem1_examples() {
    let mu = ReferenceMeasure::gaussian_standard(1);
    let prior = LogConcavePrior::gaussian(&[0.0], 1.0).unwrap();
    let m = make_gaussian_location(1.0, 1, 1).unwrap();
    let t = theorem1_rhs(&mu, &prior, &m, &q()).unwrap();
    close(t.rhs, 0.5, 1e-5);
    assert!(t.rhs >= 0.5 * 2f64.ln());

    let mu = ReferenceMeasure::bakry_emery(gaussian(0.0, 0.5), 2.0).unwrap();
    let prior = LogConcavePrior::gaussian(&[0.0], 0.5).unwrap();
    let t = theorem1_rhs(&mu, &prior, &m, &q()).unwrap();
    close(t.rhs, 0.25, 1e-5);
    assert!(t.rhs >= 0.5 * 1.5f64.ln());

    // constant channel: the bound reduces to the LSI of μ at π
    let mu = ReferenceMeasure::gaussian_standard(1);
    let c = make_constant_channel(1.0, 1).unwrap();
    for prior in [LogConcavePrior::laplace(0.5, 0.8).unwrap(), LogConcavePrior::gaussian(&[1.0], 0.3).unwrap()] {
        let t = theorem1_rhs(&mu, &prior, &c, &q()).unwrap();
        assert!(t.rhs >= -1e-8);
        close(t.fisher_integral, 0.0, 1e-12);
    }
    let t = theorem1_rhs(&mu, &LogConcavePrior::uniform(0.0, 1.0).unwrap(), &m, &q()).unwrap();
    assert!(t.rhs.is_infinite() && t.degenerate.is_some());
}

#[test]
fn efroimovich_and_van_trees_examples() {
    let m = make_gaussian_location(1.0, 1, 1).unwrap();
    let prior = LogConcavePrior::gaussian(&[0.0], 1.0).unwrap();
    let e = efroimovich_bound(&prior, &m, &q(), false).unwrap();
    close(e.value, 0.5, 1e-5);
    let o = oracle_values(&prior, &m, &q()).unwrap();
    close(entropy_power(o.conditional_entropy, 1), 0.5, 1e-4);
    close(van_trees_bound(&prior, &m, &q()).unwrap().value, 0.5, 1e-5);
    close(o.mmse, 0.5, 1e-4);

    let unif = LogConcavePrior::uniform(0.0, 1.0).unwrap();
    let e = efroimovich_bound(&unif, &m, &q(), false).unwrap();
    assert!(e.is_degenerate() && e.value == 0.0);
    assert!(van_trees_bound(&unif, &m, &q()).unwrap().is_degenerate());

    let lap = LogConcavePrior::laplace(0.0, 1.0).unwrap();
    let e = efroimovich_bound(&lap, &m, &q(), false).unwrap();
    close(e.value, 0.5, 1e-3);
    let o = oracle_values(&lap, &m, &q()).unwrap();
    assert!(entropy_power(o.conditional_entropy, 1) >= e.value - 1e-4);

    let wide = LogConcavePrior::gaussian(&[0.0], 4.0).unwrap();
    close(van_trees_bound(&wide, &m, &q()).unwrap().value, 0.8, 1e-5);
    close(oracle_values(&wide, &m, &q()).unwrap().mmse, 0.8, 1e-4);
}

#[test]
fn one_dimensional_form_needs_one_dimension() {
    let prior = LogConcavePrior::gaussian(&[0.0, 0.0], 1.0).unwrap();
    let m = make_gaussian_location(1.0, 2, 1).unwrap();
    assert!(efroimovich_bound(&prior, &m, &q(), false).is_err());
    close(efroimovich_bound(&prior, &m, &q(), true).unwrap().value, 0.5, 1e-5);
    close(van_trees_bound(&prior, &m, &q()).unwrap().value, 1.0, 1e-5);
}

#[test]
fn logconcave_bound_examples() {
    close(FOUR_OVER_E_SQUARED, 4.0 / (E * E), 1e-16);
    close(FOUR_OVER_E_SQUARED, 0.5413, 1e-4);
    let unif = LogConcavePrior::uniform(0.0, 1.0).unwrap();
    let m = make_gaussian_location(1.0 / 24.0, 1, 1).unwrap();
    let b = logconcave_1d_bound(&unif, &m, &q()).unwrap();
    assert!(b.precondition_met);
    close(b.bound, FOUR_OVER_E_SQUARED / 24.0, 1e-6);
    let o = oracle_values(&unif, &m, &q()).unwrap();
    assert!((2.0 * o.conditional_entropy).exp() >= FOUR_OVER_E_SQUARED / 24.0 - 1e-4);
    assert!(o.mmse >= b.mse_max_entropy);

    let prior = LogConcavePrior::gaussian(&[0.0], 1.0).unwrap();
    let b = logconcave_1d_bound(&prior, &make_gaussian_location(2.0, 1, 1).unwrap(), &q()).unwrap();
    assert!(!b.precondition_met);
}

#[test]
fn gaussian_sequence_examples() {
    assert_eq!(gaussian_sequence_sharp(0.0, 3).unwrap(), 0.0);
    close(gaussian_sequence_sharp(1.0, 1).unwrap(), 0.5 * 2f64.ln(), 1e-15);
    close(gaussian_sequence_sharp(3.0, 2).unwrap(), 4f64.ln(), 1e-15);
    assert!(gaussian_sequence_sharp(-0.1, 1).is_err());
    let prior = LogConcavePrior::gaussian(&[0.0], 2.0).unwrap();
    close(snr(&prior, &make_gaussian_location(0.5, 1, 3).unwrap()).unwrap(), 12.0, 1e-6);
    assert!(snr(&prior, &make_constant_channel(1.0, 1).unwrap()).is_none());
}

#[test]
fn reverse_epi_examples() {
    let g = gaussian(0.0, 1.0);
    let two_pi_e = 2.0 * PI * E;
    let r1 = reverse_epi_rhs(&g, 1, &q()).unwrap();
    close(r1.value, E * E * two_pi_e, 1e-3);
    let r4 = reverse_epi_rhs(&g, 4, &q()).unwrap();
    close(r4.value, 4.0 * E * E * two_pi_e, 4e-3);
    assert!(4.0 * two_pi_e <= r4.value);
    assert!(reverse_epi_rhs(&gaussian(0.0, 2.0), 1, &q()).is_err());
    let sweep = reverse_epi_sweep(&g, 6, &ConvolutionGrid::default(), &q(), 1e-3).unwrap();
    assert_eq!(sweep.threshold, Some(1));
    assert!(sweep.persists);
    let lap = laplace(0.0, 1.0 / 2f64.sqrt());
    let sweep = reverse_epi_sweep(&lap, 8, &ConvolutionGrid::default(), &q(), 1e-3).unwrap();
    assert!(sweep.persists, "{sweep:?}");
}

#[test]
fn classical_crb_examples() {
    close(classical_crb(&make_gaussian_location(1.0, 1, 1).unwrap(), &[0.0], &q()).unwrap().value, 1.0, 1e-5);
    close(classical_crb(&make_gaussian_location(1.0, 1, 4).unwrap(), &[0.0], &q()).unwrap().value, 0.25, 1e-5);
    close(classical_crb(&make_bernoulli_mean(), &[0.5], &q()).unwrap().value, 0.25, 1e-12);
    let c = classical_crb(&make_constant_channel(1.0, 1).unwrap(), &[0.0], &q()).unwrap();
    assert!(c.value.is_infinite() && c.is_degenerate());
}

#[test]
fn psi_never_exceeds_phi_on_grid() {
    for i in 0..100 {
        let a = i as f64 / 99.0;
        for j in 0..100 {
            let b = 20.0 * j as f64 / 99.0;
            let s = theorem2_bound(a, 1.0, b, 1, Theorem2Form::Psi).unwrap();
            let f = theorem2_bound(a, 1.0, b, 1, Theorem2Form::Phi).unwrap();
            assert!(s <= f + 1e-12, "a={a} b={b}: ψ={s} φ={f}");
        }
    }
}

#[test]
fn delta_star_minimizes_the_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..200 {
        let p = 10f64.powf(rng.random_range(-2.0..2.0));
        let k = rng.random_range(0.0..1.0) / p;
        let j = 10f64.powf(rng.random_range(-3.0..3.0)) / p;
        let d = delta_star(k, p, j).unwrap();
        let at_star = theorem2_objective(k, p, j, d.delta);
        let t_star = d.delta * p;
        let lo = t_star.min(1.0) * 1e-3;
        let hi = t_star.max(1.0) * 1e3;
        let grid_min = log_spaced(lo, hi, 10_000)
            .into_iter()
            .map(|t| theorem2_objective(k, p, j, t / p))
            .fold(f64::INFINITY, f64::min);
        assert!(at_star <= grid_min + 1e-8, "K={k} P={p} J={j}: {at_star} > {grid_min}");
        assert_eq!(d.branch == Branch::Small, j * p < 1.0 + 2.0 * k * p);
        assert_eq!(d.branch == Branch::Small, d.delta < 1.0 / p);
    }
}

#[test]
fn dimension_additivity_on_product_scenarios() {
    let m1 = make_gaussian_location(1.0, 1, 1).unwrap();
    let m2 = make_gaussian_location(1.0, 2, 1).unwrap();
    let p1 = LogConcavePrior::gaussian(&[0.0], 1.0).unwrap();
    let p2 = LogConcavePrior::gaussian(&[0.0, 0.0], 1.0).unwrap();
    let t1 = theorem2_inputs(&p1, &m1, &q()).unwrap();
    let t2 = theorem2_inputs(&p2, &m2, &q()).unwrap();
    for form in [Theorem2Form::Phi, Theorem2Form::Psi] {
        let b1 = theorem2_bound(t1.k, t1.p, t1.j, 1, form).unwrap();
        let b2 = theorem2_bound(t2.k, t2.p, t2.j, 2, form).unwrap();
        assert!((b2 / (2.0 * b1) - 1.0).abs() < 1e-4);
    }
    let mu1 = ReferenceMeasure::gaussian_standard(1);
    let mu2 = ReferenceMeasure::gaussian_standard(2);
    let r1 = theorem1_rhs(&mu1, &p1, &m1, &q()).unwrap().rhs;
    let r2 = theorem1_rhs(&mu2, &p2, &m2, &q()).unwrap().rhs;
    assert!((r2 / (2.0 * r1) - 1.0).abs() < 1e-4);
}

#[test]
fn efroimovich_implies_van_trees_on_oracles() {
    for (prior, s2) in [
        (LogConcavePrior::gaussian(&[0.0], 1.0).unwrap(), 0.5),
        (LogConcavePrior::laplace(0.0, 1.0).unwrap(), 1.0),
        (LogConcavePrior::quartic().unwrap(), 0.2),
    ] {
        let m = make_gaussian_location(s2, 1, 1).unwrap();
        let rhs = efroimovich_bound(&prior, &m, &q(), false).unwrap().value;
        close(rhs, van_trees_bound(&prior, &m, &q()).unwrap().value, 1e-15);
        let o = oracle_values(&prior, &m, &q()).unwrap();
        let ep = entropy_power(o.conditional_entropy, 1);
        assert!(ep >= rhs - 1e-4);
        // maximum entropy: MSE ≥ entropy power
        assert!(o.mmse >= ep - 1e-4);
        assert!(o.mmse >= rhs - 1e-4);
    }
}

#[test]
fn multidimensional_efroimovich_is_scale_covariant() {
    // rescaling θ by s multiplies both sides by s²: the ratio is invariant
    let prior = LogConcavePrior::laplace(0.0, 1.0).unwrap();
    let m = make_gaussian_location(0.5, 1, 1).unwrap();
    let base = {
        let o = oracle_values(&prior, &m, &q()).unwrap();
        entropy_power(o.conditional_entropy, 1) / efroimovich_bound(&prior, &m, &q(), true).unwrap().value
    };
    for s in [0.5, 2.0, 3.0] {
        let ps = LogConcavePrior::laplace(0.0, s).unwrap();
        let ms = m.rescaled(s);
        let o = oracle_values(&ps, &ms, &q()).unwrap();
        let ratio = entropy_power(o.conditional_entropy, 1) / efroimovich_bound(&ps, &ms, &q(), true).unwrap().value;
        assert!((ratio - base).abs() < 1e-4, "s={s}: {ratio} vs {base}");
    }
    // Gaussian saturation: zero slack at every scale
    let m = make_gaussian_location(1.0, 1, 1).unwrap();
    for s in [0.5, 1.0, 2.0] {
        let gs = LogConcavePrior::gaussian(&[0.0], s * s).unwrap();
        let ms = m.rescaled(s);
        let o = oracle_values(&gs, &ms, &q()).unwrap();
        let slack = entropy_power(o.conditional_entropy, 1) - efroimovich_bound(&gs, &ms, &q(), true).unwrap().value;
        assert!(slack.abs() < 1e-4 * s * s);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn psi_below_phi(a in 0.0..=1.0f64, b in 0.0..1e4f64) {
        let s = psi(a, b).unwrap();
        let x = b / ((a * a + b).sqrt() + a);
        prop_assert!(s <= phi(x).unwrap() + 1e-12);
        prop_assert!(s >= 0.0);
    }

    #[test]
    fn phi_is_continuous_and_monotone(x in 0.0..100.0f64, dx in 0.0..1.0f64) {
        prop_assert!(phi(x + dx).unwrap() >= phi(x).unwrap());
    }

    #[test]
    fn theorem2_bound_is_linear_in_n(k in 0.0..1.0f64, j in 0.0..50.0f64, n in 1usize..8) {
        for form in [Theorem2Form::Phi, Theorem2Form::Psi] {
            let one = theorem2_bound(k, 1.0, j, 1, form).unwrap();
            let many = theorem2_bound(k, 1.0, j, n, form).unwrap();
            prop_assert!((many - n as f64 * one).abs() <= 1e-12 * (1.0 + many));
        }
    }
}
