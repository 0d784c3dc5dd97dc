use super::*;
use proptest::prelude::*;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};
use statrs::function::erf::erfc;

fn q() -> QuadratureSpec<f64> {
    QuadratureSpec::default()
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).unwrap()
}

/// Tilt of Exp(1) centered at `m`: a N(m − 1/δ, 1/δ) truncated to `[0, ∞)`.
fn exp_tilt_closed_form(delta: f64, m: f64) -> (f64, f64) {
    let z = std_normal();
    let mu = m - 1.0 / delta;
    let s = 1.0 / delta.sqrt();
    let alpha = -mu / s;
    let tail = 1.0 - z.cdf(alpha);
    let mean = mu + s * z.pdf(alpha) / tail;
    // ∫ e^{−δ(x−m)²/2} e^{−x} dx over [0, ∞)
    let mass = (-m + 0.5 / delta).exp() * (std::f64::consts::TAU / delta).sqrt() * tail;
    (mean, mass)
}

/// Fixed point of the closed-form Exp(1) tilt by sign-change bracketing on a
/// dense grid, then bisection.
fn exp_fixed_point_by_bracketing(delta: f64) -> f64 {
    let f = |m: f64| exp_tilt_closed_form(delta, m).0 - m;
    let (lo, hi, steps) = (-5.0, 5.0, 100_000);
    let h = (hi - lo) / steps as f64;
    let mut a = lo;
    while f(a) * f(a + h) > 0.0 {
        a += h;
        assert!(a < hi, "no sign change found");
    }
    let mut b = a + h;
    for _ in 0..200 {
        let c = 0.5 * (a + b);
        if f(a) * f(c) <= 0.0 {
            b = c;
        } else {
            a = c;
        }
    }
    0.5 * (a + b)
}

fn standard() -> LogConcavePrior<f64> {
    LogConcavePrior::gaussian(&[0.0], 1.0).unwrap()
}

#[test]
fn tilt_map_symmetric_fixed_point() {
    for rho in [LogConcavePrior::gaussian(&[1.5], 2.0).unwrap(), LogConcavePrior::laplace(1.5, 1.0).unwrap()] {
        let m = tilt_map(&rho, 0.7, &[1.5], &q()).unwrap();
        assert!((m[0] - 1.5).abs() < 1e-8, "{m:?}");
    }
}

#[test]
fn tilt_map_gaussian_closed_form() {
    let m = tilt_map(&standard(), 1.0, &[2.0], &q()).unwrap();
    assert!((m[0] - 1.0).abs() < 1e-6, "{m:?}");
}

#[test]
fn tilt_map_exponential_against_truncated_normal() {
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let m = tilt_map(&rho, 1.0, &[0.0], &q()).unwrap()[0];
    let (expected, _) = exp_tilt_closed_form(1.0, 0.0);
    assert!(m > 0.0);
    assert!((m - expected).abs() < 1e-8, "{m} vs {expected}");
}

#[test]
fn tilt_map_underflow_is_domain_error() {
    let rho = LogConcavePrior::uniform(0.0, 1.0).unwrap();
    assert!(matches!(tilt_map(&rho, 1e4, &[50.0], &q()), Err(Error::Domain(_))));
    assert!(matches!(tilt_map(&standard(), 0.0, &[0.0], &q()), Err(Error::Domain(_))));
}

#[test]
fn solve_gaussian_is_symmetric() {
    let rho = LogConcavePrior::gaussian(&[-0.7], 2.5).unwrap();
    for delta in [0.05, 1.0, 50.0] {
        let r = solve_m_delta(&rho, delta, &q(), SolveOptions::default()).unwrap();
        assert!((r.m_delta[0] + 0.7).abs() < 1e-8);
        assert!(r.converged && r.lambda_delta < 1.0);
        assert!((r.g_delta - 0.5 * (1.0 + delta * 2.5).ln()).abs() < 1e-6);
    }
}

#[test]
fn solve_exponential_matches_bracketing() {
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let r = solve_m_delta(&rho, 1.0, &q(), SolveOptions::default()).unwrap();
    assert!(r.residual < 1e-10 * (1.0 + r.m_delta[0].abs()), "residual {}", r.residual);
    let oracle = exp_fixed_point_by_bracketing(1.0);
    assert!((r.m_delta[0] - oracle).abs() < 1e-6, "{} vs {oracle}", r.m_delta[0]);
    let (_, mass) = exp_tilt_closed_form(1.0, oracle);
    assert!((r.c_delta - mass).abs() < 1e-6);
}

#[test]
fn convergence_rate_respects_certificate() {
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    for delta in [0.1, 1.0, 10.0] {
        let r = solve_m_delta(&rho, delta, &q(), SolveOptions::default()).unwrap();
        let steps: Vec<f64> = r.trace.iter().copied().filter(|&s| s > 1e-13).collect();
        // asymptotic rate: geometric mean of the last five step ratios
        let tail = steps.len().min(6) - 1;
        let rate = (steps[steps.len() - 1] / steps[steps.len() - 1 - tail]).powf(1.0 / tail as f64);
        assert!(rate <= r.lambda_delta + 0.05, "δ={delta}: {rate} > {}", r.lambda_delta);
        // a priori bound λⁿ/(1−λ)·d(T(x₀), x₀) with λ the largest certificate
        // measured on the iterates, the error measured against m_δ
        let mut x = rho.barycenter().to_vec();
        let mut path = vec![x.clone()];
        for _ in 0..r.iterations.min(8) {
            x = tilt_map(&rho, delta, &x, &q()).unwrap();
            path.push(x.clone());
        }
        let lam = path
            .iter()
            .map(|p| contraction_certificate(&rho, delta, p, &q()).unwrap())
            .fold(r.lambda_delta, f64::max);
        assert!(lam < 1.0);
        let mut x = rho.barycenter().to_vec();
        for it in 0..r.iterations.min(8) {
            let err = (x[0] - r.m_delta[0]).abs();
            let bound = lam.powi(it as i32) / (1.0 - lam) * r.trace[0];
            assert!(err <= bound + 1e-12, "δ={delta}, it={it}: {err} > {bound}");
            x = tilt_map(&rho, delta, &x, &q()).unwrap();
        }
    }
}

#[test]
fn non_convergence_carries_trace() {
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let err = solve_m_delta(&rho, 0.05, &q(), SolveOptions { tol: 1e-10, max_iter: 3 }).unwrap_err();
    match err {
        Error::Iteration { iterations, trace, .. } => {
            assert_eq!(iterations, 3);
            assert_eq!(trace.len(), 3);
        }
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn delta_zero_is_identity_limit() {
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let r = solve_m_delta(&rho, 0.0, &q(), SolveOptions::default()).unwrap();
    assert_eq!(r.c_delta, 1.0);
    assert_eq!(r.g_delta, 0.0);
    assert!((r.m_delta[0] - 1.0).abs() < 1e-8);
    assert_eq!(g_of_delta(&rho, 0.0, &q()).unwrap(), 0.0);
}

#[test]
fn contraction_certificate_values() {
    let lam = contraction_certificate(&standard(), 1.0, &[0.3], &q()).unwrap();
    assert!((lam - 0.5).abs() < 1e-6);
    let lam = contraction_certificate(&standard(), 100.0, &[-1.0], &q()).unwrap();
    assert!((lam - 100.0 / 101.0).abs() < 1e-6 && lam < 1.0);
    let quartic = LogConcavePrior::quartic().unwrap();
    for delta in [0.1, 1.0, 10.0, 100.0] {
        let lam = contraction_certificate(&quartic, delta, &[0.0], &q()).unwrap();
        assert!(lam < 1.0 - 1e-3, "δ={delta}: {lam}");
    }
}

#[test]
fn contraction_certificate_two_dimensional() {
    let rho = LogConcavePrior::new(crate::measures::isotropic_gaussian(&[0.0, 0.0], 2.0), 0.5, &q()).unwrap();
    let lam = contraction_certificate(&rho, 1.0, &[0.5, -0.5], &q()).unwrap();
    assert!((lam - 2.0 / 3.0).abs() < 1e-6, "{lam}");
}

#[test]
fn g_gaussian_closed_form() {
    let rho = LogConcavePrior::gaussian(&[0.0], 3.0).unwrap();
    for delta in [0.01, 0.5, 2.0, 40.0] {
        let g = g_of_delta(&rho, delta, &q()).unwrap();
        assert!((g - 0.5 * (1.0 + 3.0 * delta).ln()).abs() < 1e-6);
    }
}

#[test]
fn g_laplace_against_erfc() {
    let rho = LogConcavePrior::laplace(0.0, 1.0).unwrap();
    let g = g_of_delta(&rho, 2.0, &q()).unwrap();
    // −log ∫₀^∞ e^{−x−x²} dx
    let expected = -(0.25f64.exp() * std::f64::consts::PI.sqrt() / 2.0 * erfc(0.5)).ln();
    assert!((g - expected).abs() < 1e-6, "{g} vs {expected}");
}

#[test]
fn g_bound_branches() {
    assert_eq!(g_bound(0.0, 1.0, 1), 0.0);
    assert_eq!(g_bound(0.5, 1.0, 1), 0.25);
    assert!((g_bound(std::f64::consts::E, 1.0, 1) - 1.0).abs() < 1e-15);
    let n = 3;
    let edge = 3.0 / 2.0;
    let left = g_bound(edge * (1.0 - 1e-12), 2.0f64, n);
    let right = g_bound(edge, 2.0, n);
    assert!((left - right).abs() < 1e-10);
}

#[test]
fn argmax_scan() {
    let r = verify_argmax(&standard(), 1.0, &q()).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.grid_argmax[0].abs() <= r.cell_width);
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let r = verify_argmax(&rho, 1.0, &q()).unwrap();
    assert!(r.passed && r.directions == 2, "{r:?}");
    let rho2 = LogConcavePrior::new(crate::measures::isotropic_gaussian(&[1.0, -1.0], 1.0), 1.0, &q()).unwrap();
    let r = verify_argmax(&rho2, 2.0, &q()).unwrap();
    assert!(r.passed && r.directions == 8, "{r:?}");
}

#[test]
fn argmax_rejects_high_dimension() {
    let rho = LogConcavePrior::new(crate::measures::standard_gaussian(3), 1.0, &q()).unwrap();
    assert!(matches!(verify_argmax(&rho, 1.0, &q()), Err(Error::Capability(_))));
}

#[test]
fn continuity_gaussian_and_exponential() {
    let deltas = crate::scalar::log_spaced(0.1, 10.0, 12);
    let r = continuity_probe(&LogConcavePrior::gaussian(&[2.0], 1.0).unwrap(), &deltas, &q()).unwrap();
    assert!(r.passed && r.max_jump < 1e-8, "{r:?}");
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let r = continuity_probe(&rho, &deltas, &q()).unwrap();
    assert!(r.passed, "{r:?}");
    assert!(r.refined_max_jump < r.max_jump);
    // m_δ moves monotonically toward the mode as δ grows
    assert!(r.m_deltas.windows(2).all(|w| w[1][0] < w[0][0]));
    assert!(continuity_probe(&rho, &deltas[..5], &q()).is_err());
    assert!(continuity_probe(&rho, &crate::scalar::log_spaced(1.0, 2.0, 12), &q()).is_err());
}

#[test]
fn g_inequality_gaussian_and_laplace() {
    let deltas = crate::scalar::log_spaced(0.05, 50.0, 9);
    let r = verify_g_inequality(&standard(), &deltas, &q()).unwrap();
    assert!(r.passed, "{r:?}");
    for row in &r.rows {
        assert!((row.g - 0.5 * (1.0 + row.delta).ln()).abs() < 1e-6);
    }
    let r = verify_g_inequality(&LogConcavePrior::laplace(0.0, 1.0).unwrap(), &deltas, &q()).unwrap();
    assert!(r.passed, "{r:?}");
}

#[test]
fn identity_at_delta_one() {
    let rho = standard();
    let (mu, fp) = tilted_reference(&rho, 1.0, &q()).unwrap();
    assert_eq!(mu.lsi_constant(), 1.0 / 2.0);
    let d = relative_entropy(rho.base(), mu.density(), &q()).unwrap();
    let i = relative_fisher_information(rho.base(), mu.density(), &q()).unwrap();
    // for N(0,1): D = ½·E|x|² + log C, I = E|x|², log C = −½ log 2
    assert!((d - (0.5 - 0.5 * 2f64.ln())).abs() < 1e-6);
    assert!((i - 1.0).abs() < 1e-6);
    assert!((d - i / 2.0 - fp.c_delta.ln()).abs() < 1e-6);
}

#[test]
fn tilted_reference_is_normalized_and_scored() {
    let rho = LogConcavePrior::exponential(1.0).unwrap();
    let (mu, _) = tilted_reference(&rho, 3.0, &q()).unwrap();
    let mass = crate::measures::total_mass(mu.density(), &q()).unwrap();
    assert!((mass - 1.0).abs() < 1e-9);
    assert!(mu.density().has_analytic_score());
    let s = mu.density().score(&[0.8]);
    let h = 1e-6;
    let fd = (mu.density().log_density(&[0.8 + h]) - mu.density().log_density(&[0.8 - h])) / (2.0 * h);
    assert!((s[0] - fd).abs() < 1e-6);
}

#[test]
fn sweep_rows() {
    let rho = LogConcavePrior::laplace(0.0, 1.0).unwrap();
    let deltas = crate::scalar::log_spaced(0.01, 100.0, 50);
    let rows = g_delta_sweep(&rho, &deltas, &q()).unwrap();
    assert_eq!(rows.len(), 50);
    assert!(rows.iter().all(|r| r.g <= r.g_bound + 1e-6 && r.lambda < 1.0));
    assert!(rows.windows(2).all(|w| w[1].g >= w[0].g));
}

#[test]
fn f32_solve() {
    let rho = LogConcavePrior::<f32>::gaussian(&[1.0], 1.0).unwrap();
    let q32 = QuadratureSpec::<f32>::default();
    let r = solve_m_delta(&rho, 1.0f32, &q32, SolveOptions { tol: 1e-5, max_iter: 100 }).unwrap();
    assert!((r.m_delta[0] - 1.0).abs() < 1e-4);
    assert!((r.g_delta - 0.5 * 2f32.ln()).abs() < 1e-4);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn gaussian_tilt_closed_forms(a in -3.0f64..3.0, s2 in 0.2f64..4.0, log_delta in -3.0f64..4.0) {
        let delta = log_delta.exp();
        let rho = LogConcavePrior::gaussian(&[a], s2).unwrap();
        let r = solve_m_delta(&rho, delta, &q(), SolveOptions::default()).unwrap();
        prop_assert!((r.m_delta[0] - a).abs() < 1e-6);
        prop_assert!((r.c_delta - (1.0 + delta * s2).powf(-0.5)).abs() < 1e-6);
        prop_assert!(r.residual < 1e-10 * (1.0 + a.abs()));
        prop_assert!(r.lambda_delta < 1.0 && r.c_delta <= 1.0 && r.c_delta > 0.0);
    }

    #[test]
    fn g_below_bound_and_monotone(d1 in 0.01f64..20.0, d2 in 0.01f64..20.0) {
        let rho = LogConcavePrior::exponential(1.0).unwrap();
        let (lo, hi) = if d1 < d2 { (d1, d2) } else { (d2, d1) };
        let g_lo = g_of_delta(&rho, lo, &q()).unwrap();
        let g_hi = g_of_delta(&rho, hi, &q()).unwrap();
        prop_assert!(g_lo <= g_hi + 1e-9);
        prop_assert!(g_hi <= g_bound(hi, rho.variance(), 1) + 1e-6);
    }

    #[test]
    fn contraction_below_one_at_start_and_fixed_point(log_delta in -3.0f64..(50f64).ln()) {
        let delta = log_delta.exp();
        for rho in [
            LogConcavePrior::laplace(0.0, 1.0).unwrap(),
            LogConcavePrior::quartic().unwrap(),
            LogConcavePrior::exponential(1.0).unwrap(),
        ] {
            let at_start = contraction_certificate(&rho, delta, rho.barycenter(), &q()).unwrap();
            let r = solve_m_delta(&rho, delta, &q(), SolveOptions::default()).unwrap();
            prop_assert!(at_start < 1.0, "{} δ={delta}: {at_start}", rho.base().label());
            prop_assert!(r.lambda_delta < 1.0);
        }
    }
}
