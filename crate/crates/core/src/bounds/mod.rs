//! Closed-form Bayesian Cramér–Rao and mutual-information bounds.
//!
//! Each bound returns its value together with the ingredients it was built
//! from. Bounds that degenerate (`𝓙(π) = +∞`, `I_μ(π) = +∞`) return a value
//! with a flag rather than an error.

pub mod report;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{
    differential_entropy, fisher_information_j, relative_entropy, relative_fisher_information, variance,
    DensityOnRn, LogConcavePrior, ReferenceMeasure,
};
use crate::models::{average_fisher_information, model_fisher_information, ParametricModel};
use crate::oracles::{iid_sum_entropies, ConvolutionGrid};
use crate::quadrature::QuadratureSpec;
use crate::scalar::Real;

/// `4/e²`.
pub const FOUR_OVER_E_SQUARED: f64 = 0.541_341_132_946_450_8;
/// Slack allowed on `KP ≤ 1` before a prior is declared inconsistent.
pub const KP_TOLERANCE: f64 = 1e-9;

/// A bound value with an optional degeneracy note.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bound<T> {
    pub value: T,
    pub degenerate: Option<String>,
}

impl<T> Bound<T> {
    fn finite(value: T) -> Self {
        Self { value, degenerate: None }
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate.is_some()
    }
}

/// `φ(x) = x` on `[0, 1)`, `1 + log x` beyond.
pub fn phi<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero()) {
        return Err(Error::Domain(format!("φ needs x ≥ 0, got {x}")));
    }
    Ok(if x < T::one() { x } else { T::one() + x.ln() })
}

fn check_ab<T: Real>(a: T, b: T) -> Result<T> {
    let tol = T::lit(KP_TOLERANCE);
    if !(a >= T::zero() && a <= T::one() + tol) || !(b >= T::zero()) || !b.is_finite() {
        return Err(Error::Domain(format!("ψ needs 0 ≤ a ≤ 1 and finite b ≥ 0, got a = {a}, b = {b}")));
    }
    Ok(a.min(T::one()))
}

/// The optimized per-dimension bound in the variables `a = KP`, `b = JP`.
pub fn psi<T: Real>(a: T, b: T) -> Result<T> {
    let a = check_ab(a, b)?;
    let two = T::lit(2.0);
    let s = a * a + b;
    if b < two * a + T::one() {
        // √(a² + b) − a without cancellation
        return Ok(if b == T::zero() { T::zero() } else { b / (s.sqrt() + a) });
    }
    let r = (s * s - T::lit(4.0) * a * s).max(T::zero()).sqrt();
    Ok((T::one() - a + two * s / (s + r) + ((s + r) / two - a).ln()) / two)
}

/// Which case of the optimal tilt applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    /// `JP < 1 + 2KP`, `δ < 1/P`.
    Small,
    /// `JP ≥ 1 + 2KP`, `δ ≥ 1/P`.
    Large,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaStar<T> {
    pub delta: T,
    pub branch: Branch,
}

/// Optimal tilt `δ*(K, P, J)` of the log-concave bound.
pub fn delta_star<T: Real>(k: T, p: T, j: T) -> Result<DeltaStar<T>> {
    if !(p > T::zero()) || !(k >= T::zero()) || !(j >= T::zero()) {
        return Err(Error::Domain(format!("δ* needs K ≥ 0, P > 0, J ≥ 0; got K = {k}, P = {p}, J = {j}")));
    }
    let two = T::lit(2.0);
    let (a, b) = (k * p, j * p);
    let out = if b < T::one() + two * a {
        let r = j / p;
        let delta = if r == T::zero() { T::zero() } else { r / ((k * k + r).sqrt() + k) };
        DeltaStar { delta, branch: Branch::Small }
    } else {
        let s = k * k * p + j;
        let disc = (s * s - T::lit(4.0) * k * s).max(T::zero());
        DeltaStar { delta: ((s - two * k) + disc.sqrt()) / two, branch: Branch::Large }
    };
    let consistent = match out.branch {
        Branch::Small => out.delta * p < T::one(),
        Branch::Large => out.delta * p >= T::one() * (T::one() - T::lit(1e-12)),
    };
    if !consistent {
        return Err(Error::InvariantViolation(format!(
            "δ* = {} inconsistent with its branch {:?} at K = {k}, P = {p}, J = {j}",
            out.delta, out.branch
        )));
    }
    Ok(out)
}

/// Per-dimension right-hand side of the tilted-reference bound at tilt `δ`:
/// `−KδP/(2(K+δ)) + J/(2(K+δ)) + [δP/2 or ½(1 + log δP)]`.
pub fn theorem2_objective<T: Real>(k: T, p: T, j: T, delta: T) -> T {
    let two = T::lit(2.0);
    let (a, b, t) = (k * p, j * p, delta * p);
    let tail = if t < T::one() { t / two } else { (T::one() + t.ln()) / two };
    (b - a * t) / (two * (a + t)) + tail
}

/// Form of the log-concave mutual-information bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Theorem2Form {
    Phi,
    Psi,
}

/// `n·φ(√((KP)² + JP) − KP)` or `n·ψ(KP, JP)`.
pub fn theorem2_bound<T: Real>(k: T, p: T, j: T, n: usize, form: Theorem2Form) -> Result<T> {
    if !(p > T::zero()) {
        return Err(Error::Domain(format!("P must be positive, got {p}")));
    }
    let a = k * p;
    if a > T::one() + T::lit(KP_TOLERANCE) {
        return Err(Error::InvariantViolation(format!(
            "KP = {a} exceeds 1; the curvature is inconsistent with the prior variance"
        )));
    }
    let a = a.min(T::one());
    let b = j * p;
    let per_dim = match form {
        Theorem2Form::Phi => {
            let x = if b == T::zero() { T::zero() } else { b / ((a * a + b).sqrt() + a) };
            phi(x)?
        }
        Theorem2Form::Psi => psi(a, b)?,
    };
    Ok(T::from_count(n) * per_dim)
}

/// `K`, `P = Var(π)/n`, and `J = (1/n)∫𝓘 dπ` of a prior–model pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem2Inputs<T> {
    pub n: usize,
    pub k: T,
    pub p: T,
    pub j: T,
    /// `∫ 𝓘 dπ`.
    pub fisher_integral: T,
}

pub fn theorem2_inputs<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<Theorem2Inputs<T>> {
    let avg = average_fisher_information(m, prior, q)?;
    Ok(Theorem2Inputs { n: prior.dim(), k: prior.k(), p: prior.p(), j: avg.per_dim, fisher_integral: avg.total })
}

/// Ingredients and value of `(C/2)(I_μ(π) + ∫𝓘 dπ) − D_μ(π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Theorem1<T> {
    pub lsi_constant: T,
    pub relative_entropy: T,
    pub relative_fisher: T,
    pub fisher_integral: T,
    pub rhs: T,
    pub degenerate: Option<String>,
}

/// Upper bound on `I(π; P_θ)` from a reference measure satisfying `LSI(C)`.
pub fn theorem1_rhs<T: Real>(
    mu: &ReferenceMeasure<T>,
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<Theorem1<T>> {
    let fisher_integral = average_fisher_information(m, prior, q)?.total;
    theorem1_from_parts(mu, prior.base(), fisher_integral, q)
}

/// [`theorem1_rhs`] with a precomputed `∫𝓘 dπ`.
pub fn theorem1_from_parts<T: Real>(
    mu: &ReferenceMeasure<T>,
    prior: &DensityOnRn<T>,
    fisher_integral: T,
    q: &QuadratureSpec<T>,
) -> Result<Theorem1<T>> {
    let c = mu.lsi_constant();
    let d = relative_entropy(prior, mu.density(), q)?;
    let i = relative_fisher_information(prior, mu.density(), q)?;
    let (rhs, degenerate) = if i.is_finite() {
        (c / T::lit(2.0) * (i + fisher_integral) - d, None)
    } else {
        (T::infinity(), Some("I_μ(π) = +∞".to_string()))
    };
    Ok(Theorem1 { lsi_constant: c, relative_entropy: d, relative_fisher: i, fisher_integral, rhs, degenerate })
}

fn fisher_sum<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<(T, Option<String>)> {
    let jp = prior.fisher_j();
    if !jp.is_finite() {
        return Ok((T::infinity(), Some("degenerate: 𝓙(π) = +∞".to_string())));
    }
    Ok((jp + average_fisher_information(m, prior, q)?.total, None))
}

/// Lower bound on `(1/2πe)·exp((2/n)·h(θ|X))`: `1/(E𝓘 + 𝓙)` in one
/// dimension, `n/(𝓙 + ∫𝓘 dπ)` in the multidimensional form.
pub fn efroimovich_bound<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
    multidim: bool,
) -> Result<Bound<T>> {
    let n = prior.dim();
    if !multidim && n != 1 {
        return Err(Error::Domain(format!("the one-dimensional form needs n = 1, got n = {n}")));
    }
    let (total, flag) = fisher_sum(prior, m, q)?;
    Ok(match flag {
        Some(f) => Bound { value: T::zero(), degenerate: Some(f) },
        None => Bound::finite(T::from_count(n) / total),
    })
}

/// Lower bound on `E|θ − θ̂(X)|²`: `n²/(𝓙 + ∫𝓘 dπ)` (trace form).
pub fn van_trees_bound<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<Bound<T>> {
    let n = T::from_count(prior.dim());
    let (total, flag) = fisher_sum(prior, m, q)?;
    Ok(match flag {
        Some(f) => Bound { value: T::zero(), degenerate: Some(f) },
        None => Bound::finite(n * n / total),
    })
}

/// `(1/2πe)·exp((2/n)·h)`, the quantity Efroimovich bounds from below.
pub fn entropy_power<T: Real>(h: T, n: usize) -> T {
    (T::lit(2.0) * h / T::from_count(n)).exp() / (T::TAU() * T::E())
}

/// The one-dimensional log-concave bound without `𝓙(π)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LogConcave1d<T> {
    /// `E_π 𝓘(θ)`.
    pub expected_information: T,
    /// `(4/e²)/E𝓘`, a lower bound on `exp(2h(θ|X))`.
    pub bound: T,
    /// `Var(π) ≥ 1/E𝓘`.
    pub precondition_met: bool,
    /// `(4/e²)/(2πe·E𝓘)`: the mean-squared-error bound implied through the
    /// Gaussian maximum-entropy inequality.
    pub mse_max_entropy: T,
    /// `(4/e²)/E𝓘` read directly as a mean-squared-error bound.
    pub mse_stated_constant: T,
}

pub fn logconcave_1d_bound<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<LogConcave1d<T>> {
    if prior.dim() != 1 {
        return Err(Error::Domain(format!("the log-concave entropy bound needs n = 1, got n = {}", prior.dim())));
    }
    let e_i = average_fisher_information(m, prior, q)?.total;
    let c = T::lit(FOUR_OVER_E_SQUARED);
    let bound = c / e_i;
    Ok(LogConcave1d {
        expected_information: e_i,
        bound,
        precondition_met: prior.variance() >= T::one() / e_i,
        mse_max_entropy: bound / (T::TAU() * T::E()),
        mse_stated_constant: bound,
    })
}

/// `(n/2)·log(1 + snr)`.
pub fn gaussian_sequence_sharp<T: Real>(snr: T, n: usize) -> Result<T> {
    if !(snr >= T::zero()) {
        return Err(Error::Domain(format!("snr must be nonnegative, got {snr}")));
    }
    Ok(T::from_count(n) / T::lit(2.0) * snr.ln_1p())
}

/// `Var(π)/(n·σ²_eff)` for Gaussian-location models; `None` otherwise.
pub fn snr<T: Real>(prior: &LogConcavePrior<T>, m: &ParametricModel<T>) -> Option<T> {
    let (noise, repeats) = match m.kind() {
        crate::models::ModelKind::GaussianLocation { noise_variance, repeats } => (*noise_variance, *repeats),
        _ => return None,
    };
    Some(prior.p() * T::from_count(repeats) / noise)
}

/// `(k e² 𝓙(μ)/n)·exp((2/n)·h(S₁))` for `μ` with `Var(μ) = n`.
pub fn reverse_epi_rhs<T: Real>(mu: &DensityOnRn<T>, k: usize, q: &QuadratureSpec<T>) -> Result<Bound<T>> {
    let n = mu.dim();
    let var = variance(mu, q)?;
    if (var - T::from_count(n)).abs() > T::lit(1e-4) {
        return Err(Error::Domain(format!("reverse EPI needs Var(μ) = n = {n}, got {var}")));
    }
    let j = fisher_information_j(mu, q)?;
    if !j.is_finite() {
        return Ok(Bound { value: T::infinity(), degenerate: Some("degenerate: 𝓙(μ) = +∞".into()) });
    }
    let h1 = differential_entropy(mu, q)?;
    let nf = T::from_count(n);
    let value = T::from_count(k) * T::E() * T::E() * j / nf * (T::lit(2.0) * h1 / nf).exp();
    Ok(Bound::finite(value))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseEpiRow {
    pub k: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Reverse-EPI comparison over `k = 1..=k_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReverseEpiSweep {
    pub rows: Vec<ReverseEpiRow>,
    /// Smallest `k` at which the inequality holds.
    pub threshold: Option<usize>,
    /// Whether it holds for every tested `k` from the threshold on.
    pub persists: bool,
    pub tolerance: f64,
    pub degenerate: Option<String>,
}

/// Compares `exp((2/n)h(S_k))` from the convolution oracle with the reverse
/// EPI right-hand side, allowing `tolerance` absolute slack.
pub fn reverse_epi_sweep<T: Real>(
    mu: &DensityOnRn<T>,
    k_max: usize,
    grid: &ConvolutionGrid,
    q: &QuadratureSpec<T>,
    tolerance: f64,
) -> Result<ReverseEpiSweep> {
    let unit = reverse_epi_rhs(mu, 1, q)?;
    if let Some(flag) = unit.degenerate {
        return Ok(ReverseEpiSweep { rows: Vec::new(), threshold: None, persists: false, tolerance, degenerate: Some(flag) });
    }
    let n = mu.dim() as f64;
    let sums = iid_sum_entropies(mu, k_max, grid)?;
    let rows: Vec<ReverseEpiRow> = sums
        .entropies
        .iter()
        .enumerate()
        .map(|(i, &h)| {
            let k = i + 1;
            let lhs = (2.0 * h / n).exp();
            let rhs = k as f64 * unit.value.to_f64_lossy();
            ReverseEpiRow { k, lhs, rhs, holds: lhs <= rhs + tolerance }
        })
        .collect();
    let first = rows.iter().position(|r| r.holds);
    let persists = first.is_some_and(|i| rows[i..].iter().all(|r| r.holds));
    Ok(ReverseEpiSweep { threshold: first.map(|i| rows[i].k), rows, persists, tolerance, degenerate: None })
}

/// `1/𝓘(θ)`; informational, it constrains unbiased estimators only.
pub fn classical_crb<T: Real>(m: &ParametricModel<T>, theta: &[T], q: &QuadratureSpec<T>) -> Result<Bound<T>> {
    if m.theta_dim() != 1 {
        return Err(Error::Domain(format!("classical CRB is reported for n = 1, got n = {}", m.theta_dim())));
    }
    let i = model_fisher_information(m, theta, q)?;
    Ok(if i > T::zero() {
        Bound::finite(T::one() / i)
    } else {
        Bound { value: T::infinity(), degenerate: Some("𝓘(θ) = 0".into()) }
    })
}

#[cfg(test)]
mod tests;
