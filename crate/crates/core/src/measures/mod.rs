//! Densities on ℝⁿ and the information functionals defined on them.
//!
//! All functionals integrate over the density's support box with the
//! supplied [`QuadratureSpec`]. Log-densities are used throughout so that
//! ratios of densities never underflow; the score `∇ log ϱ` plays the role of
//! the density gradient (`∇ϱ = ϱ ∇ log ϱ`).

mod families;

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{QuadratureSpec, SupportBox};
use crate::scalar::Real;

/// Allowed deviation of a density's total mass from one.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Default seed of the convexity spot-check.
pub const CONVEXITY_SEED: u64 = 0x5eed_c0de;

pub type LogDensityFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
pub type ScoreFn<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// A probability density on ℝⁿ, given by its log-density and support box.
#[derive(Clone)]
pub struct DensityOnRn<T> {
    dim: usize,
    log_density: LogDensityFn<T>,
    score: Option<ScoreFn<T>>,
    support: SupportBox<T>,
    label: String,
}

impl<T: fmt::Debug> fmt::Debug for DensityOnRn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityOnRn")
            .field("label", &self.label)
            .field("dim", &self.dim)
            .field("support", &self.support)
            .field("analytic_score", &self.score.is_some())
            .finish()
    }
}

impl<T: Real> DensityOnRn<T> {
    pub fn new<F>(support: SupportBox<T>, log_density: F) -> Self
    where
        F: Fn(&[T]) -> T + Send + Sync + 'static,
    {
        Self {
            dim: support.dim(),
            log_density: Arc::new(log_density),
            score: None,
            support,
            label: String::from("custom"),
        }
    }

    /// Attaches an analytic score `x ↦ ∇ log ϱ(x)`.
    pub fn with_score<F>(mut self, score: F) -> Self
    where
        F: Fn(&[T]) -> Vec<T> + Send + Sync + 'static,
    {
        self.score = Some(Arc::new(score));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn support(&self) -> &SupportBox<T> {
        &self.support
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn has_analytic_score(&self) -> bool {
        self.score.is_some()
    }

    /// Natural log of the density; `-∞` beyond a hard face.
    pub fn log_density(&self, x: &[T]) -> T {
        for (a, &v) in self.support.axes.iter().zip(x) {
            if (a.lo_hard && v < a.lo) || (a.hi_hard && v > a.hi) {
                return T::neg_infinity();
            }
        }
        (self.log_density)(x)
    }

    pub fn density(&self, x: &[T]) -> T {
        self.log_density(x).exp()
    }

    /// `∇ log ϱ(x)`: analytic when available, else central differences with
    /// step `1e-5·(1 + |xᵢ|)`, one-sided next to a hard face.
    pub fn score(&self, x: &[T]) -> Vec<T> {
        if let Some(s) = &self.score {
            return s(x);
        }
        let mut probe = x.to_vec();
        let center = self.log_density(x);
        (0..self.dim)
            .map(|i| {
                let h = T::lit(1e-5) * (T::one() + x[i].abs());
                probe[i] = x[i] + h;
                let up = self.log_density(&probe);
                probe[i] = x[i] - h;
                let down = self.log_density(&probe);
                probe[i] = x[i];
                match (up.is_finite(), down.is_finite()) {
                    (true, true) => (up - down) / (h + h),
                    (true, false) => (up - center) / h,
                    (false, true) => (center - down) / h,
                    (false, false) => T::zero(),
                }
            })
            .collect()
    }

    /// Law of `X + c` for `X` with this density.
    pub fn translated(&self, c: &[T]) -> Self {
        let shift: Vec<T> = c.to_vec();
        let inner = self.clone();
        let s2 = shift.clone();
        let inner2 = self.clone();
        let mut out = Self::new(self.support.translated(c), move |x: &[T]| {
            let y: Vec<T> = x.iter().zip(&shift).map(|(&a, &b)| a - b).collect();
            inner.log_density(&y)
        })
        .with_label(format!("{}+shift", self.label));
        out.score = Some(Arc::new(move |x: &[T]| {
            let y: Vec<T> = x.iter().zip(&s2).map(|(&a, &b)| a - b).collect();
            inner2.score(&y)
        }));
        out
    }

    /// Law of `s·X` for `s > 0`: density `s⁻ⁿ ϱ(x/s)`.
    pub fn scaled(&self, s: T) -> Self {
        let inner = self.clone();
        let inner2 = self.clone();
        let log_jac = T::from_count(self.dim) * s.ln();
        let mut out = Self::new(self.support.scaled(s), move |x: &[T]| {
            let y: Vec<T> = x.iter().map(|&a| a / s).collect();
            inner.log_density(&y) - log_jac
        })
        .with_label(format!("{}*scale", self.label));
        out.score = Some(Arc::new(move |x: &[T]| {
            let y: Vec<T> = x.iter().map(|&a| a / s).collect();
            inner2.score(&y).into_iter().map(|g| g / s).collect()
        }));
        out
    }
}

fn mass_error<T: Real>(mass: T) -> Result<()> {
    let missing = (mass - T::one()).abs().to_f64_lossy();
    if !(missing <= MASS_TOLERANCE) {
        return Err(Error::IntegrationDomain { missing_mass: missing });
    }
    Ok(())
}

/// `∫ ϱ` over the quadrature domain.
pub fn total_mass<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>) -> Result<T> {
    let grid = q.grid(d.support())?;
    Ok(grid.integrate(|x| d.density(x)))
}

/// Checks the normalization invariant, returning the computed mass.
pub fn check_normalization<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>) -> Result<T> {
    let m = total_mass(d, q)?;
    mass_error(m)?;
    Ok(m)
}

/// Mean of the density.
pub fn barycenter<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>) -> Result<Vec<T>> {
    let n = d.dim();
    let grid = q.grid(d.support())?;
    let sums = grid.integrate_many(n + 1, |x, out| {
        let p = d.density(x);
        out[0] = p;
        for i in 0..n {
            out[i + 1] = x[i] * p;
        }
    });
    mass_error(sums[0])?;
    Ok(sums[1..].iter().map(|&s| s / sums[0]).collect())
}

/// `Var(μ) = inf_c ∫|x−c|² dμ`, attained at the barycenter; equals the trace
/// of the covariance matrix.
pub fn variance<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>) -> Result<T> {
    let (_, v) = barycenter_and_variance(d, q)?;
    Ok(v)
}

pub fn barycenter_and_variance<T: Real>(
    d: &DensityOnRn<T>,
    q: &QuadratureSpec<T>,
) -> Result<(Vec<T>, T)> {
    let b = barycenter(d, q)?;
    Ok((b.clone(), second_moment_about(d, q, &b)?))
}

/// `∫|x−c|² dμ` for a given center `c`.
pub fn second_moment_about<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>, c: &[T]) -> Result<T> {
    let grid = q.grid(d.support())?;
    let sums = grid.integrate_many(2, |x, out| {
        let p = d.density(x);
        out[0] = p;
        out[1] = crate::scalar::dist_sq(x, c) * p;
    });
    mass_error(sums[0])?;
    Ok(sums[1] / sums[0])
}

/// Information-theoretic Fisher information `𝓙(μ) = ∫|∇ϱ|²/ϱ`; `+∞` when the
/// density jumps at a hard face.
pub fn fisher_information_j<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>) -> Result<T> {
    let target = q.domain.as_ref().unwrap_or(d.support());
    if target.has_hard_face() {
        check_normalization(d, q)?;
        return Ok(T::infinity());
    }
    let grid = q.grid(d.support())?;
    let sums = grid.integrate_many(2, |x, out| {
        let p = d.density(x);
        out[0] = p;
        if p > T::zero() {
            out[1] = d.score(x).iter().fold(T::zero(), |a, &g| a + g * g) * p;
        }
    });
    mass_error(sums[0])?;
    Ok(sums[1])
}

/// Differential entropy `−∫ ϱ log ϱ` in nats.
pub fn differential_entropy<T: Real>(d: &DensityOnRn<T>, q: &QuadratureSpec<T>) -> Result<T> {
    let grid = q.grid(d.support())?;
    let sums = grid.integrate_many(2, |x, out| {
        let l = d.log_density(x);
        if l.is_finite() {
            let p = l.exp();
            out[0] = p;
            out[1] = -p * l;
        }
    });
    mass_error(sums[0])?;
    Ok(sums[1])
}

/// Relative entropy `D_μ(ν) = ∫ h log h dμ` with `h = dν/dμ`.
pub fn relative_entropy<T: Real>(
    nu: &DensityOnRn<T>,
    mu: &DensityOnRn<T>,
    q: &QuadratureSpec<T>,
) -> Result<T> {
    check_dims(nu, mu)?;
    let grid = q.grid(nu.support())?;
    let violation = std::sync::atomic::AtomicBool::new(false);
    let sums = grid.integrate_many(2, |x, out| {
        let ln = nu.log_density(x);
        if !ln.is_finite() {
            return;
        }
        let lm = mu.log_density(x);
        if !lm.is_finite() {
            violation.store(true, std::sync::atomic::Ordering::Relaxed);
            return;
        }
        let p = ln.exp();
        out[0] = p;
        out[1] = p * (ln - lm);
    });
    if violation.into_inner() {
        return Err(Error::AbsoluteContinuity(format!(
            "{} has mass where {} vanishes",
            nu.label(),
            mu.label()
        )));
    }
    mass_error(sums[0])?;
    Ok(sums[1])
}

/// Whether `h = dν/dμ` jumps inside the support of `μ`: a hard face of `ν`
/// that `μ` extends beyond.
fn ratio_jumps_inside<T: Real>(nu: &DensityOnRn<T>, mu: &DensityOnRn<T>) -> bool {
    nu.support().axes.iter().zip(&mu.support().axes).any(|(a, b)| {
        let lo_inside = a.lo_hard && !(b.lo_hard && b.lo >= a.lo);
        let hi_inside = a.hi_hard && !(b.hi_hard && b.hi <= a.hi);
        lo_inside || hi_inside
    })
}

/// Relative Fisher information `I_μ(ν) = ∫|∇h|²/h dμ = ∫|∇ log ν − ∇ log μ|² dν`;
/// `+∞` when `h` is not weakly differentiable.
pub fn relative_fisher_information<T: Real>(
    nu: &DensityOnRn<T>,
    mu: &DensityOnRn<T>,
    q: &QuadratureSpec<T>,
) -> Result<T> {
    check_dims(nu, mu)?;
    let grid = q.grid(nu.support())?;
    let violation = std::sync::atomic::AtomicBool::new(false);
    let sums = grid.integrate_many(2, |x, out| {
        let ln = nu.log_density(x);
        if !ln.is_finite() {
            return;
        }
        if !mu.log_density(x).is_finite() {
            violation.store(true, std::sync::atomic::Ordering::Relaxed);
            return;
        }
        let p = ln.exp();
        out[0] = p;
        let (sn, sm) = (nu.score(x), mu.score(x));
        out[1] = p * sn.iter().zip(&sm).fold(T::zero(), |a, (&u, &v)| a + (u - v) * (u - v));
    });
    if violation.into_inner() {
        return Err(Error::AbsoluteContinuity(format!(
            "{} has mass where {} vanishes",
            nu.label(),
            mu.label()
        )));
    }
    mass_error(sums[0])?;
    if ratio_jumps_inside(nu, mu) {
        return Ok(T::infinity());
    }
    Ok(sums[1])
}

fn check_dims<T: Real>(nu: &DensityOnRn<T>, mu: &DensityOnRn<T>) -> Result<()> {
    if nu.dim() != mu.dim() {
        return Err(Error::Domain(format!("dimension mismatch: {} vs {}", nu.dim(), mu.dim())));
    }
    Ok(())
}

/// Where an LSI constant comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LsiProvenance {
    /// Standard Gaussian, constant exactly one.
    GaussianStandard,
    /// `Hess V ≥ K·Iₙ` with `K > 0`, constant `1/K`.
    BakryEmery,
    UserAsserted,
}

/// A measure `μ` together with a constant `C` such that `μ` satisfies `LSI(C)`.
#[derive(Clone, Debug)]
pub struct ReferenceMeasure<T> {
    density: DensityOnRn<T>,
    lsi_constant: T,
    provenance: LsiProvenance,
    curvature: Option<T>,
}

impl<T: Real> ReferenceMeasure<T> {
    pub fn gaussian_standard(dim: usize) -> Self {
        Self {
            density: families::standard_gaussian(dim),
            lsi_constant: T::one(),
            provenance: LsiProvenance::GaussianStandard,
            curvature: Some(T::one()),
        }
    }

    /// `density = e^{−V}` with certified `Hess V ≥ k·Iₙ`, `k > 0`.
    pub fn bakry_emery(density: DensityOnRn<T>, k: T) -> Result<Self> {
        if !(k > T::zero()) || !k.is_finite() {
            return Err(Error::Domain(format!("Bakry–Émery curvature must be positive, got {k}")));
        }
        Ok(Self {
            density,
            lsi_constant: T::one() / k,
            provenance: LsiProvenance::BakryEmery,
            curvature: Some(k),
        })
    }

    pub fn user_asserted(density: DensityOnRn<T>, lsi_constant: T) -> Result<Self> {
        if !(lsi_constant > T::zero()) {
            return Err(Error::Domain(format!("LSI constant must be positive, got {lsi_constant}")));
        }
        Ok(Self { density, lsi_constant, provenance: LsiProvenance::UserAsserted, curvature: None })
    }

    pub fn density(&self) -> &DensityOnRn<T> {
        &self.density
    }

    pub fn lsi_constant(&self) -> T {
        self.lsi_constant
    }

    pub fn provenance(&self) -> LsiProvenance {
        self.provenance
    }

    /// The certified curvature `K` behind a Bakry–Émery constant.
    pub fn curvature(&self) -> Option<T> {
        self.curvature
    }
}

/// Both sides of `D_μ(ν) ≤ (C/2)·I_μ(ν)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LsiCheck<T> {
    pub lhs: T,
    pub rhs: T,
    pub satisfied: bool,
}

/// Evaluates the log-Sobolev inequality of `mu` at `nu`.
pub fn lsi_check<T: Real>(
    mu: &ReferenceMeasure<T>,
    nu: &DensityOnRn<T>,
    q: &QuadratureSpec<T>,
) -> Result<LsiCheck<T>> {
    let lhs = relative_entropy(nu, mu.density(), q)?;
    let rhs = mu.lsi_constant() / T::lit(2.0) * relative_fisher_information(nu, mu.density(), q)?;
    Ok(LsiCheck { lhs, rhs, satisfied: lhs <= rhs + T::lit(1e-6) })
}

/// A log-concave prior `e^{−V}` with certified `Hess V ≥ K·Iₙ` and cached
/// moments.
#[derive(Clone, Debug)]
pub struct LogConcavePrior<T> {
    base: DensityOnRn<T>,
    k: T,
    barycenter: Vec<T>,
    variance: T,
    fisher_j: T,
}

impl<T: Real> LogConcavePrior<T> {
    /// Computes the cached moments and checks the Brascamp–Lieb bound
    /// `K·Var/n ≤ 1` together with a convexity spot-check of `V`.
    pub fn new(base: DensityOnRn<T>, k: T, q: &QuadratureSpec<T>) -> Result<Self> {
        if !(k >= T::zero()) || !k.is_finite() {
            return Err(Error::Domain(format!("curvature K must be finite and nonnegative, got {k}")));
        }
        let q = q.without_domain();
        let (barycenter, variance) = barycenter_and_variance(&base, &q)?;
        let fisher_j = fisher_information_j(&base, &q)?;
        let prior = Self { base, k, barycenter, variance, fisher_j };
        let kp = prior.kp();
        if kp > T::one() + T::lit(1e-9) {
            return Err(Error::InvariantViolation(format!(
                "Brascamp–Lieb bound violated: K·Var/n = {kp} > 1"
            )));
        }
        prior.verify_convexity(100, CONVEXITY_SEED)?;
        Ok(prior)
    }

    pub fn base(&self) -> &DensityOnRn<T> {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn k(&self) -> T {
        self.k
    }

    pub fn barycenter(&self) -> &[T] {
        &self.barycenter
    }

    /// `Var(π)` (trace convention).
    pub fn variance(&self) -> T {
        self.variance
    }

    /// `P = Var(π)/n`.
    pub fn p(&self) -> T {
        self.variance / T::from_count(self.dim())
    }

    pub fn kp(&self) -> T {
        self.k * self.p()
    }

    /// `𝓙(π)`, possibly `+∞`.
    pub fn fisher_j(&self) -> T {
        self.fisher_j
    }

    pub fn potential(&self, x: &[T]) -> T {
        -self.base.log_density(x)
    }

    /// Midpoint test of `K`-strong convexity of `V` on random segments inside
    /// the support: `V((a+b)/2) ≤ (V(a)+V(b))/2 − K|a−b|²/8`.
    pub fn verify_convexity(&self, segments: usize, seed: u64) -> Result<()> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let axes = &self.base.support().axes;
        let eps = T::epsilon().max(T::lit(1e-12));
        let tol = T::lit(64.0) * eps + T::lit(1e-9);
        let sample = |rng: &mut ChaCha8Rng| -> Vec<T> {
            axes.iter()
                .map(|a| {
                    let u: f64 = rng.random();
                    a.lo + (a.hi - a.lo) * T::lit(u)
                })
                .collect()
        };
        let eighth = T::lit(0.125);
        let half = T::lit(0.5);
        for _ in 0..segments {
            let a = sample(&mut rng);
            let b = sample(&mut rng);
            let mid: Vec<T> = a.iter().zip(&b).map(|(&x, &y)| (x + y) * half).collect();
            let (va, vb, vm) = (self.potential(&a), self.potential(&b), self.potential(&mid));
            if !(va.is_finite() && vb.is_finite()) {
                continue;
            }
            let chord = (va + vb) * half - self.k * crate::scalar::dist_sq(&a, &b) * eighth;
            let scale = T::one() + va.abs() + vb.abs();
            if vm > chord + tol * scale {
                return Err(Error::InvariantViolation(format!(
                    "potential of {} fails the {}-convexity midpoint test ({} > {})",
                    self.base.label(),
                    self.k,
                    vm,
                    chord
                )));
            }
        }
        Ok(())
    }
}

pub use families::{
    exponential, gaussian, isotropic_gaussian, laplace, normalized_from_potential, product, quartic,
    standard_gaussian, uniform, uniform_box, QUARTIC_NORMALIZER,
};

#[cfg(test)]
mod tests;
