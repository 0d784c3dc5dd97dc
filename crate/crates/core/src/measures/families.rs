//! Closed-form densities and log-concave priors used throughout the crate.

use crate::error::{Error, Result};
use crate::quadrature::{Axis, QuadratureSpec, SupportBox};
use crate::scalar::Real;

use super::{DensityOnRn, LogConcavePrior};

/// Half-width of Gaussian support boxes, in standard deviations.
pub(crate) const GAUSSIAN_HALF_WIDTH: f64 = 7.0;
/// Exponential-tail truncation in units of the scale: `e^{−24} < 10⁻¹⁰`.
pub(crate) const EXPONENTIAL_TAIL: f64 = 24.0;
/// `∫ e^{−x⁴} dx = 2Γ(5/4)`.
pub const QUARTIC_NORMALIZER: f64 = 1.812_804_954_110_954_2;
const QUARTIC_HALF_WIDTH: f64 = 2.5;

/// `N(mean, variance)` on ℝ.
pub fn gaussian<T: Real>(mean: T, variance: T) -> DensityOnRn<T> {
    isotropic_gaussian(&[mean], variance)
}

/// `N(mean, variance·Iₙ)`.
pub fn isotropic_gaussian<T: Real>(mean: &[T], variance: T) -> DensityOnRn<T> {
    assert!(variance > T::zero(), "Gaussian variance must be positive");
    let n = mean.len();
    let sd = variance.sqrt();
    let half = T::lit(GAUSSIAN_HALF_WIDTH) * sd;
    let support = SupportBox::new(mean.iter().map(|&m| Axis::soft(m - half, m + half)).collect());
    let log_norm = -T::from_count(n) / T::lit(2.0) * (T::TAU() * variance).ln();
    let m1 = mean.to_vec();
    let m2 = mean.to_vec();
    DensityOnRn::new(support, move |x: &[T]| {
        log_norm - crate::scalar::dist_sq(x, &m1) / (T::lit(2.0) * variance)
    })
    .with_score(move |x: &[T]| x.iter().zip(&m2).map(|(&a, &b)| -(a - b) / variance).collect())
    .with_label(format!("gaussian(var={variance})"))
}

/// Standard Gaussian on ℝⁿ.
pub fn standard_gaussian<T: Real>(dim: usize) -> DensityOnRn<T> {
    isotropic_gaussian(&vec![T::zero(); dim], T::one()).with_label("standard-gaussian")
}

/// Laplace density `e^{−|x−loc|/b}/(2b)`.
pub fn laplace<T: Real>(loc: T, scale: T) -> DensityOnRn<T> {
    assert!(scale > T::zero(), "Laplace scale must be positive");
    let half = T::lit(EXPONENTIAL_TAIL) * scale;
    let support =
        SupportBox::new(vec![Axis::soft(loc - half, loc + half).with_breaks(vec![loc])]);
    let log_norm = -(T::lit(2.0) * scale).ln();
    DensityOnRn::new(support, move |x: &[T]| log_norm - (x[0] - loc).abs() / scale)
        .with_score(move |x: &[T]| {
            let d = x[0] - loc;
            let s = if d > T::zero() {
                -T::one()
            } else if d < T::zero() {
                T::one()
            } else {
                T::zero()
            };
            vec![s / scale]
        })
        .with_label(format!("laplace(scale={scale})"))
}

/// Uniform density on `[a, b]`.
pub fn uniform<T: Real>(a: T, b: T) -> DensityOnRn<T> {
    uniform_box(&[a], &[b])
}

/// Uniform density on a box.
pub fn uniform_box<T: Real>(lo: &[T], hi: &[T]) -> DensityOnRn<T> {
    let support =
        SupportBox::new(lo.iter().zip(hi).map(|(&a, &b)| Axis::hard(a, b)).collect::<Vec<_>>());
    let log_value = -support.volume().ln();
    let n = lo.len();
    DensityOnRn::new(support, move |_x: &[T]| log_value)
        .with_score(move |_x: &[T]| vec![T::zero(); n])
        .with_label("uniform")
}

/// Exponential density `rate·e^{−rate·x}` on `[0, ∞)`.
pub fn exponential<T: Real>(rate: T) -> DensityOnRn<T> {
    assert!(rate > T::zero(), "exponential rate must be positive");
    let support = SupportBox::new(vec![Axis {
        lo: T::zero(),
        hi: T::lit(EXPONENTIAL_TAIL) / rate,
        lo_hard: true,
        hi_hard: false,
        breaks: Vec::new(),
    }]);
    let log_rate = rate.ln();
    DensityOnRn::new(support, move |x: &[T]| log_rate - rate * x[0])
        .with_score(move |_x: &[T]| vec![-rate])
        .with_label(format!("exponential(rate={rate})"))
}

/// `e^{−x⁴}/Z` on ℝ.
pub fn quartic<T: Real>() -> DensityOnRn<T> {
    let half = T::lit(QUARTIC_HALF_WIDTH);
    let log_norm = -T::lit(QUARTIC_NORMALIZER).ln();
    DensityOnRn::new(SupportBox::new(vec![Axis::soft(-half, half)]), move |x: &[T]| {
        log_norm - x[0].powi(4)
    })
    .with_score(|x: &[T]| vec![-T::lit(4.0) * x[0].powi(3)])
    .with_label("quartic")
}

/// Product of independent factors; coordinates are concatenated in order.
pub fn product<T: Real>(factors: Vec<DensityOnRn<T>>) -> DensityOnRn<T> {
    let axes: Vec<Axis<T>> = factors.iter().flat_map(|f| f.support().axes.clone()).collect();
    let dims: Vec<usize> = factors.iter().map(|f| f.dim()).collect();
    let label = factors.iter().map(|f| f.label().to_string()).collect::<Vec<_>>().join("*");
    let f1 = factors.clone();
    let d1 = dims.clone();
    DensityOnRn::new(SupportBox::new(axes), move |x: &[T]| {
        let mut off = 0;
        let mut acc = T::zero();
        for (f, &d) in f1.iter().zip(&d1) {
            acc = acc + f.log_density(&x[off..off + d]);
            off += d;
        }
        acc
    })
    .with_score(move |x: &[T]| {
        let mut off = 0;
        let mut out = Vec::with_capacity(x.len());
        for (f, &d) in factors.iter().zip(&dims) {
            out.extend(f.score(&x[off..off + d]));
            off += d;
        }
        out
    })
    .with_label(label)
}

/// Normalizes `e^{−V}` on `support` numerically; returns the density and
/// `log Z`.
pub fn normalized_from_potential<T, F>(
    support: SupportBox<T>,
    potential: F,
    q: &QuadratureSpec<T>,
) -> Result<(DensityOnRn<T>, T)>
where
    T: Real,
    F: Fn(&[T]) -> T + Send + Sync + 'static,
{
    let grid = q.without_domain().grid(&support)?;
    // shift by the grid minimum of V to keep exp in range
    let vmin = grid
        .iter()
        .map(|(x, _)| potential(x))
        .filter(|v| v.is_finite())
        .fold(T::infinity(), |a, b| a.min(b));
    if !vmin.is_finite() {
        return Err(Error::Domain("potential is infinite on the whole support".into()));
    }
    let z = grid.integrate(|x| (vmin - potential(x)).exp());
    if !(z > T::zero()) || !z.is_finite() {
        return Err(Error::Domain("potential does not define a normalizable density".into()));
    }
    let log_z = z.ln() - vmin;
    let density = DensityOnRn::new(support, move |x: &[T]| -potential(x) - log_z);
    Ok((density, log_z))
}

impl<T: Real> LogConcavePrior<T> {
    /// `N(mean, variance·Iₙ)`, certified with `K = 1/variance`.
    pub fn gaussian(mean: &[T], variance: T) -> Result<Self> {
        Self::new(isotropic_gaussian(mean, variance), T::one() / variance, &QuadratureSpec::default())
    }

    pub fn laplace(loc: T, scale: T) -> Result<Self> {
        Self::new(laplace(loc, scale), T::zero(), &QuadratureSpec::default())
    }

    pub fn uniform(a: T, b: T) -> Result<Self> {
        Self::new(uniform(a, b), T::zero(), &QuadratureSpec::default())
    }

    pub fn uniform_box(lo: &[T], hi: &[T]) -> Result<Self> {
        Self::new(uniform_box(lo, hi), T::zero(), &QuadratureSpec::default())
    }

    pub fn exponential(rate: T) -> Result<Self> {
        Self::new(exponential(rate), T::zero(), &QuadratureSpec::default())
    }

    pub fn quartic() -> Result<Self> {
        Self::new(quartic(), T::zero(), &QuadratureSpec::default())
    }
}
