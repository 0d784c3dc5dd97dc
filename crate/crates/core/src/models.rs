//! Dominated parametric families `dP_θ(x) = f(x;θ) dλ(x)`.
//!
//! Observation spaces are either a box in ℝᵈ with Lebesgue measure or a
//! finite point set with counting measure. Models carry their θ-score
//! `∇_θ log f` (analytic or by central differences) and a `cover` map that
//! returns an observation box holding the mass of `P_θ` for every θ in a
//! given parameter box.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::LogConcavePrior;
use crate::quadrature::{Axis, Grid, QuadratureSpec, SupportBox};
use crate::scalar::{norm, CompensatedSum, Real};

pub type ModelLogDensityFn<T> = Arc<dyn Fn(&[T], &[T]) -> T + Send + Sync>;
pub type ModelScoreFn<T> = Arc<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>;
pub type CoverFn<T> = Arc<dyn Fn(&[T], &[T]) -> SupportBox<T> + Send + Sync>;

/// Regularity check threshold on `‖∫∇_θ f dλ‖`.
pub const REGULARITY_TOLERANCE: f64 = 1e-5;
/// Largest joint observation dimension integrated directly; replicated
/// models beyond it use additivity over replicas.
const MAX_DIRECT_OBS_DIM: usize = 3;
const GAUSSIAN_HALF_WIDTH: f64 = 7.0;
const EXPONENTIAL_TAIL: f64 = 24.0;

/// Observation space with its dominating measure.
#[derive(Clone)]
pub enum ObsSpace<T> {
    /// Box in ℝᵈ, Lebesgue measure. `cover(lo, hi)` is a box holding the mass
    /// of `P_θ` for all θ in `[lo, hi]`.
    Continuous { dim: usize, cover: CoverFn<T> },
    /// Finite support, counting measure.
    Discrete { points: Vec<Vec<T>> },
}

impl<T: Real> ObsSpace<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::Continuous { dim, .. } => *dim,
            Self::Discrete { points } => points.first().map_or(0, |p| p.len()),
        }
    }
}

/// Registry family of a model, with its defining parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum ModelKind<T> {
    GaussianLocation { noise_variance: T, repeats: usize },
    BernoulliMean,
    LaplaceLocation { scale: T },
    Constant { noise_variance: T },
    TruncatedGaussianWindow,
    Custom,
}

#[derive(Clone)]
pub struct ParametricModel<T> {
    theta_dim: usize,
    obs: ObsSpace<T>,
    log_density: ModelLogDensityFn<T>,
    theta_score: Option<ModelScoreFn<T>>,
    label: String,
    kind: ModelKind<T>,
    parameter_domain: Option<SupportBox<T>>,
    fisher_constant_in_theta: bool,
    resolution: Option<T>,
    replicas: Option<(Box<ParametricModel<T>>, usize)>,
}

impl<T: fmt::Debug> fmt::Debug for ParametricModel<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ParametricModel")
            .field("label", &self.label)
            .field("theta_dim", &self.theta_dim)
            .field("kind", &self.kind)
            .finish()
    }
}

impl<T: Real> ParametricModel<T> {
    pub fn new<F>(theta_dim: usize, obs: ObsSpace<T>, log_density: F) -> Self
    where
        F: Fn(&[T], &[T]) -> T + Send + Sync + 'static,
    {
        Self {
            theta_dim,
            obs,
            log_density: Arc::new(log_density),
            theta_score: None,
            label: "custom".into(),
            kind: ModelKind::Custom,
            parameter_domain: None,
            fisher_constant_in_theta: false,
            resolution: None,
            replicas: None,
        }
    }

    pub fn with_theta_score<F>(mut self, score: F) -> Self
    where
        F: Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static,
    {
        self.theta_score = Some(Arc::new(score));
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Open parameter domain; priors must be supported inside it.
    pub fn with_parameter_domain(mut self, domain: SupportBox<T>) -> Self {
        self.parameter_domain = Some(domain);
        self
    }

    /// Declares `𝓘(θ)` constant in θ (location families, constant channels).
    pub fn with_constant_fisher(mut self) -> Self {
        self.fisher_constant_in_theta = true;
        self
    }

    /// Length scale on which `f(x;θ)` varies in `x` and θ; oracles keep their
    /// quadrature panels narrower than a few multiples of it.
    pub fn with_resolution(mut self, r: T) -> Self {
        self.resolution = Some(r);
        self
    }

    fn with_kind(mut self, kind: ModelKind<T>) -> Self {
        self.kind = kind;
        self
    }

    pub fn theta_dim(&self) -> usize {
        self.theta_dim
    }

    pub fn obs_space(&self) -> &ObsSpace<T> {
        &self.obs
    }

    pub fn obs_dim(&self) -> usize {
        self.obs.dim()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn kind(&self) -> &ModelKind<T> {
        &self.kind
    }

    pub fn resolution(&self) -> Option<T> {
        self.resolution
    }

    pub fn parameter_domain(&self) -> Option<&SupportBox<T>> {
        self.parameter_domain.as_ref()
    }

    pub fn fisher_constant_in_theta(&self) -> bool {
        self.fisher_constant_in_theta
    }

    /// Noise variance of Gaussian-location models, used for `snr`.
    pub fn noise_variance(&self) -> Option<T> {
        match self.kind {
            ModelKind::GaussianLocation { noise_variance, .. } => Some(noise_variance),
            _ => None,
        }
    }

    pub fn log_density(&self, x: &[T], theta: &[T]) -> T {
        (self.log_density)(x, theta)
    }

    /// `f(x;θ)`.
    pub fn density(&self, x: &[T], theta: &[T]) -> T {
        self.log_density(x, theta).exp()
    }

    /// `∇_θ log f(x;θ)`: analytic when available, else central differences
    /// with step `1e-6·(1 + |θᵢ|)`.
    pub fn theta_score(&self, x: &[T], theta: &[T]) -> Result<Vec<T>> {
        if let Some(s) = &self.theta_score {
            return Ok(s(x, theta));
        }
        let mut probe = theta.to_vec();
        let mut out = Vec::with_capacity(self.theta_dim);
        for i in 0..self.theta_dim {
            let h = T::lit(1e-6) * (T::one() + theta[i].abs());
            probe[i] = theta[i] + h;
            let up = self.log_density(x, &probe);
            probe[i] = theta[i] - h;
            let down = self.log_density(x, &probe);
            probe[i] = theta[i];
            if !(up.is_finite() && down.is_finite()) {
                return Err(Error::Evaluation(format!(
                    "finite-difference θ-score of {} unstable: density below 1e-300 near x",
                    self.label
                )));
            }
            out.push((up - down) / (h + h));
        }
        Ok(out)
    }

    /// Observation box holding the mass of `P_θ` for θ in `[lo, hi]`.
    pub fn obs_cover(&self, lo: &[T], hi: &[T]) -> Option<SupportBox<T>> {
        match &self.obs {
            ObsSpace::Continuous { cover, .. } => Some(cover(lo, hi)),
            ObsSpace::Discrete { .. } => None,
        }
    }

    fn check_theta(&self, theta: &[T]) -> Result<()> {
        if theta.len() != self.theta_dim {
            return Err(Error::Domain(format!(
                "θ has dimension {}, model {} expects {}",
                theta.len(),
                self.label,
                self.theta_dim
            )));
        }
        if let Some(dom) = &self.parameter_domain {
            let inside = dom.axes.iter().zip(theta).all(|(a, &t)| t > a.lo && t < a.hi);
            if !inside {
                return Err(Error::Domain(format!("θ outside the parameter domain of {}", self.label)));
            }
        }
        Ok(())
    }

    /// Model for the parameter `θ' = s·θ`: `f'(x;θ') = f(x;θ'/s)`.
    pub fn rescaled(&self, s: T) -> Self {
        let inner = self.clone();
        let inner_score = self.clone();
        let inv = T::one() / s;
        let obs = match &self.obs {
            ObsSpace::Continuous { dim, cover } => {
                let cover = cover.clone();
                ObsSpace::Continuous {
                    dim: *dim,
                    cover: Arc::new(move |lo: &[T], hi: &[T]| {
                        let l: Vec<T> = lo.iter().map(|&v| v * inv).collect();
                        let h: Vec<T> = hi.iter().map(|&v| v * inv).collect();
                        cover(&l, &h)
                    }),
                }
            }
            d @ ObsSpace::Discrete { .. } => d.clone(),
        };
        let mut out = Self::new(self.theta_dim, obs, move |x: &[T], th: &[T]| {
            let t: Vec<T> = th.iter().map(|&v| v * inv).collect();
            inner.log_density(x, &t)
        })
        .with_theta_score(move |x: &[T], th: &[T]| {
            let t: Vec<T> = th.iter().map(|&v| v * inv).collect();
            inner_score
                .theta_score(x, &t)
                .map(|g| g.into_iter().map(|v| v * inv).collect())
                .unwrap_or_else(|_| vec![T::nan(); t.len()])
        })
        .with_label(format!("{}@scale", self.label));
        out.parameter_domain = self.parameter_domain.as_ref().map(|d| d.scaled(s));
        out.fisher_constant_in_theta = self.fisher_constant_in_theta;
        out.resolution = self.resolution.map(|r| r * s);
        out
    }

    /// `m` conditionally independent replicas of the observation.
    pub fn replicate(base: Self, m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("replica count must be positive".into()));
        }
        if m == 1 {
            return Ok(base);
        }
        let d = base.obs_dim();
        let obs = match &base.obs {
            ObsSpace::Continuous { cover, .. } => {
                let cover = cover.clone();
                ObsSpace::Continuous {
                    dim: d * m,
                    cover: Arc::new(move |lo: &[T], hi: &[T]| {
                        let one = cover(lo, hi);
                        SupportBox::new((0..m).flat_map(|_| one.axes.clone()).collect())
                    }),
                }
            }
            ObsSpace::Discrete { points } => {
                let mut all: Vec<Vec<T>> = vec![Vec::new()];
                for _ in 0..m {
                    all = all
                        .into_iter()
                        .flat_map(|prefix| {
                            points.iter().map(move |p| {
                                let mut v = prefix.clone();
                                v.extend_from_slice(p);
                                v
                            })
                        })
                        .collect();
                }
                ObsSpace::Discrete { points: all }
            }
        };
        let b1 = base.clone();
        let b2 = base.clone();
        let mut out = Self::new(base.theta_dim, obs, move |x: &[T], th: &[T]| {
            x.chunks(d).fold(T::zero(), |acc, xr| acc + b1.log_density(xr, th))
        })
        .with_theta_score(move |x: &[T], th: &[T]| {
            let mut acc = vec![T::zero(); th.len()];
            for xr in x.chunks(d) {
                match b2.theta_score(xr, th) {
                    Ok(g) => acc.iter_mut().zip(g).for_each(|(a, v)| *a = *a + v),
                    Err(_) => return vec![T::nan(); th.len()],
                }
            }
            acc
        })
        .with_label(format!("{}x{m}", base.label));
        out.kind = match &base.kind {
            ModelKind::GaussianLocation { noise_variance, repeats } => {
                ModelKind::GaussianLocation { noise_variance: *noise_variance, repeats: repeats * m }
            }
            _ => ModelKind::Custom,
        };
        out.parameter_domain = base.parameter_domain.clone();
        out.fisher_constant_in_theta = base.fisher_constant_in_theta;
        out.resolution = base.resolution.map(|r| r / T::from_count(m).sqrt());
        out.replicas = Some((Box::new(base), m));
        Ok(out)
    }
}

/// Gaussian location family `X = θ + Z`, `Z ∼ N(0, σ²Iₙ)`, observed
/// `m_repeats` times independently.
pub fn make_gaussian_location<T: Real>(noise_variance: T, n: usize, m_repeats: usize) -> Result<ParametricModel<T>> {
    if !(noise_variance > T::zero()) {
        return Err(Error::Domain(format!("noise variance must be positive, got {noise_variance}")));
    }
    let sd = noise_variance.sqrt();
    let half = T::lit(GAUSSIAN_HALF_WIDTH) * sd;
    let log_norm = -T::from_count(n) / T::lit(2.0) * (T::TAU() * noise_variance).ln();
    let two_var = T::lit(2.0) * noise_variance;
    let base = ParametricModel::new(
        n,
        ObsSpace::Continuous {
            dim: n,
            cover: Arc::new(move |lo: &[T], hi: &[T]| {
                SupportBox::new(lo.iter().zip(hi).map(|(&l, &h)| Axis::soft(l - half, h + half)).collect())
            }),
        },
        move |x: &[T], th: &[T]| log_norm - crate::scalar::dist_sq(x, th) / two_var,
    )
    .with_theta_score(move |x: &[T], th: &[T]| {
        x.iter().zip(th).map(|(&a, &b)| (a - b) / noise_variance).collect()
    })
    .with_label("gaussian-location")
    .with_kind(ModelKind::GaussianLocation { noise_variance, repeats: 1 })
    .with_constant_fisher()
    .with_resolution(sd);
    ParametricModel::replicate(base, m_repeats)
}

/// Bernoulli family with mean parameter θ ∈ (0, 1), counting measure on {0, 1}.
pub fn make_bernoulli_mean<T: Real>() -> ParametricModel<T> {
    ParametricModel::new(
        1,
        ObsSpace::Discrete { points: vec![vec![T::zero()], vec![T::one()]] },
        |x: &[T], th: &[T]| {
            if x[0] > T::lit(0.5) {
                th[0].ln()
            } else {
                (T::one() - th[0]).ln()
            }
        },
    )
    .with_theta_score(|x: &[T], th: &[T]| {
        if x[0] > T::lit(0.5) {
            vec![T::one() / th[0]]
        } else {
            vec![-T::one() / (T::one() - th[0])]
        }
    })
    .with_label("bernoulli-mean")
    .with_kind(ModelKind::BernoulliMean)
    .with_parameter_domain(SupportBox::new(vec![Axis::hard(T::zero(), T::one())]))
}

/// Laplace location family `f(x;θ) = e^{−|x−θ|/b}/(2b)` on ℝ.
pub fn make_laplace_location<T: Real>(scale: T) -> Result<ParametricModel<T>> {
    if !(scale > T::zero()) {
        return Err(Error::Domain(format!("Laplace scale must be positive, got {scale}")));
    }
    let half = T::lit(EXPONENTIAL_TAIL) * scale;
    let log_norm = -(T::lit(2.0) * scale).ln();
    Ok(ParametricModel::new(
        1,
        ObsSpace::Continuous {
            dim: 1,
            cover: Arc::new(move |lo: &[T], hi: &[T]| {
                let breaks = if lo[0] == hi[0] { vec![lo[0]] } else { Vec::new() };
                SupportBox::new(vec![Axis::soft(lo[0] - half, hi[0] + half).with_breaks(breaks)])
            }),
        },
        move |x: &[T], th: &[T]| log_norm - (x[0] - th[0]).abs() / scale,
    )
    .with_theta_score(move |x: &[T], th: &[T]| {
        let d = x[0] - th[0];
        let s = if d > T::zero() {
            T::one()
        } else if d < T::zero() {
            -T::one()
        } else {
            T::zero()
        };
        vec![s / scale]
    })
    .with_label("laplace-location")
    .with_kind(ModelKind::LaplaceLocation { scale })
    .with_constant_fisher()
    // the kink at x = θ is not a panel break of joint grids
    .with_resolution(scale / T::lit(8.0)))
}

/// Channel whose law `N(0, σ²Iₙ)` does not depend on θ.
pub fn make_constant_channel<T: Real>(noise_variance: T, n: usize) -> Result<ParametricModel<T>> {
    if !(noise_variance > T::zero()) {
        return Err(Error::Domain(format!("noise variance must be positive, got {noise_variance}")));
    }
    let half = T::lit(GAUSSIAN_HALF_WIDTH) * noise_variance.sqrt();
    let log_norm = -T::from_count(n) / T::lit(2.0) * (T::TAU() * noise_variance).ln();
    Ok(ParametricModel::new(
        n,
        ObsSpace::Continuous {
            dim: n,
            cover: Arc::new(move |lo: &[T], _hi: &[T]| SupportBox::soft_cube(-half, half, lo.len())),
        },
        move |x: &[T], _th: &[T]| {
            log_norm - x.iter().fold(T::zero(), |a, &v| a + v * v) / (T::lit(2.0) * noise_variance)
        },
    )
    .with_theta_score(|_x: &[T], th: &[T]| vec![T::zero(); th.len()])
    .with_label("constant")
    .with_kind(ModelKind::Constant { noise_variance })
    .with_constant_fisher())
}

/// `N(θ, 1)` truncated to the θ-dependent window `[θ−1, θ+2]`. Violates the
/// regularity condition through boundary flux; a negative control.
pub fn make_truncated_gaussian_window<T: Real>() -> ParametricModel<T> {
    // Φ(2) − Φ(−1)
    let z = T::lit(0.818_594_614_120_581_8);
    let log_norm = -(T::TAU().sqrt() * z).ln();
    ParametricModel::new(
        1,
        ObsSpace::Continuous {
            dim: 1,
            cover: Arc::new(|lo: &[T], hi: &[T]| {
                SupportBox::new(vec![Axis::hard(lo[0] - T::one(), hi[0] + T::lit(2.0))])
            }),
        },
        move |x: &[T], th: &[T]| {
            let d = x[0] - th[0];
            if d < -T::one() || d > T::lit(2.0) {
                T::neg_infinity()
            } else {
                log_norm - d * d / T::lit(2.0)
            }
        },
    )
    .with_theta_score(|x: &[T], th: &[T]| vec![x[0] - th[0]])
    .with_label("truncated-gaussian-window")
    .with_kind(ModelKind::TruncatedGaussianWindow)
    .with_constant_fisher()
}

/// Parameters accepted by the registry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub noise_variance: Option<T>,
    pub scale: Option<T>,
    pub dim: usize,
    pub repeats: usize,
}

impl<T: Real> Default for ModelParams<T> {
    fn default() -> Self {
        Self { noise_variance: None, scale: None, dim: 1, repeats: 1 }
    }
}

/// Registry labels understood by [`from_registry`].
pub const REGISTRY_LABELS: &[&str] = &[
    "gaussian-location",
    "gaussian-sequence",
    "bernoulli-mean",
    "laplace-location",
    "constant",
    "truncated-gaussian-window",
];

/// Builds a model from its registry label.
pub fn from_registry<T: Real>(label: &str, p: &ModelParams<T>) -> Result<ParametricModel<T>> {
    let need = |v: Option<T>, what: &str| {
        v.ok_or_else(|| Error::Domain(format!("model {label} requires `{what}`")))
    };
    let model = match label {
        "gaussian-location" | "gaussian-sequence" => {
            make_gaussian_location(need(p.noise_variance, "noise_variance")?, p.dim, p.repeats)?
        }
        "bernoulli-mean" => ParametricModel::replicate(make_bernoulli_mean(), p.repeats)?,
        "laplace-location" => ParametricModel::replicate(make_laplace_location(need(p.scale, "scale")?)?, p.repeats)?,
        "constant" => make_constant_channel(p.noise_variance.unwrap_or(T::one()), p.dim)?,
        "truncated-gaussian-window" => make_truncated_gaussian_window(),
        other => return Err(Error::Domain(format!("unknown model label `{other}`"))),
    };
    if model.theta_dim() != p.dim {
        return Err(Error::Domain(format!(
            "model {label} has parameter dimension {}, config asks for {}",
            model.theta_dim(),
            p.dim
        )));
    }
    Ok(model)
}

/// `∫ f(x;θ) dλ(x)`.
pub fn total_probability<T: Real>(m: &ParametricModel<T>, theta: &[T], q: &QuadratureSpec<T>) -> Result<T> {
    m.check_theta(theta)?;
    Ok(match &m.obs {
        ObsSpace::Discrete { points } => crate::scalar::compensated_sum(points.iter().map(|x| m.density(x, theta))),
        ObsSpace::Continuous { cover, .. } => {
            let grid = obs_grid(m, &cover(theta, theta), q)?;
            grid.integrate(|x| m.density(x, theta))
        }
    })
}

fn obs_grid<T: Real>(m: &ParametricModel<T>, cover: &SupportBox<T>, q: &QuadratureSpec<T>) -> Result<Grid<T>> {
    let nodes = q.nodes_for_dim(m.obs_dim());
    Grid::tensor(cover, nodes, q.scheme, None)
}

/// Fisher information `𝓘(θ) = ∫ |∇_θ f|²/f dλ` (trace convention).
pub fn model_fisher_information<T: Real>(
    m: &ParametricModel<T>,
    theta: &[T],
    q: &QuadratureSpec<T>,
) -> Result<T> {
    m.check_theta(theta)?;
    if let (Some((base, reps)), ObsSpace::Continuous { dim, .. }) = (&m.replicas, &m.obs) {
        if *dim > MAX_DIRECT_OBS_DIM {
            return Ok(T::from_count(*reps) * model_fisher_information(base, theta, q)?);
        }
    }
    let term = |x: &[T]| -> Result<T> {
        let l = m.log_density(x, theta);
        if !l.is_finite() {
            return Ok(T::zero());
        }
        let g = m.theta_score(x, theta)?;
        Ok(l.exp() * g.iter().fold(T::zero(), |a, &v| a + v * v))
    };
    match &m.obs {
        ObsSpace::Discrete { points } => {
            let mut acc = CompensatedSum::new();
            for x in points {
                acc.add(term(x)?);
            }
            Ok(acc.value())
        }
        ObsSpace::Continuous { cover, .. } => {
            let grid = obs_grid(m, &cover(theta, theta), q)?;
            let failure = std::sync::Mutex::new(None);
            let v = grid.integrate(|x| match term(x) {
                Ok(v) => v,
                Err(e) => {
                    *failure.lock().expect("poisoned") = Some(e);
                    T::zero()
                }
            });
            match failure.into_inner().expect("poisoned") {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
    }
}

/// `∫ 𝓘(θ) dπ(θ)` and `J = (1/n)∫ 𝓘 dπ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageFisher<T> {
    pub total: T,
    pub per_dim: T,
}

pub fn average_fisher_information<T: Real>(
    m: &ParametricModel<T>,
    prior: &LogConcavePrior<T>,
    q: &QuadratureSpec<T>,
) -> Result<AverageFisher<T>> {
    check_prior_fits(m, prior)?;
    let n = T::from_count(prior.dim());
    let total = if m.fisher_constant_in_theta {
        model_fisher_information(m, prior.barycenter(), q)?
    } else {
        let grid = q.without_domain().grid(prior.base().support())?;
        let mut acc = CompensatedSum::new();
        let mut mass = CompensatedSum::new();
        for (theta, w) in grid.iter() {
            let p = prior.base().density(theta);
            if p > T::zero() {
                mass.add(w * p);
                acc.add(w * p * model_fisher_information(m, theta, q)?);
            }
        }
        acc.value() / mass.value()
    };
    Ok(AverageFisher { total, per_dim: total / n })
}

fn check_prior_fits<T: Real>(m: &ParametricModel<T>, prior: &LogConcavePrior<T>) -> Result<()> {
    if prior.dim() != m.theta_dim() {
        return Err(Error::Domain(format!(
            "prior dimension {} does not match model parameter dimension {}",
            prior.dim(),
            m.theta_dim()
        )));
    }
    if let Some(dom) = &m.parameter_domain {
        let inside = prior
            .base()
            .support()
            .axes
            .iter()
            .zip(&dom.axes)
            .all(|(p, d)| p.lo > d.lo && p.hi < d.hi);
        if !inside {
            return Err(Error::Domain(format!(
                "prior support must lie inside the open parameter domain of {}",
                m.label()
            )));
        }
    }
    Ok(())
}

/// Outcome of the grid check of `∫ ∇_θ f(x;θ) dλ(x) = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub max_norm: f64,
    pub prior_weighted_norm: f64,
    pub points_checked: usize,
    pub passed: bool,
    pub note: String,
}

/// Nodes per axis of the θ grid used by [`regularity_check`]; each node
/// costs a full observation-space integral.
fn regularity_nodes(dim: usize) -> usize {
    match dim {
        0 | 1 => 17,
        2 => 9,
        _ => 8,
    }
}

/// Evaluates `‖∫∇_θ f dλ‖` on a Gauss–Legendre θ grid over the prior's
/// support and reports the maximum and the prior-weighted average.
pub fn regularity_check<T: Real>(
    m: &ParametricModel<T>,
    prior: &LogConcavePrior<T>,
    q: &QuadratureSpec<T>,
) -> Result<RegularityReport> {
    check_prior_fits(m, prior)?;
    let grid = Grid::tensor(prior.base().support(), regularity_nodes(prior.dim()), q.scheme, None)?;
    let mut max_norm = 0.0_f64;
    let mut weighted = CompensatedSum::new();
    let mut mass = CompensatedSum::new();
    let mut count = 0;
    for (theta, w) in grid.iter() {
        let p = prior.base().density(theta);
        if !(p > T::zero()) {
            continue;
        }
        let flux = score_flux(m, theta, q)?;
        let v = norm(&flux);
        max_norm = max_norm.max(v.to_f64_lossy());
        weighted.add(w * p * v);
        mass.add(w * p);
        count += 1;
    }
    let passed = max_norm < REGULARITY_TOLERANCE;
    Ok(RegularityReport {
        max_norm,
        prior_weighted_norm: (weighted.value() / mass.value()).to_f64_lossy(),
        points_checked: count,
        passed,
        note: "finite θ grid; the condition is required π-almost everywhere".into(),
    })
}

/// `∫ ∇_θ f(x;θ) dλ(x) = ∫ f ∇_θ log f dλ`.
pub fn score_flux<T: Real>(m: &ParametricModel<T>, theta: &[T], q: &QuadratureSpec<T>) -> Result<Vec<T>> {
    m.check_theta(theta)?;
    let n = m.theta_dim();
    match &m.obs {
        ObsSpace::Discrete { points } => {
            let mut acc = vec![CompensatedSum::new(); n];
            for x in points {
                let f = m.density(x, theta);
                if f > T::zero() {
                    for (a, g) in acc.iter_mut().zip(m.theta_score(x, theta)?) {
                        a.add(f * g);
                    }
                }
            }
            Ok(acc.iter().map(|a| a.value()).collect())
        }
        ObsSpace::Continuous { cover, .. } => {
            let grid = obs_grid(m, &cover(theta, theta), q)?;
            let failure = std::sync::Mutex::new(None);
            let v = grid.integrate_many(n, |x, out| {
                let l = m.log_density(x, theta);
                if !l.is_finite() {
                    return;
                }
                match m.theta_score(x, theta) {
                    Ok(g) => {
                        let f = l.exp();
                        out.iter_mut().zip(g).for_each(|(o, v)| *o = f * v);
                    }
                    Err(e) => *failure.lock().expect("poisoned") = Some(e),
                }
            });
            match failure.into_inner().expect("poisoned") {
                Some(e) => Err(e),
                None => Ok(v),
            }
        }
    }
}
