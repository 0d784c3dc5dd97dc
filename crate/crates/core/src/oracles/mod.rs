//! Brute-force ground truth for the quantities the bounds constrain.
//!
//! Everything here is computed by direct quadrature of the joint density
//! `f(x;θ)π(θ)` on tensor grids, restricted to desk-scale dimensions.

mod convolution;
mod monte_carlo;

pub use convolution::{iid_sum_entropies, iid_sum_entropy, ConvolutionGrid, SumEntropies};
pub use monte_carlo::{monte_carlo_gaussian_channel, MonteCarloEstimate};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::measures::{differential_entropy, LogConcavePrior};
use crate::models::{ObsSpace, ParametricModel};
use crate::quadrature::{Grid, QuadratureSpec, SupportBox};
use crate::scalar::{CompensatedSum, Real};

/// Largest parameter and observation dimension handled by the joint grid.
pub const MAX_ORACLE_DIM: usize = 2;
/// Panels of the joint grid are at most this many model resolutions wide.
const PANELS_PER_RESOLUTION: f64 = 3.0;
/// Nodes per panel when the panel width is set by the model resolution.
const NODES_PER_PANEL: usize = 16;
/// `log 1e-300`; joint-density values below this contribute nothing.
const LOG_CLAMP: f64 = -690.775_527_898_213_7;
const CHUNK: usize = 256;
/// Allowed deviation of the joint mass from one.
pub const JOINT_MASS_TOLERANCE: f64 = 1e-5;

/// Observation nodes with weights: a tensor grid or a finite support.
#[derive(Clone, Debug)]
pub enum ObsNodes<T> {
    Grid(Grid<T>),
    Points(Vec<Vec<T>>),
}

impl<T: Real> ObsNodes<T> {
    pub fn len(&self) -> usize {
        match self {
            Self::Grid(g) => g.len(),
            Self::Points(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn node(&self, j: usize) -> (&[T], T) {
        match self {
            Self::Grid(g) => (g.point(j), g.weight(j)),
            Self::Points(p) => (&p[j], T::one()),
        }
    }
}

/// Joint density of `(θ, X)` on a product grid.
///
/// The matrix `f(x;θ)·π(θ)` is never stored: [`JointDensityGrid::row`]
/// recomputes a θ-row on demand, and the per-`x` accumulations needed by the
/// oracles (marginal, cross-entropy term, posterior moments) are collected in
/// one streaming pass.
#[derive(Clone, Debug)]
pub struct JointDensityGrid<'a, T> {
    model: &'a ParametricModel<T>,
    theta: Grid<T>,
    /// `w_i π(θ_i)`, normalized to unit sum.
    prior_weights: Vec<T>,
    x: ObsNodes<T>,
    /// `f(x_j) = Σ_i w_i π(θ_i) f(x_j;θ_i)`.
    marginal: Vec<T>,
    /// `Σ_i w_i π(θ_i) f(x_j;θ_i) log f(x_j;θ_i)`.
    cross: Vec<T>,
    /// `Σ_i w_i π(θ_i) f(x_j;θ_i) θ_i`.
    first_moment: Vec<Vec<T>>,
    /// `Σ_i w_i π(θ_i) f(x_j;θ_i) |θ_i|²`.
    second_moment: Vec<T>,
    prior_mass: T,
}

fn guard<T: Real>(prior: &LogConcavePrior<T>, m: &ParametricModel<T>) -> Result<()> {
    if m.theta_dim() > MAX_ORACLE_DIM || m.obs_dim() > MAX_ORACLE_DIM {
        return Err(Error::Capability(format!(
            "oracle grids are limited to parameter and observation dimension ≤ {MAX_ORACLE_DIM}; \
             model {} has {} and {}",
            m.label(),
            m.theta_dim(),
            m.obs_dim()
        )));
    }
    if prior.dim() != m.theta_dim() {
        return Err(Error::Domain(format!(
            "prior dimension {} does not match model parameter dimension {}",
            prior.dim(),
            m.theta_dim()
        )));
    }
    Ok(())
}

pub(crate) fn resolved_grid<T: Real>(
    support: &SupportBox<T>,
    q: &QuadratureSpec<T>,
    resolution: Option<T>,
) -> Result<Grid<T>> {
    match (resolution, q.nodes_per_axis) {
        (Some(r), None) => Grid::tensor(
            support,
            NODES_PER_PANEL,
            q.scheme,
            Some(r * T::lit(PANELS_PER_RESOLUTION)),
        ),
        (Some(r), Some(n)) => Grid::tensor(support, n, q.scheme, Some(r * T::lit(PANELS_PER_RESOLUTION))),
        (None, _) => Grid::tensor(support, q.nodes_for_dim(support.dim()), q.scheme, q.max_panel_width),
    }
}

/// Resolution of the θ grid: the model's, capped by the prior's per-axis
/// standard deviation so a wide channel cannot leave a narrow prior coarse.
pub(crate) fn theta_resolution<T: Real>(prior: &LogConcavePrior<T>, m: &ParametricModel<T>) -> Option<T> {
    let sd = (prior.variance() / T::from_count(prior.dim())).sqrt();
    m.resolution().map(|r| if sd > T::zero() { r.min(sd) } else { r })
}

impl<'a, T: Real> JointDensityGrid<'a, T> {
    pub fn build(prior: &LogConcavePrior<T>, m: &'a ParametricModel<T>, q: &QuadratureSpec<T>) -> Result<Self> {
        guard(prior, m)?;
        let support = prior.base().support();
        if let Some(dom) = m.parameter_domain() {
            let inside = support.axes.iter().zip(&dom.axes).all(|(p, d)| p.lo > d.lo && p.hi < d.hi);
            if !inside {
                return Err(Error::Domain(format!(
                    "prior support must lie inside the open parameter domain of {}",
                    m.label()
                )));
            }
        }
        let theta = resolved_grid(support, q, theta_resolution(prior, m))?;
        let raw: Vec<T> = theta.iter().map(|(t, w)| w * prior.base().density(t)).collect();
        let prior_mass = crate::scalar::compensated_sum(raw.iter().copied());
        if (prior_mass - T::one()).abs().to_f64_lossy() > JOINT_MASS_TOLERANCE {
            return Err(Error::IntegrationDomain { missing_mass: (T::one() - prior_mass).to_f64_lossy() });
        }
        let prior_weights: Vec<T> = raw.iter().map(|&w| w / prior_mass).collect();
        let x = match m.obs_space() {
            ObsSpace::Discrete { points } => ObsNodes::Points(points.clone()),
            ObsSpace::Continuous { .. } => {
                let lo: Vec<T> = support.axes.iter().map(|a| a.lo).collect();
                let hi: Vec<T> = support.axes.iter().map(|a| a.hi).collect();
                let cover = m.obs_cover(&lo, &hi).expect("continuous model has a cover");
                ObsNodes::Grid(resolved_grid(&cover, q, m.resolution())?)
            }
        };
        let n = m.theta_dim();
        let log_clamp = T::lit(LOG_CLAMP);
        let accumulate = |j: usize| -> (T, T, Vec<T>, T) {
            let (xj, _) = x.node(j);
            let (mut f, mut c, mut s2) = (T::zero(), T::zero(), T::zero());
            let mut s1 = vec![T::zero(); n];
            for (i, (t, _)) in theta.iter().enumerate() {
                let pw = prior_weights[i];
                if pw == T::zero() {
                    continue;
                }
                let l = m.log_density(xj, t);
                if !(l > log_clamp) {
                    continue;
                }
                let v = pw * l.exp();
                f = f + v;
                c = c + v * l;
                let mut r2 = T::zero();
                for (a, &ti) in s1.iter_mut().zip(t) {
                    *a = *a + v * ti;
                    r2 = r2 + ti * ti;
                }
                s2 = s2 + v * r2;
            }
            (f, c, s1, s2)
        };
        let nx = x.len();
        let rows: Vec<(T, T, Vec<T>, T)> = (0..nx.div_ceil(CHUNK))
            .into_par_iter()
            .flat_map_iter(|c| (c * CHUNK..((c + 1) * CHUNK).min(nx)).map(accumulate).collect::<Vec<_>>())
            .collect();
        let mut marginal = Vec::with_capacity(nx);
        let mut cross = Vec::with_capacity(nx);
        let mut first_moment = Vec::with_capacity(nx);
        let mut second_moment = Vec::with_capacity(nx);
        for (f, c, s1, s2) in rows {
            marginal.push(f);
            cross.push(c);
            first_moment.push(s1);
            second_moment.push(s2);
        }
        let grid = Self { model: m, theta, prior_weights, x, marginal, cross, first_moment, second_moment, prior_mass };
        let mass = grid.total_mass();
        if (mass - T::one()).abs().to_f64_lossy() > JOINT_MASS_TOLERANCE {
            return Err(Error::IntegrationDomain { missing_mass: (T::one() - mass).to_f64_lossy() });
        }
        Ok(grid)
    }

    pub fn theta_nodes(&self) -> &Grid<T> {
        &self.theta
    }

    pub fn prior_weights(&self) -> &[T] {
        &self.prior_weights
    }

    pub fn x_nodes(&self) -> &ObsNodes<T> {
        &self.x
    }

    pub fn marginal(&self) -> &[T] {
        &self.marginal
    }

    /// Prior mass captured by the θ grid before normalization.
    pub fn prior_mass(&self) -> T {
        self.prior_mass
    }

    /// `f(x_j;θ_i)·π(θ_i)w_i` for all `j`.
    pub fn row(&self, i: usize) -> Vec<T> {
        let t = self.theta.point(i);
        (0..self.x.len())
            .map(|j| self.prior_weights[i] * self.model.density(self.x.node(j).0, t))
            .collect()
    }

    pub fn total_mass(&self) -> T {
        let mut acc = CompensatedSum::new();
        for (j, &f) in self.marginal.iter().enumerate() {
            acc.add(self.x.node(j).1 * f);
        }
        acc.value()
    }

    /// `∬ f(x;θ) log[f(x;θ)/f(x)] dλ(x) dπ(θ)`.
    pub fn mutual_information(&self) -> T {
        let mut acc = CompensatedSum::new();
        for (j, (&f, &c)) in self.marginal.iter().zip(&self.cross).enumerate() {
            if f > T::zero() {
                acc.add(self.x.node(j).1 * (c - f * f.ln()));
            }
        }
        acc.value()
    }

    /// `E|θ − E[θ|X]|²`.
    pub fn posterior_mean_mse(&self) -> T {
        let mut acc = CompensatedSum::new();
        for (j, &f) in self.marginal.iter().enumerate() {
            if f > T::zero() {
                let m1 = self.first_moment[j].iter().fold(T::zero(), |a, &v| a + v * v);
                acc.add(self.x.node(j).1 * (self.second_moment[j] - m1 / f));
            }
        }
        acc.value().max(T::zero())
    }
}

/// `I(π; P_θ)` by double quadrature.
pub fn mutual_information<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<T> {
    Ok(JointDensityGrid::build(prior, m, q)?.mutual_information())
}

/// `h(θ|X) = h(θ) − I(θ;X)`.
pub fn conditional_entropy<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<T> {
    let h = differential_entropy(prior.base(), &q.without_domain())?;
    Ok(h - mutual_information(prior, m, q)?)
}

/// Risk of the posterior mean, `E|θ − E[θ|X]|²`.
pub fn posterior_mean_mse<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<T> {
    Ok(JointDensityGrid::build(prior, m, q)?.posterior_mean_mse())
}

/// Mutual information, conditional entropy and MMSE from one joint grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleValues<T> {
    pub mutual_information: T,
    pub conditional_entropy: T,
    pub prior_entropy: T,
    pub mmse: T,
}

pub fn oracle_values<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    q: &QuadratureSpec<T>,
) -> Result<OracleValues<T>> {
    let grid = JointDensityGrid::build(prior, m, q)?;
    let mi = grid.mutual_information();
    let h = differential_entropy(prior.base(), &q.without_domain())?;
    Ok(OracleValues { mutual_information: mi, conditional_entropy: h - mi, prior_entropy: h, mmse: grid.posterior_mean_mse() })
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{E, PI};

    use super::*;
    use crate::models::{make_bernoulli_mean, make_constant_channel, make_gaussian_location};

    fn q() -> QuadratureSpec<f64> {
        QuadratureSpec::default()
    }

    fn close(got: f64, want: f64, tol: f64) {
        assert!((got - want).abs() <= tol, "got {got}, want {want} ± {tol}");
    }

    fn std_prior() -> LogConcavePrior<f64> {
        LogConcavePrior::gaussian(&[0.0], 1.0).unwrap()
    }

    #[test]
    fn constant_channel_carries_no_information() {
        let m = make_constant_channel(1.0, 1).unwrap();
        let v = oracle_values(&std_prior(), &m, &q()).unwrap();
        close(v.mutual_information, 0.0, 1e-6);
        close(v.conditional_entropy, v.prior_entropy, 1e-6);
        close(v.mmse, 1.0, 1e-4);
    }

    #[test]
    fn gaussian_closed_forms() {
        let m = make_gaussian_location(1.0, 1, 1).unwrap();
        let v = oracle_values(&std_prior(), &m, &q()).unwrap();
        close(v.mutual_information, 0.5 * 2f64.ln(), 1e-4);
        close(v.conditional_entropy, 0.5 * (2.0 * PI * E * 0.5).ln(), 1e-4);
        close(v.mmse, 0.5, 1e-4);
        let wide = LogConcavePrior::gaussian(&[0.0], 4.0).unwrap();
        close(conditional_entropy(&wide, &m, &q()).unwrap(), 0.5 * (2.0 * PI * E * 0.8).ln(), 1e-4);
    }

    #[test]
    fn gaussian_snr_curve() {
        for (p, s2) in [(1.0, 0.1), (2.0, 1.0), (0.5, 3.0), (1.0, 0.01)] {
            let prior = LogConcavePrior::gaussian(&[0.3], p).unwrap();
            let m = make_gaussian_location(s2, 1, 1).unwrap();
            let v = oracle_values(&prior, &m, &q()).unwrap();
            close(v.mutual_information, 0.5 * (1.0 + p / s2).ln(), 1e-4);
            close(v.mmse, p * s2 / (p + s2), 1e-4);
        }
    }

    #[test]
    fn two_dimensional_product_doubles_one_dimensional_values() {
        let prior = LogConcavePrior::gaussian(&[0.0, 0.0], 1.0).unwrap();
        let m = make_gaussian_location(1.0, 2, 1).unwrap();
        let v = oracle_values(&prior, &m, &q()).unwrap();
        close(v.mutual_information, 2f64.ln(), 1e-4);
        close(v.mmse, 1.0, 1e-4);
    }

    #[test]
    fn dimension_guard() {
        let prior = LogConcavePrior::gaussian(&[0.0; 3], 1.0).unwrap();
        let m = make_gaussian_location(1.0, 3, 1).unwrap();
        assert!(matches!(mutual_information(&prior, &m, &q()), Err(Error::Capability(_))));
        let m = make_gaussian_location(1.0, 1, 3).unwrap();
        assert!(matches!(mutual_information(&std_prior(), &m, &q()), Err(Error::Capability(_))));
    }

    #[test]
    fn bernoulli_information_matches_binary_entropy_average() {
        // I = H(E θ) − E H(θ) for a uniform prior on [a, b]
        let (a, b) = (0.2_f64, 0.8_f64);
        let prior = LogConcavePrior::uniform(a, b).unwrap();
        let hb = |p: f64| -p * p.ln() - (1.0 - p) * (1.0 - p).ln();
        // ∫ −p log p dp = −p² log p / 2 + p²/4
        let anti = |p: f64| -p * p * p.ln() / 2.0 + p * p / 4.0;
        let mean_h = (anti(b) - anti(a) + anti(1.0 - a) - anti(1.0 - b)) / (b - a);
        let want = hb(0.5) - mean_h;
        close(mutual_information(&prior, &make_bernoulli_mean(), &q()).unwrap(), want, 1e-8);
    }

    #[test]
    fn joint_grid_invariants() {
        let prior = LogConcavePrior::uniform(0.0, 1.0).unwrap();
        let m = make_gaussian_location(0.25, 1, 1).unwrap();
        let g = JointDensityGrid::build(&prior, &m, &q()).unwrap();
        close(g.total_mass(), 1.0, 1e-5);
        assert!(g.marginal().iter().all(|&v| v >= 0.0));
        let row = g.row(g.theta_nodes().len() / 2);
        assert!(row.iter().all(|&v| v >= 0.0));
        assert!(g.mutual_information() >= -1e-6);
        assert!(g.posterior_mean_mse() <= prior.variance() + 1e-6);
    }

    #[test]
    fn data_processing_on_gaussian_cascades() {
        for prior in [std_prior(), LogConcavePrior::uniform(0.0, 1.0).unwrap(), LogConcavePrior::laplace(0.0, 1.0).unwrap()] {
            let mut last = f64::INFINITY;
            for s2 in [0.05, 0.1, 0.5, 1.0, 2.0] {
                // X₂ = X₁ + independent noise has total noise variance s2
                let v = mutual_information(&prior, &make_gaussian_location(s2, 1, 1).unwrap(), &q()).unwrap();
                assert!(v <= last + 1e-5, "{}: {v} > {last}", prior.base().label());
                last = v;
            }
        }
    }

    #[test]
    fn mmse_never_exceeds_prior_variance() {
        for prior in [std_prior(), LogConcavePrior::uniform(0.0, 1.0).unwrap(), LogConcavePrior::exponential(1.0).unwrap()] {
            for s2 in [0.01, 0.3, 4.0] {
                let v = posterior_mean_mse(&prior, &make_gaussian_location(s2, 1, 1).unwrap(), &q()).unwrap();
                assert!(v <= prior.variance() + 1e-6);
            }
        }
    }
}
