//! Seeded Monte-Carlo cross-check for scalar Gaussian-location channels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::LogConcavePrior;
use crate::models::ParametricModel;
use crate::quadrature::QuadratureSpec;
use crate::scalar::{CompensatedSum, Real};

use super::{resolved_grid, theta_resolution};

const CDF_POINTS: usize = 8193;
const SAMPLES_PER_STREAM: usize = 1 << 15;

/// Sample means with standard errors; the seed is part of the result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    pub mutual_information: f64,
    pub mutual_information_se: f64,
    pub mmse: f64,
    pub mmse_se: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Draws `θ ∼ π` by tabulated inverse CDF and `X = θ + σZ`, then averages
/// `log f(X;θ)/f(X)` and `(θ − E[θ|X])²`. The marginal and the posterior
/// mean are θ-quadratures at each sample.
pub fn monte_carlo_gaussian_channel<T: Real>(
    prior: &LogConcavePrior<T>,
    m: &ParametricModel<T>,
    samples: usize,
    seed: u64,
    q: &QuadratureSpec<T>,
) -> Result<MonteCarloEstimate> {
    let sigma = match (m.noise_variance(), m.theta_dim(), m.obs_dim()) {
        (Some(v), 1, 1) => v.to_f64_lossy().sqrt(),
        _ => {
            return Err(Error::Capability(format!(
                "Monte-Carlo cross-check supports scalar Gaussian-location channels, not {}",
                m.label()
            )))
        }
    };
    if samples < 2 {
        return Err(Error::Domain("Monte-Carlo needs at least two samples".into()));
    }
    let axis = &prior.base().support().axes[0];
    let (lo, hi) = (axis.lo.to_f64_lossy(), axis.hi.to_f64_lossy());
    let step = (hi - lo) / (CDF_POINTS - 1) as f64;
    let xs: Vec<f64> = (0..CDF_POINTS).map(|i| lo + step * i as f64).collect();
    let dens: Vec<f64> = xs.iter().map(|&x| prior.base().density(&[T::lit(x)]).to_f64_lossy()).collect();
    let mut cdf = vec![0.0; CDF_POINTS];
    for i in 1..CDF_POINTS {
        cdf[i] = cdf[i - 1] + 0.5 * step * (dens[i - 1] + dens[i]);
    }
    let total = cdf[CDF_POINTS - 1];
    cdf.iter_mut().for_each(|c| *c /= total);
    let inverse_cdf = |u: f64| {
        let k = cdf.partition_point(|&c| c < u).clamp(1, CDF_POINTS - 1);
        let (c0, c1) = (cdf[k - 1], cdf[k]);
        let t = if c1 > c0 { (u - c0) / (c1 - c0) } else { 0.5 };
        xs[k - 1] + t * step
    };

    let theta = resolved_grid(prior.base().support(), q, theta_resolution(prior, m))?;
    let nodes: Vec<(f64, f64)> = theta
        .iter()
        .map(|(t, w)| (t[0].to_f64_lossy(), (w * prior.base().density(t)).to_f64_lossy()))
        .filter(|&(_, w)| w > 0.0)
        .collect();
    let log_norm = -0.5 * (2.0 * std::f64::consts::PI * sigma * sigma).ln();
    let log_f = |x: f64, t: f64| log_norm - (x - t) * (x - t) / (2.0 * sigma * sigma);

    let streams = samples.div_ceil(SAMPLES_PER_STREAM);
    let partials: Vec<[CompensatedSum<f64>; 4]> = (0..streams)
        .into_par_iter()
        .map(|s| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(s as u64);
            let count = SAMPLES_PER_STREAM.min(samples - s * SAMPLES_PER_STREAM);
            let mut acc: [CompensatedSum<f64>; 4] = Default::default();
            for _ in 0..count {
                let th = inverse_cdf(rng.random::<f64>());
                let z: f64 = rng.sample(StandardNormal);
                let x = th + sigma * z;
                let (mut fx, mut m1) = (0.0, 0.0);
                for &(t, w) in &nodes {
                    let v = w * log_f(x, t).exp();
                    fx += v;
                    m1 += v * t;
                }
                let info = log_f(x, th) - fx.ln();
                let err = (th - m1 / fx).powi(2);
                acc[0].add(info);
                acc[1].add(info * info);
                acc[2].add(err);
                acc[3].add(err * err);
            }
            acc
        })
        .collect();
    let mut sums = [0.0; 4];
    for p in &partials {
        for (s, a) in sums.iter_mut().zip(p) {
            *s += a.value();
        }
    }
    let n = samples as f64;
    let mean_se = |s: f64, s2: f64| {
        let mean = s / n;
        let var = (s2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        (mean, (var / n).sqrt())
    };
    let (mi, mi_se) = mean_se(sums[0], sums[1]);
    let (mse, mse_se) = mean_se(sums[2], sums[3]);
    Ok(MonteCarloEstimate {
        mutual_information: mi,
        mutual_information_se: mi_se,
        mmse: mse,
        mmse_se: mse_se,
        samples,
        seed,
    })
}
