//! Entropies of i.i.d. sums by FFT convolution on equispaced grids.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{differential_entropy, DensityOnRn};
use crate::quadrature::QuadratureSpec;
use crate::scalar::{CompensatedSum, Real};

/// Largest number of summands.
pub const MAX_SUMMANDS: usize = 16;

/// Resolution control for [`iid_sum_entropies`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvolutionGrid {
    /// Points on the summand's support at the first pass.
    pub initial_points: usize,
    /// Refinement stops with an error beyond this many points.
    pub max_points: usize,
    /// Accept once halving the spacing moves every entropy by less than this.
    pub tolerance: f64,
    /// Box that the support of every partial sum must stay inside.
    pub max_support: Option<(f64, f64)>,
}

impl Default for ConvolutionGrid {
    fn default() -> Self {
        Self { initial_points: 1025, max_points: 1 << 18, tolerance: 1e-4, max_support: None }
    }
}

/// `h(S_1), …, h(S_k)` with the grid that produced them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SumEntropies {
    /// Entry `k − 1` is `h(S_k)`.
    pub entropies: Vec<f64>,
    pub spacing: f64,
    pub points: usize,
    /// Largest change over the last refinement.
    pub refinement_change: f64,
}

/// `h(S_k)` for a single `k`.
pub fn iid_sum_entropy<T: Real>(d: &DensityOnRn<T>, k: usize, grid: &ConvolutionGrid) -> Result<f64> {
    Ok(iid_sum_entropies(d, k, grid)?.entropies[k - 1])
}

/// `h(S_j)` for `j = 1..=k_max`, `S_j` the sum of `j` i.i.d. draws from `d`.
///
/// `S_1` uses the quadrature entropy of `d` directly; larger sums come from
/// repeated trapezoid-weighted discrete convolution, refined by halving the
/// spacing until successive passes agree.
pub fn iid_sum_entropies<T: Real>(d: &DensityOnRn<T>, k_max: usize, grid: &ConvolutionGrid) -> Result<SumEntropies> {
    if d.dim() != 1 {
        return Err(Error::Capability("sum entropies are implemented for densities on ℝ".into()));
    }
    if k_max == 0 || k_max > MAX_SUMMANDS {
        return Err(Error::Domain(format!("number of summands must be in 1..={MAX_SUMMANDS}, got {k_max}")));
    }
    let axis = &d.support().axes[0];
    let (lo, hi) = (axis.lo.to_f64_lossy(), axis.hi.to_f64_lossy());
    if let Some((a, b)) = grid.max_support {
        let k = k_max as f64;
        if k * lo < a || k * hi > b {
            return Err(Error::Domain(format!(
                "support of the {k_max}-fold sum [{}, {}] overflows the grid box [{a}, {b}]",
                k * lo,
                k * hi
            )));
        }
    }
    let h1 = differential_entropy(d, &QuadratureSpec::default())?.to_f64_lossy();
    let mut n = grid.initial_points.max(17);
    let mut prev = entropies_at(d, lo, hi, n, k_max);
    loop {
        let next_n = 2 * n - 1;
        if next_n > grid.max_points {
            return Err(Error::Quadrature(format!(
                "sum entropies did not settle to {} within {} points",
                grid.tolerance, grid.max_points
            )));
        }
        let next = entropies_at(d, lo, hi, next_n, k_max);
        let change = prev.iter().zip(&next).skip(1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if change < grid.tolerance {
            let mut entropies = next;
            entropies[0] = h1;
            return Ok(SumEntropies {
                entropies,
                spacing: (hi - lo) / (next_n - 1) as f64,
                points: next_n,
                refinement_change: change,
            });
        }
        prev = next;
        n = next_n;
    }
}

fn entropies_at<T: Real>(d: &DensityOnRn<T>, lo: f64, hi: f64, n: usize, k_max: usize) -> Vec<f64> {
    let h = (hi - lo) / (n - 1) as f64;
    let base: Vec<f64> = (0..n)
        .map(|i| {
            let x = if i + 1 == n { hi } else { lo + h * i as f64 };
            d.density(&[T::lit(x)]).to_f64_lossy()
        })
        .collect();
    let trap = |i: usize, len: usize| if i == 0 || i + 1 == len { 0.5 * h } else { h };
    let mut out = vec![entropy_of(&base, h)];
    if k_max == 1 {
        return out;
    }
    let full = k_max * (n - 1) + 1;
    let len = full.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut kernel: Vec<Complex<f64>> = (0..len)
        .map(|i| Complex::new(if i < n { base[i] * trap(i, n) } else { 0.0 }, 0.0))
        .collect();
    fwd.process(&mut kernel);
    let mut acc: Vec<Complex<f64>> =
        (0..len).map(|i| Complex::new(if i < n { base[i] } else { 0.0 }, 0.0)).collect();
    fwd.process(&mut acc);
    let scale = 1.0 / len as f64;
    for k in 2..=k_max {
        acc.iter_mut().zip(&kernel).for_each(|(a, b)| *a *= b);
        let mut values = acc.clone();
        inv.process(&mut values);
        let m = k * (n - 1) + 1;
        let p: Vec<f64> = values[..m].iter().map(|c| (c.re * scale).max(0.0)).collect();
        out.push(entropy_of(&p, h));
    }
    out
}

/// `−∫ p log p` of the normalized trapezoid density on a uniform grid.
fn entropy_of(p: &[f64], h: f64) -> f64 {
    let len = p.len();
    let w = |i: usize| if i == 0 || i + 1 == len { 0.5 * h } else { h };
    let mut mass = CompensatedSum::new();
    let mut plogp = CompensatedSum::new();
    for (i, &v) in p.iter().enumerate() {
        if v > 1e-300 {
            mass.add(w(i) * v);
            plogp.add(w(i) * v * v.ln());
        }
    }
    let m = mass.value();
    // entropy of p/m
    -(plogp.value() / m) + m.ln()
}
