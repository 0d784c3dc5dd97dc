//! Gaussian tilts of a log-concave density centered at their own barycenter.
//!
//! For `δ > 0` the map `T_δ(m) = ∫x e^{−δ|x−m|²/2}ρ / ∫e^{−δ|x−m|²/2}ρ` is a
//! contraction with Jacobian `δ·Cov` of the tilted law, so iterating it from
//! the barycenter of `ρ` converges to the unique fixed point `m_δ`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::largest_eigenvalue;
use crate::measures::{relative_entropy, relative_fisher_information, DensityOnRn, LogConcavePrior, ReferenceMeasure};
use crate::quadrature::{Grid, QuadratureSpec, SupportBox};
use crate::scalar::{dist_sq, norm, Real};

/// Tilted integrals are restricted to `m ± WINDOW_RADIUS/√δ`; the Gaussian
/// factor is below `e^{−40}` outside.
const WINDOW_RADIUS: f64 = 9.0;
const MIN_TILTED_MASS: f64 = 1e-300;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_iter: 10_000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TiltedFixedPointResult<T> {
    pub delta: T,
    pub m_delta: Vec<T>,
    pub iterations: usize,
    /// `‖T_δ(m_δ) − m_δ‖`.
    pub residual: T,
    /// `δ·λ_max(Cov)` of the tilted law at `m_δ`.
    pub lambda_delta: T,
    /// `∫ e^{−δ|x−m_δ|²/2} ρ dx`.
    pub c_delta: T,
    /// `−log C_δ`.
    pub g_delta: T,
    pub converged: bool,
    /// Step lengths `‖x_{k+1} − x_k‖`.
    pub trace: Vec<T>,
}

/// Mass, mean and covariance of `e^{−δ|x−m|²/2}ρ(x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TiltedMoments<T> {
    pub mass: T,
    pub mean: Vec<T>,
    pub covariance: Vec<Vec<T>>,
}

fn tilt_grid<T: Real>(rho: &DensityOnRn<T>, delta: T, m: &[T], q: &QuadratureSpec<T>) -> Result<Grid<T>> {
    let support = rho.support();
    let radius = T::lit(WINDOW_RADIUS) / delta.sqrt();
    let boxed: SupportBox<T> = support.windowed(m, radius).unwrap_or_else(|| support.clone());
    Grid::tensor(&boxed, q.nodes_for_dim(boxed.dim()), q.scheme, q.max_panel_width)
}

/// One quadrature pass for the tilted mass, mean and covariance.
pub fn tilted_moments<T: Real>(
    rho: &LogConcavePrior<T>,
    delta: T,
    m: &[T],
    q: &QuadratureSpec<T>,
) -> Result<TiltedMoments<T>> {
    if !(delta > T::zero()) {
        return Err(Error::Domain(format!("tilt needs δ > 0, got {delta}")));
    }
    let d = rho.base();
    let n = d.dim();
    let half = delta / T::lit(2.0);
    let grid = tilt_grid(d, delta, m, q)?;
    let k = 1 + n + n * (n + 1) / 2;
    let sums = grid.integrate_many(k, |x, out| {
        let l = d.log_density(x) - half * dist_sq(x, m);
        if !l.is_finite() {
            return;
        }
        let w = l.exp();
        out[0] = w;
        let mut idx = 1 + n;
        for i in 0..n {
            let di = x[i] - m[i];
            out[1 + i] = w * di;
            for j in i..n {
                out[idx] = w * di * (x[j] - m[j]);
                idx += 1;
            }
        }
    });
    let mass = sums[0];
    if !(mass > T::lit(MIN_TILTED_MASS)) {
        return Err(Error::Domain(format!("tilted mass {mass} underflows; the center is too far from the support")));
    }
    let shift: Vec<T> = (0..n).map(|i| sums[1 + i] / mass).collect();
    let mut covariance = vec![vec![T::zero(); n]; n];
    let mut idx = 1 + n;
    for i in 0..n {
        for j in i..n {
            let c = sums[idx] / mass - shift[i] * shift[j];
            covariance[i][j] = c;
            covariance[j][i] = c;
            idx += 1;
        }
    }
    let mean = m.iter().zip(&shift).map(|(&a, &b)| a + b).collect();
    Ok(TiltedMoments { mass, mean, covariance })
}

/// `T_δ(m)`, the barycenter of the tilt of `ρ` centered at `m`.
pub fn tilt_map<T: Real>(rho: &LogConcavePrior<T>, delta: T, m: &[T], q: &QuadratureSpec<T>) -> Result<Vec<T>> {
    Ok(tilted_moments(rho, delta, m, q)?.mean)
}

/// `δ·λ_max(Cov)` of the tilted law centered at `m`: the operator norm of
/// the Jacobian of `T_δ` at `m`.
pub fn contraction_certificate<T: Real>(
    rho: &LogConcavePrior<T>,
    delta: T,
    m: &[T],
    q: &QuadratureSpec<T>,
) -> Result<T> {
    let mom = tilted_moments(rho, delta, m, q)?;
    Ok(delta * largest_eigenvalue(&mom.covariance))
}

/// Fixed point `m_δ` of `T_δ` by Banach iteration from the barycenter.
pub fn solve_m_delta<T: Real>(
    rho: &LogConcavePrior<T>,
    delta: T,
    q: &QuadratureSpec<T>,
    opts: SolveOptions,
) -> Result<TiltedFixedPointResult<T>> {
    if delta == T::zero() {
        return Ok(TiltedFixedPointResult {
            delta,
            m_delta: rho.barycenter().to_vec(),
            iterations: 0,
            residual: T::zero(),
            lambda_delta: T::zero(),
            c_delta: T::one(),
            g_delta: T::zero(),
            converged: true,
            trace: Vec::new(),
        });
    }
    if !(delta > T::zero()) || !delta.is_finite() {
        return Err(Error::Domain(format!("δ must be finite and nonnegative, got {delta}")));
    }
    let tol = T::lit(opts.tol);
    let mut x = rho.barycenter().to_vec();
    let mut trace = Vec::new();
    for it in 1..=opts.max_iter {
        let next = tilt_map(rho, delta, &x, q)?;
        let step = dist_sq(&next, &x).sqrt();
        trace.push(step);
        let scale = T::one() + norm(&x);
        x = next;
        if step < tol * scale {
            let mom = tilted_moments(rho, delta, &x, q)?;
            let residual = dist_sq(&mom.mean, &x).sqrt();
            let lambda = delta * largest_eigenvalue(&mom.covariance);
            if !(lambda < T::one()) {
                return Err(Error::ContractionViolation { lambda: lambda.to_f64_lossy() });
            }
            return Ok(TiltedFixedPointResult {
                delta,
                m_delta: x,
                iterations: it,
                residual,
                lambda_delta: lambda,
                c_delta: mom.mass,
                g_delta: -mom.mass.ln(),
                converged: true,
                trace,
            });
        }
    }
    Err(Error::Iteration {
        iterations: opts.max_iter,
        last_step: trace.last().map_or(f64::NAN, |s| s.to_f64_lossy()),
        trace: trace.iter().map(|s| s.to_f64_lossy()).collect(),
    })
}

/// `g(δ) = −log ∫ e^{−δ|x−m_δ|²/2} ρ dx`, with `g(0) = 0`.
pub fn g_of_delta<T: Real>(rho: &LogConcavePrior<T>, delta: T, q: &QuadratureSpec<T>) -> Result<T> {
    Ok(solve_m_delta(rho, delta, q, SolveOptions::default())?.g_delta)
}

/// `(δ/2)·Var(ρ)` for `δ < n/Var(ρ)`, `(n/2)(1 + log(δ·Var(ρ)/n))` beyond.
pub fn g_bound<T: Real>(delta: T, var_rho: T, n: usize) -> T {
    let nf = T::from_count(n);
    let two = T::lit(2.0);
    if delta * var_rho < nf {
        delta / two * var_rho
    } else {
        nf / two * (T::one() + (delta * var_rho / nf).ln())
    }
}

/// The measure `μ_δ ∝ e^{−δ|x−m_δ|²/2}ρ`, which is `(K+δ)`-strongly
/// log-concave and so satisfies `LSI(1/(K+δ))`.
pub fn tilted_reference<T: Real>(
    rho: &LogConcavePrior<T>,
    delta: T,
    q: &QuadratureSpec<T>,
) -> Result<(ReferenceMeasure<T>, TiltedFixedPointResult<T>)> {
    if !(delta > T::zero()) {
        return Err(Error::Domain(format!("tilted reference needs δ > 0, got {delta}")));
    }
    let fp = solve_m_delta(rho, delta, q, SolveOptions::default())?;
    let base = rho.base().clone();
    let m1 = fp.m_delta.clone();
    let m2 = fp.m_delta.clone();
    let log_c = fp.c_delta.ln();
    let half = delta / T::lit(2.0);
    let b2 = base.clone();
    let density = DensityOnRn::new(base.support().clone(), move |x: &[T]| {
        base.log_density(x) - half * dist_sq(x, &m1) - log_c
    });
    let density = if b2.has_analytic_score() {
        density.with_score(move |x: &[T]| {
            b2.score(x).into_iter().zip(x.iter().zip(&m2)).map(|(s, (&xi, &mi))| s - delta * (xi - mi)).collect()
        })
    } else {
        density
    }
    .with_label(format!("tilted(delta={delta})"));
    Ok((ReferenceMeasure::bakry_emery(density, rho.k() + delta)?, fp))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArgmaxReport {
    pub delta: f64,
    pub m_delta: Vec<f64>,
    pub grid_argmax: Vec<f64>,
    pub cell_width: f64,
    pub within_one_cell: bool,
    pub directions: usize,
    /// Largest increase of the objective along any outward ray step.
    pub worst_ray_increase: f64,
    pub rays_monotone: bool,
    pub passed: bool,
}

/// Points per axis of the argmax scan.
pub const ARGMAX_POINTS: usize = 41;
const RAY_STEPS: usize = 20;
const RAY_SLACK: f64 = 1e-10;

/// Scans `m ↦ ∫ e^{−δ|x−m|²/2} ρ dx` around `m_δ` (radius `3/√δ`) and along
/// rays from it; failures are reported, not raised.
pub fn verify_argmax<T: Real>(rho: &LogConcavePrior<T>, delta: T, q: &QuadratureSpec<T>) -> Result<ArgmaxReport> {
    let n = rho.dim();
    if n > 2 {
        return Err(Error::Capability(format!("argmax scan supports n ≤ 2, got n = {n}")));
    }
    let fp = solve_m_delta(rho, delta, q, SolveOptions::default())?;
    let objective = |m: &[T]| -> T { tilted_moments(rho, delta, m, q).map(|t| t.mass).unwrap_or_else(|_| T::zero()) };
    let radius = T::lit(3.0) / delta.sqrt();
    let cell = radius * T::lit(2.0) / T::from_count(ARGMAX_POINTS - 1);
    let offsets: Vec<T> = (0..ARGMAX_POINTS).map(|i| -radius + cell * T::from_count(i)).collect();
    let points: Vec<Vec<T>> = if n == 1 {
        offsets.iter().map(|&o| vec![fp.m_delta[0] + o]).collect()
    } else {
        offsets
            .iter()
            .flat_map(|&a| offsets.iter().map(move |&b| (a, b)))
            .map(|(a, b)| vec![fp.m_delta[0] + a, fp.m_delta[1] + b])
            .collect()
    };
    let values: Vec<T> = points.par_iter().map(|p| objective(p)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |bi, (i, &v)| if v > values[bi] { i } else { bi });
    let argmax = &points[best];
    let within = argmax.iter().zip(&fp.m_delta).all(|(&a, &m)| (a - m).abs() <= cell * T::lit(1.000_001));

    let directions: Vec<Vec<T>> = if n == 1 {
        vec![vec![T::one()], vec![-T::one()]]
    } else {
        (0..8)
            .map(|k| {
                let a = T::TAU() * T::from_count(k) / T::lit(8.0);
                vec![a.cos(), a.sin()]
            })
            .collect()
    };
    let step = radius / T::from_count(RAY_STEPS);
    let worst = directions
        .par_iter()
        .map(|dir| {
            let mut prev = fp.c_delta;
            let mut worst = f64::NEG_INFINITY;
            for s in 1..=RAY_STEPS {
                let r = step * T::from_count(s);
                let p: Vec<T> = fp.m_delta.iter().zip(dir).map(|(&m, &d)| m + r * d).collect();
                let v = objective(&p);
                worst = worst.max((v - prev).to_f64_lossy());
                prev = v;
            }
            worst
        })
        .reduce(|| f64::NEG_INFINITY, f64::max);
    let rays_monotone = worst < RAY_SLACK;
    Ok(ArgmaxReport {
        delta: delta.to_f64_lossy(),
        m_delta: fp.m_delta.iter().map(|v| v.to_f64_lossy()).collect(),
        grid_argmax: argmax.iter().map(|v| v.to_f64_lossy()).collect(),
        cell_width: cell.to_f64_lossy(),
        within_one_cell: within,
        directions: directions.len(),
        worst_ray_increase: worst,
        rays_monotone,
        passed: within && rays_monotone,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub deltas: Vec<f64>,
    pub m_deltas: Vec<Vec<f64>>,
    pub max_jump: f64,
    pub refined_max_jump: f64,
    pub jumps_shrink: bool,
    /// `exp(½δ∫|x|²ρ)·∫|x|ρ` per δ.
    pub envelope: Vec<f64>,
    pub envelope_ok: bool,
    pub passed: bool,
    pub note: String,
}

fn max_consecutive_jump<T: Real>(ms: &[TiltedFixedPointResult<T>]) -> f64 {
    ms.windows(2)
        .map(|w| dist_sq(&w[0].m_delta, &w[1].m_delta).sqrt().to_f64_lossy())
        .fold(0.0, f64::max)
}

/// Absolute floor below which consecutive jumps count as zero.
const JUMP_FLOOR: f64 = 1e-9;

/// Solves `m_δ` on `deltas` and on the grid with geometric midpoints
/// inserted; checks that the largest jump shrinks and that `|m_δ|` respects
/// the moment envelope.
pub fn continuity_probe<T: Real>(
    rho: &LogConcavePrior<T>,
    deltas: &[T],
    q: &QuadratureSpec<T>,
) -> Result<ContinuityReport> {
    if deltas.len() < 10 || deltas.windows(2).any(|w| !(w[1] > w[0])) || !(deltas[0] > T::zero()) {
        return Err(Error::Domain("continuity probe needs ≥ 10 increasing positive δ values".into()));
    }
    if deltas[deltas.len() - 1] < deltas[0] * T::lit(10.0) {
        return Err(Error::Domain("continuity probe needs the δ grid to span a decade".into()));
    }
    let solve_all = |ds: &[T]| -> Result<Vec<TiltedFixedPointResult<T>>> {
        ds.par_iter().map(|&d| solve_m_delta(rho, d, q, SolveOptions::default())).collect()
    };
    let coarse = solve_all(deltas)?;
    let mut refined_grid = Vec::with_capacity(2 * deltas.len());
    for w in deltas.windows(2) {
        refined_grid.push(w[0]);
        refined_grid.push((w[0] * w[1]).sqrt());
    }
    refined_grid.push(deltas[deltas.len() - 1]);
    let fine = solve_all(&refined_grid)?;
    let max_jump = max_consecutive_jump(&coarse);
    let refined_max_jump = max_consecutive_jump(&fine);
    // halving the spacing should halve the jump; allow a factor 4
    let jumps_shrink = refined_max_jump <= (2.0 * max_jump).max(JUMP_FLOOR);

    let grid = QuadratureSpec::grid(&q.without_domain(), rho.base().support())?;
    let moments = grid.integrate_many(2, |x, out| {
        let p = rho.base().density(x);
        let r2 = x.iter().fold(T::zero(), |a, &v| a + v * v);
        out[0] = p * r2;
        out[1] = p * r2.sqrt();
    });
    let (m2, m1) = (moments[0].to_f64_lossy(), moments[1].to_f64_lossy());
    let envelope: Vec<f64> = deltas.iter().map(|&d| (0.5 * d.to_f64_lossy() * m2).exp() * m1).collect();
    let envelope_ok = coarse
        .iter()
        .zip(&envelope)
        .all(|(r, &e)| norm(&r.m_delta).to_f64_lossy() <= e * (1.0 + 1e-9) + 1e-12);
    Ok(ContinuityReport {
        deltas: deltas.iter().map(|d| d.to_f64_lossy()).collect(),
        m_deltas: coarse.iter().map(|r| r.m_delta.iter().map(|v| v.to_f64_lossy()).collect()).collect(),
        max_jump,
        refined_max_jump,
        jumps_shrink,
        envelope,
        envelope_ok,
        passed: jumps_shrink && envelope_ok,
        note: "continuity is probed on a finite δ grid only".into(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GRow {
    pub delta: f64,
    pub g: f64,
    pub g_bound: f64,
    pub g_ok: bool,
    /// `D_{μ_δ}(ρ) − I_{μ_δ}(ρ)/(2δ) − log C_δ`.
    pub identity_residual: f64,
    pub identity_ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GInequalityReport {
    pub rows: Vec<GRow>,
    pub monotone: bool,
    pub passed: bool,
}

/// Tolerance of the `g` bound and of the relative-entropy identity.
pub const G_TOLERANCE: f64 = 1e-6;

/// Checks `g(δ) ≤ g_bound(δ)` and the identity
/// `D_{μ_δ}(ρ) = I_{μ_δ}(ρ)/(2δ) + log C_δ` on a δ grid.
pub fn verify_g_inequality<T: Real>(
    rho: &LogConcavePrior<T>,
    deltas: &[T],
    q: &QuadratureSpec<T>,
) -> Result<GInequalityReport> {
    let var = rho.variance();
    let n = rho.dim();
    let rows: Vec<GRow> = deltas
        .par_iter()
        .map(|&delta| -> Result<GRow> {
            let (g, residual) = if delta == T::zero() {
                (T::zero(), T::zero())
            } else {
                let (mu, fp) = tilted_reference(rho, delta, q)?;
                let d = relative_entropy(rho.base(), mu.density(), &q.without_domain())?;
                let i = relative_fisher_information(rho.base(), mu.density(), &q.without_domain())?;
                (fp.g_delta, d - i / (T::lit(2.0) * delta) - fp.c_delta.ln())
            };
            let gb = g_bound(delta, var, n);
            Ok(GRow {
                delta: delta.to_f64_lossy(),
                g: g.to_f64_lossy(),
                g_bound: gb.to_f64_lossy(),
                g_ok: g <= gb + T::lit(G_TOLERANCE),
                identity_residual: residual.to_f64_lossy(),
                identity_ok: residual.abs() <= T::lit(G_TOLERANCE),
            })
        })
        .collect::<Result<_>>()?;
    let sorted = deltas.windows(2).all(|w| w[1] >= w[0]);
    let monotone = !sorted || rows.windows(2).all(|w| w[1].g >= w[0].g - G_TOLERANCE);
    let passed = monotone && rows.iter().all(|r| r.g_ok && r.identity_ok);
    Ok(GInequalityReport { rows, monotone, passed })
}

/// One row of the `g(δ)` sweep export.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GDeltaRow {
    pub delta: f64,
    pub m_delta: Vec<f64>,
    pub c_delta: f64,
    pub g: f64,
    pub g_bound: f64,
    pub lambda: f64,
}

pub fn g_delta_sweep<T: Real>(rho: &LogConcavePrior<T>, deltas: &[T], q: &QuadratureSpec<T>) -> Result<Vec<GDeltaRow>> {
    let var = rho.variance();
    deltas
        .par_iter()
        .map(|&delta| {
            let fp = solve_m_delta(rho, delta, q, SolveOptions::default())?;
            Ok(GDeltaRow {
                delta: delta.to_f64_lossy(),
                m_delta: fp.m_delta.iter().map(|v| v.to_f64_lossy()).collect(),
                c_delta: fp.c_delta.to_f64_lossy(),
                g: fp.g_delta.to_f64_lossy(),
                g_bound: g_bound(delta, var, rho.dim()).to_f64_lossy(),
                lambda: fp.lambda_delta.to_f64_lossy(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests;
