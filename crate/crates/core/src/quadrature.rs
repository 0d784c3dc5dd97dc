//! Tensor-product quadrature over axis-aligned boxes.
//!
//! Every axis is split at its breakpoints (kinks or jumps of the integrand)
//! and, optionally, into panels no wider than a requested width. Each piece
//! receives its own Gauss–Legendre (or trapezoid) rule, and the
//! multidimensional grid is the tensor product of the per-axis rules.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{CompensatedSum, Real};

/// Upper bound on the number of tensor-product nodes in one grid.
pub const MAX_TOTAL_NODES: usize = 10_000_000;
/// Lower bound on nodes per axis.
pub const MIN_NODES_PER_AXIS: usize = 8;
/// Minimum nodes in each panel when an axis is split into panels.
const MIN_NODES_PER_PANEL: usize = 16;
/// Grids with more nodes than this are summed in parallel chunks.
const PARALLEL_THRESHOLD: usize = 16_384;
const CHUNK: usize = 4_096;

/// One axis of a support box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis<T> {
    pub lo: T,
    pub hi: T,
    /// The density jumps to zero at `lo` (as opposed to a truncated tail).
    pub lo_hard: bool,
    /// The density jumps to zero at `hi`.
    pub hi_hard: bool,
    /// Interior points where the integrand is not smooth.
    pub breaks: Vec<T>,
}

impl<T: Real> Axis<T> {
    pub fn soft(lo: T, hi: T) -> Self {
        Self { lo, hi, lo_hard: false, hi_hard: false, breaks: Vec::new() }
    }

    pub fn hard(lo: T, hi: T) -> Self {
        Self { lo, hi, lo_hard: true, hi_hard: true, breaks: Vec::new() }
    }

    pub fn with_breaks(mut self, breaks: Vec<T>) -> Self {
        self.breaks = breaks;
        self
    }

    pub fn len(&self) -> T {
        self.hi - self.lo
    }

    pub fn is_empty(&self) -> bool {
        self.hi <= self.lo
    }

    /// Segment endpoints: `lo`, the interior breakpoints in order, `hi`.
    fn segments(&self) -> Vec<(T, T)> {
        let mut cuts: Vec<T> =
            self.breaks.iter().copied().filter(|&b| b > self.lo && b < self.hi).collect();
        cuts.sort_by(|a, b| a.partial_cmp(b).expect("finite breakpoints"));
        cuts.dedup();
        let mut out = Vec::with_capacity(cuts.len() + 1);
        let mut left = self.lo;
        for c in cuts {
            out.push((left, c));
            left = c;
        }
        out.push((left, self.hi));
        out
    }
}

/// Axis-aligned box holding (up to a negligible tail) the mass of a density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox<T> {
    pub axes: Vec<Axis<T>>,
}

impl<T: Real> SupportBox<T> {
    pub fn new(axes: Vec<Axis<T>>) -> Self {
        Self { axes }
    }

    /// The cube `[lo, hi]^dim` with soft faces.
    pub fn soft_cube(lo: T, hi: T, dim: usize) -> Self {
        Self { axes: (0..dim).map(|_| Axis::soft(lo, hi)).collect() }
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        self.axes.iter().zip(x).all(|(a, &v)| v >= a.lo && v <= a.hi)
    }

    pub fn volume(&self) -> T {
        self.axes.iter().fold(T::one(), |acc, a| acc * a.len())
    }

    pub fn center(&self) -> Vec<T> {
        self.axes.iter().map(|a| (a.lo + a.hi) / T::lit(2.0)).collect()
    }

    pub fn has_hard_face(&self) -> bool {
        self.axes.iter().any(|a| a.lo_hard || a.hi_hard)
    }

    /// Translates every coordinate by `shift`.
    pub fn translated(&self, shift: &[T]) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .zip(shift)
                .map(|(a, &c)| Axis {
                    lo: a.lo + c,
                    hi: a.hi + c,
                    lo_hard: a.lo_hard,
                    hi_hard: a.hi_hard,
                    breaks: a.breaks.iter().map(|&b| b + c).collect(),
                })
                .collect(),
        }
    }

    /// Scales every coordinate by `s > 0`.
    pub fn scaled(&self, s: T) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .map(|a| Axis {
                    lo: a.lo * s,
                    hi: a.hi * s,
                    lo_hard: a.lo_hard,
                    hi_hard: a.hi_hard,
                    breaks: a.breaks.iter().map(|&b| b * s).collect(),
                })
                .collect(),
        }
    }

    /// Intersection with the window `center ± radius` on every axis; `None`
    /// when the intersection is empty on some axis.
    pub fn windowed(&self, center: &[T], radius: T) -> Option<Self> {
        let mut axes = Vec::with_capacity(self.dim());
        for (a, &c) in self.axes.iter().zip(center) {
            let lo = a.lo.max(c - radius);
            let hi = a.hi.min(c + radius);
            if hi <= lo {
                return None;
            }
            axes.push(Axis {
                lo,
                hi,
                lo_hard: a.lo_hard && lo == a.lo,
                hi_hard: a.hi_hard && hi == a.hi,
                breaks: a.breaks.clone(),
            });
        }
        Some(Self { axes })
    }
}

/// One-dimensional rule family used on every segment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    GaussLegendre,
    Trapezoid,
}

/// How to integrate: node counts, rule family, and optional overrides.
#[derive(Clone, Debug, PartialEq)]
pub struct QuadratureSpec<T> {
    /// `None` picks [`QuadratureSpec::default_nodes`] for the dimension.
    pub nodes_per_axis: Option<usize>,
    pub scheme: Scheme,
    /// Replaces the support box of the integrated density when set.
    pub domain: Option<SupportBox<T>>,
    /// Split each segment into panels no wider than this.
    pub max_panel_width: Option<T>,
}

impl<T: Real> Default for QuadratureSpec<T> {
    fn default() -> Self {
        Self { nodes_per_axis: None, scheme: Scheme::GaussLegendre, domain: None, max_panel_width: None }
    }
}

impl<T: Real> QuadratureSpec<T> {
    pub fn new(nodes_per_axis: usize, scheme: Scheme) -> Result<Self> {
        if nodes_per_axis < MIN_NODES_PER_AXIS {
            return Err(Error::Quadrature(format!(
                "nodes_per_axis = {nodes_per_axis} is below the minimum of {MIN_NODES_PER_AXIS}"
            )));
        }
        Ok(Self { nodes_per_axis: Some(nodes_per_axis), scheme, domain: None, max_panel_width: None })
    }

    pub fn with_domain(mut self, domain: SupportBox<T>) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn with_max_panel_width(mut self, width: T) -> Self {
        self.max_panel_width = Some(width);
        self
    }

    /// Same rule settings, no domain override.
    pub fn without_domain(&self) -> Self {
        Self { domain: None, ..self.clone() }
    }

    /// Default node counts: 257 in 1-D, 129 in 2-D, 65 in 3-D, then capped by
    /// the total node guard.
    pub fn default_nodes(dim: usize) -> usize {
        match dim {
            0 | 1 => 257,
            2 => 129,
            3 => 65,
            d => {
                let n = (MAX_TOTAL_NODES as f64).powf(1.0 / d as f64).floor() as usize;
                n.max(MIN_NODES_PER_AXIS)
            }
        }
    }

    pub fn nodes_for_dim(&self, dim: usize) -> usize {
        self.nodes_per_axis.unwrap_or_else(|| Self::default_nodes(dim))
    }

    /// Builds the grid over the domain override if present, else over `support`.
    pub fn grid(&self, support: &SupportBox<T>) -> Result<Grid<T>> {
        let target = self.domain.as_ref().unwrap_or(support);
        Grid::tensor(target, self.nodes_for_dim(target.dim()), self.scheme, self.max_panel_width)
    }
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, cached per order.
pub fn gauss_legendre(n: usize) -> Arc<Vec<(f64, f64)>> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<Vec<(f64, f64)>>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    if let Some(rule) = cache.lock().expect("rule cache poisoned").get(&n) {
        return rule.clone();
    }
    let rule = Arc::new(compute_gauss_legendre(n));
    cache.lock().expect("rule cache poisoned").insert(n, rule.clone());
    rule
}

fn compute_gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    assert!(n >= 1);
    let mut out = vec![(0.0, 0.0); n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess, then Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d != 0.0 {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out[i] = (-x, w);
        out[n - 1 - i] = (x, w);
    }
    if n % 2 == 1 {
        let (_, d) = legendre_with_derivative(n, 0.0);
        out[n / 2] = (0.0, 2.0 / (d * d));
    }
    out
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Nodes and weights of the composite rule on one axis.
pub fn rule_1d<T: Real>(
    axis: &Axis<T>,
    nodes: usize,
    scheme: Scheme,
    max_panel_width: Option<T>,
) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::new();
    let mut ws = Vec::new();
    let two = T::lit(2.0);
    for (a, b) in axis.segments() {
        let len = b - a;
        let panels = match max_panel_width {
            Some(w) if w > T::zero() && len > w => (len / w).ceil().to_usize().unwrap_or(1).max(1),
            _ => 1,
        };
        let per_panel =
            if panels == 1 { nodes } else { nodes.div_ceil(panels).max(MIN_NODES_PER_PANEL) };
        let h = len / T::from_count(panels);
        for p in 0..panels {
            let pa = a + h * T::from_count(p);
            let pb = if p + 1 == panels { b } else { pa + h };
            match scheme {
                Scheme::GaussLegendre => {
                    let half = (pb - pa) / two;
                    let mid = (pa + pb) / two;
                    for &(x, w) in gauss_legendre(per_panel).iter() {
                        xs.push(mid + half * T::lit(x));
                        ws.push(half * T::lit(w));
                    }
                }
                Scheme::Trapezoid => {
                    let m = per_panel.max(2);
                    let step = (pb - pa) / T::from_count(m - 1);
                    for k in 0..m {
                        let x = if k + 1 == m { pb } else { pa + step * T::from_count(k) };
                        let w = if k == 0 || k + 1 == m { step / two } else { step };
                        xs.push(x);
                        ws.push(w);
                    }
                }
            }
        }
    }
    (xs, ws)
}

/// Materialized tensor-product grid; points are stored row-major.
#[derive(Clone, Debug)]
pub struct Grid<T> {
    dim: usize,
    points: Vec<T>,
    weights: Vec<T>,
}

impl<T: Real> Grid<T> {
    pub fn tensor(
        support: &SupportBox<T>,
        nodes_per_axis: usize,
        scheme: Scheme,
        max_panel_width: Option<T>,
    ) -> Result<Self> {
        if nodes_per_axis < MIN_NODES_PER_AXIS {
            return Err(Error::Quadrature(format!(
                "nodes_per_axis = {nodes_per_axis} is below the minimum of {MIN_NODES_PER_AXIS}"
            )));
        }
        for (i, a) in support.axes.iter().enumerate() {
            if !(a.lo.is_finite() && a.hi.is_finite()) || a.is_empty() {
                return Err(Error::Quadrature(format!("axis {i} is not a finite nonempty interval")));
            }
        }
        let rules: Vec<(Vec<T>, Vec<T>)> = support
            .axes
            .iter()
            .map(|a| rule_1d(a, nodes_per_axis, scheme, max_panel_width))
            .collect();
        let total = rules.iter().try_fold(1usize, |acc, (x, _)| acc.checked_mul(x.len()));
        let total = match total {
            Some(t) if t <= MAX_TOTAL_NODES => t,
            _ => {
                return Err(Error::Quadrature(format!(
                    "tensor grid exceeds the {MAX_TOTAL_NODES} node guard"
                )))
            }
        };
        let dim = support.dim();
        let mut points = Vec::with_capacity(total * dim);
        let mut weights = Vec::with_capacity(total);
        let mut idx = vec![0usize; dim];
        for _ in 0..total {
            let mut w = T::one();
            for (d, &i) in idx.iter().enumerate() {
                points.push(rules[d].0[i]);
                w = w * rules[d].1[i];
            }
            weights.push(w);
            // odometer, last axis fastest
            for d in (0..dim).rev() {
                idx[d] += 1;
                if idx[d] < rules[d].0.len() {
                    break;
                }
                idx[d] = 0;
            }
        }
        Ok(Self { dim, points, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[T] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn weight(&self, i: usize) -> T {
        self.weights[i]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[T], T)> + '_ {
        self.points.chunks_exact(self.dim.max(1)).zip(self.weights.iter().copied())
    }

    /// `∫ f` with compensated, order-independent summation.
    pub fn integrate<F>(&self, f: F) -> T
    where
        F: Fn(&[T]) -> T + Sync,
    {
        self.integrate_many(1, |x, out| out[0] = f(x))[0]
    }

    /// Integrates `k` functions at once; `f` writes the integrand values.
    pub fn integrate_many<F>(&self, k: usize, f: F) -> Vec<T>
    where
        F: Fn(&[T], &mut [T]) + Sync,
    {
        let chunk_sums = |range: std::ops::Range<usize>| {
            let mut acc = vec![CompensatedSum::<T>::new(); k];
            let mut buf = vec![T::zero(); k];
            for i in range {
                buf.iter_mut().for_each(|b| *b = T::zero());
                f(self.point(i), &mut buf);
                let w = self.weights[i];
                for (a, &v) in acc.iter_mut().zip(&buf) {
                    a.add(w * v);
                }
            }
            acc.iter().map(|a| a.value()).collect::<Vec<T>>()
        };
        let n = self.len();
        let partials: Vec<Vec<T>> = if n > PARALLEL_THRESHOLD {
            (0..n.div_ceil(CHUNK))
                .into_par_iter()
                .map(|c| chunk_sums(c * CHUNK..((c + 1) * CHUNK).min(n)))
                .collect()
        } else {
            vec![chunk_sums(0..n)]
        };
        let mut total = vec![CompensatedSum::<T>::new(); k];
        for p in &partials {
            for (t, &v) in total.iter_mut().zip(p) {
                t.add(v);
            }
        }
        total.iter().map(|t| t.value()).collect()
    }
}
