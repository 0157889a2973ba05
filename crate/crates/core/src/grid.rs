//! Uniform boundary grids, sampled fields and the quadrature/convolution
//! primitives shared by every numeric module.
//!
//! A [`BoundaryGrid`] discretizes `[-R, R)^dim` (the boundary hyperplane of
//! the half-space, `dim = n - 1`) with `N` nodes per axis. Node `k` carries
//! the left-endpoint cell `[x_k, x_k + h)^dim`; all integrals are left
//! Riemann sums. Multi-dimensional arrays are row-major with the last axis
//! fastest, so for `dim = 2` node `k` has axis indices `(k / N, k % N)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fft::GridFft;

pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GridError {
    #[error("points per axis must be a power of two, got {0}")]
    NonPowerOfTwo(usize),
    #[error("points per axis must be at least 8, got {0}")]
    TooFewPoints(usize),
    #[error("half width must be positive and finite, got {0}")]
    NonPositiveHalfWidth(f64),
    #[error("boundary dimension must be 1 or 2, got {0}")]
    UnsupportedDimension(usize),
    #[error("non-finite sample at node {node}")]
    NonFiniteSample { node: usize },
    #[error("operands live on different grids")]
    GridMismatch,
    #[error("channel mismatch: expected {expected}, got {got}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("value array has length {got}, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("heights must be positive, finite and strictly increasing")]
    InvalidHeights,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGrid {
    dim: usize,
    half_width: f64,
    points_per_axis: usize,
}

impl BoundaryGrid {
    pub fn new(dim: usize, half_width: f64, points_per_axis: usize) -> Result<Self, GridError> {
        if !(1..=2).contains(&dim) {
            return Err(GridError::UnsupportedDimension(dim));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(GridError::NonPositiveHalfWidth(half_width));
        }
        if !points_per_axis.is_power_of_two() {
            return Err(GridError::NonPowerOfTwo(points_per_axis));
        }
        if points_per_axis < 8 {
            return Err(GridError::TooFewPoints(points_per_axis));
        }
        Ok(Self {
            dim,
            half_width,
            points_per_axis,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn points_per_axis(&self) -> usize {
        self.points_per_axis
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / self.points_per_axis as f64
    }

    /// `h^dim`, the measure of one cell.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn node_count(&self) -> usize {
        self.points_per_axis.pow(self.dim as u32)
    }

    /// Coordinate of axis index `i`.
    pub fn axis_coord(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.spacing()
    }

    /// Axis index of the origin.
    pub fn origin_axis_index(&self) -> usize {
        self.points_per_axis / 2
    }

    pub fn origin_index(&self) -> usize {
        let o = self.origin_axis_index();
        if self.dim == 1 {
            o
        } else {
            o * self.points_per_axis + o
        }
    }

    /// Per-axis indices of node `k` (unused axes are zero).
    pub fn axis_indices(&self, k: usize) -> [usize; 2] {
        let n = self.points_per_axis;
        if self.dim == 1 {
            [k, 0]
        } else {
            [k / n, k % n]
        }
    }

    pub fn index_of(&self, idx: [usize; 2]) -> usize {
        if self.dim == 1 {
            idx[0]
        } else {
            idx[0] * self.points_per_axis + idx[1]
        }
    }

    /// Node coordinates; the second entry is zero when `dim == 1`.
    pub fn node(&self, k: usize) -> [f64; 2] {
        let idx = self.axis_indices(k);
        if self.dim == 1 {
            [self.axis_coord(idx[0]), 0.0]
        } else {
            [self.axis_coord(idx[0]), self.axis_coord(idx[1])]
        }
    }

    pub fn node_norm(&self, k: usize) -> f64 {
        let x = self.node(k);
        (x[0] * x[0] + x[1] * x[1]).sqrt()
    }

    /// Nearest node index to a point (clamped to the grid).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let n = self.points_per_axis as f64;
        let mut idx = [0usize; 2];
        for (a, slot) in idx.iter_mut().enumerate().take(self.dim) {
            let i = ((x[a] + self.half_width) / h).round().clamp(0.0, n - 1.0);
            *slot = i as usize;
        }
        self.index_of(idx)
    }
}

/// Sampled `C^M`-valued data on a boundary grid, stored node-major.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryField {
    grid: BoundaryGrid,
    channels: usize,
    values: Vec<C64>,
}

impl BoundaryField {
    pub fn new(grid: BoundaryGrid, channels: usize, values: Vec<C64>) -> Result<Self, GridError> {
        let expected = grid.node_count() * channels;
        if values.len() != expected {
            return Err(GridError::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GridError::NonFiniteSample {
                node: pos / channels.max(1),
            });
        }
        Ok(Self {
            grid,
            channels,
            values,
        })
    }

    pub fn zeros(grid: &BoundaryGrid, channels: usize) -> Self {
        Self {
            grid: grid.clone(),
            channels,
            values: vec![ZERO; grid.node_count() * channels],
        }
    }

    /// Single-channel real field.
    pub fn from_real(grid: &BoundaryGrid, values: Vec<f64>) -> Result<Self, GridError> {
        Self::new(
            grid.clone(),
            1,
            values.into_iter().map(|v| C64::new(v, 0.0)).collect(),
        )
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn at(&self, node: usize) -> &[C64] {
        &self.values[node * self.channels..(node + 1) * self.channels]
    }

    pub fn channel(&self, beta: usize) -> Vec<C64> {
        self.values
            .iter()
            .skip(beta)
            .step_by(self.channels)
            .copied()
            .collect()
    }

    /// Euclidean modulus over channels at every node.
    pub fn modulus(&self) -> Vec<f64> {
        self.values
            .chunks(self.channels)
            .map(|c| c.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt())
            .collect()
    }

    /// Real parts of a single-channel field.
    pub fn real_values(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            grid: self.grid.clone(),
            channels: self.channels,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, GridError> {
        self.check_compatible(other)?;
        Ok(Self {
            grid: self.grid.clone(),
            channels: self.channels,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, GridError> {
        self.add(&other.scale(C64::new(-1.0, 0.0)))
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Circular shift by whole nodes along each axis.
    pub fn roll(&self, shift: [i64; 2]) -> Self {
        let n = self.grid.points_per_axis as i64;
        let mut out = vec![ZERO; self.values.len()];
        for k in 0..self.grid.node_count() {
            let idx = self.grid.axis_indices(k);
            let mut dst = [0usize; 2];
            for a in 0..self.grid.dim {
                dst[a] = (idx[a] as i64 + shift[a]).rem_euclid(n) as usize;
            }
            let d = self.grid.index_of(dst);
            out[d * self.channels..(d + 1) * self.channels].copy_from_slice(self.at(k));
        }
        Self {
            grid: self.grid.clone(),
            channels: self.channels,
            values: out,
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<(), GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        if self.channels != other.channels {
            return Err(GridError::ChannelMismatch {
                expected: self.channels,
                got: other.channels,
            });
        }
        Ok(())
    }
}

/// Solution samples on a stack of horizontal slices `t = heights[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct HalfSpaceField {
    grid: BoundaryGrid,
    heights: Vec<f64>,
    channels: usize,
    values: Vec<C64>,
}

impl HalfSpaceField {
    pub fn from_slices(heights: Vec<f64>, slices: Vec<BoundaryField>) -> Result<Self, GridError> {
        check_heights(&heights)?;
        if slices.len() != heights.len() || slices.is_empty() {
            return Err(GridError::ShapeMismatch {
                expected: heights.len(),
                got: slices.len(),
            });
        }
        let grid = slices[0].grid.clone();
        let channels = slices[0].channels;
        let mut values = Vec::with_capacity(grid.node_count() * channels * heights.len());
        for s in &slices {
            if s.grid != grid {
                return Err(GridError::GridMismatch);
            }
            if s.channels != channels {
                return Err(GridError::ChannelMismatch {
                    expected: channels,
                    got: s.channels,
                });
            }
            values.extend_from_slice(&s.values);
        }
        Ok(Self {
            grid,
            heights,
            channels,
            values,
        })
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn slice(&self, i: usize) -> BoundaryField {
        let len = self.grid.node_count() * self.channels;
        BoundaryField {
            grid: self.grid.clone(),
            channels: self.channels,
            values: self.values[i * len..(i + 1) * len].to_vec(),
        }
    }

    /// Index of a stored height equal to `t` up to a relative `1e-12`.
    pub fn height_index(&self, t: f64) -> Option<usize> {
        self.heights
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
    }

    /// Keep only the slices whose indices are listed.
    pub fn select(&self, indices: &[usize]) -> Result<Self, GridError> {
        let heights = indices.iter().map(|&i| self.heights[i]).collect();
        let slices = indices.iter().map(|&i| self.slice(i)).collect();
        Self::from_slices(heights, slices)
    }
}

pub(crate) fn check_heights(heights: &[f64]) -> Result<(), GridError> {
    let ok = heights.iter().all(|t| *t > 0.0 && t.is_finite())
        && heights.windows(2).all(|w| w[0] < w[1]);
    if ok {
        Ok(())
    } else {
        Err(GridError::InvalidHeights)
    }
}

/// Samples of an `M x M` kernel on the grid, centred so that node `k`
/// holds the value at offset `x_k` (the origin sits at `origin_index`).
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    grid: BoundaryGrid,
    m: usize,
    t: f64,
    values: Vec<C64>,
}

impl KernelMatrix {
    pub fn new(grid: BoundaryGrid, m: usize, t: f64, values: Vec<C64>) -> Result<Self, GridError> {
        let expected = grid.node_count() * m * m;
        if values.len() != expected {
            return Err(GridError::ShapeMismatch {
                expected,
                got: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GridError::NonFiniteSample { node: pos / (m * m) });
        }
        Ok(Self { grid, m, t, values })
    }

    /// Build from per-node matrices.
    pub fn from_fn(
        grid: &BoundaryGrid,
        m: usize,
        t: f64,
        mut f: impl FnMut(usize) -> DMatrix<C64>,
    ) -> Result<Self, GridError> {
        let mut values = Vec::with_capacity(grid.node_count() * m * m);
        for k in 0..grid.node_count() {
            let mat = f(k);
            for a in 0..m {
                for b in 0..m {
                    values.push(mat[(a, b)]);
                }
            }
        }
        Self::new(grid.clone(), m, t, values)
    }

    /// Discrete delta: `I / h^dim` at the origin node, zero elsewhere.
    pub fn delta(grid: &BoundaryGrid, m: usize) -> Self {
        let mut values = vec![ZERO; grid.node_count() * m * m];
        let o = grid.origin_index();
        let w = 1.0 / grid.cell_volume();
        for a in 0..m {
            values[(o * m + a) * m + a] = C64::new(w, 0.0);
        }
        Self {
            grid: grid.clone(),
            m,
            t: 0.0,
            values,
        }
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn entry(&self, node: usize, a: usize, b: usize) -> C64 {
        self.values[(node * self.m + a) * self.m + b]
    }

    pub fn at(&self, node: usize) -> DMatrix<C64> {
        DMatrix::from_fn(self.m, self.m, |a, b| self.entry(node, a, b))
    }

    /// Entry `(a, b)` as a single-channel field.
    pub fn component(&self, a: usize, b: usize) -> BoundaryField {
        let values = (0..self.grid.node_count())
            .map(|k| self.entry(k, a, b))
            .collect();
        BoundaryField {
            grid: self.grid.clone(),
            channels: 1,
            values,
        }
    }

    /// Riemann sum of the matrix samples.
    pub fn integral(&self) -> DMatrix<C64> {
        let mut acc = DMatrix::from_element(self.m, self.m, ZERO);
        for k in 0..self.grid.node_count() {
            for a in 0..self.m {
                for b in 0..self.m {
                    acc[(a, b)] += self.entry(k, a, b);
                }
            }
        }
        acc * C64::new(self.grid.cell_volume(), 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    /// Max entrywise difference to another kernel, optionally restricted to
    /// nodes with `|x'| <= radius`.
    pub fn max_diff(&self, other: &Self, radius: Option<f64>) -> Result<f64, GridError> {
        if self.grid != other.grid {
            return Err(GridError::GridMismatch);
        }
        if self.m != other.m {
            return Err(GridError::ChannelMismatch {
                expected: self.m,
                got: other.m,
            });
        }
        let mm = self.m * self.m;
        let mut worst: f64 = 0.0;
        for k in 0..self.grid.node_count() {
            if radius.is_some_and(|r| self.grid.node_norm(k) > r) {
                continue;
            }
            for j in 0..mm {
                worst = worst.max((self.values[k * mm + j] - other.values[k * mm + j]).norm());
            }
        }
        Ok(worst)
    }
}

/// Sample a pointwise function at every node.
pub fn sample(
    grid: &BoundaryGrid,
    channels: usize,
    f: impl Fn(&[f64], &mut [C64]),
) -> Result<BoundaryField, GridError> {
    let mut values = vec![ZERO; grid.node_count() * channels];
    for k in 0..grid.node_count() {
        let x = grid.node(k);
        let out = &mut values[k * channels..(k + 1) * channels];
        f(&x[..grid.dim()], out);
        if out.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(GridError::NonFiniteSample { node: k });
        }
    }
    Ok(BoundaryField {
        grid: grid.clone(),
        channels,
        values,
    })
}

/// Single-channel real convenience wrapper around [`sample`].
pub fn sample_real(grid: &BoundaryGrid, f: impl Fn(&[f64]) -> f64) -> Result<BoundaryField, GridError> {
    sample(grid, 1, |x, out| out[0] = C64::new(f(x), 0.0))
}

/// Indicator of the open Euclidean ball.
pub fn ball_indicator(grid: &BoundaryGrid, center: &[f64], radius: f64) -> BoundaryField {
    sample_real(grid, |x| {
        let r2: f64 = x.iter().zip(center).map(|(a, c)| (a - c) * (a - c)).sum();
        if r2 < radius * radius {
            1.0
        } else {
            0.0
        }
    })
    .expect("indicator samples are finite")
}

/// Indicator of the open axis-aligned cube with the given centre and side.
pub fn cube_indicator(grid: &BoundaryGrid, center: &[f64], side: f64) -> BoundaryField {
    sample_real(grid, |x| {
        let inside = x
            .iter()
            .zip(center)
            .all(|(a, c)| (a - c).abs() < 0.5 * side);
        if inside {
            1.0
        } else {
            0.0
        }
    })
    .expect("indicator samples are finite")
}

/// Left Riemann sum `h^dim * sum_k f(x_k)`, per channel.
pub fn integrate(field: &BoundaryField) -> Vec<C64> {
    let mut acc = vec![ZERO; field.channels];
    for chunk in field.values.chunks(field.channels) {
        for (a, v) in acc.iter_mut().zip(chunk) {
            *a += v;
        }
    }
    let w = field.grid.cell_volume();
    acc.into_iter().map(|v| v * w).collect()
}

/// Inverse transform of a product spectrum of two centred operands, undoing
/// the `N/2` offset each carries: `c[l] = sum_i a[i] b[l - i + N/2]` per axis.
fn inverse_centred(plan: &GridFft, grid: &BoundaryGrid, mut spectrum: Vec<C64>) -> Vec<C64> {
    plan.inverse(&mut spectrum);
    let half = grid.origin_axis_index() as i64;
    let n = grid.points_per_axis() as i64;
    let mut out = vec![ZERO; spectrum.len()];
    for (l, slot) in out.iter_mut().enumerate() {
        let idx = grid.axis_indices(l);
        let mut src = [0usize; 2];
        for ax in 0..grid.dim() {
            src[ax] = (idx[ax] as i64 + half).rem_euclid(n) as usize;
        }
        *slot = spectrum[grid.index_of(src)];
    }
    out
}

fn kernel_hats(plan: &GridFft, kernel: &KernelMatrix) -> Vec<Vec<C64>> {
    let m = kernel.m;
    let nodes = kernel.grid.node_count();
    let mut hats = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let mut comp: Vec<C64> = (0..nodes).map(|k| kernel.entry(k, a, b)).collect();
            plan.forward(&mut comp);
            hats.push(comp);
        }
    }
    hats
}

/// `u(x') = (K * f)(x')` on the periodized grid via FFT, with the matrix
/// kernel acting on the channel index.
pub fn fft_convolve(kernel: &KernelMatrix, f: &BoundaryField) -> Result<BoundaryField, GridError> {
    if kernel.grid != f.grid {
        return Err(GridError::GridMismatch);
    }
    if kernel.m != f.channels {
        return Err(GridError::ChannelMismatch {
            expected: kernel.m,
            got: f.channels,
        });
    }
    let grid = &f.grid;
    let m = kernel.m;
    let nodes = grid.node_count();
    let plan = GridFft::new(grid.dim(), grid.points_per_axis());
    let k_hat = kernel_hats(&plan, kernel);
    let f_hat: Vec<Vec<C64>> = (0..m)
        .map(|b| {
            let mut c = f.channel(b);
            plan.forward(&mut c);
            c
        })
        .collect();
    let w = grid.cell_volume();
    let mut values = vec![ZERO; nodes * m];
    for a in 0..m {
        let mut acc = vec![ZERO; nodes];
        for b in 0..m {
            for ((s, kh), fh) in acc.iter_mut().zip(&k_hat[a * m + b]).zip(&f_hat[b]) {
                *s += kh * fh;
            }
        }
        let out = inverse_centred(&plan, grid, acc);
        for (k, v) in out.into_iter().enumerate() {
            values[k * m + a] = v * w;
        }
    }
    BoundaryField::new(grid.clone(), m, values)
}

/// Matrix product convolution of two kernels, `(K1 * K2)_{ac} = sum_b K1_{ab} * K2_{bc}`.
pub fn fft_convolve_kernels(k1: &KernelMatrix, k2: &KernelMatrix) -> Result<KernelMatrix, GridError> {
    if k1.grid != k2.grid {
        return Err(GridError::GridMismatch);
    }
    if k1.m != k2.m {
        return Err(GridError::ChannelMismatch {
            expected: k1.m,
            got: k2.m,
        });
    }
    let grid = &k1.grid;
    let m = k1.m;
    let nodes = grid.node_count();
    let plan = GridFft::new(grid.dim(), grid.points_per_axis());
    let h1 = kernel_hats(&plan, k1);
    let h2 = kernel_hats(&plan, k2);
    let w = grid.cell_volume();
    let mut values = vec![ZERO; nodes * m * m];
    for a in 0..m {
        for c in 0..m {
            let mut acc = vec![ZERO; nodes];
            for b in 0..m {
                for ((s, x), y) in acc.iter_mut().zip(&h1[a * m + b]).zip(&h2[b * m + c]) {
                    *s += x * y;
                }
            }
            let out = inverse_centred(&plan, grid, acc);
            for (k, v) in out.into_iter().enumerate() {
                values[(k * m + a) * m + c] = v * w;
            }
        }
    }
    KernelMatrix::new(grid.clone(), m, k1.t + k2.t, values)
}

/// Non-periodized truncated sum `h^dim sum_j K(x_l - x_j) f(x_j)`, keeping
/// only offsets that fall inside the sampled kernel window.
pub fn direct_convolve(kernel: &KernelMatrix, f: &BoundaryField) -> Result<BoundaryField, GridError> {
    if kernel.grid != f.grid {
        return Err(GridError::GridMismatch);
    }
    if kernel.m != f.channels {
        return Err(GridError::ChannelMismatch {
            expected: kernel.m,
            got: f.channels,
        });
    }
    let grid = &f.grid;
    let m = kernel.m;
    let nodes = grid.node_count();
    let half = grid.origin_axis_index() as i64;
    let n = grid.points_per_axis() as i64;
    let w = grid.cell_volume();
    let mut values = vec![ZERO; nodes * m];
    for l in 0..nodes {
        let li = grid.axis_indices(l);
        for j in 0..nodes {
            let fj = f.at(j);
            if fj.iter().all(|v| *v == ZERO) {
                continue;
            }
            let ji = grid.axis_indices(j);
            let mut ki = [0usize; 2];
            let mut inside = true;
            for ax in 0..grid.dim() {
                let d = li[ax] as i64 - ji[ax] as i64 + half;
                if !(0..n).contains(&d) {
                    inside = false;
                    break;
                }
                ki[ax] = d as usize;
            }
            if !inside {
                continue;
            }
            let k = grid.index_of(ki);
            for a in 0..m {
                let mut s = ZERO;
                for (b, v) in fj.iter().enumerate() {
                    s += kernel.entry(k, a, b) * v;
                }
                values[l * m + a] += s * w;
            }
        }
    }
    BoundaryField::new(grid.clone(), m, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(r: f64, n: usize) -> BoundaryGrid {
        BoundaryGrid::new(1, r, n).unwrap()
    }

    #[test]
    fn grid_construction() {
        let g = line(16.0, 64);
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.node_count(), 64);
        let g2 = BoundaryGrid::new(2, 8.0, 32).unwrap();
        assert_eq!(g2.node_count(), 1024);
        assert_eq!(g2.spacing(), 0.5);
        assert_eq!(BoundaryGrid::new(1, 16.0, 63), Err(GridError::NonPowerOfTwo(63)));
        assert_eq!(BoundaryGrid::new(1, 16.0, 4), Err(GridError::TooFewPoints(4)));
        assert!(matches!(
            BoundaryGrid::new(1, 0.0, 64),
            Err(GridError::NonPositiveHalfWidth(_))
        ));
        assert_eq!(BoundaryGrid::new(3, 1.0, 64), Err(GridError::UnsupportedDimension(3)));
    }

    #[test]
    fn node_layout_2d() {
        let g = BoundaryGrid::new(2, 4.0, 8).unwrap();
        assert_eq!(g.node(g.origin_index()), [0.0, 0.0]);
        let k = g.index_of([1, 5]);
        assert_eq!(g.node(k), [-3.0, 1.0]);
        assert_eq!(g.nearest_node(&[-3.1, 0.9]), k);
    }

    #[test]
    fn constant_and_indicator_sampling() {
        let g = line(4.0, 16);
        let ones = sample_real(&g, |_| 1.0).unwrap();
        assert!(ones.values().iter().all(|v| *v == C64::new(1.0, 0.0)));
        let ind = ball_indicator(&g, &[0.0], 1.0);
        for k in 0..g.node_count() {
            let x = g.node(k)[0];
            let expect = if x.abs() < 1.0 { 1.0 } else { 0.0 };
            assert_eq!(ind.values()[k].re, expect, "node {x}");
        }
    }

    #[test]
    fn non_finite_sample_is_rejected() {
        let g = line(4.0, 16);
        let err = sample_real(&g, |x| 1.0 / x[0]).unwrap_err();
        assert_eq!(err, GridError::NonFiniteSample { node: 8 });
    }

    #[test]
    fn integrate_constant_and_indicator() {
        let g = line(16.0, 64);
        let ones = sample_real(&g, |_| 1.0).unwrap();
        assert!((integrate(&ones)[0].re - 32.0).abs() < 1e-12);
        let fine = line(16.0, 512);
        let ind = cube_indicator(&fine, &[0.0], 2.0);
        assert!((integrate(&ind)[0].re - 2.0).abs() <= fine.spacing());
    }

    #[test]
    fn integrate_harmonic_profile() {
        let g = line(64.0, 4096);
        let p = sample_real(&g, |x| 1.0 / (std::f64::consts::PI * (1.0 + x[0] * x[0]))).unwrap();
        let exact = 2.0 / std::f64::consts::PI * 64f64.atan();
        assert!((integrate(&p)[0].re - exact).abs() < 1e-9);
        assert!((exact - 0.9901).abs() < 1e-4);
    }

    #[test]
    fn first_order_convergence_of_riemann_sums() {
        // one-sided exponential: the jump at the origin node leaves an O(h) error
        let f = |x: &[f64]| if x[0] >= 0.0 { (-x[0]).exp() } else { 0.0 };
        let mut errs = Vec::new();
        for n in [256, 512, 1024, 2048] {
            let g = line(32.0, n);
            let v = integrate(&sample_real(&g, f).unwrap())[0].re;
            errs.push((v - 1.0).abs());
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!(ratio > 1.7 && ratio < 2.3, "ratio {ratio}");
        }
    }

    #[test]
    fn delta_kernel_is_identity() {
        let g = BoundaryGrid::new(2, 4.0, 16).unwrap();
        let f = sample(&g, 2, |x, out| {
            out[0] = C64::new(x[0].sin(), x[1]);
            out[1] = C64::new(x[0] * x[1], -1.0);
        })
        .unwrap();
        let d = KernelMatrix::delta(&g, 2);
        let u = fft_convolve(&d, &f).unwrap();
        let v = direct_convolve(&d, &f).unwrap();
        for ((a, b), c) in u.values().iter().zip(v.values()).zip(f.values()) {
            assert!((a - c).norm() < 1e-12);
            assert!((b - c).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_inputs_give_zero() {
        let g = line(4.0, 32);
        let f = BoundaryField::zeros(&g, 1);
        let k = KernelMatrix::from_fn(&g, 1, 1.0, |k| DMatrix::from_element(1, 1, C64::new(g.node(k)[0].cos(), 0.0))).unwrap();
        assert_eq!(fft_convolve(&k, &f).unwrap().max_abs(), 0.0);
        let f1 = sample_real(&g, |x| x[0]).unwrap();
        let z = KernelMatrix::new(g.clone(), 1, 1.0, vec![ZERO; 32]).unwrap();
        assert_eq!(direct_convolve(&z, &f1).unwrap().max_abs(), 0.0);
        assert_eq!(fft_convolve(&z, &f1).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn mismatched_grids_are_rejected() {
        let g = line(4.0, 32);
        let g2 = line(4.0, 64);
        let f = BoundaryField::zeros(&g2, 1);
        let d = KernelMatrix::delta(&g, 1);
        assert_eq!(fft_convolve(&d, &f), Err(GridError::GridMismatch));
        let f2 = BoundaryField::zeros(&g, 2);
        assert!(matches!(fft_convolve(&d, &f2), Err(GridError::ChannelMismatch { .. })));
    }

    #[test]
    fn delta_convolved_with_kernel_is_kernel() {
        let g = line(8.0, 64);
        let k = KernelMatrix::from_fn(&g, 1, 1.0, |k| {
            let x = g.node(k)[0];
            DMatrix::from_element(1, 1, C64::new(1.0 / (1.0 + x * x), 0.0))
        })
        .unwrap();
        let d = KernelMatrix::delta(&g, 1);
        let kd = fft_convolve_kernels(&k, &d).unwrap();
        assert!(kd.max_diff(&k, None).unwrap() < 1e-13);
    }

    #[test]
    fn roll_matches_translation() {
        let g = line(4.0, 16);
        let f = sample_real(&g, |x| x[0]).unwrap();
        let r = f.roll([3, 0]);
        assert_eq!(r.values()[5], f.values()[2]);
        assert_eq!(r.values()[1], f.values()[14]);
    }
}
