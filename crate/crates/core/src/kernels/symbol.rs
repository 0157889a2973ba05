//! Poisson kernels from the boundary symbol.
//!
//! For a tangential frequency `xi'` the decaying solutions of
//! `L(e^{i x'.xi'} v(t)) = 0` solve `A v'' + i B v' - C v = 0` with
//! `A = a_{nn}`, `B = sum_{r<n} xi_r (a_{rn} + a_{nr})`,
//! `C = sum_{r,s<n} xi_r xi_s a_{rs}`. The stable invariant subspace of the
//! companion matrix is taken from an ordered complex Schur form, which stays
//! well defined when the pencil has repeated roots, and gives
//! `K(xi', t) = W_top exp(T_11 t) W_top^{-1}`.

use nalgebra::{DMatrix, Schur};
use rayon::prelude::*;

use super::KernelError;
use crate::fft::{signed_index, GridFft};
use crate::grid::{BoundaryGrid, KernelMatrix, C64};
use crate::systems::{CMat, EllipticSystem};

/// Real parts below `-SPLIT_TOL` (for unit frequency) count as decaying.
pub const SPLIT_TOL: f64 = 1e-10;
/// Largest accepted condition number of `W_top`.
pub const MAX_BASIS_COND: f64 = 1e8;

/// Decay data for one unit tangential direction.
#[derive(Clone, Debug)]
pub(crate) struct StableFactor {
    w_top: CMat,
    w_inv: CMat,
    t11: CMat,
}

impl StableFactor {
    /// `K(xi', t)` for `|xi'| = scale` along this direction.
    fn hat(&self, scale: f64, t: f64) -> CMat {
        let e = (&self.t11 * C64::new(scale * t, 0.0)).exp();
        &self.w_top * e * &self.w_inv
    }
}

/// Swap the adjacent diagonal entries `k, k+1` of the upper-triangular `t`
/// by a unitary rotation, updating the Schur vectors `q`.
fn swap_diagonal(t: &mut CMat, q: &mut CMat, k: usize) {
    let a = t[(k, k)];
    let b = t[(k, k + 1)];
    let d = t[(k + 1, k + 1)];
    let (x1, x2) = (b, d - a);
    let r = (x1.norm_sqr() + x2.norm_sqr()).sqrt();
    if r == 0.0 {
        return;
    }
    let (g11, g21) = (x1 / r, x2 / r);
    let (g12, g22) = (-g21.conj(), g11.conj());
    let n = t.nrows();
    // t <- G^H t on rows k, k+1
    for j in 0..n {
        let (u, v) = (t[(k, j)], t[(k + 1, j)]);
        t[(k, j)] = g11.conj() * u + g21.conj() * v;
        t[(k + 1, j)] = g12.conj() * u + g22.conj() * v;
    }
    // t <- t G and q <- q G on columns k, k+1
    for m in [&mut *t, &mut *q] {
        for i in 0..m.nrows() {
            let (u, v) = (m[(i, k)], m[(i, k + 1)]);
            m[(i, k)] = u * g11 + v * g21;
            m[(i, k + 1)] = u * g12 + v * g22;
        }
    }
    t[(k + 1, k)] = C64::new(0.0, 0.0);
}

/// Stable factor for the unit direction `dir` (length `n - 1`).
pub(crate) fn stable_factor(sys: &EllipticSystem, dir: &[f64]) -> Result<StableFactor, KernelError> {
    let m = sys.m();
    let a = sys.normal_block();
    let b = sys.mixed_block(dir);
    let c = sys.tangential_block(dir);
    let a_inv = a.try_inverse().ok_or(KernelError::SplittingFailure { stable: 0, expected: m })?;
    let i = C64::new(0.0, 1.0);
    let mut comp: CMat = DMatrix::zeros(2 * m, 2 * m);
    comp.view_mut((0, m), (m, m)).copy_from(&DMatrix::identity(m, m));
    comp.view_mut((m, 0), (m, m)).copy_from(&(&a_inv * c));
    comp.view_mut((m, m), (m, m)).copy_from(&(-(&a_inv * b) * i));
    let schur = Schur::try_new(comp, f64::EPSILON, 0)
        .ok_or(KernelError::SplittingFailure { stable: 0, expected: m })?;
    let (mut q, mut t) = schur.unpack();
    for k in 1..2 * m {
        for j in 0..k {
            t[(k, j)] = C64::new(0.0, 0.0);
        }
    }
    let re: Vec<f64> = (0..2 * m).map(|k| t[(k, k)].re).collect();
    if re.iter().any(|r| r.abs() <= SPLIT_TOL) {
        let stable = re.iter().filter(|r| **r < -SPLIT_TOL).count();
        return Err(KernelError::SplittingFailure { stable, expected: m });
    }
    let stable = re.iter().filter(|r| **r < 0.0).count();
    if stable != m {
        return Err(KernelError::SplittingFailure { stable, expected: m });
    }
    // bubble decaying eigenvalues to the front
    loop {
        let mut swapped = false;
        for k in 0..2 * m - 1 {
            if t[(k, k)].re > 0.0 && t[(k + 1, k + 1)].re < 0.0 {
                swap_diagonal(&mut t, &mut q, k);
                swapped = true;
            }
        }
        if !swapped {
            break;
        }
    }
    let w_top = q.view((0, 0), (m, m)).into_owned();
    let t11 = t.view((0, 0), (m, m)).into_owned();
    let sv = w_top.clone().svd(false, false).singular_values;
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_BASIS_COND) {
        return Err(KernelError::IllConditionedBasis { cond });
    }
    let w_inv = w_top.clone().try_inverse().ok_or(KernelError::IllConditionedBasis { cond })?;
    Ok(StableFactor { w_top, w_inv, t11 })
}

/// Per-bin decay data: `None` for the zero frequency, otherwise one factor
/// per sign pattern of the Nyquist components (averaged on evaluation).
#[derive(Clone, Debug)]
pub(crate) struct SymbolData {
    grid: BoundaryGrid,
    m: usize,
    bins: Vec<Option<Vec<(f64, StableFactor)>>>,
}

impl SymbolData {
    pub(crate) fn build(sys: &EllipticSystem, grid: &BoundaryGrid) -> Result<Self, KernelError> {
        let n = grid.points_per_axis();
        let dim = grid.dim();
        let dxi = 2.0 * std::f64::consts::PI / (n as f64 * grid.spacing());
        let bins = (0..grid.node_count())
            .into_par_iter()
            .map(|k| {
                let idx = grid.axis_indices(k);
                let base: Vec<f64> = (0..dim).map(|a| signed_index(idx[a], n) as f64 * dxi).collect();
                if base.iter().all(|v| *v == 0.0) {
                    return Ok(None);
                }
                let nyq: Vec<usize> = (0..dim).filter(|&a| idx[a] == n / 2).collect();
                let mut out = Vec::with_capacity(1 << nyq.len());
                for pattern in 0..(1usize << nyq.len()) {
                    let mut xi = base.clone();
                    for (bit, &a) in nyq.iter().enumerate() {
                        if pattern >> bit & 1 == 1 {
                            xi[a] = -xi[a];
                        }
                    }
                    let scale = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
                    let dir: Vec<f64> = xi.iter().map(|v| v / scale).collect();
                    out.push((scale, stable_factor(sys, &dir)?));
                }
                Ok(Some(out))
            })
            .collect::<Result<Vec<_>, KernelError>>()?;
        Ok(Self {
            grid: grid.clone(),
            m: sys.m(),
            bins,
        })
    }

    /// `K(xi'_k, t)` for every bin.
    pub(crate) fn hats(&self, t: f64) -> Vec<CMat> {
        let m = self.m;
        self.bins
            .par_iter()
            .map(|bin| match bin {
                None => DMatrix::identity(m, m),
                Some(list) => {
                    let mut acc: CMat = DMatrix::zeros(m, m);
                    for (scale, f) in list {
                        acc += f.hat(*scale, t);
                    }
                    acc / C64::new(list.len() as f64, 0.0)
                }
            })
            .collect()
    }

    /// Kernel samples `P_t(x_j) = h^{-dim} IFFT[(-1)^{|k|} K(xi'_k, t)]`.
    pub(crate) fn slice(&self, t: f64) -> KernelMatrix {
        let grid = &self.grid;
        let m = self.m;
        let nodes = grid.node_count();
        let hats = self.hats(t);
        let plan = GridFft::new(grid.dim(), grid.points_per_axis());
        let inv_cell = 1.0 / grid.cell_volume();
        let mut values = vec![C64::new(0.0, 0.0); nodes * m * m];
        let sign: Vec<f64> = (0..nodes)
            .map(|k| {
                let idx = grid.axis_indices(k);
                if (idx[0] + idx[1]) % 2 == 0 {
                    1.0
                } else {
                    -1.0
                }
            })
            .collect();
        for a in 0..m {
            for b in 0..m {
                let mut comp: Vec<C64> = hats.iter().zip(&sign).map(|(h, s)| h[(a, b)] * *s).collect();
                plan.inverse(&mut comp);
                for (k, v) in comp.into_iter().enumerate() {
                    values[(k * m + a) * m + b] = v * inv_cell;
                }
            }
        }
        KernelMatrix::new(grid.clone(), m, t, values).expect("shape is consistent")
    }
}
