//! Hardy-Littlewood and nontangential maximal operators on grid data,
//! Muckenhoupt constants, and the `M(1_B)` decay profile.
//!
//! Grid node `x_k` stands for the cell `[x_k, x_k + h)^dim`, so a window of
//! `L` consecutive nodes per axis is the cube `[x_i, x_i + L h)^dim`.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{BoundaryField, BoundaryGrid, GridError, HalfSpaceField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MaxOpError {
    #[error("half-space field has no heights")]
    EmptyHeights,
    #[error("weight must be positive and finite (node {node})")]
    NonPositiveWeight { node: usize },
    #[error("cone aperture must be positive, got {0}")]
    InvalidAperture(f64),
    #[error("exponent must satisfy {0}")]
    InvalidExponent(&'static str),
    #[error("the all-intervals family is only available in dimension 1")]
    UnsupportedFamily,
    #[error(transparent)]
    Grid(#[from] GridError),
}

/// Finite family of cubes over which averages are taken.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CubeFamily {
    /// Every window of consecutive nodes (dimension 1 only, `O(N^2)`).
    AllIntervals,
    /// Every translate of the windows with `2^j` nodes per axis.
    DyadicTranslates,
}

impl CubeFamily {
    /// All intervals on one-dimensional grids up to `2^14` nodes,
    /// dyadic translates otherwise.
    pub fn default_for(grid: &BoundaryGrid) -> Self {
        if grid.dim() == 1 && grid.points_per_axis() <= 1 << 14 {
            CubeFamily::AllIntervals
        } else {
            CubeFamily::DyadicTranslates
        }
    }
}

/// `out[k] = max vals[i]` over `i in [k - back, k + fwd]` clipped to the
/// data, `-inf` where that range is empty.
fn sliding_max(vals: &[f64], out_len: usize, back: usize, fwd: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; out_len];
    let mut dq: VecDeque<usize> = VecDeque::new();
    let mut next = 0usize;
    for (k, slot) in out.iter_mut().enumerate() {
        let hi = (k + fwd).min(vals.len().saturating_sub(1));
        while next < vals.len() && next <= hi {
            while dq.back().is_some_and(|&j| vals[j] <= vals[next]) {
                dq.pop_back();
            }
            dq.push_back(next);
            next += 1;
        }
        let lo = k.saturating_sub(back);
        while dq.front().is_some_and(|&j| j < lo) {
            dq.pop_front();
        }
        if let Some(&j) = dq.front() {
            if j <= k + fwd {
                *slot = vals[j];
            }
        }
    }
    out
}

fn sliding_min(vals: &[f64], out_len: usize, back: usize, fwd: usize) -> Vec<f64> {
    let neg: Vec<f64> = vals.iter().map(|v| -v).collect();
    sliding_max(&neg, out_len, back, fwd).into_iter().map(|v| -v).collect()
}

/// Averages over all `L`-node windows: `avg[i]` for the window starting at
/// `i` (row-major over window corners in dimension 2).
fn window_averages(vals: &[f64], n: usize, dim: usize, l: usize) -> Vec<f64> {
    let c = n - l + 1;
    if l == 1 {
        return vals.to_vec();
    }
    if dim == 1 {
        let mut prefix = vec![0.0; n + 1];
        for i in 0..n {
            prefix[i + 1] = prefix[i] + vals[i];
        }
        (0..c).map(|i| (prefix[i + l] - prefix[i]) / l as f64).collect()
    } else {
        let mut s = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                s[(i + 1) * (n + 1) + j + 1] =
                    vals[i * n + j] + s[i * (n + 1) + j + 1] + s[(i + 1) * (n + 1) + j] - s[i * (n + 1) + j];
            }
        }
        let area = (l * l) as f64;
        let mut out = vec![0.0; c * c];
        for i in 0..c {
            for j in 0..c {
                let sum = s[(i + l) * (n + 1) + j + l] - s[i * (n + 1) + j + l] - s[(i + l) * (n + 1) + j]
                    + s[i * (n + 1) + j];
                out[i * c + j] = sum / area;
            }
        }
        out
    }
}

/// Separable 2D window reduction: `data` is `rows x cols`, the result is
/// `out_n x out_n`.
fn separable_2d(
    data: &[f64],
    rows: usize,
    cols: usize,
    out_n: usize,
    back: usize,
    fwd: usize,
    reduce: fn(&[f64], usize, usize, usize) -> Vec<f64>,
) -> Vec<f64> {
    let mut stage = vec![0.0; rows * out_n];
    for r in 0..rows {
        let row = reduce(&data[r * cols..(r + 1) * cols], out_n, back, fwd);
        stage[r * out_n..(r + 1) * out_n].copy_from_slice(&row);
    }
    let mut out = vec![0.0; out_n * out_n];
    let mut col = vec![0.0; rows];
    for j in 0..out_n {
        for r in 0..rows {
            col[r] = stage[r * out_n + j];
        }
        let red = reduce(&col, out_n, back, fwd);
        for i in 0..out_n {
            out[i * out_n + j] = red[i];
        }
    }
    out
}

fn all_intervals_max(vals: &[f64]) -> Vec<f64> {
    let n = vals.len();
    (0..n)
        .into_par_iter()
        .fold(
            || vec![0.0f64; n],
            |mut acc, a| {
                // sum over [a, b] for every b, then suffix maxima of averages
                let mut sums = vec![0.0; n - a];
                let mut s = 0.0;
                for (off, v) in vals[a..].iter().enumerate() {
                    s += v;
                    sums[off] = s / (off + 1) as f64;
                }
                let mut best = 0.0f64;
                for b in (a..n).rev() {
                    best = best.max(sums[b - a]);
                    acc[b] = acc[b].max(best);
                }
                acc
            },
        )
        .reduce(|| vec![0.0; n], |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect())
}

fn dyadic_max(vals: &[f64], n: usize, dim: usize) -> Vec<f64> {
    let sizes: Vec<usize> = (0..=n.trailing_zeros()).map(|j| 1usize << j).collect();
    sizes
        .into_par_iter()
        .map(|l| {
            let avg = window_averages(vals, n, dim, l);
            if dim == 1 {
                sliding_max(&avg, n, l - 1, 0)
            } else {
                let c = n - l + 1;
                separable_2d(&avg, c, c, n, l - 1, 0, sliding_max)
            }
        })
        .reduce(
            || vec![0.0; vals.len()],
            |a, b| a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect(),
        )
}

/// `M f` with an explicit cube family.
pub fn hl_maximal_with(f: &BoundaryField, family: CubeFamily) -> Result<BoundaryField, MaxOpError> {
    let grid = f.grid();
    let vals = f.modulus();
    let out = match family {
        CubeFamily::AllIntervals => {
            if grid.dim() != 1 {
                return Err(MaxOpError::UnsupportedFamily);
            }
            all_intervals_max(&vals)
        }
        CubeFamily::DyadicTranslates => dyadic_max(&vals, grid.points_per_axis(), grid.dim()),
    };
    Ok(BoundaryField::from_real(grid, out)?)
}

/// `M f` over the default family for the grid. Complex or vector data are
/// replaced by their pointwise Euclidean modulus.
pub fn hl_maximal(f: &BoundaryField) -> BoundaryField {
    hl_maximal_with(f, CubeFamily::default_for(f.grid())).expect("default family matches the grid")
}

/// `M(M f)`.
pub fn iterated_maximal(f: &BoundaryField) -> BoundaryField {
    hl_maximal(&hl_maximal(f))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub radius: f64,
    pub m_ratio: f64,
    pub m2_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MBallProfile {
    pub rows: Vec<ProfileRow>,
    pub m_min: f64,
    pub m_max: f64,
    pub m2_min: f64,
    pub m2_max: f64,
}

/// `M(1_B)(x)(1 + |x|^dim)` and `M^2(1_B)(x)(1 + |x|^dim)/(1 + log+|x|)`
/// for the open unit ball `B`, over nodes with `|x| <= R/2`.
pub fn m_ball_profile(dim: usize, half_width: f64, n: usize) -> Result<MBallProfile, MaxOpError> {
    let grid = BoundaryGrid::new(dim, half_width, n)?;
    let ball = crate::grid::ball_indicator(&grid, &vec![0.0; dim], 1.0);
    let m1 = hl_maximal(&ball);
    let m2 = hl_maximal(&m1);
    let (m1, m2) = (m1.real_values(), m2.real_values());
    let mut rows = Vec::new();
    for k in 0..grid.node_count() {
        let r = grid.node_norm(k);
        if r > half_width / 2.0 {
            continue;
        }
        let decay = 1.0 + r.powi(dim as i32);
        rows.push(ProfileRow {
            radius: r,
            m_ratio: m1[k] * decay,
            m2_ratio: m2[k] * decay / (1.0 + r.ln().max(0.0)),
        });
    }
    rows.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    let fold = |sel: fn(&ProfileRow) -> f64| {
        rows.iter()
            .map(sel)
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let (m_min, m_max) = fold(|r| r.m_ratio);
    let (m2_min, m2_max) = fold(|r| r.m2_ratio);
    Ok(MBallProfile {
        rows,
        m_min,
        m_max,
        m2_min,
        m2_max,
    })
}

/// Aperture `kappa` of the cone `|x' - y'| < kappa t`, optionally truncated
/// to heights `t < eps`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ConeSpec {
    pub kappa: f64,
    pub eps: Option<f64>,
}

impl ConeSpec {
    pub fn new(kappa: f64, eps: Option<f64>) -> Result<Self, MaxOpError> {
        if !(kappa > 0.0 && kappa.is_finite()) {
            return Err(MaxOpError::InvalidAperture(kappa));
        }
        if let Some(e) = eps {
            if !(e > 0.0) {
                return Err(MaxOpError::InvalidAperture(e));
            }
        }
        Ok(Self { kappa, eps })
    }
}

/// Largest integer `w` with `w * step < radius` (at least 0).
fn strict_reach(radius: f64, step: f64) -> usize {
    let q = radius / step;
    let w = q.ceil() - 1.0;
    if w < 0.0 {
        0
    } else {
        w as usize
    }
}

/// `N u(x_k) = max` over stored heights and nodes `y` in the open cone of
/// `|u(y, t)|`. Returns zeros when truncation leaves no heights.
pub fn nontangential_max(u: &HalfSpaceField, cone: &ConeSpec) -> Result<BoundaryField, MaxOpError> {
    if u.heights().is_empty() {
        return Err(MaxOpError::EmptyHeights);
    }
    let grid = u.grid().clone();
    let n = grid.points_per_axis();
    let h = grid.spacing();
    let used: Vec<usize> = (0..u.heights().len())
        .filter(|&i| cone.eps.is_none_or(|e| u.heights()[i] < e))
        .collect();
    let per_height: Vec<Vec<f64>> = used
        .par_iter()
        .map(|&i| {
            let t = u.heights()[i];
            let vals = u.slice(i).modulus();
            let r = cone.kappa * t;
            if grid.dim() == 1 {
                let w = strict_reach(r, h);
                sliding_max(&vals, n, w, w)
            } else {
                let wr = strict_reach(r, h);
                // every row gets the widest column reach allowed at its offset
                let mut out = vec![0.0f64; n * n];
                let mut cache: Vec<Option<Vec<f64>>> = vec![None; wr + 1];
                for di in 0..=wr {
                    let rem = r * r - (di as f64 * h).powi(2);
                    let wc = if rem > 0.0 { strict_reach(rem.sqrt(), h) } else { continue };
                    let rows: Vec<f64> = (0..n)
                        .flat_map(|row| sliding_max(&vals[row * n..(row + 1) * n], n, wc, wc))
                        .collect();
                    cache[di] = Some(rows);
                }
                for i in 0..n {
                    for (di, rows) in cache.iter().enumerate() {
                        let Some(rows) = rows else { continue };
                        for src in [i as i64 - di as i64, i as i64 + di as i64] {
                            if src < 0 || src >= n as i64 {
                                continue;
                            }
                            let src = src as usize;
                            for j in 0..n {
                                let v = rows[src * n + j];
                                if v > out[i * n + j] {
                                    out[i * n + j] = v;
                                }
                            }
                        }
                    }
                }
                out
            }
        })
        .collect();
    let mut out = vec![0.0f64; grid.node_count()];
    for layer in per_height {
        for (o, v) in out.iter_mut().zip(layer) {
            *o = o.max(v);
        }
    }
    Ok(BoundaryField::from_real(&grid, out)?)
}

/// Positive weight sampled on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Weight {
    field: BoundaryField,
    label: String,
}

impl Weight {
    pub fn new(field: BoundaryField, label: impl Into<String>) -> Result<Self, MaxOpError> {
        if field.channels() != 1 {
            return Err(GridError::ChannelMismatch {
                expected: 1,
                got: field.channels(),
            }
            .into());
        }
        for (node, v) in field.values().iter().enumerate() {
            if !(v.re > 0.0 && v.re.is_finite()) || v.im != 0.0 {
                return Err(MaxOpError::NonPositiveWeight { node });
            }
        }
        Ok(Self {
            field,
            label: label.into(),
        })
    }

    pub fn unit(grid: &BoundaryGrid) -> Self {
        let field = BoundaryField::from_real(grid, vec![1.0; grid.node_count()]).expect("finite");
        Self {
            field,
            label: "1".into(),
        }
    }

    /// `|x|^gamma` evaluated at cell midpoints `x_k + h/2`, which keeps
    /// singular powers finite at the origin cell.
    pub fn power(grid: &BoundaryGrid, gamma: f64) -> Result<Self, MaxOpError> {
        let h = grid.spacing();
        let vals = (0..grid.node_count())
            .map(|k| {
                let x = grid.node(k);
                let r2: f64 = x[..grid.dim()].iter().map(|c| (c + 0.5 * h).powi(2)).sum();
                r2.sqrt().powf(gamma)
            })
            .collect();
        Self::new(BoundaryField::from_real(grid, vals)?, format!("|x|^{gamma}"))
    }

    pub fn field(&self) -> &BoundaryField {
        &self.field
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn values(&self) -> Vec<f64> {
        self.field.real_values()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CubeRef {
    pub center: Vec<f64>,
    pub side: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApReport {
    pub p: f64,
    pub constant: f64,
    pub argmax_cube: CubeRef,
}

fn cube_ref(grid: &BoundaryGrid, corner: [usize; 2], l: usize) -> CubeRef {
    let h = grid.spacing();
    let side = l as f64 * h;
    CubeRef {
        center: (0..grid.dim()).map(|a| grid.axis_coord(corner[a]) + 0.5 * side).collect(),
        side,
    }
}

/// `[w]_{A_p}` over the default cube family; for `p = 1` the essential
/// infimum is the minimum over the cube's nodes.
pub fn ap_constant(w: &Weight, p: f64) -> Result<ApReport, MaxOpError> {
    ap_constant_with(w, p, CubeFamily::default_for(w.field.grid()))
}

pub fn ap_constant_with(w: &Weight, p: f64, family: CubeFamily) -> Result<ApReport, MaxOpError> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(MaxOpError::InvalidExponent("1 <= p < inf"));
    }
    let grid = w.field.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let vals = w.values();
    // score(avg_w, companion) where the companion is avg sigma or min w
    let score = |aw: f64, c: f64| if p == 1.0 { aw / c } else { aw * c.powf(p - 1.0) };
    let sigma: Vec<f64> = if p > 1.0 {
        vals.iter().map(|v| v.powf(-1.0 / (p - 1.0))).collect()
    } else {
        Vec::new()
    };
    let mut best = (f64::NEG_INFINITY, [0usize; 2], 1usize);
    match family {
        CubeFamily::AllIntervals => {
            if dim != 1 {
                return Err(MaxOpError::UnsupportedFamily);
            }
            let found = (0..n)
                .into_par_iter()
                .map(|a| {
                    let (mut sw, mut sc, mut mn) = (0.0, 0.0, f64::INFINITY);
                    let mut local = (f64::NEG_INFINITY, a, 1usize);
                    for b in a..n {
                        sw += vals[b];
                        if p > 1.0 {
                            sc += sigma[b];
                        } else {
                            mn = mn.min(vals[b]);
                        }
                        let len = (b - a + 1) as f64;
                        let c = if p > 1.0 { sc / len } else { mn };
                        let s = score(sw / len, c);
                        if s > local.0 {
                            local = (s, a, b - a + 1);
                        }
                    }
                    local
                })
                .reduce(|| (f64::NEG_INFINITY, 0, 1), |x, y| if y.0 > x.0 { y } else { x });
            best = (found.0, [found.1, 0], found.2);
        }
        CubeFamily::DyadicTranslates => {
            for j in 0..=n.trailing_zeros() {
                let l = 1usize << j;
                let c = n - l + 1;
                let aw = window_averages(&vals, n, dim, l);
                let comp = if p > 1.0 {
                    window_averages(&sigma, n, dim, l)
                } else if dim == 1 {
                    sliding_min(&vals, c, 0, l - 1)
                } else {
                    separable_2d(&vals, n, n, c, 0, l - 1, sliding_min)
                };
                for (idx, (a, cv)) in aw.iter().zip(&comp).enumerate() {
                    let s = score(*a, *cv);
                    if s > best.0 {
                        let corner = if dim == 1 { [idx, 0] } else { [idx / c, idx % c] };
                        best = (s, corner, l);
                    }
                }
            }
        }
    }
    Ok(ApReport {
        p,
        constant: best.0,
        argmax_cube: cube_ref(grid, best.1, best.2),
    })
}

/// `(sum_k |v_k|^p w_k h^dim)^{1/p}`.
pub fn weighted_lp(vals: &[f64], p: f64, w: Option<&Weight>, grid: &BoundaryGrid) -> f64 {
    let wv = w.map(|w| w.values());
    let s: f64 = vals
        .iter()
        .enumerate()
        .map(|(k, v)| v.abs().powf(p) * wv.as_ref().map_or(1.0, |w| w[k]))
        .sum();
    (s * grid.cell_volume()).powf(1.0 / p)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApertureTable {
    pub kappas: Vec<f64>,
    pub norms: Vec<f64>,
    /// `ratios[i][j] = norms[i] / norms[j]`.
    pub ratios: Vec<Vec<f64>>,
}

impl ApertureTable {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().flatten().fold(0.0, |a, b| a.max(*b))
    }
}

/// `||N_kappa u||_{L^p(w)}` for each aperture and their pairwise ratios.
pub fn cone_aperture_comparison(
    u: &HalfSpaceField,
    kappas: &[f64],
    p: f64,
    w: Option<&Weight>,
) -> Result<ApertureTable, MaxOpError> {
    if !(p > 0.0 && p.is_finite()) {
        return Err(MaxOpError::InvalidExponent("0 < p < inf"));
    }
    let mut norms = Vec::with_capacity(kappas.len());
    for &k in kappas {
        let nt = nontangential_max(u, &ConeSpec::new(k, None)?)?;
        norms.push(weighted_lp(&nt.real_values(), p, w, u.grid()));
    }
    let ratios = norms
        .iter()
        .map(|a| norms.iter().map(|b| a / b).collect())
        .collect();
    Ok(ApertureTable {
        kappas: kappas.to_vec(),
        norms,
        ratios,
    })
}

/// `{min, max, argmax}` of a real field, with `argmax` as coordinates.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldSummary {
    pub min: f64,
    pub max: f64,
    pub argmax: Vec<f64>,
}

pub fn summarize(f: &BoundaryField) -> FieldSummary {
    let vals = f.modulus();
    let (mut lo, mut hi, mut arg) = (f64::INFINITY, f64::NEG_INFINITY, 0);
    for (k, v) in vals.iter().enumerate() {
        lo = lo.min(*v);
        if *v > hi {
            hi = *v;
            arg = k;
        }
    }
    let grid = f.grid();
    FieldSummary {
        min: lo,
        max: hi,
        argmax: grid.node(arg)[..grid.dim()].to_vec(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{ball_indicator, sample_real};

    fn grid1(r: f64, n: usize) -> BoundaryGrid {
        BoundaryGrid::new(1, r, n).unwrap()
    }

    #[test]
    fn sliding_max_matches_naive() {
        let v = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0];
        let out = sliding_max(&v, 8, 2, 1);
        for k in 0usize..8 {
            let lo = k.saturating_sub(2);
            let hi = (k + 1).min(7);
            let m = v[lo..=hi].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            assert_eq!(out[k], m);
        }
        let short = sliding_max(&v[..3], 8, 1, 0);
        assert_eq!(short[3], 4.0);
        assert_eq!(short[5], f64::NEG_INFINITY);
    }

    #[test]
    fn constant_field_is_fixed() {
        for family in [CubeFamily::AllIntervals, CubeFamily::DyadicTranslates] {
            let g = grid1(4.0, 64);
            let f = BoundaryField::from_real(&g, vec![-2.5; 64]).unwrap();
            let m = hl_maximal_with(&f, family).unwrap();
            assert!(m.real_values().iter().all(|v| (v - 2.5).abs() < 1e-12));
        }
        let g2 = BoundaryGrid::new(2, 4.0, 16).unwrap();
        let f = BoundaryField::from_real(&g2, vec![3.0; 256]).unwrap();
        assert!(iterated_maximal(&f).real_values().iter().all(|v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn interval_indicator_exact_value() {
        let g = grid1(8.0, 2048);
        let h = g.spacing();
        let f = ball_indicator(&g, &[0.0], 1.0);
        let m = hl_maximal(&f).real_values();
        let k = g.nearest_node(&[3.0]);
        assert!((m[k] - 0.5).abs() <= 2.0 * h, "{}", m[k]);
    }

    #[test]
    fn dyadic_family_within_factor_of_exact() {
        let g = grid1(8.0, 512);
        let f = ball_indicator(&g, &[0.5], 1.3);
        let exact = hl_maximal_with(&f, CubeFamily::AllIntervals).unwrap().real_values();
        let dy = hl_maximal_with(&f, CubeFamily::DyadicTranslates).unwrap().real_values();
        for (e, d) in exact.iter().zip(&dy) {
            assert!(*d <= e + 1e-12 && 2.0 * d >= *e - 1e-12);
        }
        assert_eq!(
            hl_maximal_with(&BoundaryField::zeros(&BoundaryGrid::new(2, 1.0, 8).unwrap(), 1), CubeFamily::AllIntervals),
            Err(MaxOpError::UnsupportedFamily)
        );
    }

    #[test]
    fn maximal_dominates_modulus_and_iterate() {
        let g = BoundaryGrid::new(2, 4.0, 32).unwrap();
        let f = sample_real(&g, |x| (x[0] * 1.3).sin() * (-x[1] * x[1]).exp()).unwrap();
        let m = hl_maximal(&f).real_values();
        let m2 = hl_maximal(&hl_maximal(&f)).real_values();
        for ((a, b), c) in f.modulus().iter().zip(&m).zip(&m2) {
            assert!(b >= a && c >= b);
        }
    }

    #[test]
    fn m_ball_profile_origin_and_range() {
        let prof = m_ball_profile(1, 64.0, 8192).unwrap();
        assert_eq!(prof.rows[0].radius, 0.0);
        assert!((prof.rows[0].m_ratio - 1.0).abs() < 1e-12);
        assert!(prof.m_min >= 0.9 && prof.m_max <= 2.1, "{} {}", prof.m_min, prof.m_max);
        assert!(prof.m2_max / prof.m2_min <= 50.0);
    }

    fn stack(grid: &BoundaryGrid, heights: &[f64], f: impl Fn(&[f64], f64) -> f64) -> HalfSpaceField {
        let slices = heights
            .iter()
            .map(|&t| sample_real(grid, |x| f(x, t)).unwrap())
            .collect();
        HalfSpaceField::from_slices(heights.to_vec(), slices).unwrap()
    }

    #[test]
    fn nontangential_trivial_cases() {
        let g = grid1(4.0, 64);
        let cone = ConeSpec::new(1.0, None).unwrap();
        let u = stack(&g, &[0.5, 1.0], |_, _| -1.5);
        assert!(nontangential_max(&u, &cone).unwrap().real_values().iter().all(|v| (v - 1.5).abs() < 1e-14));
        let u = stack(&g, &[1.0, 2.0], |_, t| t);
        assert!(nontangential_max(&u, &cone).unwrap().real_values().iter().all(|v| (v - 2.0).abs() < 1e-14));
        let truncated = nontangential_max(&u, &ConeSpec::new(1.0, Some(0.5)).unwrap()).unwrap();
        assert_eq!(truncated.max_abs(), 0.0);
        assert!(ConeSpec::new(0.0, None).is_err());
    }

    #[test]
    fn cone_is_open() {
        let g = grid1(4.0, 32);
        let h = g.spacing();
        let spike = g.nearest_node(&[0.0]);
        let u = stack(&g, &[h], |x, _| if x[0].abs() < 1e-12 { 1.0 } else { 0.0 });
        let nt = nontangential_max(&u, &ConeSpec::new(1.0, None).unwrap()).unwrap().real_values();
        assert_eq!(nt[spike], 1.0);
        assert_eq!(nt[spike + 1], 0.0);
        let nt = nontangential_max(&u, &ConeSpec::new(1.01, None).unwrap()).unwrap().real_values();
        assert_eq!(nt[spike + 1], 1.0);
    }

    #[test]
    fn nontangential_2d_disc() {
        let g = BoundaryGrid::new(2, 4.0, 32).unwrap();
        let h = g.spacing();
        let o = g.origin_index();
        let u = stack(&g, &[2.5 * h], |x, _| if x[0] == 0.0 && x[1] == 0.0 { 1.0 } else { 0.0 });
        let nt = nontangential_max(&u, &ConeSpec::new(1.0, None).unwrap()).unwrap();
        let vals = nt.real_values();
        for k in 0..g.node_count() {
            let inside = g.node_norm(k) < 2.5 * h;
            assert_eq!(vals[k], if inside { 1.0 } else { 0.0 }, "node {k}");
        }
        assert_eq!(vals[o], 1.0);
    }

    #[test]
    fn unit_weight_has_unit_constant() {
        let g = grid1(4.0, 128);
        for p in [1.0, 2.0, 3.5] {
            let rep = ap_constant(&Weight::unit(&g), p).unwrap();
            assert!((rep.constant - 1.0).abs() < 1e-12);
        }
        let g2 = BoundaryGrid::new(2, 4.0, 16).unwrap();
        assert!((ap_constant(&Weight::unit(&g2), 2.0).unwrap().constant - 1.0).abs() < 1e-12);
    }

    #[test]
    fn weight_validation() {
        let g = grid1(1.0, 8);
        let mut v = vec![1.0; 8];
        v[3] = 0.0;
        let err = Weight::new(BoundaryField::from_real(&g, v).unwrap(), "w").unwrap_err();
        assert_eq!(err, MaxOpError::NonPositiveWeight { node: 3 });
        assert!(ap_constant(&Weight::unit(&g), 0.5).is_err());
    }

    #[test]
    fn a1_constant_examples() {
        // w = |x|^{-1/2} is in A_1; the sup sits on cubes touching the origin
        let g = grid1(8.0, 1024);
        let w = Weight::power(&g, -0.5).unwrap();
        let rep = ap_constant(&w, 1.0).unwrap();
        assert!(rep.constant.is_finite() && rep.constant > 1.0 && rep.constant < 4.0, "{}", rep.constant);
    }

    #[test]
    fn aperture_monotone() {
        let g = grid1(8.0, 256);
        let u = stack(&g, &[0.25, 0.5, 1.0], |x, t| t / (x[0] * x[0] + t * t));
        let tab = cone_aperture_comparison(&u, &[0.5, 1.0, 2.0], 2.0, None).unwrap();
        assert!(tab.norms[0] <= tab.norms[1] && tab.norms[1] <= tab.norms[2]);
        assert!((tab.ratios[1][1] - 1.0).abs() < 1e-15);
    }
}
