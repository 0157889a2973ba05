//! Numerical checks of the defining properties of a Poisson kernel.

use nalgebra::DMatrix;
use serde::Serialize;

use super::{fourier_symbol_poisson, harmonic_fundamental_solution, KernelError, PoissonConstruction, PoissonMethod};
use crate::grid::{BoundaryGrid, KernelMatrix, C64};
use crate::systems::{CMat, EllipticSystem};

/// Height at which the differential residual is measured.
const PROBE_HEIGHT: f64 = 1.0;
/// Probe nodes satisfy `|x'| <= PROBE_RADIUS`.
const PROBE_RADIUS: f64 = 1.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonReport {
    pub method: PoissonMethod,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    /// `max |P_1(x')|(1 + |x'|^2)^{n/2}` over `|x'| <= R/4`.
    pub decay_constant: f64,
    /// `max_{ab} |(sum_j h^{n-1} P_1(x_j))_{ab} - delta_{ab}|`.
    pub integral_error: f64,
    /// Stencil steps (in units of `h`) and the matching residuals `max |L K|`.
    pub fd_steps: Vec<f64>,
    pub fd_residuals: Vec<f64>,
    /// `log2` of the residual ratio between the two steps.
    pub fd_order: f64,
    /// Relative error of `P_{lambda}(lambda x') = lambda^{1-n} P_1(x')` for `lambda` in `{2, 1/2}`.
    pub homogeneity_error: f64,
    /// Relative mismatch of the Dirichlet solution with datum `E(. - y)`
    /// against `E(x - ybar)`; harmonic `n = 3` only.
    pub green_cross_check: Option<f64>,
}

fn offset_node(grid: &BoundaryGrid, k: usize, d: [i64; 2]) -> Option<usize> {
    let n = grid.points_per_axis() as i64;
    let idx = grid.axis_indices(k);
    let mut out = [0usize; 2];
    for a in 0..grid.dim() {
        let v = idx[a] as i64 + d[a];
        if v < 0 || v >= n {
            return None;
        }
        out[a] = v as usize;
    }
    Some(grid.index_of(out))
}

/// `max |L K|` at probe nodes using central differences with step `k h`
/// in every direction, on slices at `t0 - kh, t0, t0 + kh`.
fn fd_residual(pc: &PoissonConstruction, sys: &EllipticSystem, k: i64) -> Result<f64, KernelError> {
    let grid = pc.grid();
    let n = sys.n();
    let m = sys.m();
    let dim = grid.dim();
    let s = k as f64 * grid.spacing();
    let slices = pc.slices(&[PROBE_HEIGHT - s, PROBE_HEIGHT, PROBE_HEIGHT + s])?;
    // value of K at grid offset d (tangential) and height offset j in {-1,0,1}
    let at = |node: usize, d: [i64; 2], j: i64| -> Option<CMat> {
        offset_node(grid, node, d).map(|q| slices[(j + 1) as usize].at(q))
    };
    let unit = |r: usize, sign: i64| -> ([i64; 2], i64) {
        let mut d = [0i64; 2];
        if r < dim {
            d[r] = sign * k;
            (d, 0)
        } else {
            (d, sign)
        }
    };
    let shift = |a: ([i64; 2], i64), b: ([i64; 2], i64)| ([a.0[0] + b.0[0], a.0[1] + b.0[1]], a.1 + b.1);
    let mut worst = 0.0f64;
    for node in 0..grid.node_count() {
        if grid.node_norm(node) > PROBE_RADIUS {
            continue;
        }
        // second derivatives of K in directions (r, q)
        let mut hess: Vec<Vec<CMat>> = vec![vec![DMatrix::zeros(m, m); n]; n];
        let mut ok = true;
        for r in 0..n {
            for q in r..n {
                let val = if r == q {
                    let (p, mi) = (unit(r, 1), unit(r, -1));
                    match (at(node, p.0, p.1), at(node, [0, 0], 0), at(node, mi.0, mi.1)) {
                        (Some(a), Some(b), Some(c)) => (a - b * C64::new(2.0, 0.0) + c) / C64::new(s * s, 0.0),
                        _ => {
                            ok = false;
                            break;
                        }
                    }
                } else {
                    let mut acc: CMat = DMatrix::zeros(m, m);
                    for (sr, sq, w) in [(1, 1, 1.0), (1, -1, -1.0), (-1, 1, -1.0), (-1, -1, 1.0)] {
                        let d = shift(unit(r, sr), unit(q, sq));
                        match at(node, d.0, d.1) {
                            Some(v) => acc += v * C64::new(w, 0.0),
                            None => ok = false,
                        }
                    }
                    acc / C64::new(4.0 * s * s, 0.0)
                };
                hess[q][r] = val.clone();
                hess[r][q] = val;
            }
            if !ok {
                break;
            }
        }
        if !ok {
            continue;
        }
        for al in 0..m {
            for g in 0..m {
                let mut v = C64::new(0.0, 0.0);
                for be in 0..m {
                    for r in 0..n {
                        for q in 0..n {
                            v += sys.coeff(al, be, r, q) * hess[r][q][(be, g)];
                        }
                    }
                }
                worst = worst.max(v.norm());
            }
        }
    }
    Ok(worst)
}

fn max_entry(k: &CMat) -> f64 {
    k.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Relative error of `P_{lambda}(lambda x_j) = lambda^{1-n} P_1(x_j)` over
/// nodes with `|x_j|, |lambda x_j| <= R/4`.
fn homogeneity_error(pc: &PoissonConstruction) -> Result<f64, KernelError> {
    let grid = pc.grid();
    let n = pc.system().n() as i32;
    let quarter = grid.half_width() / 4.0;
    let p1 = pc.profile();
    let mut worst = 0.0f64;
    for (lambda, up) in [(2.0, true), (0.5, false)] {
        let pl = pc.slice(lambda)?;
        let scale = C64::new(f64::powi(lambda, 1 - n), 0.0);
        let mut err = 0.0f64;
        let mut peak = 0.0f64;
        let o = grid.origin_axis_index() as i64;
        for k in 0..grid.node_count() {
            if grid.node_norm(k) > quarter {
                continue;
            }
            let idx = grid.axis_indices(k);
            let mut rel = [0i64; 2];
            for a in 0..grid.dim() {
                rel[a] = idx[a] as i64 - o;
            }
            // pairs (node of P_1, node of P_lambda)
            let (small, large) = if up {
                (k, offset_node(grid, k, rel))
            } else {
                if rel.iter().any(|v| v % 2 != 0) {
                    continue;
                }
                (k, offset_node(grid, k, [-rel[0] / 2, -rel[1] / 2]))
            };
            let Some(large) = large else { continue };
            if grid.node_norm(large) > quarter {
                continue;
            }
            let lhs = pl.at(large);
            let rhs = p1.at(small) * scale;
            err = err.max(max_entry(&(lhs - &rhs)));
            peak = peak.max(max_entry(&rhs));
        }
        if peak > 0.0 {
            worst = worst.max(err / peak);
        }
    }
    Ok(worst)
}

fn decay_constant(profile: &KernelMatrix, n: usize) -> f64 {
    let grid = profile.grid();
    let quarter = grid.half_width() / 4.0;
    (0..grid.node_count())
        .filter(|&k| grid.node_norm(k) <= quarter)
        .map(|k| {
            let r = grid.node_norm(k);
            max_entry(&profile.at(k)) * (1.0 + r * r).powf(0.5 * n as f64)
        })
        .fold(0.0, f64::max)
}

fn integral_error(profile: &KernelMatrix) -> f64 {
    let m = profile.m();
    max_entry(&(profile.integral() - DMatrix::<C64>::identity(m, m)))
}

/// Solves the Dirichlet problem with datum `E((z', 0) - y)` by direct
/// quadrature against the unperiodized kernel and compares with the
/// harmonic extension `E(x - ybar)` at `x = (0', t)`, `t` in `{0.5, 1, 2}`.
pub fn green_cross_check(pc: &PoissonConstruction) -> Result<Option<f64>, KernelError> {
    if pc.system().n() != 3 || pc.system().m() != 1 || !pc.system().is_laplacian() {
        return Ok(None);
    }
    if pc.method() == PoissonMethod::FourierSymbol {
        return Ok(None);
    }
    let e = harmonic_fundamental_solution(3, 1)?;
    let grid = pc.grid();
    let y = [0.3, -0.2, 1.0];
    let cell = grid.cell_volume();
    let mut worst = 0.0f64;
    for t in [0.5, 1.0, 2.0] {
        let mut acc = 0.0;
        for k in 0..grid.node_count() {
            let z = grid.node(k);
            let p = pc.free_value(&[-z[0], -z[1]], t)?[(0, 0)].re;
            let g = e.eval(&[z[0] - y[0], z[1] - y[1], -y[2]])?[(0, 0)].re;
            acc += p * g * cell;
        }
        let exact = e.eval(&[-y[0], -y[1], t + y[2]])?[(0, 0)].re;
        worst = worst.max((acc - exact).abs() / exact.abs());
    }
    Ok(Some(worst))
}

/// Report-only check of decay, normalization, the differential equation
/// and homogeneity.
pub fn verify_poisson_properties(pc: &PoissonConstruction, sys: &EllipticSystem) -> Result<PoissonReport, KernelError> {
    if sys.n() != pc.system().n() || sys.m() != pc.system().m() {
        return Err(KernelError::DimensionMismatch("system does not match the construction".into()));
    }
    let n = sys.n();
    let profile = pc.profile();
    let steps = [4i64, 2];
    let fd_residuals = steps
        .iter()
        .map(|&k| fd_residual(pc, sys, k))
        .collect::<Result<Vec<_>, _>>()?;
    let fd_order = (fd_residuals[0] / fd_residuals[1]).log2();
    Ok(PoissonReport {
        method: pc.method(),
        n,
        m: sys.m(),
        decay_constant: decay_constant(profile, n),
        integral_error: integral_error(profile),
        fd_steps: steps.iter().map(|&k| k as f64).collect(),
        fd_residuals,
        fd_order,
        homogeneity_error: homogeneity_error(pc)?,
        green_cross_check: green_cross_check(pc)?,
    })
}

/// `max |P^{L^T}_1(x') - P^L_1(x')^T|` over the grid for symbol kernels.
pub fn transpose_duality_residual(sys: &EllipticSystem, grid: &BoundaryGrid) -> Result<f64, KernelError> {
    let (pc, _) = fourier_symbol_poisson(sys, grid, &[])?;
    let (pt, _) = fourier_symbol_poisson(&sys.transpose(), grid, &[])?;
    Ok((0..grid.node_count())
        .map(|k| max_entry(&(pt.profile().at(k) - pc.profile().at(k).transpose())))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::harmonic_poisson;
    use crate::systems::{lame, laplacian};

    #[test]
    fn harmonic_report() {
        let grid = BoundaryGrid::new(1, 64.0, 2048).unwrap();
        let pc = harmonic_poisson(2, &grid).unwrap();
        let rep = verify_poisson_properties(&pc, &laplacian(2, 1).unwrap()).unwrap();
        assert!((rep.decay_constant - 1.0 / std::f64::consts::PI).abs() < 0.02, "{rep:?}");
        assert!((rep.fd_order - 2.0).abs() < 0.1, "{rep:?}");
        assert!(rep.homogeneity_error < 1e-3, "{rep:?}");
    }

    #[test]
    fn green_cross_check_harmonic_3d() {
        let grid = BoundaryGrid::new(2, 32.0, 256).unwrap();
        let pc = harmonic_poisson(3, &grid).unwrap();
        let err = green_cross_check(&pc).unwrap().unwrap();
        assert!(err < 2e-2, "{err}");
    }

    #[test]
    fn duality_for_lame() {
        let grid = BoundaryGrid::new(1, 16.0, 256).unwrap();
        let r = transpose_duality_residual(&lame(2, 1.0, 1.0).unwrap(), &grid).unwrap();
        assert!(r < 1e-6, "{r}");
    }
}
