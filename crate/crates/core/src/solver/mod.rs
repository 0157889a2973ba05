//! Dirichlet solves `u(x', t) = (P_t * f)(x')` and the numerical
//! experiments built on them.

mod experiments;

pub use experiments::{
    atom_decay, fatou_reconstruction, nt_domination, screen_spec, semigroup_check, semigroup_operator_bound,
    wellposedness_table, AtomDecayReport, ExperimentReport, NtReport, OperatorBoundReport, SemigroupReport,
    WellposednessRow,
};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{fft_convolve, BoundaryField, BoundaryGrid, GridError, HalfSpaceField, C64};
use crate::kernels::{
    fourier_symbol_poisson, harmonic_fundamental_solution, harmonic_poisson_channels, poisson_from_green_radial,
    scalar_fundamental_solution, sphere_quadrature_fundamental_solution, FundamentalSolution, KernelError,
    PoissonConstruction,
};
use crate::maxop::{ConeSpec, MaxOpError};
use crate::spaces::SpaceError;
use crate::systems::{CMat, EllipticSystem};
use crate::util::ls_slope;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("height {height} is below 2h = {min}")]
    HeightTooSmall { height: f64, min: f64 },
    #[error("height {height} is above R/8 = {max}")]
    HeightTooLarge { height: f64, max: f64 },
    #[error("datum has {got} channels, the system has {expected}")]
    ChannelMismatch { expected: usize, got: usize },
    #[error("the explicit harmonic kernel requires the Laplacian")]
    NotLaplacian,
    #[error("height {0} is not stored in the solution")]
    MissingHeight(f64),
    #[error("norm screen failed: {0}")]
    SpecScreenFailed(String),
    #[error("invalid atom: {0}")]
    InvalidAtom(SpaceError),
    #[error("invalid experiment parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    MaxOp(#[from] MaxOpError),
    #[error(transparent)]
    Space(#[from] SpaceError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMethod {
    #[serde(alias = "explicit")]
    HarmonicExplicit,
    #[serde(alias = "radial")]
    RadialReflection,
    #[serde(alias = "symbol")]
    FourierSymbol,
}

impl std::str::FromStr for KernelMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "explicit" | "harmonic_explicit" => Ok(Self::HarmonicExplicit),
            "radial" | "radial_reflection" => Ok(Self::RadialReflection),
            "symbol" | "fourier_symbol" => Ok(Self::FourierSymbol),
            other => Err(format!("unknown kernel method '{other}' (explicit, radial, symbol)")),
        }
    }
}

/// Sphere nodes used when a radial fundamental solution has to be built by
/// quadrature.
const FS_QUAD_POINTS: usize = 590;
const FS_FD_STEP: f64 = 0.05;

/// A fundamental solution for `sys`: the closed form for `Delta I_M`, the
/// scalar formula for `M = 1`, and the sphere integral otherwise.
pub fn fundamental_for(sys: &EllipticSystem) -> Result<FundamentalSolution, KernelError> {
    if sys.is_laplacian() {
        return harmonic_fundamental_solution(sys.n(), sys.m());
    }
    if sys.m() == 1 {
        let n = sys.n();
        let a = CMat::from_fn(n, n, |r, s| sys.coeff(0, 0, r, s));
        return scalar_fundamental_solution(&a);
    }
    sphere_quadrature_fundamental_solution(sys, FS_QUAD_POINTS, FS_FD_STEP)
}

/// Builds the Poisson kernel of `sys` on `grid` by `method`.
pub fn build_kernel(
    sys: &EllipticSystem,
    method: KernelMethod,
    grid: &BoundaryGrid,
) -> Result<PoissonConstruction, SolverError> {
    match method {
        KernelMethod::HarmonicExplicit => {
            if !sys.is_laplacian() {
                return Err(SolverError::NotLaplacian);
            }
            Ok(harmonic_poisson_channels(sys.n(), sys.m(), grid)?)
        }
        KernelMethod::RadialReflection => {
            let e = fundamental_for(sys)?;
            Ok(poisson_from_green_radial(&e, sys, grid)?)
        }
        KernelMethod::FourierSymbol => Ok(fourier_symbol_poisson(sys, grid, &[])?.0),
    }
}

/// `{2h 2^k}` capped at `R/8`.
pub fn default_heights(grid: &BoundaryGrid) -> Vec<f64> {
    let cap = grid.half_width() / 8.0;
    let mut t = 2.0 * grid.spacing();
    let mut out = Vec::new();
    while t <= cap * (1.0 + 1e-12) {
        out.push(t);
        t *= 2.0;
    }
    out
}

fn check_height_range(grid: &BoundaryGrid, t: f64) -> Result<(), SolverError> {
    let min = 2.0 * grid.spacing();
    let max = grid.half_width() / 8.0;
    if !(t >= min * (1.0 - 1e-12)) {
        return Err(SolverError::HeightTooSmall { height: t, min });
    }
    if !(t <= max * (1.0 + 1e-12)) {
        return Err(SolverError::HeightTooLarge { height: t, max });
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct DirichletProblem {
    system: EllipticSystem,
    datum: BoundaryField,
    heights: Vec<f64>,
    method: KernelMethod,
}

impl DirichletProblem {
    pub fn new(
        system: EllipticSystem,
        datum: BoundaryField,
        heights: Vec<f64>,
        method: KernelMethod,
    ) -> Result<Self, SolverError> {
        if datum.channels() != system.m() {
            return Err(SolverError::ChannelMismatch {
                expected: system.m(),
                got: datum.channels(),
            });
        }
        if datum.grid().dim() + 1 != system.n() {
            return Err(KernelError::DimensionMismatch(format!(
                "datum lives on a {}-dimensional grid, the system has n = {}",
                datum.grid().dim(),
                system.n()
            ))
            .into());
        }
        if heights.is_empty() {
            return Err(GridError::InvalidHeights.into());
        }
        let min = 2.0 * datum.grid().spacing();
        for &t in &heights {
            if !(t >= min * (1.0 - 1e-12)) {
                return Err(SolverError::HeightTooSmall { height: t, min });
            }
        }
        Ok(Self {
            system,
            datum,
            heights,
            method,
        })
    }

    pub fn system(&self) -> &EllipticSystem {
        &self.system
    }

    pub fn datum(&self) -> &BoundaryField {
        &self.datum
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn method(&self) -> KernelMethod {
        self.method
    }
}

/// Solves by building the kernel and convolving at every height.
pub fn solve(prob: &DirichletProblem) -> Result<HalfSpaceField, SolverError> {
    let pc = build_kernel(&prob.system, prob.method, prob.datum.grid())?;
    solve_with(&pc, &prob.datum, &prob.heights)
}

/// `u(., t) = P_t * f` for each height with an already built kernel.
pub fn solve_with(pc: &PoissonConstruction, f: &BoundaryField, heights: &[f64]) -> Result<HalfSpaceField, SolverError> {
    if f.channels() != pc.system().m() {
        return Err(SolverError::ChannelMismatch {
            expected: pc.system().m(),
            got: f.channels(),
        });
    }
    let slices = heights
        .iter()
        .map(|&t| Ok(fft_convolve(&pc.slice(t)?, f)?))
        .collect::<Result<Vec<_>, SolverError>>()?;
    Ok(HalfSpaceField::from_slices(heights.to_vec(), slices)?)
}

/// Sum of `bumps` Gaussian bumps `a exp(-|x - c|^2 / (2 s^2))` with centres
/// in `|x| <= R/4`, widths `s` in `[0.5, 2]` and amplitudes in `[-1, 1]`
/// (`[0, 1]` when `nonneg`), one independent draw per channel.
pub fn random_datum(
    grid: &BoundaryGrid,
    channels: usize,
    nonneg: bool,
    rng: &mut impl Rng,
) -> Result<BoundaryField, GridError> {
    const BUMPS: usize = 5;
    let dim = grid.dim();
    let reach = grid.half_width() / 4.0;
    let mut values = vec![C64::new(0.0, 0.0); grid.node_count() * channels];
    for c in 0..channels {
        for _ in 0..BUMPS {
            let centre: Vec<f64> = (0..dim).map(|_| rng.gen_range(-reach..reach)).collect();
            let s: f64 = rng.gen_range(0.5..2.0);
            let a: f64 = if nonneg { rng.gen_range(0.0..1.0) } else { rng.gen_range(-1.0..1.0) };
            for k in 0..grid.node_count() {
                let x = grid.node(k);
                let d2: f64 = (0..dim).map(|i| (x[i] - centre[i]).powi(2)).sum();
                values[k * channels + c] += C64::new(a * (-d2 / (2.0 * s * s)).exp(), 0.0);
            }
        }
    }
    BoundaryField::new(grid.clone(), channels, values)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceReport {
    pub heights: Vec<f64>,
    /// `max` over probes `x'` and cone points `(y', t)` of `|u(y', t) - f(x')|`.
    pub deviations: Vec<f64>,
    /// Least-squares slope of `log deviation` against `log t`.
    pub rate: f64,
    pub probes: usize,
}

/// Relative jump size above which neighbouring nodes count as a
/// discontinuity of the datum.
const JUMP_FRACTION: f64 = 0.05;

/// Probe nodes in `|x'| <= R/4` at least `4h` away from every jump of `f`.
pub fn lebesgue_probes(f: &BoundaryField) -> Vec<usize> {
    let grid = f.grid();
    let dim = grid.dim();
    let n = grid.points_per_axis();
    let vals = f.values();
    let m = f.channels();
    let fmax = f.max_abs();
    let jump = |a: usize, b: usize| -> bool {
        (0..m)
            .map(|c| (vals[a * m + c] - vals[b * m + c]).norm())
            .fold(0.0, f64::max)
            > JUMP_FRACTION * fmax
    };
    let mut near_jump = vec![false; grid.node_count()];
    for k in 0..grid.node_count() {
        let idx = grid.axis_indices(k);
        for a in 0..dim {
            if idx[a] + 1 < n {
                let mut nb = idx;
                nb[a] += 1;
                let q = grid.index_of(nb);
                if jump(k, q) {
                    near_jump[k] = true;
                    near_jump[q] = true;
                }
            }
        }
    }
    let reach = 4usize;
    (0..grid.node_count())
        .filter(|&k| grid.node_norm(k) <= grid.half_width() / 4.0)
        .filter(|&k| {
            let idx = grid.axis_indices(k);
            let lo = |i: usize| i.saturating_sub(reach);
            let hi = |i: usize| (i + reach).min(n - 1);
            if dim == 1 {
                (lo(idx[0])..=hi(idx[0])).all(|i| !near_jump[i])
            } else {
                (lo(idx[0])..=hi(idx[0]))
                    .all(|i| (lo(idx[1])..=hi(idx[1])).all(|j| !near_jump[grid.index_of([i, j])]))
            }
        })
        .collect()
}

/// Nontangential approach of `u` to its datum at Lebesgue probes.
pub fn trace_convergence(u: &HalfSpaceField, f: &BoundaryField, cone: &ConeSpec) -> Result<TraceReport, SolverError> {
    if u.grid() != f.grid() {
        return Err(GridError::GridMismatch.into());
    }
    if u.channels() != f.channels() {
        return Err(SolverError::ChannelMismatch {
            expected: f.channels(),
            got: u.channels(),
        });
    }
    let grid = f.grid();
    let dim = grid.dim();
    let h = grid.spacing();
    let m = f.channels();
    let probes = lebesgue_probes(f);
    let fv = f.values();
    let mut deviations = Vec::with_capacity(u.heights().len());
    for (i, &t) in u.heights().iter().enumerate() {
        let slice = u.slice(i);
        let sv = slice.values();
        let w = ((cone.kappa * t / h).ceil() as i64 - 1).max(0);
        let mut worst = 0.0f64;
        for &k in &probes {
            let idx = grid.axis_indices(k);
            let n = grid.points_per_axis() as i64;
            let range = |a: usize| -> Vec<i64> {
                if a < dim {
                    ((idx[a] as i64 - w).max(0)..=(idx[a] as i64 + w).min(n - 1)).collect()
                } else {
                    vec![0]
                }
            };
            for i0 in range(0) {
                for i1 in range(1) {
                    let d2 = (i0 - idx[0] as i64).pow(2) + if dim == 2 { (i1 - idx[1] as i64).pow(2) } else { 0 };
                    if (d2 as f64).sqrt() * h >= cone.kappa * t {
                        continue;
                    }
                    let q = grid.index_of([i0 as usize, i1 as usize]);
                    for c in 0..m {
                        worst = worst.max((sv[q * m + c] - fv[k * m + c]).norm());
                    }
                }
            }
        }
        deviations.push(worst);
    }
    let logs: Vec<(f64, f64)> = u
        .heights()
        .iter()
        .zip(&deviations)
        .filter(|(_, d)| **d > 0.0)
        .map(|(t, d)| (t.ln(), d.ln()))
        .collect();
    let rate = if logs.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = logs.into_iter().unzip();
        ls_slope(&x, &y)
    } else {
        f64::NAN
    };
    Ok(TraceReport {
        heights: u.heights().to_vec(),
        deviations,
        rate,
        probes: probes.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{cube_indicator, sample_real};
    use crate::systems::{lame, laplacian};
    use std::f64::consts::PI;

    #[test]
    fn indicator_closed_form() {
        // periodic images add about 4t/(pi (2R)^2)
        let grid = BoundaryGrid::new(1, 64.0, 4096).unwrap();
        // value 1/2 on the two endpoint nodes matches the midpoint rule
        let f = sample_real(&grid, |x| {
            let a = x[0].abs();
            if a < 1.0 {
                1.0
            } else if a == 1.0 {
                0.5
            } else {
                0.0
            }
        })
        .unwrap();
        let prob =
            DirichletProblem::new(laplacian(2, 1).unwrap(), f, vec![0.5, 1.0, 2.0], KernelMethod::HarmonicExplicit)
                .unwrap();
        let u = solve(&prob).unwrap();
        let o = grid.origin_index();
        for (i, t) in [0.5f64, 1.0, 2.0].iter().enumerate() {
            let exact = 2.0 / PI * (1.0 / t).atan();
            let got = u.slice(i).values()[o].re;
            assert!((got - exact).abs() < 5e-4, "t={t} {got} {exact}");
        }
    }

    #[test]
    fn constant_datum_is_preserved_by_lame_symbol_kernel() {
        let grid = BoundaryGrid::new(1, 32.0, 512).unwrap();
        let vals = vec![C64::new(0.3, 0.0), C64::new(-1.2, 0.0)].repeat(grid.node_count());
        let f = BoundaryField::new(grid.clone(), 2, vals).unwrap();
        let prob = DirichletProblem::new(lame(2, 1.0, 1.0).unwrap(), f.clone(), default_heights(&grid), KernelMethod::FourierSymbol)
            .unwrap();
        let u = solve(&prob).unwrap();
        for i in 0..u.heights().len() {
            assert!(u.slice(i).sub(&f).unwrap().max_abs() < 1e-10);
        }
    }

    #[test]
    fn heights_below_two_cells_are_rejected() {
        let grid = BoundaryGrid::new(1, 8.0, 64).unwrap();
        let f = cube_indicator(&grid, &[0.0], 2.0);
        let err = DirichletProblem::new(laplacian(2, 1).unwrap(), f, vec![0.1], KernelMethod::HarmonicExplicit);
        assert!(matches!(err, Err(SolverError::HeightTooSmall { .. })));
    }

    #[test]
    fn default_heights_are_geometric() {
        let grid = BoundaryGrid::new(1, 64.0, 4096).unwrap();
        let hs = default_heights(&grid);
        assert_eq!(hs.first().copied(), Some(1.0 / 16.0));
        assert_eq!(hs.last().copied(), Some(8.0));
        assert_eq!(hs.len(), 8);
    }

    #[test]
    fn smooth_trace_converges_at_first_order() {
        let grid = BoundaryGrid::new(1, 32.0, 2048).unwrap();
        let f = sample_real(&grid, |x| (-x[0] * x[0]).exp()).unwrap();
        let heights = vec![0.03125, 0.0625, 0.125, 0.25];
        let pc = build_kernel(&laplacian(2, 1).unwrap(), KernelMethod::HarmonicExplicit, &grid).unwrap();
        let u = solve_with(&pc, &f, &heights).unwrap();
        let rep = trace_convergence(&u, &f, &ConeSpec::new(1.0, None).unwrap()).unwrap();
        assert!(rep.rate > 0.8 && rep.rate < 1.3, "{rep:?}");
        assert!(rep.deviations.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn radial_method_rejects_lame() {
        let grid = BoundaryGrid::new(1, 8.0, 64).unwrap();
        assert!(matches!(
            build_kernel(&lame(2, 1.0, 1.0).unwrap(), KernelMethod::RadialReflection, &grid),
            Err(SolverError::Kernel(KernelError::NotRadial))
        ));
    }
}
