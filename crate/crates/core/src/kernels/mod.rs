//! Poisson kernels, fundamental solutions and Green functions for the upper
//! half-space `{(x', t) : t > 0}`.
//!
//! Three Poisson constructions are available: the explicit harmonic kernel
//! `P(x') = (2/omega_{n-1}) (1 + |x'|^2)^{-n/2}`, the radial reflection
//! `P_{ga}(z') = 2 a^{ba}_{nn} (d_n E_{gb})(z', 1)` for radial fundamental
//! solutions, and the boundary-symbol construction for general systems.
//! Slices `P_t(x') = t^{1-n} P(x'/t)` are periodized over the grid box so
//! that FFT convolution sees the same kernel the symbol method produces.

mod fundamental;
mod symbol;
mod verify;

pub use fundamental::{
    harmonic_closed_form, harmonic_fundamental_solution, is_radial, scalar_fundamental_solution,
    sphere_quadrature_fundamental_solution, Construction, FundamentalSolution,
};
pub use symbol::{MAX_BASIS_COND, SPLIT_TOL};
pub use verify::{green_cross_check, transpose_duality_residual, verify_poisson_properties, PoissonReport};

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::grid::{BoundaryGrid, GridError, KernelMatrix, C64};
use crate::systems::{laplacian, legendre_hadamard, CMat, EllipticSystem, SystemError};
use symbol::SymbolData;

/// Images per axis used when periodizing explicit kernels.
pub const PERIODIZATION_IMAGES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("matrix is not strongly elliptic (min Re[A xi.xi] = {0})")]
    NotStronglyElliptic(f64),
    #[error("system is not weakly elliptic")]
    NotWeaklyElliptic,
    #[error("system fails the Legendre-Hadamard condition (min ratio {0})")]
    NotLegendreHadamard(f64),
    #[error("symbol is singular at a quadrature node")]
    SingularSymbol,
    #[error("fundamental solution is not radial")]
    NotRadial,
    #[error("points coincide")]
    CoincidentPoints,
    #[error("point lies outside the closed upper half-space")]
    OutsideHalfSpace,
    #[error("fundamental solution evaluated at the origin")]
    ZeroArgument,
    #[error("found {stable} decaying roots, expected {expected}")]
    SplittingFailure { stable: usize, expected: usize },
    #[error("decaying basis has condition number {cond:e}")]
    IllConditionedBasis { cond: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Grid(#[from] GridError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum PoissonMethod {
    HarmonicExplicit,
    RadialReflection,
    FourierSymbol,
}

#[derive(Clone, Debug)]
enum Source {
    Explicit,
    Radial {
        e: FundamentalSolution,
        a_nn: CMat,
        analytic: bool,
    },
    Symbol(SymbolData),
}

/// Serializable description of a construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonMeta {
    pub method: PoissonMethod,
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
    pub truncation: String,
    pub derivative: Option<String>,
    pub system: String,
}

#[derive(Clone, Debug)]
pub struct PoissonConstruction {
    system: EllipticSystem,
    method: PoissonMethod,
    grid: BoundaryGrid,
    profile: KernelMatrix,
    source: Source,
}

fn omega(n: usize) -> f64 {
    if n == 2 {
        2.0 * PI
    } else {
        4.0 * PI
    }
}

/// `(2/omega_{n-1}) (1 + |x'|^2)^{-n/2}`.
pub fn harmonic_profile(n: usize, x: &[f64]) -> f64 {
    let r2: f64 = x.iter().map(|v| v * v).sum();
    2.0 / omega(n) * (1.0 + r2).powf(-0.5 * n as f64)
}

fn check_grid(n: usize, grid: &BoundaryGrid) -> Result<(), KernelError> {
    if grid.dim() + 1 != n {
        return Err(KernelError::DimensionMismatch(format!(
            "boundary grid has dimension {}, expected {}",
            grid.dim(),
            n - 1
        )));
    }
    Ok(())
}

impl PoissonConstruction {
    fn from_source(
        system: EllipticSystem,
        method: PoissonMethod,
        grid: &BoundaryGrid,
        source: Source,
    ) -> Result<Self, KernelError> {
        let mut pc = Self {
            system,
            method,
            grid: grid.clone(),
            profile: KernelMatrix::delta(grid, 1),
            source,
        };
        pc.profile = match &pc.source {
            Source::Symbol(data) => data.slice(1.0),
            _ => {
                let m = pc.system.m();
                let dim = grid.dim();
                let pts: Vec<Result<CMat, KernelError>> = (0..grid.node_count())
                    .into_par_iter()
                    .map(|k| pc.free_value(&grid.node(k)[..dim], 1.0))
                    .collect();
                let mut values = Vec::with_capacity(grid.node_count() * m * m);
                for p in pts {
                    let p = p?;
                    for a in 0..m {
                        for b in 0..m {
                            values.push(p[(a, b)]);
                        }
                    }
                }
                KernelMatrix::new(grid.clone(), m, 1.0, values)?
            }
        };
        Ok(pc)
    }

    pub fn system(&self) -> &EllipticSystem {
        &self.system
    }

    pub fn method(&self) -> PoissonMethod {
        self.method
    }

    pub fn grid(&self) -> &BoundaryGrid {
        &self.grid
    }

    /// Samples at `t = 1`: raw kernel values for the explicit and radial
    /// constructions, the periodic kernel for the symbol construction.
    pub fn profile(&self) -> &KernelMatrix {
        &self.profile
    }

    pub fn meta(&self) -> PoissonMeta {
        let (truncation, derivative) = match &self.source {
            Source::Explicit => (format!("periodized with {PERIODIZATION_IMAGES} images per axis"), None),
            Source::Radial { analytic, .. } => (
                format!("periodized with {PERIODIZATION_IMAGES} images per axis"),
                Some(if *analytic { "analytic" } else { "finite-difference" }.to_string()),
            ),
            Source::Symbol(_) => ("periodic (discrete Fourier series)".to_string(), None),
        };
        PoissonMeta {
            method: self.method,
            n: self.system.n(),
            m: self.system.m(),
            half_width: self.grid.half_width(),
            points_per_axis: self.grid.points_per_axis(),
            truncation,
            derivative,
            system: self.system.label().to_string(),
        }
    }

    /// `P_t(x')` without periodization; `None` for the symbol construction.
    pub fn free_value(&self, x: &[f64], t: f64) -> Result<CMat, KernelError> {
        let n = self.system.n();
        let m = self.system.m();
        let scale = t.powi(1 - n as i32);
        let z: Vec<f64> = x.iter().map(|v| v / t).collect();
        match &self.source {
            Source::Explicit => Ok(DMatrix::identity(m, m) * C64::new(scale * harmonic_profile(n, &z), 0.0)),
            Source::Radial { e, a_nn, analytic } => {
                let mut p = z.clone();
                p.push(1.0);
                let dn = e.normal_derivative(&p, *analytic)?;
                Ok(dn * a_nn * C64::new(2.0 * scale, 0.0))
            }
            Source::Symbol(_) => Err(KernelError::DimensionMismatch(
                "the symbol construction has no free-space evaluator".into(),
            )),
        }
    }

    /// Kernel slice at height `t` on the construction grid.
    pub fn slice(&self, t: f64) -> Result<KernelMatrix, KernelError> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(GridError::InvalidHeights.into());
        }
        if let Source::Symbol(data) = &self.source {
            return Ok(data.slice(t));
        }
        let grid = &self.grid;
        let dim = grid.dim();
        let m = self.system.m();
        let period = 2.0 * grid.half_width();
        let img = PERIODIZATION_IMAGES as i64;
        let shifts: Vec<[f64; 2]> = if dim == 1 {
            (-img..=img).map(|i| [i as f64 * period, 0.0]).collect()
        } else {
            (-img..=img)
                .flat_map(|i| (-img..=img).map(move |j| [i as f64 * period, j as f64 * period]))
                .collect()
        };
        let pts: Vec<Result<CMat, KernelError>> = (0..grid.node_count())
            .into_par_iter()
            .map(|k| {
                let x = grid.node(k);
                let mut acc: CMat = DMatrix::zeros(m, m);
                for s in &shifts {
                    let y: Vec<f64> = (0..dim).map(|a| x[a] + s[a]).collect();
                    acc += self.free_value(&y, t)?;
                }
                Ok(acc)
            })
            .collect();
        let mut values = Vec::with_capacity(grid.node_count() * m * m);
        for p in pts {
            let p = p?;
            for a in 0..m {
                for b in 0..m {
                    values.push(p[(a, b)]);
                }
            }
        }
        Ok(KernelMatrix::new(grid.clone(), m, t, values)?)
    }

    pub fn slices(&self, ts: &[f64]) -> Result<Vec<KernelMatrix>, KernelError> {
        ts.iter().map(|&t| self.slice(t)).collect()
    }
}

/// Explicit harmonic kernel for the scalar Laplacian.
pub fn harmonic_poisson(n: usize, grid: &BoundaryGrid) -> Result<PoissonConstruction, KernelError> {
    harmonic_poisson_channels(n, 1, grid)
}

/// Explicit harmonic kernel `P I_M` for `Delta I_M`.
pub fn harmonic_poisson_channels(n: usize, m: usize, grid: &BoundaryGrid) -> Result<PoissonConstruction, KernelError> {
    check_grid(n, grid)?;
    PoissonConstruction::from_source(laplacian(n, m)?, PoissonMethod::HarmonicExplicit, grid, Source::Explicit)
}

/// `G(x, y) = E(x - y) - E(x - ybar)` with `ybar = (y', -y_n)`.
pub fn green_reflection(e: &FundamentalSolution, x: &[f64], y: &[f64]) -> Result<CMat, KernelError> {
    let n = e.n();
    if x.len() != n || y.len() != n {
        return Err(KernelError::DimensionMismatch("points must have n coordinates".into()));
    }
    if !e.radial() {
        return Err(KernelError::NotRadial);
    }
    if x[n - 1] < 0.0 || !(y[n - 1] > 0.0) {
        return Err(KernelError::OutsideHalfSpace);
    }
    if x == y {
        return Err(KernelError::CoincidentPoints);
    }
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut dbar = d.clone();
    dbar[n - 1] = x[n - 1] + y[n - 1];
    Ok(e.eval(&d)? - e.eval(&dbar)?)
}

/// Radial-reflection Poisson kernel, with the analytic normal derivative
/// whenever the fundamental solution has one.
pub fn poisson_from_green_radial(
    e: &FundamentalSolution,
    sys: &EllipticSystem,
    grid: &BoundaryGrid,
) -> Result<PoissonConstruction, KernelError> {
    poisson_from_green_radial_with(e, sys, grid, e.has_analytic_gradient())
}

pub fn poisson_from_green_radial_with(
    e: &FundamentalSolution,
    sys: &EllipticSystem,
    grid: &BoundaryGrid,
    analytic: bool,
) -> Result<PoissonConstruction, KernelError> {
    if !e.radial() {
        return Err(KernelError::NotRadial);
    }
    if sys.n() != e.n() || sys.m() != e.m() {
        return Err(KernelError::DimensionMismatch("system and fundamental solution differ in shape".into()));
    }
    check_grid(sys.n(), grid)?;
    let source = Source::Radial {
        e: e.clone(),
        a_nn: sys.normal_block(),
        analytic: analytic && e.has_analytic_gradient(),
    };
    PoissonConstruction::from_source(sys.clone(), PoissonMethod::RadialReflection, grid, source)
}

/// Symbol construction; returns the construction and the slices at `t_list`.
pub fn fourier_symbol_poisson(
    sys: &EllipticSystem,
    grid: &BoundaryGrid,
    t_list: &[f64],
) -> Result<(PoissonConstruction, Vec<KernelMatrix>), KernelError> {
    check_grid(sys.n(), grid)?;
    let lh = legendre_hadamard(sys, 2000, 50);
    if !(lh.kappa_o > 0.0) {
        return Err(KernelError::NotLegendreHadamard(lh.min_ratio));
    }
    let data = SymbolData::build(sys, grid)?;
    let pc = PoissonConstruction::from_source(sys.clone(), PoissonMethod::FourierSymbol, grid, Source::Symbol(data))?;
    let slices = pc.slices(t_list)?;
    Ok((pc, slices))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::lame;

    #[test]
    fn harmonic_values_at_origin() {
        let g1 = BoundaryGrid::new(1, 8.0, 64).unwrap();
        let p = harmonic_poisson(2, &g1).unwrap();
        assert!((p.profile().entry(g1.origin_index(), 0, 0).re - 1.0 / PI).abs() < 1e-15);
        let g2 = BoundaryGrid::new(2, 8.0, 16).unwrap();
        let p = harmonic_poisson(3, &g2).unwrap();
        assert!((p.profile().entry(g2.origin_index(), 0, 0).re - 0.5 / PI).abs() < 1e-15);
        assert!(harmonic_poisson(3, &g1).is_err());
    }

    #[test]
    fn radial_reflection_reproduces_harmonic() {
        for n in [2usize, 3] {
            let grid = BoundaryGrid::new(n - 1, 4.0, 16).unwrap();
            let e = harmonic_fundamental_solution(n, 1).unwrap();
            let pc = poisson_from_green_radial(&e, &laplacian(n, 1).unwrap(), &grid).unwrap();
            let exact = harmonic_poisson(n, &grid).unwrap();
            let diff = pc.profile().max_diff(exact.profile(), None).unwrap();
            assert!(diff < 1e-14, "n={n} {diff}");
        }
    }

    #[test]
    fn green_examples() {
        let e = harmonic_fundamental_solution(3, 1).unwrap();
        let g = green_reflection(&e, &[0.0, 0.0, 2.0], &[0.0, 0.0, 1.0]).unwrap();
        assert!((g[(0, 0)].re + 1.0 / (6.0 * PI)).abs() < 1e-14);
        let on_boundary = green_reflection(&e, &[0.7, -0.2, 0.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_eq!(on_boundary[(0, 0)].re, 0.0);
        assert_eq!(green_reflection(&e, &[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]), Err(KernelError::CoincidentPoints));
        let ell = scalar_fundamental_solution(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(4.0, 0.0),
            C64::new(1.0, 0.0),
        ])))
        .unwrap();
        assert_eq!(green_reflection(&ell, &[0.0, 2.0], &[0.0, 1.0]), Err(KernelError::NotRadial));
    }

    #[test]
    fn symbol_laplacian_matches_periodized_explicit() {
        let grid = BoundaryGrid::new(1, 16.0, 512).unwrap();
        let (pc, _) = fourier_symbol_poisson(&laplacian(2, 1).unwrap(), &grid, &[]).unwrap();
        // closed-form periodization of the harmonic kernel with period 2R
        let r = grid.half_width();
        let per = |x: f64| (PI / r).sinh() / (2.0 * r * ((PI / r).cosh() - (PI * x / r).cos()));
        for k in 0..grid.node_count() {
            let x = grid.node(k)[0];
            assert!((pc.profile().entry(k, 0, 0).re - per(x)).abs() < 1e-12, "x={x}");
        }
    }

    #[test]
    fn symbol_rejects_non_lh_system() {
        let grid = BoundaryGrid::new(1, 8.0, 64).unwrap();
        assert!(matches!(
            fourier_symbol_poisson(&lame(2, 1.0, -3.0).unwrap(), &grid, &[1.0]),
            Err(KernelError::NotLegendreHadamard(_))
        ));
    }
}
