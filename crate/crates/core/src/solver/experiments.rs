//! Experiments: nontangential domination, the semigroup identity,
//! reconstruction from interior traces, atom decay and norm tables.

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{check_height_range, default_heights, random_datum, solve_with, SolverError};
use crate::grid::{fft_convolve, fft_convolve_kernels, BoundaryField, BoundaryGrid, HalfSpaceField};
use crate::kernels::PoissonConstruction;
use crate::maxop::{ap_constant, hl_maximal, nontangential_max, ConeSpec, CubeRef};
use crate::spaces::{beurling_norm, boyd_indices, default_t_grid, norm, validate_atom, AtomFlavor, NormSpec};
use crate::util::ls_slope;

/// Nodes with `M f` below this fraction of its maximum are left out of
/// ratio statistics.
const RATIO_FLOOR: f64 = 1e-14;

/// Named metrics of one experiment together with a digest of its inputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub name: String,
    pub inputs_digest: String,
    pub metrics: BTreeMap<String, f64>,
    pub pass: Option<bool>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, inputs: &impl Serialize) -> Self {
        let text = serde_json::to_string(inputs).unwrap_or_default();
        let digest = Sha256::digest(text.as_bytes());
        Self {
            name: name.into(),
            inputs_digest: hex::encode(&digest[..8]),
            metrics: BTreeMap::new(),
            pass: None,
        }
    }

    pub fn metric(mut self, key: impl Into<String>, value: f64) -> Self {
        self.metrics.insert(key.into(), value);
        self
    }

    pub fn metrics_finite(&self) -> bool {
        self.metrics.values().all(|v| v.is_finite())
    }
}

fn rng_for(seed: u64, trial: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(trial as u64))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SemigroupReport {
    pub t1: f64,
    pub t2: f64,
    /// `||P_{t1} * P_{t2} - P_{t1 + t2}||_max`.
    pub residual: f64,
    /// `residual / ||P_{t1 + t2}||_max`.
    pub relative_residual: f64,
    /// `||P_{t1} * P_{t2} - P_{t2} * P_{t1}||_max`.
    pub commutator: f64,
}

pub fn semigroup_check(pc: &PoissonConstruction, t1: f64, t2: f64) -> Result<SemigroupReport, SolverError> {
    let grid = pc.grid();
    for t in [t1, t2, t1 + t2] {
        check_height_range(grid, t)?;
    }
    let p1 = pc.slice(t1)?;
    let p2 = pc.slice(t2)?;
    let p12 = pc.slice(t1 + t2)?;
    let c12 = fft_convolve_kernels(&p1, &p2)?;
    let c21 = fft_convolve_kernels(&p2, &p1)?;
    let residual = c12.max_diff(&p12, None)?;
    Ok(SemigroupReport {
        t1,
        t2,
        residual,
        relative_residual: residual / p12.max_abs(),
        commutator: c12.max_diff(&c21, None)?,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NtReport {
    pub kappa: f64,
    pub trials: usize,
    pub per_trial_max: Vec<f64>,
    pub global_max: f64,
}

/// `max_x N u(x) / M f(x)` for `f` a datum.
pub fn nt_ratio(u: &HalfSpaceField, f: &BoundaryField, cone: &ConeSpec) -> Result<f64, SolverError> {
    let nu = nontangential_max(u, cone)?.real_values();
    let mf = hl_maximal(f).real_values();
    let floor = RATIO_FLOOR * mf.iter().fold(0.0, |a: f64, b| a.max(*b));
    Ok(nu
        .iter()
        .zip(&mf)
        .filter(|(_, m)| **m > floor)
        .map(|(n, m)| n / m)
        .fold(0.0, f64::max))
}

/// Pointwise `N u / M f` over `trials` seeded random data.
pub fn nt_domination(
    pc: &PoissonConstruction,
    cone: &ConeSpec,
    trials: usize,
    seed: u64,
) -> Result<NtReport, SolverError> {
    if trials < 10 {
        return Err(SolverError::InvalidParameter(format!("trials = {trials}, need at least 10")));
    }
    let grid = pc.grid();
    let heights = default_heights(grid);
    let mut per_trial_max = Vec::with_capacity(trials);
    for trial in 0..trials {
        let f = random_datum(grid, pc.system().m(), false, &mut rng_for(seed, trial))?;
        let u = solve_with(pc, &f, &heights)?;
        per_trial_max.push(nt_ratio(&u, &f, cone)?);
    }
    Ok(NtReport {
        kappa: cone.kappa,
        trials,
        global_max: per_trial_max.iter().fold(0.0, |a: f64, b| a.max(*b)),
        per_trial_max,
    })
}

/// `||u(., t_big) - P_{t_big - t_small} * u(., t_small)||_max`.
pub fn fatou_reconstruction(
    u: &HalfSpaceField,
    pc: &PoissonConstruction,
    t_small: f64,
    t_big: f64,
) -> Result<f64, SolverError> {
    if !(t_small < t_big) {
        return Err(SolverError::InvalidParameter(format!("t_small = {t_small} must be below t_big = {t_big}")));
    }
    let i_small = u.height_index(t_small).ok_or(SolverError::MissingHeight(t_small))?;
    let i_big = u.height_index(t_big).ok_or(SolverError::MissingHeight(t_big))?;
    let rebuilt = fft_convolve(&pc.slice(t_big - t_small)?, &u.slice(i_small))?;
    Ok(rebuilt.sub(&u.slice(i_big))?.max_abs())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AtomDecayReport {
    pub side: f64,
    /// `sup N u(x') |x' - x_Q|^n / l(Q)` over nodes outside `2 sqrt(n) Q`
    /// with `|x' - x_Q| <= R/2`.
    pub off_cube_constant: f64,
    /// `int N u`.
    pub nu_l1: f64,
    /// Minus the slope of `log max N u` against `log |x' - x_Q|` over
    /// dyadic shells between `max(sqrt(n) l, 8h)` and `R/4`.
    pub decay_exponent: f64,
    /// Weighted annulus sum of `N u` (central atoms only).
    pub beurling_sum: Option<f64>,
}

/// Solves with an atom as datum and measures the decay of `N u`.
pub fn atom_decay(
    pc: &PoissonConstruction,
    candidate: &BoundaryField,
    cube: &CubeRef,
    flavor: AtomFlavor,
    cone: &ConeSpec,
) -> Result<AtomDecayReport, SolverError> {
    let atom = validate_atom(candidate, cube, flavor).map_err(SolverError::InvalidAtom)?;
    let grid = pc.grid();
    let n = pc.system().n() as i32;
    let dim = grid.dim();
    let u = solve_with(pc, &atom.field, &default_heights(grid))?;
    let nu = nontangential_max(&u, cone)?;
    let vals = nu.real_values();
    let l = cube.side;
    let dist = |k: usize| -> (f64, f64) {
        let x = grid.node(k);
        let mut e2 = 0.0f64;
        let mut sup = 0.0f64;
        for a in 0..dim {
            let d = x[a] - cube.center[a];
            e2 += d * d;
            sup = sup.max(d.abs());
        }
        (e2.sqrt(), sup)
    };
    let root_n = (n as f64).sqrt();
    let mut constant = 0.0f64;
    let near = (root_n * l).max(8.0 * grid.spacing());
    let far = grid.half_width() / 4.0;
    let shells = ((far / near).log2().floor() as usize).max(1);
    let mut shell_max = vec![0.0f64; shells];
    for (k, v) in vals.iter().enumerate() {
        let (d, sup) = dist(k);
        if sup > root_n * l && d <= grid.half_width() / 2.0 {
            constant = constant.max(v * d.powi(n) / l);
        }
        if d >= near && d < far {
            let j = (d / near).log2().floor() as usize;
            if j < shells {
                shell_max[j] = shell_max[j].max(*v);
            }
        }
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = shell_max
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.0)
        .map(|(j, v)| ((near * 2f64.powi(j as i32)).ln(), v.ln()))
        .unzip();
    let decay_exponent = if xs.len() >= 2 { -ls_slope(&xs, &ys) } else { f64::NAN };
    let beurling_sum = match flavor {
        AtomFlavor::BeurlingCentral { p } => Some(beurling_norm(&nu, p)?),
        AtomFlavor::H1 { .. } => None,
    };
    Ok(AtomDecayReport {
        side: l,
        off_cube_constant: constant,
        nu_l1: vals.iter().sum::<f64>() * grid.cell_volume(),
        decay_exponent,
        beurling_sum,
    })
}

/// Boundedness screen of `M` on the space: `p_X > 1` for rearrangement
/// invariant norms, finite `A_p` constants for weights, `ess inf p > 1` for
/// variable exponents. Returns a short description on success.
pub fn screen_spec(spec: &NormSpec, grid: &BoundaryGrid) -> Result<String, SolverError> {
    spec.validate()?;
    let fail = |msg: String| Err(SolverError::SpecScreenFailed(msg));
    match spec {
        NormSpec::WeightedLebesgue { p, weight } => {
            if !(*p > 1.0) {
                return fail(format!("p = {p} is not above 1"));
            }
            let ap = ap_constant(&weight.resolve(grid)?, *p)?;
            if ap.constant.is_finite() {
                Ok(format!("A_{p} constant {:.4}", ap.constant))
            } else {
                fail(format!("A_{p} constant is infinite"))
            }
        }
        NormSpec::WeightedRi { base, weight } => {
            let est = boyd_indices(base, &default_t_grid())?;
            if !(est.p_x > 1.0) {
                return fail(format!("lower Boyd index {:.4} is not above 1", est.p_x));
            }
            let ap = ap_constant(&weight.resolve(grid)?, est.p_x)?;
            if ap.constant.is_finite() {
                Ok(format!("p_X = {:.4}, A_(p_X) constant {:.4}", est.p_x, ap.constant))
            } else {
                fail("weight is not in A_(p_X)".into())
            }
        }
        NormSpec::VariableExponent { exponent } => {
            let ps = exponent.resolve(grid)?;
            let lo = ps.iter().fold(f64::INFINITY, |a, b| a.min(*b));
            if lo > 1.0 {
                Ok(format!("ess inf p = {lo:.4}"))
            } else {
                fail(format!("ess inf p = {lo} is not above 1"))
            }
        }
        _ => {
            let est = boyd_indices(spec, &default_t_grid())?;
            if est.p_x > 1.0 {
                Ok(format!("p_X = {:.4}", est.p_x))
            } else {
                fail(format!("lower Boyd index {:.4} is not above 1", est.p_x))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WellposednessRow {
    pub system: String,
    pub spec: NormSpec,
    pub screen: String,
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// `max ||N u||_X / ||f||_X` over seeded random data for every pair of
/// system and norm, with aperture-1 cones and the default heights.
pub fn wellposedness_table(
    kernels: &[PoissonConstruction],
    specs: &[NormSpec],
    trials: usize,
    seed: u64,
) -> Result<Vec<WellposednessRow>, SolverError> {
    let cone = ConeSpec::new(1.0, None)?;
    let mut rows = Vec::new();
    for pc in kernels {
        let grid = pc.grid();
        let heights = default_heights(grid);
        let mut nus = Vec::with_capacity(trials);
        for trial in 0..trials {
            let f = random_datum(grid, pc.system().m(), false, &mut rng_for(seed, trial))?;
            let u = solve_with(pc, &f, &heights)?;
            nus.push((nontangential_max(&u, &cone)?, f));
        }
        for spec in specs {
            let screen = screen_spec(spec, grid)?;
            let mut ratios = Vec::with_capacity(trials);
            for (nu, f) in &nus {
                let den = norm(f, spec)?;
                if den > 0.0 {
                    ratios.push(norm(nu, spec)? / den);
                }
            }
            rows.push(WellposednessRow {
                system: pc.system().label().to_string(),
                spec: spec.clone(),
                screen,
                max_ratio: ratios.iter().fold(0.0, |a: f64, b| a.max(*b)),
                ratios,
            });
        }
    }
    Ok(rows)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OperatorBoundReport {
    pub ts: Vec<f64>,
    /// Largest `||P_t * f||_X / ||f||_X` over trials, per height.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// `max ||P_t * f||_X / ||f||_X` over heights and seeded random data.
pub fn semigroup_operator_bound(
    pc: &PoissonConstruction,
    spec: &NormSpec,
    ts: &[f64],
    trials: usize,
    seed: u64,
    nonneg: bool,
) -> Result<OperatorBoundReport, SolverError> {
    let grid = pc.grid();
    screen_spec(spec, grid)?;
    let slices = pc.slices(ts)?;
    let mut ratios = vec![0.0f64; ts.len()];
    for trial in 0..trials {
        let f = random_datum(grid, pc.system().m(), nonneg, &mut rng_for(seed, trial))?;
        let den = norm(&f, spec)?;
        if !(den > 0.0) {
            continue;
        }
        for (r, p) in ratios.iter_mut().zip(&slices) {
            *r = r.max(norm(&fft_convolve(p, &f)?, spec)? / den);
        }
    }
    Ok(OperatorBoundReport {
        ts: ts.to_vec(),
        max_ratio: ratios.iter().fold(0.0, |a: f64, b| a.max(*b)),
        ratios,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::harmonic_poisson;
    use crate::solver::{build_kernel, KernelMethod};
    use crate::spaces::random_h1_atom;
    use crate::systems::laplacian;

    #[test]
    fn harmonic_semigroup_is_tight() {
        let grid = BoundaryGrid::new(1, 32.0, 1024).unwrap();
        let pc = harmonic_poisson(2, &grid).unwrap();
        let rep = semigroup_check(&pc, 1.0, 1.0).unwrap();
        assert!(rep.residual < 1e-4, "{rep:?}");
        assert!(rep.commutator < 1e-12, "{rep:?}");
        assert!(semigroup_check(&pc, 1.0, 4.0).is_err());
    }

    #[test]
    fn nt_domination_is_bounded() {
        let grid = BoundaryGrid::new(1, 32.0, 512).unwrap();
        let pc = harmonic_poisson(2, &grid).unwrap();
        let rep = nt_domination(&pc, &ConeSpec::new(1.0, None).unwrap(), 10, 7).unwrap();
        assert!(rep.global_max > 0.1 && rep.global_max < 25.0, "{rep:?}");
        assert!(nt_domination(&pc, &ConeSpec::new(1.0, None).unwrap(), 3, 7).is_err());
    }

    #[test]
    fn fatou_residual_matches_semigroup_budget() {
        let grid = BoundaryGrid::new(1, 32.0, 1024).unwrap();
        let pc = harmonic_poisson(2, &grid).unwrap();
        let f = random_datum(&grid, 1, false, &mut rng_for(3, 0)).unwrap();
        let u = solve_with(&pc, &f, &[0.25, 1.0]).unwrap();
        assert!(fatou_reconstruction(&u, &pc, 0.25, 1.0).unwrap() < 1e-4);
        assert!(matches!(fatou_reconstruction(&u, &pc, 0.5, 1.0), Err(SolverError::MissingHeight(_))));
    }

    #[test]
    fn atom_decay_scales_linearly() {
        let grid = BoundaryGrid::new(1, 32.0, 512).unwrap();
        let pc = harmonic_poisson(2, &grid).unwrap();
        let atom = random_h1_atom(&grid, 1, 2.0, &mut rng_for(11, 0)).unwrap();
        let cone = ConeSpec::new(1.0, None).unwrap();
        let full = atom_decay(&pc, &atom.field, &atom.cube, atom.flavor, &cone).unwrap();
        let half_field = atom.field.scale(crate::grid::C64::new(0.5, 0.0));
        let half = atom_decay(&pc, &half_field, &atom.cube, atom.flavor, &cone).unwrap();
        assert!((half.nu_l1 - 0.5 * full.nu_l1).abs() < 1e-12 * full.nu_l1.max(1.0));
        assert!((half.off_cube_constant - 0.5 * full.off_cube_constant).abs() < 1e-12);
    }

    #[test]
    fn lebesgue_one_fails_the_screen() {
        let grid = BoundaryGrid::new(1, 16.0, 128).unwrap();
        assert!(matches!(
            screen_spec(&NormSpec::Lebesgue { p: 1.0 }, &grid),
            Err(SolverError::SpecScreenFailed(_))
        ));
        assert!(screen_spec(&NormSpec::Lebesgue { p: 2.0 }, &grid).is_ok());
    }

    #[test]
    fn positive_kernel_contracts_lebesgue_norms() {
        let grid = BoundaryGrid::new(1, 32.0, 512).unwrap();
        let pc = build_kernel(&laplacian(2, 1).unwrap(), KernelMethod::FourierSymbol, &grid).unwrap();
        let rep = semigroup_operator_bound(&pc, &NormSpec::Lebesgue { p: 2.0 }, &[1.0, 2.0, 4.0], 5, 1, true).unwrap();
        assert!(rep.max_ratio <= 1.0 + 1e-9, "{rep:?}");
    }

    #[test]
    fn report_digest_is_stable() {
        let a = ExperimentReport::new("x", &[1.0, 2.0]).metric("r", 0.5);
        let b = ExperimentReport::new("x", &[1.0, 2.0]).metric("r", 0.5);
        assert_eq!(a, b);
        assert_ne!(a.inputs_digest, ExperimentReport::new("x", &[1.0]).inputs_digest);
    }
}
