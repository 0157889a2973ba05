//! The `verify` suite: runs the configured experiments and checks their
//! metrics against the committed envelopes.

use std::collections::BTreeMap;
use std::path::Path;

use halfspace::grid::BoundaryGrid;
use halfspace::kernels::{verify_poisson_properties, PoissonConstruction};
use halfspace::maxop::{cone_aperture_comparison, m_ball_profile, ConeSpec};
use halfspace::solver::{
    atom_decay, build_kernel, default_heights, fatou_reconstruction, nt_domination, random_datum, semigroup_check,
    semigroup_operator_bound, solve_with, wellposedness_table, ExperimentReport, SolverError,
};
use halfspace::spaces::{boyd_indices, default_t_grid, random_h1_atom, xw_decay_check};
use halfspace::systems::{legendre_hadamard, EllipticSystem, SystemJson};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentSpec, RunConfig};
use crate::envelopes::Envelopes;
use crate::error::CliError;

/// Sample count and refinement steps of the ellipticity gate.
const LH_SAMPLES: usize = 2000;
const LH_REFINE: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Skipped,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryEntry {
    pub id: String,
    pub kind: String,
    pub status: Status,
    pub inputs_digest: String,
    pub metrics: BTreeMap<String, f64>,
    pub pass: bool,
    pub violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub message: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub system: String,
    pub method: String,
    pub seed: u64,
    pub experiments: Vec<SummaryEntry>,
    pub pass: bool,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}

fn rng(seed: u64, k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(k as u64))
}

fn max_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn min_of(v: impl IntoIterator<Item = f64>) -> f64 {
    v.into_iter().fold(f64::INFINITY, f64::min)
}

fn run_experiment(
    spec: &ExperimentSpec,
    sys: &EllipticSystem,
    grid: &BoundaryGrid,
    pc: Option<&PoissonConstruction>,
    seed: u64,
) -> Result<Vec<(String, f64)>, SolverError> {
    let pc = || pc.expect("kernel experiments run with a kernel");
    let m = sys.m();
    let metrics = match spec {
        ExperimentSpec::KernelProperties { .. } => {
            let r = verify_poisson_properties(pc(), sys)?;
            let mut out = vec![
                ("decay_constant".into(), r.decay_constant),
                ("integral_error".into(), r.integral_error),
                ("fd_residual_coarse".into(), r.fd_residuals[0]),
                ("fd_residual_fine".into(), r.fd_residuals[1]),
                ("fd_order".into(), r.fd_order),
                ("homogeneity_error".into(), r.homogeneity_error),
            ];
            if let Some(g) = r.green_cross_check {
                out.push(("green_cross_check".into(), g));
            }
            out
        }
        ExperimentSpec::Semigroup { t1, t2, .. } => {
            let r = semigroup_check(pc(), *t1, *t2)?;
            vec![
                ("residual".into(), r.residual),
                ("relative_residual".into(), r.relative_residual),
                ("commutator".into(), r.commutator),
            ]
        }
        ExperimentSpec::NtDomination { kappa, trials, .. } => {
            let r = nt_domination(pc(), &ConeSpec::new(*kappa, None)?, *trials, seed)?;
            vec![
                ("global_max".into(), r.global_max),
                ("trial_min".into(), min_of(r.per_trial_max.iter().copied())),
            ]
        }
        ExperimentSpec::Fatou { t_small, t_big, .. } => {
            let f = random_datum(grid, m, false, &mut rng(seed, 0))?;
            let u = solve_with(pc(), &f, &[*t_small, *t_big])?;
            vec![("residual".into(), fatou_reconstruction(&u, pc(), *t_small, *t_big)?)]
        }
        ExperimentSpec::AtomDecay { count, q, kappa, .. } => {
            let cone = ConeSpec::new(*kappa, None)?;
            let mut reps = Vec::with_capacity(*count);
            for k in 0..*count {
                let atom = random_h1_atom(grid, m, *q, &mut rng(seed, k)).map_err(SolverError::InvalidAtom)?;
                reps.push(atom_decay(pc(), &atom.field, &atom.cube, atom.flavor, &cone)?);
            }
            vec![
                ("max_nu_l1".into(), max_of(reps.iter().map(|r| r.nu_l1))),
                ("max_off_cube_constant".into(), max_of(reps.iter().map(|r| r.off_cube_constant))),
                ("min_decay_exponent".into(), min_of(reps.iter().map(|r| r.decay_exponent))),
            ]
        }
        ExperimentSpec::Wellposedness { specs, trials, .. } => {
            let rows = wellposedness_table(std::slice::from_ref(pc()), specs, *trials, seed)?;
            rows.iter()
                .enumerate()
                .map(|(i, r)| (format!("max_ratio.{i}"), r.max_ratio))
                .collect()
        }
        ExperimentSpec::OperatorBound {
            spec, ts, trials, nonneg, ..
        } => {
            let r = semigroup_operator_bound(pc(), spec, ts, *trials, seed, *nonneg)?;
            vec![
                ("max_ratio".into(), r.max_ratio),
                ("flatness".into(), r.max_ratio / min_of(r.ratios.iter().copied())),
            ]
        }
        ExperimentSpec::MBallProfile { .. } => {
            let r = m_ball_profile(grid.dim(), grid.half_width(), grid.points_per_axis())?;
            vec![
                ("m_min".into(), r.m_min),
                ("m_max".into(), r.m_max),
                ("m2_min".into(), r.m2_min),
                ("m2_max".into(), r.m2_max),
            ]
        }
        ExperimentSpec::ConeAperture { kappas, p, .. } => {
            let mut ks = kappas.clone();
            ks.sort_by(f64::total_cmp);
            let f = random_datum(grid, m, false, &mut rng(seed, 0))?;
            let u = solve_with(pc(), &f, &default_heights(grid))?;
            let t = cone_aperture_comparison(&u, &ks, *p, None)?;
            let monotone = t.norms.windows(2).all(|w| w[0] <= w[1]);
            vec![
                ("max_ratio".into(), t.max_ratio()),
                ("monotone".into(), if monotone { 1.0 } else { 0.0 }),
            ]
        }
        ExperimentSpec::Boyd { spec, .. } => {
            let r = boyd_indices(spec, &default_t_grid())?;
            vec![("p_x".into(), r.p_x), ("q_x".into(), r.q_x)]
        }
        ExperimentSpec::XwDecay { spec, trials, .. } => {
            let mut ratios = Vec::with_capacity(*trials);
            for k in 0..*trials {
                let h = random_datum(grid, 1, false, &mut rng(seed, k))?;
                ratios.push(xw_decay_check(spec, &h)?.ratio);
            }
            vec![("max_ratio".into(), max_of(ratios))]
        }
    };
    Ok(metrics)
}

#[derive(Serialize)]
struct DigestInputs<'a> {
    grid: &'a crate::config::GridConfig,
    system: SystemJson,
    method: halfspace::solver::KernelMethod,
    seed: u64,
    experiment: Option<&'a ExperimentSpec>,
}

fn finish(id: String, kind: &str, report: ExperimentReport, envelopes: &Envelopes) -> SummaryEntry {
    let violations = envelopes.check(&id, &report.metrics);
    let pass = report.metrics_finite() && violations.is_empty();
    SummaryEntry {
        id,
        kind: kind.to_string(),
        status: Status::Ok,
        inputs_digest: report.inputs_digest,
        metrics: report.metrics,
        pass,
        violations,
        message: None,
    }
}

fn failed(id: String, kind: &str, digest: String, status: Status, message: String) -> SummaryEntry {
    SummaryEntry {
        id,
        kind: kind.to_string(),
        status,
        inputs_digest: digest,
        metrics: BTreeMap::new(),
        pass: false,
        violations: Vec::new(),
        message: Some(message),
    }
}

/// Runs every configured experiment. Kernel experiments are preceded by a
/// Legendre-Hadamard gate; when it fails they are recorded as skipped.
pub fn cmd_verify(cfg: &RunConfig, base: &Path, envelopes: &Envelopes, jobs: usize) -> Result<Summary, CliError> {
    let grid = cfg.grid.build()?;
    let sys = cfg.system.resolve(base)?;
    if grid.dim() + 1 != sys.n() {
        return Err(CliError::Contract(format!(
            "grid dimension {} does not match n = {}",
            grid.dim(),
            sys.n()
        )));
    }
    let digest = |exp: Option<&ExperimentSpec>| {
        let inputs = DigestInputs {
            grid: &cfg.grid,
            system: SystemJson::from(&sys),
            method: cfg.method,
            seed: cfg.seed,
            experiment: exp,
        };
        ExperimentReport::new("", &inputs).inputs_digest
    };
    let mut entries = Vec::new();
    let mut kernel: Result<Option<PoissonConstruction>, String> = Ok(None);
    if cfg.experiments.iter().any(ExperimentSpec::needs_kernel) {
        let lh = legendre_hadamard(&sys, LH_SAMPLES, LH_REFINE);
        let mut report = ExperimentReport::new("legendre_hadamard", &());
        report.inputs_digest = digest(None);
        let report = report.metric("kappa_o", lh.kappa_o).metric("min_ratio", lh.min_ratio);
        let mut entry = finish("legendre_hadamard".into(), "legendre_hadamard", report, envelopes);
        if !(lh.kappa_o > 0.0) {
            entry.pass = false;
            entry.message = Some("system is not Legendre-Hadamard elliptic; kernel build skipped".into());
            kernel = Err("skipped: Legendre-Hadamard gate failed".into());
        } else {
            kernel = build_kernel(&sys, cfg.method, &grid)
                .map(Some)
                .map_err(|e| format!("kernel build failed: {e}"));
        }
        entries.push(entry);
    }
    let run_one = |exp: &ExperimentSpec| -> SummaryEntry {
        let id = exp.id();
        let d = digest(Some(exp));
        let pc = if exp.needs_kernel() {
            match &kernel {
                Ok(pc) => pc.as_ref(),
                Err(msg) => {
                    let status = if msg.starts_with("skipped") { Status::Skipped } else { Status::Error };
                    return failed(id, exp.kind(), d, status, msg.clone());
                }
            }
        } else {
            None
        };
        match run_experiment(exp, &sys, &grid, pc, cfg.seed) {
            Ok(metrics) => {
                let mut report = ExperimentReport::new(id.clone(), &());
                report.inputs_digest = d;
                for (k, v) in metrics {
                    report = report.metric(k, v);
                }
                finish(id, exp.kind(), report, envelopes)
            }
            Err(e) => failed(id, exp.kind(), d, Status::Error, e.to_string()),
        }
    };
    let results: Vec<SummaryEntry> = if jobs > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::Contract(format!("cannot start {jobs} jobs: {e}")))?;
        pool.install(|| cfg.experiments.par_iter().map(run_one).collect())
    } else {
        cfg.experiments.iter().map(run_one).collect()
    };
    entries.extend(results);
    Ok(Summary {
        system: sys.label().to_string(),
        method: format!("{:?}", cfg.method),
        seed: cfg.seed,
        pass: entries.iter().all(|e| e.pass),
        experiments: entries,
    })
}
