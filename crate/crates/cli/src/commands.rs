//! The `kernel`, `solve`, `spaces` and `maxop` subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use halfspace::grid::BoundaryGrid;
use halfspace::io::{svg_line_plot, write_field_csv, write_halfspace_csv, write_kernel_csv, Series};
use halfspace::kernels::{verify_poisson_properties, PoissonMeta, PoissonReport};
use halfspace::maxop::{
    ap_constant, hl_maximal, iterated_maximal, m_ball_profile, summarize, ApReport, ConeSpec, MBallProfile, Weight,
};
use halfspace::solver::{build_kernel, default_heights, solve, trace_convergence, DirichletProblem, KernelMethod, TraceReport};
use halfspace::spaces::{boyd_indices, default_t_grid, dual_spec, norm, BoydEstimate, NormSpec};
use serde::Serialize;

use crate::config::{load_field, load_spec, load_system};
use crate::error::CliError;

/// Verification needs room for the decay and homogeneity windows.
const MIN_VERIFY_HALF_WIDTH: f64 = 32.0;

pub fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

fn create(path: &Path) -> Result<fs::File, CliError> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        }
    }
    fs::File::create(path).map_err(|e| CliError::io(path, e))
}

pub fn to_json(v: &impl Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

#[derive(Clone, Debug)]
pub struct KernelArgs {
    pub system: PathBuf,
    pub method: KernelMethod,
    pub half_width: f64,
    pub points: usize,
    pub heights: Vec<f64>,
    pub out: PathBuf,
    pub svg: bool,
}

#[derive(Serialize)]
pub struct KernelSummary {
    pub meta: PoissonMeta,
    pub heights: Vec<f64>,
    pub files: Vec<String>,
    /// Real part of `sum_j h^{n-1} P_1(x_j)`, row by row.
    pub integral: Vec<Vec<f64>>,
    pub report: Option<PoissonReport>,
    pub note: Option<String>,
}

pub fn cmd_kernel(args: &KernelArgs) -> Result<KernelSummary, CliError> {
    let sys = load_system(&args.system)?;
    let grid = BoundaryGrid::new(sys.n() - 1, args.half_width, args.points)?;
    let pc = build_kernel(&sys, args.method, &grid)?;
    let mut files = Vec::new();
    let mut series = Vec::new();
    for &t in &args.heights {
        let k = pc.slice(t)?;
        let name = format!("kernel_t{t}.csv");
        let path = args.out.join(&name);
        write_kernel_csv(&k, create(&path)?)?;
        files.push(name);
        if args.svg {
            let quarter = grid.half_width() / 4.0;
            let points = (0..grid.node_count())
                .filter(|&j| {
                    let x = grid.node(j);
                    (grid.dim() == 1 || x[1] == 0.0) && x[0].abs() <= quarter
                })
                .map(|j| (grid.node(j)[0], k.entry(j, 0, 0).re))
                .collect();
            series.push(Series {
                label: format!("t = {t}"),
                points,
            });
        }
    }
    if args.svg {
        let svg = svg_line_plot("Poisson kernel, entry (1,1)", "x1", "P_t", &series);
        write_file(&args.out.join("kernel_profile.svg"), svg)?;
        files.push("kernel_profile.svg".into());
    }
    let integral = pc.profile().integral();
    let integral = (0..sys.m())
        .map(|a| (0..sys.m()).map(|b| integral[(a, b)].re).collect())
        .collect();
    let (report, note) = if grid.half_width() >= MIN_VERIFY_HALF_WIDTH {
        (Some(verify_poisson_properties(&pc, &sys)?), None)
    } else {
        (None, Some(format!("property report needs R >= {MIN_VERIFY_HALF_WIDTH}")))
    };
    let summary = KernelSummary {
        meta: pc.meta(),
        heights: args.heights.clone(),
        files,
        integral,
        report,
        note,
    };
    write_file(&args.out.join("kernel.json"), to_json(&summary))?;
    Ok(summary)
}

#[derive(Clone, Debug)]
pub struct SolveArgs {
    pub system: PathBuf,
    pub datum: PathBuf,
    pub heights: Option<Vec<f64>>,
    pub method: KernelMethod,
    pub out: PathBuf,
    pub kappa: f64,
}

#[derive(Serialize)]
pub struct SolveSummary {
    pub heights: Vec<f64>,
    /// `u(0', t)` per height as `[re, im]` per channel.
    pub u_at_origin: Vec<Vec<[f64; 2]>>,
    pub trace: TraceReport,
}

pub fn cmd_solve(args: &SolveArgs) -> Result<SolveSummary, CliError> {
    let sys = load_system(&args.system)?;
    let f = load_field(&args.datum)?;
    let heights = args.heights.clone().unwrap_or_else(|| default_heights(f.grid()));
    let prob = DirichletProblem::new(sys, f.clone(), heights.clone(), args.method)?;
    let u = solve(&prob)?;
    write_halfspace_csv(&u, create(&args.out)?)?;
    let o = f.grid().origin_index();
    let u_at_origin = (0..heights.len())
        .map(|i| u.slice(i).at(o).iter().map(|v| [v.re, v.im]).collect())
        .collect();
    let trace = trace_convergence(&u, &f, &ConeSpec::new(args.kappa, None)?)?;
    Ok(SolveSummary {
        heights,
        u_at_origin,
        trace,
    })
}

#[derive(Serialize)]
pub struct NormSummary {
    pub spec: NormSpec,
    pub norm: f64,
}

pub fn cmd_spaces_norm(spec: &Path, field: &Path) -> Result<NormSummary, CliError> {
    let spec = load_spec(spec)?;
    let f = load_field(field)?;
    let v = norm(&f, &spec)?;
    Ok(NormSummary { spec, norm: v })
}

pub fn cmd_spaces_boyd(spec: &Path) -> Result<BoydEstimate, CliError> {
    Ok(boyd_indices(&load_spec(spec)?, &default_t_grid())?)
}

pub fn cmd_spaces_dual(spec: &Path) -> Result<NormSpec, CliError> {
    Ok(dual_spec(&load_spec(spec)?)?)
}

pub fn cmd_maxop_maximal(field: &Path, out: Option<&Path>, iterate: bool) -> Result<halfspace::maxop::FieldSummary, CliError> {
    let f = load_field(field)?;
    let m = if iterate { iterated_maximal(&f) } else { hl_maximal(&f) };
    if let Some(out) = out {
        write_field_csv(&m, create(out)?)?;
    }
    Ok(summarize(&m))
}

pub enum WeightSource {
    Power { dim: usize, half_width: f64, points: usize, gamma: f64 },
    File(PathBuf),
}

pub fn cmd_maxop_ap(weight: &WeightSource, p: f64) -> Result<ApReport, CliError> {
    let w = match weight {
        WeightSource::Power {
            dim,
            half_width,
            points,
            gamma,
        } => Weight::power(&BoundaryGrid::new(*dim, *half_width, *points)?, *gamma)?,
        WeightSource::File(path) => Weight::new(load_field(path)?, path.display().to_string())?,
    };
    Ok(ap_constant(&w, p)?)
}

pub fn cmd_maxop_ball_profile(dim: usize, half_width: f64, points: usize, svg: Option<&Path>) -> Result<MBallProfile, CliError> {
    let prof = m_ball_profile(dim, half_width, points)?;
    if let Some(path) = svg {
        let m: Vec<(f64, f64)> = prof.rows.iter().map(|r| (r.radius, r.m_ratio)).collect();
        let m2: Vec<(f64, f64)> = prof.rows.iter().map(|r| (r.radius, r.m2_ratio)).collect();
        let svg = svg_line_plot(
            "Maximal function of the unit ball",
            "|x|",
            "ratio",
            &[
                Series {
                    label: "M(1_B)(1+|x|^d)".into(),
                    points: m,
                },
                Series {
                    label: "M^2(1_B)(1+|x|^d)/(1+log+|x|)".into(),
                    points: m2,
                },
            ],
        );
        write_file(path, svg)?;
    }
    Ok(prof)
}
