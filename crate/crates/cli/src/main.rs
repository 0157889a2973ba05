use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use halfspace::solver::KernelMethod;
use halfspace_cli::commands::{
    cmd_kernel, cmd_maxop_ap, cmd_maxop_ball_profile, cmd_maxop_maximal, cmd_solve, cmd_spaces_boyd,
    cmd_spaces_dual, cmd_spaces_norm, to_json, write_file, KernelArgs, SolveArgs, WeightSource,
};
use halfspace_cli::config::{load_config, parse_list};
use halfspace_cli::envelopes::Envelopes;
use halfspace_cli::verify::cmd_verify;
use halfspace_cli::CliError;

#[derive(Parser)]
#[command(name = "halfspace", version, about = "Poisson kernels and Dirichlet problems for elliptic systems in the upper half-space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a Poisson kernel, write its slices and a property report.
    Kernel(KernelCmd),
    /// Solve the Dirichlet problem for a boundary datum.
    Solve(SolveCmd),
    /// Run the experiment suite of a configuration file.
    Verify(VerifyCmd),
    /// Norm calculator.
    #[command(subcommand)]
    Spaces(SpacesCmd),
    /// Maximal-function and A_p calculator.
    #[command(subcommand)]
    Maxop(MaxopCmd),
}

#[derive(Args)]
struct KernelCmd {
    /// System JSON file.
    #[arg(long)]
    system: PathBuf,
    /// explicit, radial or symbol.
    #[arg(long, default_value = "symbol")]
    method: KernelMethod,
    /// Half-width R of the boundary box.
    #[arg(long = "R", default_value_t = 64.0)]
    half_width: f64,
    /// Points per axis N (power of two).
    #[arg(long = "N", default_value_t = 4096)]
    points: usize,
    /// Comma-separated heights.
    #[arg(long = "t", default_value = "1")]
    heights: String,
    /// Output directory.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Also write an SVG plot of the kernel profiles.
    #[arg(long)]
    svg: bool,
}

#[derive(Args)]
struct SolveCmd {
    #[arg(long)]
    system: PathBuf,
    /// Boundary datum CSV.
    #[arg(long)]
    datum: PathBuf,
    /// Comma-separated heights; defaults to 2h 2^k up to R/8.
    #[arg(long)]
    heights: Option<String>,
    #[arg(long, default_value = "symbol")]
    method: KernelMethod,
    /// Solution CSV.
    #[arg(long, default_value = "u.csv")]
    out: PathBuf,
    /// Optional JSON report path (the report is always printed).
    #[arg(long)]
    report: Option<PathBuf>,
    /// Cone aperture for the trace report.
    #[arg(long, default_value_t = 1.0)]
    kappa: f64,
}

#[derive(Args)]
struct VerifyCmd {
    /// Run configuration JSON.
    #[arg(long)]
    config: PathBuf,
    /// Committed envelopes JSON.
    #[arg(long, default_value = "envelopes.json")]
    envelopes: PathBuf,
    /// Summary JSON path (the summary is always printed).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of experiments run in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum SpacesCmd {
    /// Norm of a field.
    Norm {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        field: PathBuf,
    },
    /// Boyd index estimates.
    Boyd {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Closed-form Köthe dual.
    Dual {
        #[arg(long)]
        spec: PathBuf,
    },
}

#[derive(Subcommand)]
enum MaxopCmd {
    /// Hardy-Littlewood maximal function of a field.
    Maximal {
        #[arg(long)]
        field: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Apply the operator twice.
        #[arg(long)]
        iterate: bool,
    },
    /// A_p constant of a weight given as a file or as |x|^gamma.
    Ap {
        #[arg(long)]
        p: f64,
        #[arg(long)]
        weight: Option<PathBuf>,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long = "R", default_value_t = 64.0)]
        half_width: f64,
        #[arg(long = "N", default_value_t = 4096)]
        points: usize,
    },
    /// Profile of M(1_B) and M^2(1_B) for the unit ball.
    BallProfile {
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long = "R", default_value_t = 64.0)]
        half_width: f64,
        #[arg(long = "N", default_value_t = 4096)]
        points: usize,
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn emit(json: String, path: Option<&Path>) -> Result<(), CliError> {
    if let Some(p) = path {
        write_file(p, &json)?;
    }
    print!("{json}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Kernel(k) => {
            let args = KernelArgs {
                system: k.system,
                method: k.method,
                half_width: k.half_width,
                points: k.points,
                heights: parse_list(&k.heights)?,
                out: k.out,
                svg: k.svg,
            };
            emit(to_json(&cmd_kernel(&args)?), None)
        }
        Command::Solve(s) => {
            let args = SolveArgs {
                system: s.system,
                datum: s.datum,
                heights: s.heights.as_deref().map(parse_list).transpose()?,
                method: s.method,
                out: s.out,
                kappa: s.kappa,
            };
            emit(to_json(&cmd_solve(&args)?), s.report.as_deref())
        }
        Command::Verify(v) => {
            let cfg = load_config(&v.config)?;
            let envelopes = Envelopes::load(&v.envelopes)?;
            let base = v.config.parent().unwrap_or(Path::new("."));
            let summary = cmd_verify(&cfg, base, &envelopes, v.jobs.max(1))?;
            emit(summary.to_json(), v.out.as_deref())?;
            if summary.pass {
                Ok(())
            } else {
                let failed: Vec<&str> = summary
                    .experiments
                    .iter()
                    .filter(|e| !e.pass)
                    .map(|e| e.id.as_str())
                    .collect();
                Err(CliError::EnvelopeViolated(format!("failed: {}", failed.join(", "))))
            }
        }
        Command::Spaces(SpacesCmd::Norm { spec, field }) => emit(to_json(&cmd_spaces_norm(&spec, &field)?), None),
        Command::Spaces(SpacesCmd::Boyd { spec }) => emit(to_json(&cmd_spaces_boyd(&spec)?), None),
        Command::Spaces(SpacesCmd::Dual { spec }) => emit(to_json(&cmd_spaces_dual(&spec)?), None),
        Command::Maxop(MaxopCmd::Maximal { field, out, iterate }) => {
            emit(to_json(&cmd_maxop_maximal(&field, out.as_deref(), iterate)?), None)
        }
        Command::Maxop(MaxopCmd::Ap {
            p,
            weight,
            gamma,
            dim,
            half_width,
            points,
        }) => {
            let src = match (weight, gamma) {
                (Some(path), None) => WeightSource::File(path),
                (None, Some(gamma)) => WeightSource::Power {
                    dim,
                    half_width,
                    points,
                    gamma,
                },
                _ => return Err(CliError::Contract("give exactly one of --weight and --gamma".into())),
            };
            emit(to_json(&cmd_maxop_ap(&src, p)?), None)
        }
        Command::Maxop(MaxopCmd::BallProfile {
            dim,
            half_width,
            points,
            svg,
        }) => emit(to_json(&cmd_maxop_ball_profile(dim, half_width, points, svg.as_deref())?), None),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
