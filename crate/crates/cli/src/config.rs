//! Run configuration for `verify` and the file loaders shared by all
//! subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use halfspace::grid::{BoundaryField, BoundaryGrid};
use halfspace::io::read_field_csv;
use halfspace::solver::KernelMethod;
use halfspace::spaces::NormSpec;
use halfspace::systems::{lame, laplacian, EllipticSystem};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub dim: usize,
    pub half_width: f64,
    pub points_per_axis: usize,
}

impl GridConfig {
    pub fn build(&self) -> Result<BoundaryGrid, CliError> {
        Ok(BoundaryGrid::new(self.dim, self.half_width, self.points_per_axis)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemRef {
    Laplacian {
        n: usize,
        #[serde(rename = "M", default = "one")]
        m: usize,
    },
    Lame {
        n: usize,
        mu: f64,
        lambda: f64,
    },
    /// Path relative to the configuration file.
    File { path: PathBuf },
    Inline { system: EllipticSystem },
}

fn one() -> usize {
    1
}

impl SystemRef {
    pub fn resolve(&self, base: &Path) -> Result<EllipticSystem, CliError> {
        match self {
            SystemRef::Laplacian { n, m } => Ok(laplacian(*n, *m)?),
            SystemRef::Lame { n, mu, lambda } => Ok(lame(*n, *mu, *lambda)?),
            SystemRef::File { path } => load_system(&base.join(path)),
            SystemRef::Inline { system } => Ok(system.clone()),
        }
    }
}

fn default_kappa() -> f64 {
    1.0
}

fn default_trials() -> usize {
    20
}

fn default_kappas() -> Vec<f64> {
    vec![0.5, 1.0, 2.0]
}

fn default_two() -> f64 {
    2.0
}

fn default_atoms() -> usize {
    10
}

/// One experiment of the suite. `id` names the report and the envelope
/// keys (`<id>.<metric>`); it defaults to the kind.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExperimentSpec {
    KernelProperties {
        id: Option<String>,
    },
    Semigroup {
        id: Option<String>,
        t1: f64,
        t2: f64,
    },
    NtDomination {
        id: Option<String>,
        #[serde(default = "default_kappa")]
        kappa: f64,
        #[serde(default = "default_trials")]
        trials: usize,
    },
    Fatou {
        id: Option<String>,
        t_small: f64,
        t_big: f64,
    },
    AtomDecay {
        id: Option<String>,
        #[serde(default = "default_atoms")]
        count: usize,
        #[serde(default = "default_two")]
        q: f64,
        #[serde(default = "default_kappa")]
        kappa: f64,
    },
    Wellposedness {
        id: Option<String>,
        specs: Vec<NormSpec>,
        #[serde(default = "default_trials")]
        trials: usize,
    },
    OperatorBound {
        id: Option<String>,
        spec: NormSpec,
        ts: Vec<f64>,
        #[serde(default = "default_trials")]
        trials: usize,
        #[serde(default)]
        nonneg: bool,
    },
    MBallProfile {
        id: Option<String>,
    },
    ConeAperture {
        id: Option<String>,
        #[serde(default = "default_kappas")]
        kappas: Vec<f64>,
        #[serde(default = "default_two")]
        p: f64,
    },
    Boyd {
        id: Option<String>,
        spec: NormSpec,
    },
    XwDecay {
        id: Option<String>,
        spec: NormSpec,
        #[serde(default = "default_atoms")]
        trials: usize,
    },
}

impl ExperimentSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentSpec::KernelProperties { .. } => "kernel_properties",
            ExperimentSpec::Semigroup { .. } => "semigroup",
            ExperimentSpec::NtDomination { .. } => "nt_domination",
            ExperimentSpec::Fatou { .. } => "fatou",
            ExperimentSpec::AtomDecay { .. } => "atom_decay",
            ExperimentSpec::Wellposedness { .. } => "wellposedness",
            ExperimentSpec::OperatorBound { .. } => "operator_bound",
            ExperimentSpec::MBallProfile { .. } => "m_ball_profile",
            ExperimentSpec::ConeAperture { .. } => "cone_aperture",
            ExperimentSpec::Boyd { .. } => "boyd",
            ExperimentSpec::XwDecay { .. } => "xw_decay",
        }
    }

    pub fn id(&self) -> String {
        let id = match self {
            ExperimentSpec::KernelProperties { id }
            | ExperimentSpec::Semigroup { id, .. }
            | ExperimentSpec::NtDomination { id, .. }
            | ExperimentSpec::Fatou { id, .. }
            | ExperimentSpec::AtomDecay { id, .. }
            | ExperimentSpec::Wellposedness { id, .. }
            | ExperimentSpec::OperatorBound { id, .. }
            | ExperimentSpec::MBallProfile { id }
            | ExperimentSpec::ConeAperture { id, .. }
            | ExperimentSpec::Boyd { id, .. }
            | ExperimentSpec::XwDecay { id, .. } => id,
        };
        id.clone().unwrap_or_else(|| self.kind().to_string())
    }

    /// Whether the experiment needs the Poisson kernel of the system.
    pub fn needs_kernel(&self) -> bool {
        !matches!(
            self,
            ExperimentSpec::MBallProfile { .. } | ExperimentSpec::Boyd { .. } | ExperimentSpec::XwDecay { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub system: SystemRef,
    pub method: KernelMethod,
    pub seed: u64,
    #[serde(default)]
    pub experiments: Vec<ExperimentSpec>,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn load_config(path: &Path) -> Result<RunConfig, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::io(path, e))
}

pub fn load_system(path: &Path) -> Result<EllipticSystem, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::io(path, e))
}

pub fn load_spec(path: &Path) -> Result<NormSpec, CliError> {
    serde_json::from_str(&read_text(path)?).map_err(|e| CliError::io(path, e))
}

pub fn load_field(path: &Path) -> Result<BoundaryField, CliError> {
    let file = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    read_field_csv(file).map_err(|e| CliError::io(path, e))
}

/// Parses `1,2,0.5` into numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Contract(format!("bad number '{s}': {e}")))
        })
        .collect()
}
