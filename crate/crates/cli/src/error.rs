//! Error type of the command-line driver and its exit-code mapping.

use halfspace::grid::GridError;
use halfspace::io::IoError;
use halfspace::kernels::KernelError;
use halfspace::maxop::MaxOpError;
use halfspace::solver::SolverError;
use halfspace::spaces::SpaceError;
use halfspace::systems::SystemError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, unreadable files or violated input contracts (exit 2).
    #[error("{0}")]
    Contract(String),
    /// A mathematical precondition such as ellipticity failed (exit 3).
    #[error("{0}")]
    Math(String),
    /// At least one committed envelope was violated (exit 1).
    #[error("{0}")]
    EnvelopeViolated(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::EnvelopeViolated(_) => 1,
            CliError::Contract(_) => 2,
            CliError::Math(_) => 3,
        }
    }

    pub fn io(path: &std::path::Path, e: impl std::fmt::Display) -> Self {
        CliError::Contract(format!("{}: {e}", path.display()))
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::DimensionMismatch(_)
            | KernelError::CoincidentPoints
            | KernelError::OutsideHalfSpace
            | KernelError::ZeroArgument
            | KernelError::Grid(_)
            | KernelError::System(_) => CliError::Contract(e.to_string()),
            _ => CliError::Math(e.to_string()),
        }
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::Kernel(k) => k.into(),
            SolverError::SpecScreenFailed(_) => CliError::Math(e.to_string()),
            SolverError::Space(s) => s.into(),
            _ => CliError::Contract(e.to_string()),
        }
    }
}

impl From<SpaceError> for CliError {
    fn from(e: SpaceError) -> Self {
        match e {
            SpaceError::NonConvergedBisection => CliError::Math(e.to_string()),
            _ => CliError::Contract(e.to_string()),
        }
    }
}

impl From<MaxOpError> for CliError {
    fn from(e: MaxOpError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<GridError> for CliError {
    fn from(e: GridError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<SystemError> for CliError {
    fn from(e: SystemError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        CliError::Contract(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Contract(format!("invalid JSON: {e}"))
    }
}
