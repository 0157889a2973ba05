//! Command-line driver for the `halfspace` library: kernel construction,
//! Dirichlet solves, norm and maximal-function calculators, and the
//! configurable verification suite.
//!
//! Exit codes: 0 success, 1 a committed envelope was violated, 2 usage,
//! I/O or input-contract error, 3 a mathematical precondition failed.

pub mod commands;
pub mod config;
pub mod envelopes;
pub mod error;
pub mod verify;

pub use error::CliError;
