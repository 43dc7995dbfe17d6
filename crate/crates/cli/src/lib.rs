//! Command implementations behind the `stargraph` binary.
//!
//! Every command returns an [`Outcome`]: the serialized output plus the exit
//! status. Exit codes are a stable contract: `0` success, `1` a verification
//! or certification failure, `2` a usage error.

pub mod commands;
pub mod config;
pub mod report;
pub mod svg;
pub mod trajectory;
pub mod verify;

use thiserror::Error;

pub const EXIT_SUCCESS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error(transparent)]
    Solver(#[from] stargraph::Error),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            // Invalid model parameters are caller mistakes.
            CliError::Solver(
                stargraph::Error::TooFewEdges(_)
                | stargraph::Error::NonPositiveLength(_)
                | stargraph::Error::ZeroCoupling
                | stargraph::Error::NonFiniteCoupling(_)
                | stargraph::Error::NeedsPositiveP { .. }
                | stargraph::Error::NotTwoStar(_)
                | stargraph::Error::NonRealBeta(_)
                | stargraph::Error::BranchOutOfRange { .. }
                | stargraph::Error::InvalidArgument(_),
            ) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// What a command produced and how the process should exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub output: String,
    pub exit_code: i32,
    /// Extra files to write next to the main output: `(path, contents)`.
    pub side_files: Vec<(std::path::PathBuf, String)>,
}

impl Outcome {
    pub fn new(output: String, ok: bool) -> Self {
        Self {
            output,
            exit_code: if ok { EXIT_SUCCESS } else { EXIT_FAILURE },
            side_files: Vec::new(),
        }
    }
}
