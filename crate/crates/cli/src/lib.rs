//! Command-line front end: parse inputs, dispatch to `maxent-core`, and
//! render JSON (`"schema": 1`) or text reports.

pub mod args;
pub mod atsp;
pub mod report;
mod run;

use thiserror::Error;

pub use args::{Cli, Command, Format};
pub use run::{run, render};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] maxent_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{what}: {source}")]
    Json {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("no Hamiltonian closure: {0}")]
    NoHamiltonianClosure(String),
}

impl CliError {
    /// 2 for broken guarantees, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(maxent_core::Error::GapExceeded { .. })
            | CliError::Core(maxent_core::Error::SolverContractViolation(_)) => 2,
            _ => 1,
        }
    }
}
