//! Seeded verification suites over `admlab` and their reports.

pub mod config;
pub mod report;
pub mod suite;

use admlab::LabError;
use thiserror::Error;

pub use config::{SeedList, SuiteConfig, SuiteKind, Tolerances};
pub use report::{CheckRecord, ConvergenceTable, SuiteReport};
pub use suite::{convergence_study, run_suite};

#[derive(Debug, Error)]
pub enum SuiteError {
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure{}: {source}", seed.map_or(String::new(), |s| format!(" for seed {s}")))]
    Numerical { seed: Option<u64>, source: LabError },
}

impl SuiteError {
    /// `2` for usage errors, `3` for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            SuiteError::Config(_) => 2,
            SuiteError::Numerical { .. } => 3,
        }
    }
}
