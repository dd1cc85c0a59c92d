//! Experiment drivers and CSV persistence.

mod experiment;
mod gradcheck;
mod table;

use std::path::{Path, PathBuf};

pub use experiment::{
    export_filter_response, filter_sigma_grid, landweber_table, make_problem, optimality_table,
    run_experiment, snr_db, ExperimentConfig, NoiseSpec, Problem, SummaryRow, XDaggerKind,
};
pub use gradcheck::{
    fd_gradient, gradcheck, gradcheck_with, relative_error, GradcheckInstance, GradcheckReport,
    FD_STEP, MAX_GRADCHECK_N,
};
pub use table::CsvTable;

use crate::deep_prior::DeepPriorError;
use crate::filters::FilterError;
use crate::linalg::LinalgError;
use crate::solvers::SolverError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("table: {0}")]
    Table(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    DeepPrior(#[from] DeepPriorError),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Process exit status: 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        if self.is_numerical() {
            2
        } else {
            1
        }
    }

    pub fn is_numerical(&self) -> bool {
        fn linalg(e: &LinalgError) -> bool {
            matches!(
                e,
                LinalgError::NotPositiveDefinite { .. } | LinalgError::NoConvergence { .. }
            )
        }
        match self {
            HarnessError::Linalg(e) => linalg(e),
            HarnessError::Solver(SolverError::Linalg(e)) => linalg(e),
            HarnessError::DeepPrior(e) => match e {
                DeepPriorError::Diverged { .. } => true,
                DeepPriorError::Linalg(e) => linalg(e),
                DeepPriorError::Solver(SolverError::Linalg(e)) => linalg(e),
                _ => false,
            },
            _ => false,
        }
    }
}
