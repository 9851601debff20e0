use std::path::PathBuf;

use thiserror::Error;

/// Errors surfaced by the solver and its file formats.
#[derive(Debug, Error)]
pub enum PessError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("neighbor index size mismatch: {left} vs {right} spheres")]
    IndexMismatch { left: usize, right: usize },

    #[error(
        "objective returned a non-finite value at iteration {iteration}: value {value}, gradient norm {grad_norm}"
    )]
    NonFinite { iteration: usize, value: f64, grad_norm: f64 },

    #[error("container adjustment produced an infeasible packing after retry (max pair overlap {max_pair:.3e}, max container overlap {max_container:.3e})")]
    Infeasible { max_pair: f64, max_container: f64 },

    #[error("{path}:{line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, PessError>;
