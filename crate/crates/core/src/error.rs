use thiserror::Error;

/// Errors produced by the operator builders, solvers and integrators.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("dimension mismatch: {left_rows}x{left_cols} cannot be combined with {right_rows}x{right_cols}")]
    DimensionMismatch {
        left_rows: usize,
        left_cols: usize,
        right_rows: usize,
        right_cols: usize,
    },

    #[error("resource limit: {0}")]
    Resource(String),

    #[error("eigensolver did not converge after {iterations} iterations (worst residual {worst_residual:e}, bound {bound:e})")]
    NonConvergence {
        iterations: usize,
        worst_residual: f64,
        bound: f64,
    },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("step size underflow at t = {last_good_time} (h = {step:e})")]
    StepUnderflow { last_good_time: f64, step: f64 },

    #[error("positivity violated at t = {time}: smallest eigenvalue {min_eigenvalue:e}")]
    Positivity { time: f64, min_eigenvalue: f64 },

    #[error(
        "subradiant count unstable: {count} at omega_r = {omega_r}, {doubled_count} at 2*omega_r"
    )]
    UnstableCount {
        omega_r: f64,
        count: usize,
        doubled_count: usize,
    },

    #[error("perturbation theory and full numerics disagree: xi_pt = {xi_pt}, xi_fit = {xi_fit}")]
    FitMismatch { xi_pt: f64, xi_fit: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag, used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Argument(_) | Error::DimensionMismatch { .. } => "argument",
            Error::Resource(_) => "resource",
            Error::NonConvergence { .. } => "non_convergence",
            Error::Numeric(_) => "numeric",
            Error::StepUnderflow { .. } => "step_underflow",
            Error::Positivity { .. } => "positivity",
            Error::UnstableCount { .. } => "unstable_count",
            Error::FitMismatch { .. } => "fit_mismatch",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
