use thiserror::Error;

/// Failure modes shared by every module.
///
/// The CLI maps these onto exit codes through [`Error::kind`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    Rejected(String),

    #[error("point outside the action domain: |I| = {norm} > R = {radius}")]
    Domain { norm: f64, radius: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("Q = {q} is below Q_min = {q_min}")]
    BelowQmin { q: f64, q_min: f64 },

    #[error("argument {x} is below the range of the table (minimum {min})")]
    BelowRange { x: f64, min: f64 },

    #[error("psi table exhausted at Q_max = {q_max}; rerun with a larger Q_max")]
    TableExhausted { q_max: u32 },

    #[error("threshold violated: {inequality} (measured {lhs:.3e} > {rhs:.3e})")]
    Threshold {
        inequality: String,
        lhs: f64,
        rhs: f64,
    },

    #[error("no unimodular basis of periodic lifts within T <= {budget}: {diagnostics}")]
    NoUnimodularBasis { budget: u64, diagnostics: String },

    #[error("Lie series diverging: last term {last:.3e} exceeds 10% of |H| = {total:.3e}")]
    Divergence { last: f64, total: f64 },

    #[error("fixed-point iteration did not converge (step {step}, residual {residual:.3e})")]
    StepSize { step: f64, residual: f64 },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("manifold graph folds over the patch: {0}")]
    PatchTooLarge(String),

    #[error("insufficient resolution: {0}")]
    Resolution(String),

    #[error("homoclinic point not found: {0}")]
    HomoclinicNotFound(String),

    #[error("flow left the domain before time {time}")]
    FlowEscape { time: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Input,
    Threshold,
    Numerical,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Rejected(_)
            | Error::Parse { .. }
            | Error::Domain { .. }
            | Error::BelowQmin { .. }
            | Error::BelowRange { .. }
            | Error::Io(_) => ErrorKind::Input,
            Error::Threshold { .. } => ErrorKind::Threshold,
            _ => ErrorKind::Numerical,
        }
    }

    pub(crate) fn rejected(msg: impl Into<String>) -> Self {
        Error::Rejected(msg.into())
    }

    pub(crate) fn threshold(inequality: impl Into<String>, lhs: f64, rhs: f64) -> Self {
        Error::Threshold {
            inequality: inequality.into(),
            lhs,
            rhs,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
