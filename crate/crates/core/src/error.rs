use thiserror::Error;

use crate::spp::SppReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("vector norm {norm} is not 1 (direction vectors must be unit length)")]
    NotUnit { norm: f64 },

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("constraint row {0} has zero norm")]
    ZeroRow(usize),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point violates row {row} by {excess:e}")]
    InfeasiblePoint { row: usize, excess: f64 },

    #[error("polyhedron is empty")]
    Infeasible,

    #[error("linear objective is unbounded below on the polyhedron")]
    Unbounded,

    #[error("polyhedron is unbounded; operation requires a bounded set")]
    UnboundedSet,

    #[error("instance too large for exhaustive enumeration: m={m}, n={n} (limits m<={max_m}, n<={max_n})")]
    TooLarge {
        m: usize,
        n: usize,
        max_m: usize,
        max_n: usize,
    },

    #[error("{what} did not converge within {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("condition 1 violated: theta(v) = {theta:e} is not positive")]
    Condition1Violated { theta: f64 },

    #[error("face F_A(x*) is empty (support function is +inf)")]
    EmptyFace,

    #[error("degenerate sampling: {0}")]
    DegenerateSampling(String),

    #[error("optimality certificate failed: residual {certificate:e} exceeds tolerance {tol:e}")]
    CertificateFailed {
        certificate: f64,
        tol: f64,
        report: Box<SppReport>,
    },

    #[error("doubling search exhausted {doublings} steps without a certified solution")]
    DoublingExhausted {
        doublings: u32,
        best: Option<Box<SppReport>>,
    },
}

impl Error {
    /// Stable machine-readable identifier, used in CLI error reports.
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimensionMismatch { .. } => "dimension_mismatch",
            Error::NonFinite(_) => "non_finite",
            Error::NotUnit { .. } => "not_unit",
            Error::Empty(_) => "empty_input",
            Error::ZeroRow(_) => "zero_row",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::InfeasiblePoint { .. } => "infeasible_point",
            Error::Infeasible => "infeasible",
            Error::Unbounded => "unbounded",
            Error::UnboundedSet => "unbounded_set",
            Error::TooLarge { .. } => "too_large",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Condition1Violated { .. } => "condition1_violated",
            Error::EmptyFace => "empty_face",
            Error::DegenerateSampling(_) => "degenerate_sampling",
            Error::CertificateFailed { .. } => "certificate_failed",
            Error::DoublingExhausted { .. } => "doubling_exhausted",
        }
    }

    pub(crate) fn dims(expected: usize, found: usize) -> Result<()> {
        if expected == found {
            Ok(())
        } else {
            Err(Error::DimensionMismatch { expected, found })
        }
    }
}
