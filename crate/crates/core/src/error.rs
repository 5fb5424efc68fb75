use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("headway {index} is negative or not finite ({value})")]
    InvalidHeadway { index: usize, value: f64 },

    #[error("at least two vehicles are required, got {0}")]
    TooFewVehicles(usize),

    #[error("link distance must be positive and finite, got {0}")]
    InvalidDistance(f64),

    #[error("SNR matrix is not symmetric at ({row}, {col})")]
    AsymmetricSnr { row: usize, col: usize },

    #[error("adjacency matrix is not a symmetric hollow 0/1 matrix at ({row}, {col})")]
    InvalidAdjacency { row: usize, col: usize },

    #[error("neighbor index {m} outside 1..={max}")]
    NeighborOutOfRange { m: usize, max: usize },

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (error estimate {error_estimate:e}, requested {requested:e})"
    )]
    QuadratureDiverged {
        subdivisions: usize,
        error_estimate: f64,
        requested: f64,
    },

    #[error("closed form needs path-loss exponent 2, got {0}")]
    UnsupportedPathLossExponent(u32),

    #[error(
        "closed form overflows: rho^2 lambda^2 / 4 = {exponent} exceeds {limit}; \
         use the quadrature path instead"
    )]
    ClosedFormOverflow { exponent: f64, limit: f64 },

    #[error("{0} did not converge")]
    SeriesNoConvergence(&'static str),

    #[error("symmetric eigensolver did not converge within {0} iterations")]
    EigenNoConvergence(usize),
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
