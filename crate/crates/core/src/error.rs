use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("value {value} is outside the domain of the {kind} potential")]
    Domain { kind: &'static str, value: f64 },

    #[error("hyperplane row has zero norm")]
    InvalidHyperplane,

    #[error("no point on the hyperplane lies in the domain of the potential")]
    Infeasible,

    #[error(
        "multiplier search did not converge after {iters} iterations \
         (best lambda {lambda}, residual {residual:e})"
    )]
    SolverFailure { lambda: f64, residual: f64, iters: usize },

    #[error("projection onto row {row} failed in sweep {sweep}: {source}")]
    Projection {
        sweep: usize,
        row: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("sensing matrix is rank deficient (condition estimate {condition:e})")]
    RankDeficient { condition: f64 },

    #[error("no support of size <= {k_max} reproduces the measurements")]
    InfeasibleAtK { k_max: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub(crate) fn check_len(expected: usize, actual: usize) -> Result<()> {
    if expected == actual {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, actual })
    }
}
