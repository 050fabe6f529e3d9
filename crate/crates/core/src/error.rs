use thiserror::Error;

/// Errors raised by the solvers. Numeric payloads are reported in `f64`
/// regardless of the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid breakpoints: {0}")]
    InvalidBreakpoints(String),

    #[error("invalid piece {index}: {reason}")]
    InvalidPiece { index: usize, reason: String },

    #[error("piece {index} is not Lipschitz on its closed interval (power with exponent {exponent} touching rank 1)")]
    NonLipschitzPiece { index: usize, exponent: f64 },

    #[error("integrand is not finite near rank {at}")]
    NonFiniteIntegrand { at: f64 },

    #[error("target rank {target} is unreachable: the state settles at {terminal}")]
    HorizonUnreachable { terminal: f64, target: f64 },

    #[error("reward is not non-increasing near rank {at}")]
    NotDecreasing { at: f64 },

    #[error("reward is negative near rank {at}")]
    Negative { at: f64 },

    #[error(
        "reward is not left-continuous at rank 1 (left limit {left}, value {value}); \
         paying less to agents who never arrive than to late finishers admits no optimal control"
    )]
    NotLeftContinuousAtOne { left: f64, value: f64 },

    #[error("cost coefficient must be strictly positive (found {value} at rank {at})")]
    CostNotPositive { at: f64, value: f64 },

    #[error("cost coefficient must be Lipschitz continuous (jump at rank {at})")]
    CostNotContinuous { at: f64 },

    #[error(
        "cost coefficient violates the monotonicity requirement on c(r)(1-r)/(2-r): \
         it increases between ranks {r1} and {r2}"
    )]
    CostAssumptionViolated { r1: f64, r2: f64 },

    #[error(
        "N-player costs violate the admissibility bound at index {index}: \
         c_n = {cost} exceeds {bound}"
    )]
    CostAssumptionViolatedN { index: usize, cost: f64, bound: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("challenger {index} is infeasible: {reason}")]
    InfeasibleChallenger { index: usize, reason: String },

    #[error("equilibrium effort vanishes at state {state} before the target head count {target} is reached")]
    AbsorbedBeforeTarget { state: usize, target: usize },

    #[error("invalid N-player specification: {0}")]
    InvalidSpec(String),
}

impl Error {
    /// True for errors caused by inputs violating a precondition (as opposed to
    /// a numerical outcome such as an unreachable horizon).
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::NonFiniteIntegrand { .. }
                | Error::HorizonUnreachable { .. }
                | Error::AbsorbedBeforeTarget { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
