use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

/// Errors surfaced by model validation and the solvers.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A transition row is not a probability distribution.
    NonStochasticRow {
        state: usize,
        action: usize,
        sum: f64,
    },
    /// Positive probability mass on a successor outside the support mask.
    SupportViolation {
        state: usize,
        action: usize,
        successor: usize,
    },
    /// A ball specification violates its invariants.
    InvalidBall(String),
    /// Structural problem with an MDP, model, or policy.
    InvalidInput(String),
    /// An iterative solver hit its iteration cap.
    NoConvergence { iterations: u64, residual: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonStochasticRow { state, action, sum } => write!(
                f,
                "transition row ({state},{action}) is not stochastic (sum {sum})"
            ),
            Error::SupportViolation {
                state,
                action,
                successor,
            } => write!(
                f,
                "positive mass on unsupported successor {successor} from ({state},{action})"
            ),
            Error::InvalidBall(msg) => write!(f, "invalid ambiguity ball: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NoConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
        }
    }
}

impl core::error::Error for Error {}
