use alloc::string::String;
use core::fmt;

/// Errors raised by the certification and simulation kernels.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The case violates a structural invariant (disconnected graph, self-loop, ...).
    Validation(String),
    /// Newton iteration hit its cap.
    NonConvergence { iterations: usize, residual: f64 },
    /// The power-flow Jacobian could not be factorized.
    SingularJacobian { iteration: usize, condition: f64 },
    /// An eigensolver did not converge on a matrix of the given order.
    EigensolverFailure { order: usize },
    /// A controller bound can only be met by a non-positive droop gain.
    InfeasibleGain { bus: Option<usize>, bound: String },
    /// A voltage-like state left the positive half-line.
    Domain { bus: Option<usize>, value: f64 },
    /// The adaptive integrator could not make progress.
    StepSizeUnderflow { t: f64, h: f64 },
    /// The adaptive integrator exhausted its step budget.
    StepLimit { t: f64, steps: usize },
    /// The clearing-time search found the lower bound unstable.
    NeverStable { lo: f64 },
    /// The clearing-time search found the upper bound stable.
    AlwaysStable { hi: f64 },
    /// The stability predicate is not monotone across the bisection bracket.
    Bracket { lo: f64, hi: f64 },
    /// The region grid cannot resolve a boundary.
    GridTooCoarse { grid: usize },
    /// A bus or state index is out of range.
    Index { index: usize, len: usize },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Validation(msg) => write!(f, "invalid case: {}", msg),
            Error::NonConvergence {
                iterations,
                residual,
            } => write!(
                f,
                "power flow did not converge after {} iterations (residual {:e})",
                iterations, residual
            ),
            Error::SingularJacobian {
                iteration,
                condition,
            } => write!(
                f,
                "singular power-flow Jacobian at iteration {} (condition estimate {:e})",
                iteration, condition
            ),
            Error::EigensolverFailure { order } => {
                write!(f, "eigensolver failed on a {0}x{0} matrix", order)
            }
            Error::InfeasibleGain { bus, bound } => match bus {
                Some(b) => write!(f, "infeasible gain at bus {}: {}", b, bound),
                None => write!(f, "infeasible gain: {}", bound),
            },
            Error::Domain { bus, value } => match bus {
                Some(b) => write!(f, "voltage state {} left the domain V > 0 at bus {}", value, b),
                None => write!(f, "voltage state {} left the domain V > 0", value),
            },
            Error::StepSizeUnderflow { t, h } => {
                write!(f, "step size {:e} underflow at t = {}", h, t)
            }
            Error::StepLimit { t, steps } => {
                write!(f, "integrator stopped after {} steps at t = {}", steps, t)
            }
            Error::NeverStable { lo } => {
                write!(f, "clearing at the lower bound {} s is already unstable", lo)
            }
            Error::AlwaysStable { hi } => {
                write!(f, "clearing at the upper bound {} s is still stable", hi)
            }
            Error::Bracket { lo, hi } => {
                write!(f, "stability predicate not monotone on [{}, {}]", lo, hi)
            }
            Error::GridTooCoarse { grid } => {
                write!(f, "grid of {} points per axis cannot resolve the boundary", grid)
            }
            Error::Index { index, len } => write!(f, "index {} out of range (len {})", index, len),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
