use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval [{a}, {b}]: need a < b")]
    InvalidInterval { a: f64, b: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("homotopy parameter lambda = {0} outside (0, 1]")]
    LambdaOutOfRange(f64),

    #[error("averaging parameter mu = {0} outside [0, 1]")]
    MuOutOfRange(f64),

    #[error("exp(z) overflowed at t = {t} (z = ({z1}, {z2}))")]
    DomainOverflow { t: f64, z1: f64, z2: f64 },

    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("shooting Jacobian is singular (|det(M - I)| = {det:e}): near-degenerate orbit")]
    SingularJacobian { det: f64, z: [f64; 2] },

    #[error("no convergence after {iterations} iterations (last residual {residual:e})")]
    NonConvergence {
        iterations: usize,
        residual: f64,
        z: [f64; 2],
    },

    #[error("no positive solution: residual stays at {residual:e} with res2 < 0 along the whole search")]
    NoPositiveSolution { residual: f64, z: [f64; 2] },

    #[error("division by zero: {0}")]
    DivisionByZero(&'static str),
}
