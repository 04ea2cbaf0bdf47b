use thiserror::Error;

/// Errors raised by the geometry, response, control and synthesis routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside the admissible domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid array geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid weight vector: {0}")]
    InvalidWeights(String),

    #[error("dimension mismatch: expected {expected} elements, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("degenerate weight vector: {0}")]
    DegenerateWeight(&'static str),

    /// `|w^H a(theta0)| - eps(theta0) ||w|| <= 0`, the worst-case upper boundary is undefined.
    #[error("robustness is infeasible: |w^H a(theta0)| - eps(theta0)*||w|| = {margin:.6e} must be positive")]
    Infeasible { margin: f64 },

    /// The lower bound on attainable levels is undefined because `||a(theta0)|| <= eps(theta0)`.
    #[error("uncertainty bound eps(theta0) = {eps0} is not smaller than ||a(theta0)|| = {steering_norm}")]
    InfeasibleFloor { eps0: f64, steering_norm: f64 },

    #[error("requested level is degenerate along the decomposition family (B22 = {b22:.3e})")]
    DegenerateLevel { b22: f64 },

    #[error("cannot control theta_k: the previous weight has no component along a(theta_k)")]
    CannotControl,

    #[error("leading coefficient is zero: not a quartic")]
    NotQuartic,

    #[error(
        "desired level {v_d_db:.4} dB is not reachable; minimum reachable level is {min_vd_db:.4} dB"
    )]
    UnreachableLevel { v_d_db: f64, min_vd_db: f64 },

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("invalid uncertainty model: {0}")]
    InvalidModel(String),

    #[error("invalid mask: {0}")]
    InvalidMask(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Numeric failures (as opposed to malformed inputs).
    pub fn is_numeric_infeasibility(&self) -> bool {
        matches!(
            self,
            Error::Infeasible { .. }
                | Error::InfeasibleFloor { .. }
                | Error::DegenerateLevel { .. }
                | Error::CannotControl
                | Error::UnreachableLevel { .. }
                | Error::DegenerateWeight(_)
        )
    }
}
