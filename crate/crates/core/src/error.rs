use thiserror::Error;

/// Everything that can go wrong while building or evaluating the model.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("high-bias condition violated: V = {v} meV must exceed U + J = {threshold} meV")]
    HighBiasViolation { v: f64, threshold: f64 },

    #[error("config line {line}: {message}")]
    Parse { line: usize, key: Option<String>, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(
        "steady state is not unique: two smallest singular values {smallest:e} and {second:e} \
         (largest {largest:e})"
    )]
    DegenerateSteadyState { smallest: f64, second: f64, largest: f64 },

    #[error("linear system is singular")]
    Singular,

    #[error("eigenvalue iteration did not converge")]
    EigenNotConverged,

    #[error("generator has no relaxing mode; spectral gap undefined")]
    NoSpectralGap,

    #[error("quadrature did not converge: achieved {achieved:e}, requested {requested:e}")]
    QuadratureNotConverged { achieved: f64, requested: f64 },

    #[error("ODE integration failed: {0}")]
    Integration(String),

    #[error("trajectory inconsistency: {0}")]
    Trajectory(String),

    #[error("trajectory config: {0}")]
    TrajectoryConfig(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors caused by bad user input rather than numerical failure.
    pub fn is_parameter_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::HighBiasViolation { .. }
                | Error::Parse { .. }
                | Error::InvalidArgument(_)
                | Error::TrajectoryConfig(_)
        )
    }
}
