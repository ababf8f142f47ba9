use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Every failure carries a stable snake_case reason via [`Error::reason`].
#[derive(Debug, Error)]
pub enum Error {
    #[error("{family} kernel is singular at the origin")]
    SingularAtZero { family: &'static str },

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("{0} kernel has no pointwise covariance function (spectral measure only)")]
    NotPointwise(&'static str),

    #[error("quadrature did not converge: estimate {estimate:e}, error {error:e}, tolerance {tol:e}")]
    QuadratureNotConverged { estimate: f64, error: f64, tol: f64 },

    #[error("integral diverges: {0}")]
    Divergent(String),

    #[error("smoothed spectral mass at probe {probe:?} is {value:e} > {at_zero:e} at the origin")]
    DominationViolated { probe: Vec<f64>, value: f64, at_zero: f64 },

    #[error("standard error {stderr:e} exceeds tolerance {tol:e}")]
    InsufficientSamples { stderr: f64, tol: f64 },

    #[error("self-energy inadmissible: spatial exponent {a} must be below 2 - 2*beta = {}", 2.0 - 2.0 * beta)]
    InadmissibleSelfEnergy { a: f64, beta: f64 },

    #[error("quadrature node requested the covariance at the exact origin")]
    SingularNode,

    #[error("inadmissible configuration: {0}")]
    InadmissibleConfig(String),

    #[error("ill-conditioned fit: {0}")]
    IllConditionedFit(String),

    #[error("mollifier under-resolves the mesh: {0}")]
    AliasingViolation(String),

    #[error("only {levels} dyadic levels available, need at least {required}")]
    InsufficientLevels { levels: usize, required: usize },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub fn reason(&self) -> &'static str {
        match self {
            Error::SingularAtZero { .. } => "singular_at_zero",
            Error::OutOfRange(_) => "out_of_range",
            Error::NotPointwise(_) => "not_pointwise",
            Error::QuadratureNotConverged { .. } => "quadrature_not_converged",
            Error::Divergent(_) => "divergent",
            Error::DominationViolated { .. } => "domination_violated",
            Error::InsufficientSamples { .. } => "insufficient_samples",
            Error::InadmissibleSelfEnergy { .. } => "inadmissible_self_energy",
            Error::SingularNode => "singular_node",
            Error::InadmissibleConfig(_) => "inadmissible_config",
            Error::IllConditionedFit(_) => "ill_conditioned_fit",
            Error::AliasingViolation(_) => "aliasing_violation",
            Error::InsufficientLevels { .. } => "insufficient_levels",
            Error::Unsupported(_) => "unsupported",
            Error::Format(_) => "malformed_data",
            Error::Io(_) => "io",
            Error::Csv(_) => "csv",
        }
    }

    /// Numerical failures (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::QuadratureNotConverged { .. }
                | Error::InsufficientSamples { .. }
                | Error::SingularNode
                | Error::IllConditionedFit(_)
                | Error::DominationViolated { .. }
        )
    }
}
