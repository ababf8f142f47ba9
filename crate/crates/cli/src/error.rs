use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config parse error: {0}")]
    Parse(String),
    #[error("unsupported schema_version {0}")]
    Schema(u32),
    #[error("missing parameter {0}")]
    Missing(&'static str),
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("effective sample size {ess:.1} is below {floor} of {samples} samples")]
    EssCollapse { ess: f64, samples: usize, floor: f64 },
    #[error(transparent)]
    Core(#[from] heatlab::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type CliResult<T> = std::result::Result<T, CliError>;

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

impl CliError {
    pub fn reason(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "config_parse",
            CliError::Schema(_) => "schema_version",
            CliError::Missing(_) => "missing_parameter",
            CliError::Invalid(_) => "invalid_config",
            CliError::EssCollapse { .. } => "ess_collapse",
            CliError::Core(e) => e.reason(),
            CliError::Io(_) => "io",
            CliError::Json(_) => "serialization",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::EssCollapse { .. } => EXIT_NUMERICAL,
            CliError::Core(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Core(heatlab::Error::Io(_) | heatlab::Error::Csv(_)) | CliError::Io(_) | CliError::Json(_) => EXIT_IO,
            _ => EXIT_VALIDATION,
        }
    }

    pub fn status(&self) -> &'static str {
        match self.exit_code() {
            EXIT_NUMERICAL => "numerical_failure",
            EXIT_VALIDATION => "validation_error",
            _ => "io_error",
        }
    }
}
