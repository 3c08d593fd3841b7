use gaugeforge_core::algebra::AlgebraError;
use gaugeforge_core::dynamics::particle::DynamicsError;
use gaugeforge_core::FieldError;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const CHECK_FAILED: i32 = 1;
    pub const INPUT: i32 = 2;
    pub const SINGULAR: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("input error: {0}")]
    Input(String),
    #[error("singularity: {0}")]
    Singular(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => exit::INPUT,
            CliError::Singular(_) => exit::SINGULAR,
            CliError::Numeric(_) => exit::NUMERIC,
        }
    }
}

impl From<FieldError> for CliError {
    fn from(e: FieldError) -> Self {
        match e {
            FieldError::Singular { .. } => CliError::Singular(e.to_string()),
            FieldError::Eval { .. } => CliError::Numeric(e.to_string()),
            FieldError::Algebra(_) | FieldError::Unsupported(_) | FieldError::Invalid(_) => CliError::Input(e.to_string()),
        }
    }
}

impl From<AlgebraError> for CliError {
    fn from(e: AlgebraError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<DynamicsError> for CliError {
    fn from(e: DynamicsError) -> Self {
        match e {
            DynamicsError::Field(f) => f.into(),
            DynamicsError::SingularMetric { .. } => CliError::Singular(e.to_string()),
            DynamicsError::NormDrift { .. } => CliError::Numeric(e.to_string()),
            DynamicsError::InvalidStep(_) => CliError::Input(e.to_string()),
        }
    }
}
