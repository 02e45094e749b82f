use flowsentinel_core::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const MISSING_INPUT: i32 = 2;
    pub const SCHEMA: i32 = 3;
    pub const NUMERIC: i32 = 4;
    pub const MODE_MISMATCH: i32 = 5;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    MissingInput(String),
    #[error("{0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::MissingInput(_) => exit::MISSING_INPUT,
            CliError::Schema(_) => exit::SCHEMA,
            CliError::Core(e) => match e {
                Error::InvalidConfig(_)
                | Error::InvalidSpec(_)
                | Error::InvalidRate(_)
                | Error::KTooLarge { .. }
                | Error::Json(_) => exit::CONFIG,
                Error::FileNotFound(_) | Error::EmptyInput(_) | Error::Io(_) => exit::MISSING_INPUT,
                Error::ShapeMismatch { .. }
                | Error::MissingColumn { .. }
                | Error::UnknownLabel(_)
                | Error::ClassTooSmall { .. }
                | Error::CorruptModel(_)
                | Error::CorruptCache(_)
                | Error::Csv { .. }
                | Error::InvalidLabel(_)
                | Error::IndexOutOfRange { .. }
                | Error::MissingCache(_) => exit::SCHEMA,
                Error::NonFinite(_) | Error::NonFiniteGradient(_) | Error::NonFiniteLoss { .. } => exit::NUMERIC,
                Error::ModeMismatch { .. } => exit::MODE_MISMATCH,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
