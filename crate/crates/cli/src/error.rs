use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("runtime error: {0}")]
    Runtime(String),

    #[error("check failed: {0}")]
    Check(String),
}

impl CliError {
    /// 1 check failure, 2 configuration error, 3 runtime error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Check(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<ovi_core::Error> for CliError {
    fn from(e: ovi_core::Error) -> Self {
        use ovi_core::Error as E;
        match e {
            E::Config(_) | E::UnsupportedConstant(_) | E::Parse { .. } | E::Csv(_) | E::DimensionMismatch { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
