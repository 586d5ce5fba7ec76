use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("capacity error: {0}")]
    Capacity(String),

    #[error("{0}")]
    Io(#[from] std::io::Error),

    #[error("{0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Capacity(_) => 3,
            CliError::Io(_) | CliError::Csv(_) => 1,
            CliError::Config(_) => 2,
        }
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl From<powerdiv::Error> for CliError {
    fn from(e: powerdiv::Error) -> Self {
        if e.is_capacity() {
            CliError::Capacity(e.to_string())
        } else {
            CliError::Config(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
