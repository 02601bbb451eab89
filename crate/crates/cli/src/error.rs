use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad configuration file, flag or parameter value.
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(fedsae_core::Error),

    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl CliError {
    /// 1 for configuration problems, 2 for anything that failed at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }

    pub(crate) fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }
}

impl From<fedsae_core::Error> for CliError {
    fn from(e: fedsae_core::Error) -> Self {
        match e {
            fedsae_core::Error::InvalidParameter(msg) => CliError::Config(msg),
            other => CliError::Core(other),
        }
    }
}
