use thiserror::Error;

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] riskml_core::Error),

    #[error("configuration error: {0}")]
    Config(String),

    /// A stage's inputs are absent; names the command that produces them.
    #[error("missing artifact {path}: run `riskml {stage}` first")]
    MissingArtifact { path: String, stage: &'static str },

    #[error("artifact {path} is inconsistent: {message}")]
    StaleArtifact { path: String, message: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("no model could be trained")]
    AllModelsFailed,
}

impl CliError {
    /// Process exit status: 1 for bad input or configuration, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        let validation = match self {
            CliError::Core(e) => e.is_validation(),
            CliError::Config(_) | CliError::MissingArtifact { .. } | CliError::StaleArtifact { .. } => true,
            CliError::Io { .. } | CliError::AllModelsFailed => false,
        };
        if validation {
            1
        } else {
            2
        }
    }
}
