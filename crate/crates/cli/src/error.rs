use std::path::PathBuf;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot parse config: {0}")]
    ConfigParse(String),
    #[error("file not found: {}", .0.display())]
    FileNotFound(PathBuf),
    #[error("I/O failure: {0}")]
    IoFailure(String),
    #[error("seed is required for `{0}`")]
    MissingSeed(&'static str),
    #[error(transparent)]
    Core(#[from] qpf_core::Error),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::ConfigParse(_) => "ConfigParse",
            CliError::FileNotFound(_) => "FileNotFound",
            CliError::IoFailure(_) => "IOFailure",
            CliError::MissingSeed(_) => "MissingSeed",
            CliError::Core(e) => e.kind(),
        }
    }

    /// 2 for numerical failures, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 2,
            _ => 1,
        }
    }

    /// One-line JSON record for stderr.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            message: String,
            exit_code: i32,
        }
        serde_json::to_string(&Record { error: self.kind(), message: self.to_string(), exit_code: self.exit_code() })
            .expect("error record serializes")
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::IoFailure(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
