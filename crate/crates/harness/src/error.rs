use std::fmt;
use std::path::PathBuf;

/// Pipeline stage an error came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    Ingest,
    Positions,
    Split,
    Build,
    Evaluate,
    Write,
    Compare,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Config => "config",
            Stage::Ingest => "ingest",
            Stage::Positions => "positions",
            Stage::Split => "split",
            Stage::Build => "build",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
            Stage::Compare => "compare",
        };
        f.write_str(s)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    File { path: PathBuf, source: rwe_core::Error },
    #[error(transparent)]
    Data(#[from] rwe_core::Error),
    #[error("split {split} fingerprints differ between runs")]
    FingerprintMismatch { split: usize },
    #[error("[{stage}] {source}")]
    Stage { stage: Stage, source: Box<HarnessError> },
}

impl HarnessError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// 1 for usage and configuration problems, 2 for data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage(_) | HarnessError::Config(_) => 1,
            HarnessError::Stage { source, .. } => source.exit_code(),
            _ => 2,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Tags errors with the stage that produced them.
pub trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T>;
}

impl<T, E: Into<HarnessError>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> Result<T> {
        self.map_err(|e| HarnessError::Stage { stage, source: Box::new(e.into()) })
    }
}
