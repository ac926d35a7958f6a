use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Validation(String),

    #[error("degenerate axle geometry: {0}")]
    Geometry(String),

    #[error("invalid road spec: {0}")]
    RoadSpec(String),

    #[error("position {position} m outside road profile [0, {length}] m")]
    OutOfRange { position: f64, length: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("simulation diverged at step {step} (t = {time} s)")]
    Divergence { step: usize, time: f64 },

    #[error("cannot normalize: {0}")]
    Normalization(String),

    #[error("training failed in {stage} at epoch {epoch}{}", .batch.map(|b| format!(", batch {b}")).unwrap_or_default())]
    Training {
        stage: String,
        epoch: usize,
        batch: Option<usize>,
    },

    #[error("R² undefined for task {task}: true values are constant")]
    UndefinedR2 { task: usize },

    #[error("sensitivity sweep failed at parameter {parameter}, grid value {value}: {source}")]
    Sweep {
        parameter: String,
        value: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 validation, 3 numerical failure, 4 I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Validation(_)
            | Error::Geometry(_)
            | Error::RoadSpec(_)
            | Error::OutOfRange { .. }
            | Error::Config(_)
            | Error::Normalization(_)
            | Error::Parse(_) => 2,
            Error::Divergence { .. } | Error::Training { .. } | Error::UndefinedR2 { .. } => 3,
            Error::Sweep { source, .. } => source.exit_code(),
            Error::Io(_) => 4,
        }
    }
}
