use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate repulsor: subject and source coincide")]
    DegenerateRepulsor,

    #[error("scenario infeasible: env {env_id}, seed {seed} ({reason})")]
    ScenarioInfeasible { env_id: u8, seed: u64, reason: String },

    #[error("unknown environment id {0}; expected 1..=5")]
    UnknownEnvironment(u8),

    #[error("illegal action: speed {speed} exceeds preferred speed {v_pref}")]
    IllegalAction { speed: f64, v_pref: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("corrupt checkpoint: {0}")]
    CorruptCheckpoint(String),

    #[error("unsupported checkpoint version {found} (expected {expected})")]
    CheckpointVersion { found: u32, expected: u32 },

    #[error("cannot aggregate an empty list of episodes")]
    EmptyRecords,

    #[error("malformed log line {line}: {reason}")]
    MalformedLog { line: usize, reason: String },

    #[error("training log contains no validation entries")]
    NoValidation,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown preset {0:?}")]
    UnknownPreset(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
