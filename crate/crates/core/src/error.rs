use std::fmt;
use std::io;
use std::path::PathBuf;

use thiserror::Error;

/// A source position: file name as given on the command line plus a 1-based line.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Location {
    pub file: String,
    pub line: u32,
}

impl Location {
    pub fn new(file: impl Into<String>, line: u32) -> Self {
        Location {
            file: file.into(),
            line,
        }
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.file, self.line)
    }
}

/// Failures of the term engine and rewriter. These carry no source position;
/// the runtime attaches one when it surfaces them.
#[derive(Debug, Error)]
pub enum EngineError {
    #[error("exponent overflow (limit is a signed 32-bit integer)")]
    ExponentOverflow,
    #[error("division by zero")]
    DivisionByZero,
    #[error("function argument `{0}` does not evaluate to an integer")]
    NonIntegerArgument(String),
    #[error("repeat block did not terminate within {cap} passes (lines {lines})")]
    RepeatCapExceeded { cap: usize, lines: String },
    #[error("temporary directory {} is not usable: {source}", path.display())]
    TempDir { path: PathBuf, source: io::Error },
    #[error("spill file i/o failed: {0}")]
    SpillIo(#[from] io::Error),
    #[error("corrupt spill record: {0}")]
    CorruptRecord(&'static str),
    #[error("term of {size} bytes exceeds MaxTermSize ({max} bytes)")]
    TermTooLarge { size: usize, max: usize },
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("{at}: {msg}")]
    Compile { at: Location, msg: String },
    #[error("{at}: {msg}")]
    Runtime { at: Location, msg: String },
    #[error("{at}: {source}")]
    Engine {
        at: Location,
        #[source]
        source: EngineError,
    },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{origin}:{line}: {msg}")]
    Settings { origin: String, line: u32, msg: String },
}

impl Error {
    pub fn compile(at: &Location, msg: impl Into<String>) -> Self {
        Error::Compile {
            at: at.clone(),
            msg: msg.into(),
        }
    }

    pub fn runtime(at: &Location, msg: impl Into<String>) -> Self {
        Error::Runtime {
            at: at.clone(),
            msg: msg.into(),
        }
    }

    /// Process exit status: 2 compile, 3 runtime, 4 I/O or configuration.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Compile { .. } => 2,
            Error::Runtime { .. } => 3,
            Error::Engine { source, .. } => match source {
                EngineError::TempDir { .. } | EngineError::SpillIo(_) => 4,
                _ => 3,
            },
            Error::Io { .. } | Error::Settings { .. } => 4,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
