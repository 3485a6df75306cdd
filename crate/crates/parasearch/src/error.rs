//! Error type shared across the crate.

use std::fmt;
use std::io;
use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// I/O failure, tagged with the path involved.
    Io { path: PathBuf, source: io::Error },
    /// A sentence normalized to zero tokens.
    EmptyAfterNormalization,
    /// A corpus with no usable sentences.
    EmptyCorpus,
    /// An embedding row whose width differs from the table's dimension.
    DimensionMismatch {
        line: usize,
        expected: usize,
        found: usize,
    },
    /// Cosine similarity against an all-zero vector is undefined.
    ZeroVector,
    /// Two aligned collections differ in length.
    LengthMismatch { left: usize, right: usize },
    /// An empty candidate or reference where a metric needs content.
    EmptyInput(&'static str),
    /// Statistic undefined for the given input (constant vector, n < 2).
    DegenerateInput(String),
    /// An edit position outside the valid range for its mode.
    InvalidPosition {
        position: usize,
        len: usize,
        mode: &'static str,
    },
    /// Operator probabilities leave no legal move (delete disabled by
    /// `min_len` and insert/replace both have zero probability).
    DegenerateOps,
    /// A proposal step found no candidate word with positive weight.
    EmptyCandidateSet,
    /// A training routine was handed zero examples.
    EmptyTrainingSet,
    /// A trajectory file (or in-memory trajectory) violates the format:
    /// missing step 0, non-contiguous steps, bad field counts.
    MalformedTrajectory { line: usize, reason: String },
    /// A persisted model or data file that does not parse.
    Malformed {
        path: PathBuf,
        line: usize,
        reason: String,
    },
    /// Invalid configuration: unknown key, bad value, missing required path.
    Config(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Io { path, source } => write!(f, "{}: {}", path.display(), source),
            Error::EmptyAfterNormalization => {
                write!(f, "sentence is empty after normalization")
            }
            Error::EmptyCorpus => write!(f, "corpus contains no usable sentences"),
            Error::DimensionMismatch {
                line,
                expected,
                found,
            } => write!(
                f,
                "embedding line {line}: expected {expected} values, found {found}"
            ),
            Error::ZeroVector => write!(f, "cosine similarity with a zero vector"),
            Error::LengthMismatch { left, right } => {
                write!(f, "aligned inputs differ in length: {left} vs {right}")
            }
            Error::EmptyInput(what) => write!(f, "empty {what}"),
            Error::DegenerateInput(why) => write!(f, "degenerate input: {why}"),
            Error::InvalidPosition {
                position,
                len,
                mode,
            } => write!(
                f,
                "position {position} invalid for {mode} on a sentence of {len} tokens"
            ),
            Error::DegenerateOps => write!(
                f,
                "no legal edit operation: delete blocked at minimum length and \
                 insert/replace have zero probability"
            ),
            Error::EmptyCandidateSet => {
                write!(f, "no candidate word with positive proposal weight")
            }
            Error::EmptyTrainingSet => write!(f, "no training examples"),
            Error::MalformedTrajectory { line, reason } => {
                if *line == 0 {
                    write!(f, "malformed trajectory: {reason}")
                } else {
                    write!(f, "malformed trajectory at line {line}: {reason}")
                }
            }
            Error::Malformed { path, line, reason } => {
                write!(f, "malformed file {}:{line}: {reason}", path.display())
            }
            Error::Config(why) => write!(f, "config error: {why}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code class for the CLI: 2 configuration, 3 data, 4
    /// internal invariant violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::DegenerateOps => 2,
            Error::InvalidPosition { .. } | Error::EmptyCandidateSet => 4,
            _ => 3,
        }
    }
}
