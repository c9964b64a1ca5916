use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("document has neither summary nor body text")]
    EmptyDocument,

    #[error("text of {chars} characters has no word boundaries; pre-segment it with whitespace")]
    SegmentationRequired { chars: usize },

    #[error("corpus is empty")]
    EmptyCorpus,

    #[error("no token survives the frequency threshold {min_token_freq}")]
    EmptyVocabulary { min_token_freq: u64 },

    #[error("vector is zero (all tokens out of vocabulary or zero input)")]
    ZeroVector,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("duplicate word `{0}`")]
    DuplicateWord(String),

    #[error("word `{0}` is not in the embedding table")]
    UnknownWord(String),

    #[error("target vocabulary has {found} words, at least {needed} are required")]
    TargetVocabularyTooSmall { found: usize, needed: usize },

    #[error("lexicon is empty after dropping pairs missing from the embedding tables ({dropped} dropped)")]
    EmptyLexicon { dropped: usize },

    #[error("Gram matrix is singular or ill-conditioned (smallest/largest eigenvalue {ratio:e}); use ridge > 0")]
    IllConditioned { ratio: f64 },

    #[error("pivot {pivot} is degenerate: {}", if *.all_positive { "it occurs in every document" } else { "it occurs in no document" })]
    DegeneratePivot { pivot: usize, all_positive: bool },

    #[error("predictor list is not a complete ordered sequence: position {position} holds index {found}")]
    PredictorOrder { position: usize, found: usize },

    #[error("training set has a single class")]
    SingleClass,

    #[error("test set is empty")]
    EmptyTestSet,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("infeasible synthetic configuration: {0}")]
    InfeasibleConfig(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("missing artifact: {}", .0.display())]
    MissingArtifact(PathBuf),

    #[error("{kind} artifact has unsupported format version `{found}` (expected v{expected})")]
    Version {
        kind: &'static str,
        found: String,
        expected: u32,
    },

    #[error("parse error in {source_name} line {line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }

    /// Process exit code for the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidArgument(_) | Error::InfeasibleConfig(_) => 2,
            Error::MissingArtifact(_) => 3,
            _ => 4,
        }
    }
}
