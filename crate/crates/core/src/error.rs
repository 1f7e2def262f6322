use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("precision {0} outside the supported range [8, 30]")]
    PrecisionOutOfRange(u32),
    #[error("vocabulary of {vocab} symbols does not fit a {precision}-bit total")]
    VocabTooLarge { vocab: usize, precision: u32 },
    #[error("invalid probability vector: {0}")]
    InvalidDistribution(String),
    #[error("token {token} outside vocabulary of size {vocab}")]
    UnknownToken { token: u32, vocab: usize },
    #[error("character {0:?} is not in the vocabulary")]
    UnknownSymbol(char),
    #[error("code exhausted after {decoded} decoded tokens")]
    CodeExhausted { decoded: usize },
    #[error("corrupt code stream after {decoded} decoded tokens")]
    CorruptCode { decoded: usize },
    #[error("training diverged: loss {0}")]
    Divergence(f64),
    #[error("unknown task id `{0}`")]
    UnknownTask(String),
    #[error("prompt of {len} tokens exceeds the context window of {window}")]
    PromptTooLong { len: usize, window: usize },
    #[error("replay mismatch: {0}")]
    ReplayMismatch(String),
    #[error("strategy `{0}` has no replay script in the manifest")]
    MissingScript(String),
    #[error("malformed {what}: {detail}")]
    Format { what: &'static str, detail: String },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn format(what: &'static str, detail: impl Into<String>) -> Self {
        Error::Format {
            what,
            detail: detail.into(),
        }
    }

    /// Short machine-readable tag for run records and CLI error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::PrecisionOutOfRange(_) => "precision_out_of_range",
            Error::VocabTooLarge { .. } => "vocab_too_large",
            Error::InvalidDistribution(_) => "invalid_distribution",
            Error::UnknownToken { .. } => "unknown_token",
            Error::UnknownSymbol(_) => "unknown_symbol",
            Error::CodeExhausted { .. } => "code_exhausted",
            Error::CorruptCode { .. } => "corrupt_code",
            Error::Divergence(_) => "divergence",
            Error::UnknownTask(_) => "unknown_task",
            Error::PromptTooLong { .. } => "prompt_too_long",
            Error::ReplayMismatch(_) => "replay_mismatch",
            Error::MissingScript(_) => "missing_script",
            Error::Format { .. } => "format",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}
