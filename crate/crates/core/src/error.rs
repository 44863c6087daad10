use thiserror::Error;

/// Errors raised anywhere in the pipeline.
///
/// Variants are grouped by the CLI exit code they map to: parsing and
/// validation problems are data errors, everything raised while fitting or
/// evaluating a model is a numeric error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("{0}")]
    Validation(String),

    #[error("unknown macro series '{0}'")]
    UnknownSeries(String),

    #[error("duplicate date {date} at row {row}")]
    DuplicateDate { date: String, row: usize },

    #[error("empty panel: {0}")]
    EmptyPanel(String),

    #[error("macro series '{series}' starts at {starts} after panel start {panel_start}")]
    LeadingGap {
        series: String,
        starts: String,
        panel_start: String,
    },

    #[error("missing column '{0}'")]
    MissingColumn(String),

    #[error("duplicate term name '{0}'")]
    DuplicateTerm(String),

    #[error("series too short: need {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("design matrix is rank deficient at column {index} ('{name}')")]
    RankDeficient { index: usize, name: String },

    #[error("constant column '{0}'")]
    ConstantColumn(String),

    #[error("response has a single class")]
    SingleClass,

    #[error("transport error: {0}")]
    Transport(String),

    #[error("rate limited: {0}")]
    RateLimited(String),

    #[error("provider error: {0}")]
    Provider(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(row: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            row,
            message: message.into(),
        }
    }

    /// True for failures of the numerical or modelling layers, as opposed to
    /// bad input data.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::RankDeficient { .. }
                | Error::ConstantColumn(_)
                | Error::SingleClass
                | Error::Parameter(_)
                | Error::TooShort { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
