use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("row {row}: field `{field}`: {message}")]
    MalformedRow { row: usize, field: String, message: String },

    #[error("row {row}: {message}")]
    Parse { row: usize, message: String },

    #[error("invalid argument `{name}`: {message}")]
    InvalidArgument { name: &'static str, message: String },

    #[error("group {key} mixes directions `{first}` and `{second}`")]
    MixedDirection { key: String, first: String, second: String },

    #[error("records disagree on {field}: `{left}` vs `{right}`")]
    Mismatch {
        field: &'static str,
        left: String,
        right: String,
    },

    #[error("need at least 2 distinct x values to fit, found {found}")]
    InsufficientScales { found: usize },

    #[error("record with params {params} has no layer information")]
    MissingLayers { params: u64 },

    #[error("R² undefined: total sum of squares is zero but residual sum is {ss_res}")]
    UndefinedRSquared { ss_res: f64 },

    #[error("bootstrap replicate {replicate} degenerate after {redraws} consecutive redraws")]
    DegenerateBootstrap { replicate: usize, redraws: usize },

    #[error("unknown {kind} `{name}` (available: {available})")]
    UnknownStrategy {
        kind: &'static str,
        name: String,
        available: String,
    },

    #[error("arithmetic overflow computing {0}")]
    Overflow(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, message: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            message: message.into(),
        }
    }
}
