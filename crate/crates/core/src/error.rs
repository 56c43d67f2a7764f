use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An iterative kernel hit its iteration cap.
    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("contract violation: {0}")]
    Contract(String),

    /// Whitening target was not positive definite.
    #[error("singular matrix: smallest eigenvalue {eigenvalue:e} is not positive; add a ridge (eps > 0)")]
    Singular { eigenvalue: f64 },

    #[error("degenerate sample: need at least 2 samples, got {count}")]
    DegenerateSample { count: usize },

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("minibatch too small: {got} samples, need at least {need}")]
    MinibatchTooSmall { got: usize, need: usize },

    #[error("non-finite gradient for parameter `{param}`")]
    NonFiniteGradient { param: String },

    #[error("non-finite loss at epoch {epoch}, batch {batch}")]
    NonFiniteLoss { epoch: usize, batch: usize },

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at byte {offset} (record `{record}`): {message}")]
    Parse {
        record: String,
        offset: u64,
        message: String,
    },

    #[error("evaluation error: {0}")]
    Evaluation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn contract(msg: impl Into<String>) -> Self {
        Error::Contract(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn data(msg: impl Into<String>) -> Self {
        Error::Data(msg.into())
    }
}
