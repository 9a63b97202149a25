use thiserror::Error;

/// Errors produced anywhere in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch on contracted pair ({left_mode}, {right_mode}): extent {left_extent} vs {right_extent}")]
    ShapeMismatch {
        left_mode: usize,
        right_mode: usize,
        left_extent: usize,
        right_extent: usize,
    },

    #[error("mode {mode} out of range for tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("mode {0} is used more than once")]
    RepeatedMode(usize),

    #[error("invalid tensor: {0}")]
    InvalidTensor(String),

    #[error("unknown symbol '{0}'")]
    UnknownSymbol(char),

    #[error("matrix is singular or ill-conditioned (residual {residual:e})")]
    SingularMatrix { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("picture of {cells} cells exceeds the brute-force limit of {limit}")]
    TooLarge { cells: usize, limit: usize },

    #[error("symbol '{0}' is not in the binary alphabet {{a, b}}")]
    NonBinary(char),

    #[error("infeasible request: {0}")]
    Infeasible(String),

    #[error("label {0} is outside {{0, 1}}")]
    LabelDomain(f64),

    #[error("non-finite loss {loss} at iteration {iteration}")]
    NonFiniteLoss { iteration: usize, loss: f64 },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn parse(source_name: impl Into<String>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            source_name: source_name.into(),
            line,
            message: message.into(),
        }
    }
}
