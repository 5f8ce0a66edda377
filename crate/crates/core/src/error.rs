use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// Raised when a Henky element has stretch <= 0. `element` is `None` when
    /// the stress was evaluated outside of an element loop.
    #[error("inverted element {element:?}: stretch {stretch}")]
    InvertedElement { element: Option<usize>, stretch: f64 },

    #[error("Newton solve failed after {iterations} iterations, residual norm {residual:e}")]
    NewtonDivergence { iterations: usize, residual: f64 },

    #[error("singular or indefinite system: {0}")]
    Singular(String),

    #[error(
        "Schwarz interval {interval} not converged after {iterations} iterations \
         (increments u={:e} v={:e} a={:e})",
        increments[0], increments[1], increments[2]
    )]
    SchwarzDivergence { interval: usize, iterations: usize, increments: [f64; 3] },

    #[error("undefined quantity: {0}")]
    Undefined(String),

    #[error("file format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn with_element(self, e: usize) -> Self {
        match self {
            Error::InvertedElement { stretch, .. } => Error::InvertedElement { element: Some(e), stretch },
            other => other,
        }
    }
}
