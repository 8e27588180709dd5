use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain an operation is defined on.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A function handle lacks a derivative the operation needs.
    #[error("function `{id}` has no {which} derivative")]
    MissingDerivative { id: String, which: &'static str },

    /// A supplied derivative disagrees with finite differences of the function.
    #[error(
        "function `{id}`: {which} derivative {supplied} disagrees with finite difference {estimate} at x = {x}"
    )]
    DerivativeMismatch {
        id: String,
        which: &'static str,
        x: f64,
        supplied: f64,
        estimate: f64,
    },

    /// The minimizer of a one-dimensional search ran into the edge of its bracket.
    #[error("search for the minimizing multiple ran into the bracket edge [{lo}, {hi}] (last a = {last})")]
    BracketExhausted { lo: f64, hi: f64, last: f64 },

    #[error("empty sweep: {0}")]
    EmptySweep(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn precondition<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Precondition(msg.into()))
}
