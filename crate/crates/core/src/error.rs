use thiserror::Error;

/// Errors raised while parsing, evaluating or training.
///
/// Positions (`x`) are reported as `f64` regardless of the scalar type used
/// for the computation.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("domain error: {message}{}", fmt_at(*x))]
    Domain { message: String, x: Option<f64> },

    #[error("pole: denominator magnitude {denominator:e} below threshold at x = {x}")]
    Pole { x: f64, denominator: f64 },

    #[error("non-finite value in {context}{}", fmt_at(*x))]
    Overflow { context: String, x: Option<f64> },

    #[error("degenerate reference value {0:e}")]
    DegenerateReference(f64),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

fn fmt_at(x: Option<f64>) -> String {
    match x {
        Some(x) => format!(" at x = {x}"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn domain(message: impl Into<String>) -> Self {
        Error::Domain {
            message: message.into(),
            x: None,
        }
    }

    pub(crate) fn overflow(context: impl Into<String>) -> Self {
        Error::Overflow {
            context: context.into(),
            x: None,
        }
    }

    /// Attaches the sample position to errors that do not carry one yet.
    pub fn at(self, at: f64) -> Self {
        match self {
            Error::Domain { message, x: None } => Error::Domain {
                message,
                x: Some(at),
            },
            Error::Overflow { context, x: None } => Error::Overflow {
                context,
                x: Some(at),
            },
            other => other,
        }
    }

    /// Offending sample position, when known.
    pub fn position(&self) -> Option<f64> {
        match self {
            Error::Domain { x, .. } | Error::Overflow { x, .. } => *x,
            Error::Pole { x, .. } => Some(*x),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
