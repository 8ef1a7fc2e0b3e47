use thiserror::Error;

use crate::units::Dimension;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unit error: cannot convert {from:?} to {to:?}")]
    Unit { from: Dimension, to: Dimension },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("range error: {0}")]
    Range(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("singular resonance: {0}")]
    Singular(String),

    #[error("integration failed at t = {t} s: {msg}")]
    Integration { t: f64, msg: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("at B = {field_gauss} G: {source}")]
    AtField {
        field_gauss: f64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn range(msg: impl Into<String>) -> Self {
        Error::Range(msg.into())
    }

    pub(crate) fn at_field(self, field_gauss: f64) -> Self {
        Error::AtField {
            field_gauss,
            source: Box::new(self),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::Singular(_) | Error::Integration { .. } => true,
            Error::AtField { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}
