use thiserror::Error;

pub type Result<T> = std::result::Result<T, QError>;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("{what} did not converge within {terms} terms")]
    NonConvergence { what: &'static str, terms: usize },

    #[error("pole: {0}")]
    Pole(String),

    #[error("non-finite value encountered at node {node}")]
    NonFinite { node: f64 },

    #[error(
        "trust region left at node {node}: |{value} - {zeta}| exceeds r = {radius}"
    )]
    TrustRegion {
        node: f64,
        value: f64,
        zeta: f64,
        radius: f64,
    },

    #[error("no Lipschitz constant available")]
    MissingLipschitz,

    #[error("function evaluation failed at {at}: {message}")]
    Evaluation { at: f64, message: String },
}

impl QError {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        QError::Domain(msg.into())
    }
}
