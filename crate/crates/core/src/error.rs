use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("search too large: {required} evaluations needed, budget is {budget}")]
    SearchTooLarge { required: f64, budget: f64 },

    #[error("effective channel is rank deficient (condition number {condition:.3e} exceeds {threshold:.3e})")]
    RankDeficient { condition: f64, threshold: f64 },

    #[error("combiner for user {user} is the zero vector")]
    ZeroCombiner { user: usize },

    #[error("insufficient data: {got} samples given, at least {needed} required")]
    InsufficientData { got: usize, needed: usize },

    #[error("combiner is not realizable with the switch network: {0}")]
    Infeasible(String),

    #[error("config error in `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by bad user input (configuration or parameters),
    /// as opposed to failures that happen while computing.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            Error::Config { .. } | Error::InvalidParameter { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
