use thiserror::Error;

/// Errors raised by the fitting library.
#[derive(Debug, Error)]
pub enum Error {
    /// Input outside the domain an operation accepts.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A parameter value outside the family's valid domain.
    #[error("parameter `{name}` out of domain: {value}")]
    Domain { name: &'static str, value: f64 },

    /// An observation outside the support of the family.
    #[error("observation {value} outside the support of {family}")]
    Support { family: &'static str, value: f64 },

    /// Iterative solver failed; carries the last iterate.
    #[error("{what} did not converge after {iterations} iterations (last iterate {last:?})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        last: Vec<f64>,
    },

    /// A non-finite value showed up where a finite one is required.
    #[error("non-finite {what} at {location}")]
    NonFinite { what: &'static str, location: String },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than numerics.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::Domain { .. } | Error::Support { .. } | Error::Csv(_) | Error::Io(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
