use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("gamma function has a pole at {0}")]
    GammaPole(f64),

    #[error("gamma function overflows at {0}")]
    GammaOverflow(f64),

    #[error("{function} is not defined for argument {argument}")]
    Domain { function: &'static str, argument: f64 },

    #[error("hypergeometric series did not converge within {terms} terms")]
    NonConvergence { terms: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch in {context}: expected {expected}, found {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("correction exponents {first} and {second} are closer than {min_separation:e}")]
    DuplicateSigma {
        first: f64,
        second: f64,
        min_separation: f64,
    },

    #[error("Vandermonde matrix is too ill-conditioned (condition estimate {0:e})")]
    IllConditioned(f64),

    #[error("matrix is singular to working precision")]
    SingularMatrix,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("derivative vanished at sigma = {sigma} with error {error:e}")]
    ZeroDerivative { sigma: f64, error: f64 },

    #[error(transparent)]
    Csv(#[from] CsvError),
}

/// CSV failures, flattened to a message so [`Error`] stays `Clone + PartialEq`.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("csv: {0}")]
pub struct CsvError(pub String);

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Csv(CsvError(e.to_string()))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Csv(CsvError(e.to_string()))
    }
}

impl Error {
    /// True for failures of the numerics (conditioning, poles, divergence), as
    /// opposed to malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GammaPole(_)
                | Error::GammaOverflow(_)
                | Error::NonConvergence { .. }
                | Error::DuplicateSigma { .. }
                | Error::IllConditioned(_)
                | Error::SingularMatrix
                | Error::NonFinite(_)
                | Error::ZeroDerivative { .. }
        )
    }
}
