use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] fraccap_core::Error),

    #[error("acceptance check failed for {0}")]
    Acceptance(String),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category printed with the message.
    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Core(e) if e.is_numerical() => "numerical",
            CliError::Core(_) => "input",
            CliError::Acceptance(_) => "acceptance",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numerical() => 3,
            CliError::Acceptance(_) => 4,
            _ => 2,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes_by_category() {
        let numerical = CliError::Core(fraccap_core::Error::SingularMatrix);
        let input = CliError::Core(fraccap_core::Error::InvalidParameter("x".into()));
        let cases = [
            (CliError::Config("x".into()), "config", 2),
            (CliError::io("p", std::io::Error::other("x")), "io", 2),
            (numerical, "numerical", 3),
            (input, "input", 2),
            (CliError::Acceptance("f5".into()), "acceptance", 4),
        ];
        for (err, category, code) in cases {
            assert_eq!((err.category(), err.exit_code()), (category, code));
        }
    }
}
