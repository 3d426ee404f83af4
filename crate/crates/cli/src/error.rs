use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("{0}")]
    Input(String),

    #[error("{context}: {source}")]
    Physics {
        context: String,
        source: rydswitch::Error,
    },

    #[error("{0}")]
    Fit(rydswitch::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } | CliError::Input(_) => 2,
            CliError::Physics { .. } => 3,
            CliError::Fit(_) => 4,
        }
    }

    /// Routes a library error to the right exit class.
    pub fn from_core(context: &str, err: rydswitch::Error) -> Self {
        use rydswitch::Error as E;
        match err {
            E::FitFailure { .. } | E::NoConvergence(_) => CliError::Fit(err),
            E::BadRecord(_) | E::BadInput(_) => CliError::Input(format!("{context}: {err}")),
            _ => CliError::Physics {
                context: context.to_string(),
                source: err,
            },
        }
    }

    pub fn physics(context: &str, message: impl Into<String>) -> Self {
        CliError::Physics {
            context: context.to_string(),
            source: rydswitch::Error::InvalidParams(message.into()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// `map_err` shorthand for library calls.
pub trait Context<T> {
    fn context(self, what: &str) -> CliResult<T>;
}

impl<T> Context<T> for rydswitch::Result<T> {
    fn context(self, what: &str) -> CliResult<T> {
        self.map_err(|e| CliError::from_core(what, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_classes() {
        use rydswitch::Error as E;
        let fit = CliError::from_core(
            "fit",
            E::FitFailure {
                chi2: 1.5,
                iterations: 500,
            },
        );
        assert_eq!(fit.exit_code(), 4);
        assert!(fit.to_string().contains("1.5"));
        assert_eq!(
            CliError::from_core("tomo", E::BadRecord("missing pair (H,V)".into())).exit_code(),
            2
        );
        let deg = CliError::from_core("blockade", E::DegenerateDenominator { value: 0.0 });
        assert_eq!(deg.exit_code(), 3);
        assert!(deg.to_string().starts_with("blockade: "));
    }
}
