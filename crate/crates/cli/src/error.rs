use std::fmt;

/// Command failure, carrying its process exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Validation(String),
    Fit(String),
    Guard(String),
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Fit(_) => 3,
            CliError::Guard(_) => 4,
            CliError::Invariant(_) => 5,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (kind, msg) = match self {
            CliError::Validation(m) => ("invalid input", m),
            CliError::Fit(m) => ("fit failure", m),
            CliError::Guard(m) => ("guard rejection", m),
            CliError::Invariant(m) => ("invariant failure", m),
        };
        write!(f, "{kind}: {msg}")
    }
}

impl std::error::Error for CliError {}

impl From<spinkin::Error> for CliError {
    fn from(e: spinkin::Error) -> Self {
        use spinkin::Error as E;
        let msg = e.to_string();
        match e {
            E::FitFailure { .. } | E::InconsistentParams(_) => CliError::Fit(msg),
            E::GuardRejected { .. } => CliError::Guard(msg),
            E::EntropyDecrease { .. } => CliError::Invariant(msg),
            _ => CliError::Validation(msg),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(format!("i/o: {e}"))
    }
}
