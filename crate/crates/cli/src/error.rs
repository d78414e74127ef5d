use std::fmt;

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, configuration keys or values. Exit 2.
    Config(String),
    /// A run or check completed but something failed. Exit 1.
    Failed(String),
    /// The overflow guard tripped. Exit 3.
    BlowUp(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Config(_) => 2,
            CliError::BlowUp(_) => 3,
        }
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Failed(m) => write!(f, "{m}"),
            CliError::BlowUp(m) => write!(f, "blow-up: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<bousspec::Error> for CliError {
    fn from(e: bousspec::Error) -> Self {
        use bousspec::Error as E;
        match e {
            E::BlowUp { .. } => CliError::BlowUp(e.to_string()),
            E::InvalidGrid { .. } | E::InvalidParameter { .. } | E::Cfl { .. } => {
                CliError::Config(e.to_string())
            }
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failed(format!("i/o error: {e}"))
    }
}

pub type CliResult<T> = Result<T, CliError>;
