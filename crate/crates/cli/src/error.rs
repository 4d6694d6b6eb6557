//! CLI failure classes. Every error surfaces to the user as a one-line
//! diagnostic tagged `config` / `io` / `shape` / `format`.

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Shape(String),
    Format(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
            CliError::Shape(m) => write!(f, "shape error: {m}"),
            CliError::Format(m) => write!(f, "format error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<recat_core::Error> for CliError {
    fn from(e: recat_core::Error) -> Self {
        use recat_core::Error as E;
        match e {
            E::Io(err) => CliError::Io(err.to_string()),
            E::Format(_) | E::CrcMismatch { .. } => CliError::Format(e.to_string()),
            E::ShapeMismatch { .. } | E::NonBinaryMask { .. } | E::TooSmall { .. } => {
                CliError::Shape(e.to_string())
            }
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
