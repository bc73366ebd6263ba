use rydpump::ErrorKind;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Simulation(#[from] rydpump::Error),
    #[error("output error: {0}")]
    Output(String),
    #[error("{context}: {source}")]
    At {
        context: String,
        #[source]
        source: Box<CliError>,
    },
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Output(e.to_string())
    }
}

pub const EXIT_OTHER: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_CAPACITY: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;
pub const EXIT_INTEGRITY: i32 = 5;

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Simulation(e) => match e.kind() {
                ErrorKind::Argument => EXIT_CONFIG,
                ErrorKind::Capacity => EXIT_CAPACITY,
                ErrorKind::Numeric => EXIT_NUMERIC,
                ErrorKind::Integrity => EXIT_INTEGRITY,
            },
            CliError::Output(_) => EXIT_OTHER,
            CliError::At { source, .. } => source.exit_code(),
        }
    }
}
