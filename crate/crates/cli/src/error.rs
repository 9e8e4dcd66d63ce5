use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Core(simiscale::Error),
    /// Missing or malformed configuration.
    Config(String),
}

impl From<simiscale::Error> for CliError {
    fn from(e: simiscale::Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Config(m) => write!(f, "configuration error: {m}"),
        }
    }
}

impl CliError {
    /// 1 for I/O, parse and configuration problems, 2 for domain errors.
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Core(e) if !e.is_io_or_parse() => ExitCode::from(2),
            _ => ExitCode::from(1),
        }
    }
}
