use idmse::MseError;

#[derive(Debug)]
pub enum CliError {
    Core(MseError),
    Config(String),
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if e.is_input_error() => 3,
            CliError::Core(_) | CliError::Output(_) => 2,
            CliError::Config(_) => 3,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.name(),
            CliError::Config(_) => "ConfigError",
            CliError::Output(_) => "OutputError",
        }
    }

    pub fn message(&self) -> String {
        match self {
            CliError::Core(e) => e.to_string(),
            CliError::Config(m) | CliError::Output(m) => m.clone(),
        }
    }
}

impl From<MseError> for CliError {
    fn from(e: MseError) -> Self {
        CliError::Core(e)
    }
}

pub type CliResult<T> = Result<T, CliError>;
