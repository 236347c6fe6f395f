use thiserror::Error;

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn input(msg: impl Into<String>) -> Self {
        CliError::Input(msg.into())
    }
}

impl From<vote_dynamics::Error> for CliError {
    fn from(e: vote_dynamics::Error) -> Self {
        use vote_dynamics::Error as E;
        match e {
            E::InvalidInput(_) | E::Io(_) | E::Csv(_) | E::Json(_) => CliError::Input(e.to_string()),
            E::Domain(_) | E::Integration { .. } | E::Fit(_) => CliError::Numeric(e.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
