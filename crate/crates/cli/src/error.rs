use thiserror::Error;

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARTIAL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_TOTAL_FAILURE: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Input(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Lib(#[from] signcorr::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Input(_) | CliError::Io(_) => EXIT_IO,
            CliError::Lib(e) => match e {
                signcorr::Error::Config(_) | signcorr::Error::Domain(_) => EXIT_CONFIG,
                signcorr::Error::Io(_) => EXIT_IO,
                signcorr::Error::Degenerate(_) | signcorr::Error::Convergence { .. } => EXIT_TOTAL_FAILURE,
            },
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
