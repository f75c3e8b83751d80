use fjmm::StabilityReport;

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_EQUILIBRIUM_UNSTABLE: u8 = 2;
pub const EXIT_UNSTABLE: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("equilibrium requested but the model is not stable")]
    Unstable(Box<StabilityReport>),
    #[error(transparent)]
    Core(#[from] fjmm::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Unstable(_) => EXIT_EQUILIBRIUM_UNSTABLE,
            CliError::Core(fjmm::Error::Unstable { .. }) => EXIT_EQUILIBRIUM_UNSTABLE,
            _ => EXIT_INPUT,
        }
    }
}
