//! Config-driven runner for the solvers, mechanisms and validation
//! experiments in `budget-pricing`.

pub mod commands;
pub mod config;

use budget_pricing::Error;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric failure: {0}")]
    Numeric(String),
    #[error("output error: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Config(_) => 2,
            Self::Numeric(_) => 3,
            Self::Output(_) => 1,
        }
    }
}

impl From<Error> for CliError {
    /// Solver failures are numeric; everything else means the config asked
    /// for something the instance cannot support.
    fn from(e: Error) -> Self {
        match e {
            Error::Numeric(_) | Error::UndefinedVirtualCost { .. } | Error::ZeroPrice { .. } => {
                Self::Numeric(e.to_string())
            }
            _ => Self::Config(e.to_string()),
        }
    }
}
