//! Experiment runner for `laminate-hum`: simulation, observability surveys,
//! null control and parameter sweeps.

pub mod commands;
pub mod config;

pub use commands::{cmd_control, cmd_observability, cmd_simulate, cmd_sweep, Outcome};
pub use config::{InitialSpec, Overrides, Resolved, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] laminate_hum::Error),
    #[error("solver did not converge: {0}")]
    NotConverged(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    /// 2 for validation, 3 for non-convergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        use laminate_hum::Error as E;
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Io(_) => 1,
            CliError::Core(e) => match e {
                E::ParameterDomain { .. }
                | E::PhaseSpace
                | E::Grid(_)
                | E::TimeGrid(_)
                | E::Shape { .. }
                | E::Domain(_) => 2,
                E::EigenNotConverged { .. } | E::IllPosedFilter { .. } => 3,
                E::Io(_) | E::Internal(_) => 1,
            },
        }
    }
}
