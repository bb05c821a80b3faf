use thiserror::Error;

use dimabsa_client::ClientError;
use dimabsa_core::Error as CoreError;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 2;
    pub const DATA: i32 = 3;
    pub const TRANSPORT: i32 = 4;
    pub const CONTRACT: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("contract violation: {0}")]
    Contract(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Data(_) => exit::DATA,
            CliError::Transport(_) => exit::TRANSPORT,
            CliError::Contract(_) => exit::CONTRACT,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        let m = e.to_string();
        match e {
            CoreError::Config(_) => CliError::Config(m),
            CoreError::Data { .. } | CoreError::Dataset(_) | CoreError::Io { .. } => CliError::Data(m),
            CoreError::Shape { .. } | CoreError::Contract(_) | CoreError::Domain(_) => CliError::Contract(m),
        }
    }
}

impl From<ClientError> for CliError {
    fn from(e: ClientError) -> Self {
        let m = e.to_string();
        match e {
            ClientError::Template(_) | ClientError::Config(_) | ClientError::Fixture { .. } => CliError::Config(m),
            ClientError::Transport { .. } => CliError::Transport(m),
            ClientError::Cache { .. } => CliError::Data(m),
            ClientError::Core(inner) => inner.into(),
        }
    }
}

impl From<dimabsa_stats::StatsError> for CliError {
    fn from(e: dimabsa_stats::StatsError) -> Self {
        CliError::Contract(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

#[cfg(test)]
mod tests {
    use super::*;
    use dimabsa_core::TaskKind;

    #[test]
    fn core_errors_map_to_exit_codes() {
        let shape = CoreError::Shape { task: TaskKind::DimAste, detail: "category present".into() };
        assert_eq!(CliError::from(shape).exit_code(), exit::CONTRACT);
        assert_eq!(CliError::from(CoreError::Domain("t".into())).exit_code(), exit::CONTRACT);
        assert_eq!(CliError::from(CoreError::Dataset("ids".into())).exit_code(), exit::DATA);
        assert_eq!(CliError::from(CoreError::Config("c".into())).exit_code(), exit::CONFIG);
        let transport = ClientError::Transport { message: "down".into(), partial: Vec::new() };
        assert_eq!(CliError::from(transport).exit_code(), exit::TRANSPORT);
        assert_eq!(CliError::from(ClientError::Core(CoreError::Contract("x".into()))).exit_code(), exit::CONTRACT);
    }
}
