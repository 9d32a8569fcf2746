use thiserror::Error;

pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DIVERGENCE: u8 = 3;
pub const EXIT_FALSIFIED: u8 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),

    #[error("dataset {path}: {source}")]
    Dataset {
        path: String,
        #[source]
        source: flexatc::Error,
    },

    #[error("combiner {variant}: {source}")]
    Combiner {
        variant: String,
        #[source]
        source: flexatc::Error,
    },

    #[error("run {run}: {source}")]
    Run {
        run: String,
        #[source]
        source: flexatc::Error,
    },

    #[error("{context}: {source}")]
    Setup {
        context: String,
        #[source]
        source: flexatc::Error,
    },

    #[error("run {run}: {check} falsified at k = {k} (slack {slack:e}, tolerance {tolerance:e})")]
    Falsified {
        run: String,
        check: &'static str,
        k: usize,
        slack: f64,
        tolerance: f64,
    },

    #[error("cannot write {path}: {source}")]
    Output {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("thread pool: {0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Dataset { .. } | CliError::Combiner { .. } => EXIT_CONFIG,
            CliError::Setup { source, .. } => match source {
                flexatc::Error::InvalidParameter(_)
                | flexatc::Error::Disconnected
                | flexatc::Error::ConnectivityCap { .. }
                | flexatc::Error::Partition { .. } => EXIT_CONFIG,
                _ => EXIT_FAILURE,
            },
            CliError::Run { source, .. } => match source {
                flexatc::Error::Divergence { .. } => EXIT_DIVERGENCE,
                flexatc::Error::Falsified { .. } => EXIT_FALSIFIED,
                _ => EXIT_FAILURE,
            },
            CliError::Falsified { .. } => EXIT_FALSIFIED,
            CliError::Output { .. } | CliError::Pool(_) => EXIT_FAILURE,
        }
    }
}
