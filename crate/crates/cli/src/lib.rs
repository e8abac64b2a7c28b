//! Experiment driver: config loading, multi-seed runs with CSV statistics,
//! genome inspection and export, and timing benchmarks.

pub mod bench;
pub mod config;
pub mod genome_tools;
pub mod run;

pub use bench::{cmd_bench, BenchArgs, BenchRow};
pub use config::{ExperimentConfig, Seeds};
pub use genome_tools::{cmd_export, cmd_inspect, ExportArgs, InspectReport};
pub use run::{cmd_run, parse_seeds, RunArgs, RunManifest, SeedOutputs, SeedReport};

/// Environment variable holding the default thread count.
pub const THREADS_ENV: &str = "NEAT_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl From<neat_core::Error> for CliError {
    fn from(e: neat_core::Error) -> Self {
        match e {
            neat_core::Error::InvalidConfig { .. } | neat_core::Error::LimitsTooSmall(_) => CliError::Config(e.to_string()),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io: {e}"))
    }
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global
/// pool when `None`.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("thread count must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| CliError::Runtime(format!("thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
