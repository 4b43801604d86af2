//! Command-line front end: configuration, sample-complexity sweeps, the
//! channel-norm learning-curve experiment, oracle dispatchers, result
//! persistence (CSV) and plot emission (SVG).

pub mod cli;
pub mod config;
mod figure1;
mod svg;
mod sweep;


pub use config::{Config, ConfigError};
pub use figure1::{run_figure1, Figure1Config, Figure1Outcome, Figure1Source};
pub use svg::{line_chart, Series};
pub use sweep::{
    run_sweep, test_error, write_records_csv, ExperimentRecord, LearnerSpec, SweepConfig,
    TaskConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum ExpError {
    #[error("config: {0}")]
    Config(String),
    #[error(transparent)]
    ConfigFile(#[from] ConfigError),
    #[error(transparent)]
    Task(#[from] crate::tasks::TaskError),
    #[error(transparent)]
    Train(#[from] crate::training::TrainError),
    #[error(transparent)]
    Equiv(#[from] crate::equivariance::EquivError),
    #[error(transparent)]
    Oracle(#[from] crate::oracles::OracleError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// FNV-1a on bytes; the stable hash behind trial-seed derivation.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// `# key=value` stamp lines carrying tool version, config hash and seed,
/// written ahead of every CSV header.
pub fn stamp_lines(config_hash: u64, base_seed: u64) -> String {
    format!(
        "# tool=equilab {}\n# config={config_hash:016x}\n# seed={base_seed}\n",
        env!("CARGO_PKG_VERSION")
    )
}
