//! Benchmarks: distance-kernel throughput and training convergence of the
//! projected-Hamming versus Hamming trainers.

mod convergence;
pub mod distance;

pub use convergence::{bench_convergence, ConvergenceReport, ConvergenceRun, SeedSummary};
pub use distance::{bench_distance, BenchResult, BuildInfo, Checksum, DistanceBench, DistanceConfig, Kernel};

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("resource error: {0}")]
    Resource(String),
    #[error("checksum mismatch for {kernel}: optimized {optimized}, reference {reference}")]
    ChecksumMismatch {
        kernel: &'static str,
        optimized: f64,
        reference: f64,
    },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Core(#[from] hashcf_core::Error),
}

pub type Result<T, E = BenchError> = std::result::Result<T, E>;
