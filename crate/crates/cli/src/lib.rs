//! Seeded experiment harness: model-accuracy sweeps, detector decision
//! regions, BER and AIR sweeps, plots.

pub mod air;
pub mod analysis;
pub mod ber;
pub mod config;
pub mod nsd;
pub mod output;
pub mod plot;
pub mod regions;
pub mod seeds;
pub mod selftest;

pub use config::ExperimentConfig;

/// Environment variable consulted when `--threads` is absent.
pub const THREADS_ENV: &str = "PONSIM_THREADS";

/// Sizes the global work pool; a second call is a no-op.
pub fn init_threads(threads: Option<usize>) {
    let n = threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = n {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}
