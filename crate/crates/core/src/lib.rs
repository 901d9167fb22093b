//! Benchmarking and quality analysis for TPM-style hardware random number generators.
//!
//! - [`wire`]: byte-exact `TPM_GetRandom` request/response codec.
//! - [`device`]: simulated vendor chips, OS entropy, and file replay behind one interface.
//! - [`bench`]: request-size sweeps, CSV export, and cancellable bulk collection.
//! - [`quality`]: streaming entropy, chi-square, mean, Monte Carlo pi and serial
//!   correlation at byte and bit level.
//! - [`cli`]: the `trngbench` command line.

pub mod bench;
pub mod cli;
pub mod device;
pub mod quality;
pub mod wire;

pub use bench::{BenchRecord, CancelToken, CollectSummary, SweepConfig};
pub use device::{make_profile, ChipProfile, Device, DrawResult};
pub use quality::{analyze, MetricSet, QualityReport};
pub use wire::{GetRandomRequest, GetRandomResponse};
