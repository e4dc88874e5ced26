//! Monte Carlo samplers for the two double-distance protocols.
//!
//! Time is counted in rounds of one elementary generation attempt each.
//! Fusions, swaps and measurements are instantaneous within a round. Both
//! halves of a level run in parallel, so a level finishes when its slower
//! half does; the memories of the faster half accumulate the difference.

mod builder;
mod config;
mod mb;
mod randomness;
mod sb;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::trace::{MemoryLedger, OperationTrace};

pub use config::{
    PatchMode, Protocol, ProtocolConfig, SamplerParams, DEFAULT_ATTENUATION_LENGTH_KM, DEFAULT_MAX_ROUNDS,
};
pub use mb::{mb_cluster, mb_sample};
pub use randomness::{sample_elementary, Randomness, Scripted, StreamRandomness};
pub use sb::sb_sample;

/// Counters collected while sampling.
#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleStats {
    /// Largest gap, in segments, that a patch block was built for.
    pub max_gap: u32,
    pub patch_attempts: u32,
    pub growths: u32,
    /// Levels that started over after a failure.
    pub restarts: u32,
}

#[derive(Clone, Debug)]
pub struct SampleOutcome {
    pub rounds: u64,
    pub trace: OperationTrace,
    /// Storage time of every qubit in rounds.
    pub ledger: MemoryLedger,
    pub stats: SampleStats,
}

/// Sample number `index` of a run seeded with `seed`.
pub fn sample(
    protocol: Protocol,
    segments: u32,
    params: &SamplerParams,
    seed: u64,
    index: u64,
) -> Result<SampleOutcome> {
    let rng = StreamRandomness::new(seed, index, params.generation_probability, params.merge_probability)?;
    match protocol {
        Protocol::Mb => mb_sample(segments, params, rng),
        Protocol::Sb => sb_sample(segments, params, rng),
    }
}
