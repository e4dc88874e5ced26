//! Nested entanglement swapping.
//!
//! A swap is recorded as a fusion of the two inner qubits followed by a Y
//! measurement of the surviving source, which leaves a Bell pair between the
//! outer qubits. A failed swap loses both pairs and the level starts over.

use crate::error::{Error, Result};
use crate::trace::{Event, QubitId};

use super::builder::Builder;
use super::config::SamplerParams;
use super::randomness::Randomness;
use super::SampleOutcome;

pub fn sb_sample<R: Randomness>(segments: u32, params: &SamplerParams, rng: R) -> Result<SampleOutcome> {
    if !segments.is_power_of_two() {
        return Err(Error::UnsupportedSegments(segments));
    }
    let mut b = Builder::new(rng, *params);
    let (pair, rounds) = build(&mut b, 0, segments)?;
    Ok(b.finish(pair, rounds))
}

fn build<R: Randomness>(b: &mut Builder<R>, lo: u32, s: u32) -> Result<([QubitId; 2], u64)> {
    if s == 1 {
        return b.link(lo);
    }
    let half = s / 2;
    let mut elapsed = 0;
    loop {
        let cp = b.checkpoint();
        let (left, tl) = build(b, lo, half)?;
        let (right, tr) = build(b, lo + half, half)?;
        let t = tl.max(tr);
        b.advance(&left, t - tl);
        b.advance(&right, t - tr);
        if b.merge_succeeds() {
            b.record(Event::MergeSuccess {
                source: left[1],
                target: right[0],
            });
            b.record(Event::MeasureY { qubit: left[1] });
            return Ok(([left[0], right[1]], elapsed + t));
        }
        elapsed += t;
        b.stats.restarts += 1;
        b.rollback(cp);
    }
}
