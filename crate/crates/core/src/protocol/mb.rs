//! Merging-based double distance.
//!
//! Each level builds two half-span clusters, lets the earlier one wait, and
//! fuses them at the middle station. A failed fusion erases both middle
//! qubits and leaves a two-segment gap. If the scope is large enough the
//! gap is patched with a freshly built block and one fusion per side:
//!
//! * both succeed: the gap is closed;
//! * one fails: the gap moves to that side, two segments wide;
//! * both fail (or the only fusion of a one-sided patch fails): the block is
//!   discarded and the gap grows to `2^(g_temp+1)` segments.
//!
//! A level starts over when the gap would grow past the growth limit, when
//! the scope is too small for the grown gap, or when no entanglement is left.
//! Interior qubits are measured in Y from left to right once the whole chain
//! is one cluster.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::trace::{Event, QubitId};

use super::builder::Builder;
use super::config::SamplerParams;
use super::randomness::Randomness;
use super::SampleOutcome;

/// A linear cluster with one qubit per station, starting at station `lo`.
#[derive(Clone, Debug)]
struct Cluster {
    lo: u32,
    qubits: VecDeque<QubitId>,
}

impl Cluster {
    fn pair(lo: u32, [a, b]: [QubitId; 2]) -> Self {
        Cluster {
            lo,
            qubits: VecDeque::from([a, b]),
        }
    }

    fn hi(&self) -> u32 {
        self.lo + self.qubits.len() as u32 - 1
    }

    fn first(&self) -> QubitId {
        self.qubits[0]
    }

    fn last(&self) -> QubitId {
        self.qubits[self.qubits.len() - 1]
    }
}

/// Concatenates clusters whose boundary qubits were just fused; the right
/// cluster's first qubit was the fusion target and is gone.
fn join(mut left: Cluster, right: Cluster) -> Cluster {
    debug_assert_eq!(left.hi(), right.lo);
    left.qubits.extend(right.qubits.into_iter().skip(1));
    left
}

struct Mb<R> {
    b: Builder<R>,
}

impl<R: Randomness> Mb<R> {
    /// Attempts a fusion and records its outcome.
    fn fuse(&mut self, source: QubitId, target: QubitId) -> bool {
        let ok = self.b.merge_succeeds();
        self.b.record(if ok {
            Event::MergeSuccess { source, target }
        } else {
            Event::MergeFailureErase {
                qubits: [source, target],
            }
        });
        ok
    }

    fn measure_z(&mut self, qubits: impl IntoIterator<Item = QubitId>) {
        for qubit in qubits {
            self.b.record(Event::MeasureZ { qubit });
        }
    }

    /// A single qubit carries no entanglement and is dropped.
    fn settle(&mut self, c: Cluster) -> Option<Cluster> {
        if c.qubits.len() > 1 {
            Some(c)
        } else {
            self.measure_z(c.qubits);
            None
        }
    }

    /// Removes the (already erased) last qubit.
    fn without_last(&mut self, mut c: Cluster) -> Option<Cluster> {
        c.qubits.pop_back();
        self.settle(c)
    }

    /// Removes the (already erased) first qubit.
    fn without_first(&mut self, mut c: Cluster) -> Option<Cluster> {
        c.qubits.pop_front();
        c.lo += 1;
        self.settle(c)
    }

    fn trim_right(&mut self, mut c: Cluster, n: u32) -> Option<Cluster> {
        for _ in 0..n {
            if c.qubits.len() <= 1 {
                break;
            }
            let q = c.qubits.pop_back().expect("nonempty");
            self.measure_z([q]);
        }
        self.settle(c)
    }

    fn trim_left(&mut self, mut c: Cluster, n: u32) -> Option<Cluster> {
        for _ in 0..n {
            if c.qubits.len() <= 1 {
                break;
            }
            let q = c.qubits.pop_front().expect("nonempty");
            c.lo += 1;
            self.measure_z([q]);
        }
        self.settle(c)
    }

    /// Builds a cluster over `s` segments starting at station `lo`. Returns
    /// the cluster and the rounds it took.
    fn build(&mut self, lo: u32, s: u32) -> Result<(Cluster, u64)> {
        if s == 1 {
            let (pair, rounds) = self.b.link(lo)?;
            return Ok((Cluster::pair(lo, pair), rounds));
        }
        let sl = s.div_ceil(2);
        let mut elapsed = 0;
        loop {
            let cp = self.b.checkpoint();
            let (left, tl) = self.build(lo, sl)?;
            let (right, tr) = self.build(lo + sl, s - sl)?;
            let t = tl.max(tr);
            self.b.advance(&left.qubits, t - tl);
            self.b.advance(&right.qubits, t - tr);
            if self.fuse(left.last(), right.first()) {
                return Ok((join(left, right), elapsed + t));
            }
            elapsed += t;
            if s > self.b.params.patch_min_segments {
                let left = self.without_last(left);
                let right = self.without_first(right);
                let (patched, dt) = self.patch(lo, lo + s, left, right)?;
                elapsed += dt;
                if let Some(cluster) = patched {
                    return Ok((cluster, elapsed));
                }
            }
            self.b.stats.restarts += 1;
            self.b.rollback(cp);
        }
    }

    /// Closes the gap between `left` and `right` inside the scope
    /// `lo..=hi`. `None` means the level has to start over; the rounds spent
    /// are returned either way.
    fn patch(
        &mut self,
        lo: u32,
        hi: u32,
        mut left: Option<Cluster>,
        mut right: Option<Cluster>,
    ) -> Result<(Option<Cluster>, u64)> {
        let scope = hi - lo;
        let mut g_temp = 0u32;
        let mut elapsed = 0;
        loop {
            if left.is_none() && right.is_none() {
                return Ok((None, elapsed));
            }
            let gap_lo = left.as_ref().map_or(lo, Cluster::hi);
            let gap_hi = right.as_ref().map_or(hi, |c| c.lo);
            let gap = gap_hi - gap_lo;
            self.b.stats.max_gap = self.b.stats.max_gap.max(gap);
            self.b.stats.patch_attempts += 1;

            let (block, dt) = self.build(gap_lo, gap)?;
            elapsed += dt;
            for c in left.iter().chain(right.iter()) {
                self.b.advance(&c.qubits, dt);
            }

            match (left.take(), right.take()) {
                (Some(l), Some(r)) => {
                    let ok_left = self.fuse(l.last(), block.first());
                    let ok_right = self.fuse(block.last(), r.first());
                    match (ok_left, ok_right) {
                        (true, true) => return Ok((Some(join(join(l, block), r)), elapsed)),
                        (true, false) => {
                            left = self.without_last(join(l, block));
                            right = self.without_first(r);
                            continue;
                        }
                        (false, true) => {
                            left = self.without_last(l);
                            right = self.without_first(join(block, r));
                            continue;
                        }
                        (false, false) => {
                            let n = block.qubits.len();
                            self.measure_z(block.qubits.range(1..n - 1).copied());
                            left = self.without_last(l);
                            right = self.without_first(r);
                        }
                    }
                }
                (None, Some(r)) => {
                    if self.fuse(block.last(), r.first()) {
                        return Ok((Some(join(block, r)), elapsed));
                    }
                    let n = block.qubits.len();
                    self.measure_z(block.qubits.range(..n - 1).copied());
                    right = self.without_first(r);
                }
                (Some(l), None) => {
                    if self.fuse(l.last(), block.first()) {
                        return Ok((Some(join(l, block)), elapsed));
                    }
                    self.measure_z(block.qubits.range(1..).copied());
                    left = self.without_last(l);
                }
                (None, None) => unreachable!("checked at the top of the loop"),
            }

            // the gap grows
            g_temp += 1;
            self.b.stats.growths += 1;
            if g_temp > self.b.params.growth_limit || scope <= 1 << (g_temp + 2) {
                return Ok((None, elapsed));
            }
            let target = 1u32 << (g_temp + 1);
            let gap_lo = left.as_ref().map_or(lo, Cluster::hi);
            let gap_hi = right.as_ref().map_or(hi, |c| c.lo);
            let extra = target.saturating_sub(gap_hi - gap_lo);
            let (to_left, to_right) = match (&left, &right) {
                (Some(_), Some(_)) => (extra / 2, extra - extra / 2),
                (Some(_), None) => (extra, 0),
                _ => (0, extra),
            };
            left = left.and_then(|c| self.trim_right(c, to_left));
            right = right.and_then(|c| self.trim_left(c, to_right));
        }
    }
}

fn build_cluster<R: Randomness>(segments: u32, params: &SamplerParams, rng: R) -> Result<(Mb<R>, Cluster, u64)> {
    if segments == 0 {
        return Err(Error::UnsupportedSegments(0));
    }
    let mut mb = Mb {
        b: Builder::new(rng, *params),
    };
    let (cluster, rounds) = mb.build(0, segments)?;
    Ok((mb, cluster, rounds))
}

/// One run of the merging-based protocol over `segments` segments, ending in
/// a Bell pair between the two end stations.
pub fn mb_sample<R: Randomness>(segments: u32, params: &SamplerParams, rng: R) -> Result<SampleOutcome> {
    let (mut mb, cluster, rounds) = build_cluster(segments, params, rng)?;
    let n = cluster.qubits.len();
    for &qubit in cluster.qubits.range(1..n - 1) {
        mb.b.record(Event::MeasureY { qubit });
    }
    Ok(mb.b.finish([cluster.first(), cluster.last()], rounds))
}

/// Like [`mb_sample`] but stops once the chain is a single linear cluster.
/// The returned qubits are the cluster from left to right; the trace's
/// outputs are its ends, so the trace itself is not complete.
pub fn mb_cluster<R: Randomness>(
    segments: u32,
    params: &SamplerParams,
    rng: R,
) -> Result<(SampleOutcome, Vec<QubitId>)> {
    let (mb, cluster, rounds) = build_cluster(segments, params, rng)?;
    let qubits: Vec<QubitId> = cluster.qubits.iter().copied().collect();
    Ok((mb.b.finish([cluster.first(), cluster.last()], rounds), qubits))
}
