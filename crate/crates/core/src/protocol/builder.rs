use crate::error::{Error, Result};
use crate::trace::{Event, MemoryLedger, OperationTrace, QubitId, QubitInfo};

use super::config::SamplerParams;
use super::randomness::Randomness;
use super::{SampleOutcome, SampleStats};

/// Where everything recorded after a point in time starts, so a failed
/// attempt can be dropped wholesale.
#[derive(Copy, Clone, Debug)]
pub(crate) struct Checkpoint {
    qubits: usize,
    events: usize,
}

/// Accumulates the trace and ledger of one sample.
pub(crate) struct Builder<R> {
    pub rng: R,
    pub params: SamplerParams,
    pub stats: SampleStats,
    qubits: Vec<QubitInfo>,
    pairs: Vec<[QubitId; 2]>,
    events: Vec<Event>,
    ledger: MemoryLedger,
    drawn: u64,
}

impl<R: Randomness> Builder<R> {
    pub fn new(rng: R, params: SamplerParams) -> Self {
        Builder {
            rng,
            params,
            stats: SampleStats::default(),
            qubits: Vec::new(),
            pairs: Vec::new(),
            events: Vec::new(),
            ledger: MemoryLedger::default(),
            drawn: 0,
        }
    }

    pub fn checkpoint(&self) -> Checkpoint {
        Checkpoint {
            qubits: self.qubits.len(),
            events: self.events.len(),
        }
    }

    pub fn rollback(&mut self, cp: Checkpoint) {
        self.qubits.truncate(cp.qubits);
        self.pairs.truncate(cp.qubits / 2);
        self.ledger.truncate(cp.qubits);
        self.events.truncate(cp.events);
    }

    fn allocate(&mut self, station: u32) -> QubitId {
        let id = self.ledger.push();
        self.qubits.push(QubitInfo { id, station });
        id
    }

    /// Waits for an elementary link over segment `lo..lo+1`.
    pub fn link(&mut self, lo: u32) -> Result<([QubitId; 2], u64)> {
        let rounds = self.rng.generation_rounds();
        self.drawn = self.drawn.saturating_add(rounds);
        if self.drawn > self.params.max_rounds {
            return Err(Error::RoundCapExceeded {
                cap: self.params.max_rounds,
            });
        }
        let pair = [self.allocate(lo), self.allocate(lo + 1)];
        self.pairs.push(pair);
        Ok((pair, rounds))
    }

    pub fn merge_succeeds(&mut self) -> bool {
        self.rng.merge_succeeds()
    }

    pub fn record(&mut self, event: Event) {
        self.events.push(event);
    }

    pub fn advance<'a>(&mut self, qubits: impl IntoIterator<Item = &'a QubitId>, rounds: u64) {
        self.ledger.advance(qubits, rounds as f64);
    }

    pub fn finish(self, outputs: [QubitId; 2], rounds: u64) -> SampleOutcome {
        SampleOutcome {
            rounds,
            trace: OperationTrace {
                qubits: self.qubits,
                initial_pairs: self.pairs,
                events: self.events,
                outputs,
            },
            ledger: self.ledger,
            stats: self.stats,
        }
    }
}
