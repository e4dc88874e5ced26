//! Operation traces and memory ledgers.
//!
//! A trace is the ordered record of everything a protocol run did to its
//! qubits: which Bell pairs were prepared, which merges succeeded, which
//! qubits were erased or measured, and which two qubits hold the final pair.
//! Qubit ids are dense indices `0..n`, so per-qubit data (stations, storage
//! times) is stored in plain vectors.
//!
//! JSON shape:
//!
//! ```json
//! {
//!   "qubits": [{"id": 0, "station": 0}, {"id": 1, "station": 1}],
//!   "initial_pairs": [[0, 1]],
//!   "events": [
//!     {"op": "merge_success", "source": 1, "target": 2},
//!     {"op": "merge_failure_erase", "qubits": [3, 4]},
//!     {"op": "measure_z", "qubit": 5},
//!     {"op": "measure_y", "qubit": 1}
//!   ],
//!   "outputs": [0, 9]
//! }
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QubitId(pub u32);

impl QubitId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for QubitId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "q{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QubitInfo {
    pub id: QubitId,
    pub station: u32,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Event {
    /// Type-I fusion: CNOT from `source` to `target`, then a Z measurement of
    /// `target`. The source survives and inherits the target's neighbours.
    MergeSuccess {
        source: QubitId,
        target: QubitId,
    },
    /// A failed fusion. Both qubits are lost, which acts like a Z measurement
    /// on each of them.
    MergeFailureErase {
        qubits: [QubitId; 2],
    },
    MeasureZ {
        qubit: QubitId,
    },
    MeasureY {
        qubit: QubitId,
    },
}

impl Event {
    /// Qubits referenced by the event.
    pub fn qubits(&self) -> impl Iterator<Item = QubitId> {
        let (a, b) = match *self {
            Event::MergeSuccess { source, target } => (source, Some(target)),
            Event::MergeFailureErase { qubits: [a, b] } => (a, Some(b)),
            Event::MeasureZ { qubit } | Event::MeasureY { qubit } => (qubit, None),
        };
        std::iter::once(a).chain(b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OperationTrace {
    pub qubits: Vec<QubitInfo>,
    pub initial_pairs: Vec<[QubitId; 2]>,
    pub events: Vec<Event>,
    pub outputs: [QubitId; 2],
}

impl OperationTrace {
    pub fn qubit_count(&self) -> usize {
        self.qubits.len()
    }

    pub fn contains(&self, q: QubitId) -> bool {
        q.index() < self.qubits.len()
    }

    pub fn station(&self, q: QubitId) -> Option<u32> {
        self.qubits.get(q.index()).map(|info| info.station)
    }

    /// Checks the static shape: ids are dense, every qubit sits in exactly one
    /// initial pair, and every event references known qubits. Whether the
    /// events can actually be replayed is decided by the graph replay.
    pub fn check_structure(&self) -> Result<()> {
        for (i, info) in self.qubits.iter().enumerate() {
            if info.id.index() != i {
                return Err(Error::inconsistent(format!(
                    "qubit ids must be dense, found {} at position {i}",
                    info.id
                )));
            }
        }
        let mut paired = vec![false; self.qubits.len()];
        for &[a, b] in &self.initial_pairs {
            if a == b {
                return Err(Error::inconsistent(format!("pair ({a}, {b}) is degenerate")));
            }
            for q in [a, b] {
                let slot = paired.get_mut(q.index()).ok_or(Error::UnknownQubit(q))?;
                if *slot {
                    return Err(Error::inconsistent(format!("{q} appears in two initial pairs")));
                }
                *slot = true;
            }
        }
        if let Some(i) = paired.iter().position(|p| !p) {
            return Err(Error::inconsistent(format!("q{i} is not part of any initial pair")));
        }
        for event in &self.events {
            for q in event.qubits() {
                if !self.contains(q) {
                    return Err(Error::UnknownQubit(q));
                }
            }
        }
        let [a, b] = self.outputs;
        for q in [a, b] {
            if !self.contains(q) {
                return Err(Error::UnknownQubit(q));
            }
        }
        if a == b {
            return Err(Error::inconsistent("the two outputs coincide"));
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let trace: OperationTrace = serde_json::from_str(text)?;
        trace.check_structure()?;
        Ok(trace)
    }
}

/// Accumulated storage time of every qubit, in protocol rounds.
///
/// Times stop accumulating once a qubit is measured or discarded; they are
/// converted to seconds only when noise is evaluated.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MemoryLedger {
    storage: Vec<f64>,
}

impl MemoryLedger {
    pub fn new(qubits: usize) -> Self {
        MemoryLedger {
            storage: vec![0.0; qubits],
        }
    }

    pub fn from_times(storage: Vec<f64>) -> Result<Self> {
        if let Some(t) = storage.iter().find(|t| !(t.is_finite() && **t >= 0.0)) {
            return Err(Error::param("storage time", format!("{t} is not a nonnegative time")));
        }
        Ok(MemoryLedger { storage })
    }

    pub fn len(&self) -> usize {
        self.storage.len()
    }

    pub fn is_empty(&self) -> bool {
        self.storage.is_empty()
    }

    pub fn get(&self, q: QubitId) -> Option<f64> {
        self.storage.get(q.index()).copied()
    }

    pub fn set(&mut self, q: QubitId, time: f64) {
        self.storage[q.index()] = time;
    }

    pub fn times(&self) -> &[f64] {
        &self.storage
    }

    pub fn push(&mut self) -> QubitId {
        self.storage.push(0.0);
        QubitId((self.storage.len() - 1) as u32)
    }

    pub fn truncate(&mut self, len: usize) {
        self.storage.truncate(len);
    }

    /// Advances every listed qubit by `dt` rounds.
    pub fn advance<'a>(&mut self, qubits: impl IntoIterator<Item = &'a QubitId>, dt: f64) {
        if dt == 0.0 {
            return;
        }
        for q in qubits {
            self.storage[q.index()] += dt;
        }
    }

    pub fn covers(&self, trace: &OperationTrace) -> Result<()> {
        if self.storage.len() < trace.qubit_count() {
            return Err(Error::inconsistent(format!(
                "ledger covers {} qubits but the trace has {}",
                self.storage.len(),
                trace.qubit_count()
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_pair_trace() -> OperationTrace {
        OperationTrace {
            qubits: (0..4)
                .map(|i| QubitInfo {
                    id: QubitId(i),
                    station: i.div_ceil(2),
                })
                .collect(),
            initial_pairs: vec![[QubitId(0), QubitId(1)], [QubitId(2), QubitId(3)]],
            events: vec![
                Event::MergeSuccess {
                    source: QubitId(1),
                    target: QubitId(2),
                },
                Event::MeasureY { qubit: QubitId(1) },
            ],
            outputs: [QubitId(0), QubitId(3)],
        }
    }

    #[test]
    fn json_shape_uses_string_op_names() {
        let trace = two_pair_trace();
        let text = trace.to_json().unwrap();
        assert!(text.contains("\"op\": \"merge_success\""));
        assert!(text.contains("\"op\": \"measure_y\""));
        let back = OperationTrace::from_json(&text).unwrap();
        assert_eq!(back, trace);
    }

    #[test]
    fn parses_failure_erase_events() {
        let event: Event = serde_json::from_str(r#"{"op": "merge_failure_erase", "qubits": [3, 4]}"#).unwrap();
        assert_eq!(
            event,
            Event::MergeFailureErase {
                qubits: [QubitId(3), QubitId(4)]
            }
        );
    }

    #[test]
    fn rejects_unpaired_and_doubly_paired_qubits() {
        let mut trace = two_pair_trace();
        trace.initial_pairs.pop();
        assert!(matches!(trace.check_structure(), Err(Error::InconsistentTrace(_))));

        let mut trace = two_pair_trace();
        trace.initial_pairs[1] = [QubitId(1), QubitId(3)];
        assert!(matches!(trace.check_structure(), Err(Error::InconsistentTrace(_))));
    }

    #[test]
    fn rejects_unknown_event_qubit() {
        let mut trace = two_pair_trace();
        trace.events.push(Event::MeasureZ { qubit: QubitId(9) });
        assert!(matches!(trace.check_structure(), Err(Error::UnknownQubit(QubitId(9)))));
    }

    #[test]
    fn ledger_rejects_negative_times() {
        assert!(MemoryLedger::from_times(vec![0.0, -1.0]).is_err());
        assert!(MemoryLedger::from_times(vec![0.0, f64::NAN]).is_err());
        let mut ledger = MemoryLedger::from_times(vec![1.0, 2.0]).unwrap();
        ledger.advance(&[QubitId(1)], 3.0);
        assert_eq!(ledger.times(), &[1.0, 5.0]);
    }
}
