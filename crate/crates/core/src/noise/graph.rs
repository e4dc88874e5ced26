//! Graph-state bookkeeping for trace replay.
//!
//! Every intermediate state of a protocol run is kept as an exact graph
//! state: measurement byproducts are undone by the standard local
//! corrections, so only the graph needs tracking.
//!
//! * Z measurement of `v`: delete `v`.
//! * Y measurement of `v`: local complementation at `v`, then delete `v`.
//! * Fusion of non-adjacent `s` and `t`: `s` takes `N(s) Δ N(t)`, `t` is
//!   deleted.

use crate::error::{Error, Result};
use crate::trace::{Event, OperationTrace, QubitId};

#[derive(Clone, Debug)]
pub struct GraphState {
    adjacency: Vec<Vec<u32>>,
    alive: Vec<bool>,
}

impl GraphState {
    /// The graph of all initial Bell pairs.
    pub fn from_pairs(trace: &OperationTrace) -> Result<Self> {
        trace.check_structure()?;
        let n = trace.qubit_count();
        let mut g = GraphState {
            adjacency: vec![Vec::new(); n],
            alive: vec![true; n],
        };
        for &[a, b] in &trace.initial_pairs {
            g.toggle_edge(a.0, b.0);
        }
        Ok(g)
    }

    /// Replays all events of `trace`.
    pub fn replay(trace: &OperationTrace) -> Result<Self> {
        let mut g = Self::from_pairs(trace)?;
        for event in &trace.events {
            g.apply(event)?;
        }
        Ok(g)
    }

    pub fn is_alive(&self, q: QubitId) -> bool {
        self.alive.get(q.index()).copied().unwrap_or(false)
    }

    pub fn alive_qubits(&self) -> impl Iterator<Item = QubitId> + '_ {
        self.alive
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| QubitId(i as u32))
    }

    pub fn neighbors(&self, q: QubitId) -> &[u32] {
        &self.adjacency[q.index()]
    }

    pub fn has_edge(&self, a: QubitId, b: QubitId) -> bool {
        self.adjacency[a.index()].contains(&b.0)
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub(crate) fn require_alive(&self, q: QubitId) -> Result<()> {
        if q.index() >= self.alive.len() {
            return Err(Error::UnknownQubit(q));
        }
        if !self.alive[q.index()] {
            return Err(Error::inconsistent(format!("{q} is used after it was consumed")));
        }
        Ok(())
    }

    /// Validates that `event` can be applied to the current graph.
    pub(crate) fn check(&self, event: &Event) -> Result<()> {
        match *event {
            Event::MergeSuccess { source, target } => {
                self.require_alive(source)?;
                self.require_alive(target)?;
                if source == target {
                    return Err(Error::inconsistent(format!("{source} merged with itself")));
                }
                if self.has_edge(source, target) {
                    return Err(Error::inconsistent(format!(
                        "merge of adjacent qubits {source} and {target}"
                    )));
                }
            }
            Event::MergeFailureErase { qubits: [a, b] } => {
                self.require_alive(a)?;
                self.require_alive(b)?;
                if a == b {
                    return Err(Error::inconsistent(format!("{a} erased twice")));
                }
            }
            Event::MeasureZ { qubit } | Event::MeasureY { qubit } => self.require_alive(qubit)?,
        }
        Ok(())
    }

    pub fn apply(&mut self, event: &Event) -> Result<()> {
        self.check(event)?;
        match *event {
            Event::MergeSuccess { source, target } => self.fuse(source, target),
            Event::MergeFailureErase { qubits: [a, b] } => {
                self.remove(a);
                self.remove(b);
            }
            Event::MeasureZ { qubit } => self.remove(qubit),
            Event::MeasureY { qubit } => {
                self.local_complement(qubit);
                self.remove(qubit);
            }
        }
        Ok(())
    }

    pub(crate) fn toggle_edge(&mut self, a: u32, b: u32) {
        let row = &mut self.adjacency[a as usize];
        if let Some(i) = row.iter().position(|&w| w == b) {
            row.swap_remove(i);
            let col = &mut self.adjacency[b as usize];
            let j = col.iter().position(|&w| w == a).expect("adjacency is symmetric");
            col.swap_remove(j);
        } else {
            row.push(b);
            self.adjacency[b as usize].push(a);
        }
    }

    pub(crate) fn remove(&mut self, q: QubitId) {
        let neighbors = std::mem::take(&mut self.adjacency[q.index()]);
        for w in neighbors {
            let row = &mut self.adjacency[w as usize];
            let i = row.iter().position(|&x| x == q.0).expect("adjacency is symmetric");
            row.swap_remove(i);
        }
        self.alive[q.index()] = false;
    }

    pub(crate) fn local_complement(&mut self, q: QubitId) {
        let n = self.adjacency[q.index()].clone();
        for (i, &u) in n.iter().enumerate() {
            for &w in &n[i + 1..] {
                self.toggle_edge(u, w);
            }
        }
    }

    pub(crate) fn fuse(&mut self, source: QubitId, target: QubitId) {
        let inherited = self.adjacency[target.index()].clone();
        self.remove(target);
        for w in inherited {
            self.toggle_edge(source.0, w);
        }
    }

    /// True when the live qubits form a simple path visiting `order` in
    /// sequence.
    pub fn is_path(&self, order: &[QubitId]) -> bool {
        if self.alive_qubits().count() != order.len() {
            return false;
        }
        if self.edge_count() + 1 != order.len() {
            return false;
        }
        order.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }
}
