use serde::{Deserialize, Serialize};

use super::dephasing::MemoryModel;
use super::graph::GraphState;
use super::pauli::{Pauli, PauliString};
use crate::error::{Error, Result};
use crate::trace::{Event, MemoryLedger, OperationTrace, QubitId};

/// Probabilities of the final pair over the Bell basis, in the order
/// `[Φ+, Ψ+, Φ-, Ψ-]`, after the Hadamard on the right output that takes the
/// graph-basis pair to the Bell basis.
///
/// Index `2·a + b` is the weight of the error class `Z_left^a Z_right^b`
/// acting on the noiseless graph-basis pair.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellDiagonalState {
    probs: [f64; 4],
}

impl BellDiagonalState {
    pub const PERFECT: BellDiagonalState = BellDiagonalState {
        probs: [1.0, 0.0, 0.0, 0.0],
    };

    pub fn new(probs: [f64; 4]) -> Result<Self> {
        if probs.iter().any(|p| !(*p >= -1e-12)) {
            return Err(Error::param("probs", format!("{probs:?} has a negative entry")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::param("probs", format!("{probs:?} sums to {total}")));
        }
        Ok(BellDiagonalState { probs })
    }

    pub fn probs(&self) -> [f64; 4] {
        self.probs
    }

    pub fn fidelity(&self) -> f64 {
        self.probs[0]
    }

    pub fn max_abs_diff(&self, other: &BellDiagonalState) -> f64 {
        self.probs
            .iter()
            .zip(other.probs.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// `(e_x, e_z)`: X-basis and Z-basis error rates of the pair.
pub fn qber(state: &BellDiagonalState) -> (f64, f64) {
    let [_, psi_plus, phi_minus, psi_minus] = state.probs;
    (phi_minus + psi_minus, psi_plus + psi_minus)
}

/// Where a single σz error ends up after the whole trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ZImage {
    /// The error leaves the output pair untouched.
    Absorbed,
    /// Canonical representative on the two outputs, reduced to σz letters
    /// with the pair's stabilizers `X⊗Z` and `Z⊗X`.
    Output(PauliString),
}

/// Maps a σz on `q`, present from the start of the run, to the output pair.
pub fn propagate_z(trace: &OperationTrace, q: QubitId) -> Result<ZImage> {
    if !trace.contains(q) {
        return Err(Error::UnknownQubit(q));
    }
    let classes = output_classes(trace)?;
    let class = classes[q.index()];
    if class == 0 {
        return Ok(ZImage::Absorbed);
    }
    let [left, right] = trace.outputs;
    let mut pauli = PauliString::identity();
    if class & 2 != 0 {
        pauli.set(left, Pauli::Z);
    }
    if class & 1 != 0 {
        pauli.set(right, Pauli::Z);
    }
    Ok(ZImage::Output(pauli))
}

/// Final Bell-diagonal state for storage times taken from `ledger`.
pub fn output_state(trace: &OperationTrace, ledger: &MemoryLedger, memory: &MemoryModel) -> Result<BellDiagonalState> {
    ledger.covers(trace)?;
    let lambdas: Vec<f64> = ledger.times()[..trace.qubit_count()]
        .iter()
        .map(|&t| memory.lambda(t))
        .collect();
    output_state_from_lambdas(trace, &lambdas)
}

/// Final Bell-diagonal state when qubit `i` suffers a σz flip with
/// probability `lambdas[i]`.
pub fn output_state_from_lambdas(trace: &OperationTrace, lambdas: &[f64]) -> Result<BellDiagonalState> {
    if lambdas.len() < trace.qubit_count() {
        return Err(Error::inconsistent(format!(
            "{} flip probabilities for {} qubits",
            lambdas.len(),
            trace.qubit_count()
        )));
    }
    if let Some(l) = lambdas.iter().find(|l| !(0.0..=1.0).contains(*l)) {
        return Err(Error::param("lambda", format!("{l} is not a probability")));
    }
    let classes = output_classes(trace)?;
    let mut dist = [1.0, 0.0, 0.0, 0.0];
    for (&class, &lambda) in classes.iter().zip(lambdas) {
        if class == 0 || lambda == 0.0 {
            continue;
        }
        let c = class as usize;
        let prev = dist;
        for (j, slot) in dist.iter_mut().enumerate() {
            *slot = (1.0 - lambda) * prev[j] + lambda * prev[j ^ c];
        }
    }
    Ok(BellDiagonalState { probs: dist })
}

/// Error class (`2·left + right`) of a σz on every qubit of the trace.
pub(crate) fn output_classes(trace: &OperationTrace) -> Result<Vec<u8>> {
    let mut prop = Propagation::start(trace)?;
    for event in &trace.events {
        prop.apply(event)?;
    }
    prop.finish(trace.outputs)
}

/// Pauli frames for every initial single-qubit σz error at once, stored
/// column-wise: row `q` of `x` holds, as a bitset over error sources, which
/// frames currently carry an X component on qubit `q`.
struct Propagation {
    graph: GraphState,
    words: usize,
    x: Vec<u64>,
    z: Vec<u64>,
    scratch: Vec<u64>,
}

impl Propagation {
    fn start(trace: &OperationTrace) -> Result<Self> {
        let graph = GraphState::from_pairs(trace)?;
        let n = trace.qubit_count();
        let words = n.div_ceil(64).max(1);
        let mut z = vec![0u64; n * words];
        for q in 0..n {
            z[q * words + q / 64] |= 1 << (q % 64);
        }
        Ok(Propagation {
            graph,
            words,
            x: vec![0u64; n * words],
            z,
            scratch: vec![0u64; words],
        })
    }

    #[inline]
    fn span(&self, q: u32) -> std::ops::Range<usize> {
        let start = q as usize * self.words;
        start..start + self.words
    }

    fn xor_within(rows: &mut [u64], words: usize, dst: u32, src: u32) {
        let (d, s) = (dst as usize * words, src as usize * words);
        for w in 0..words {
            rows[d + w] ^= rows[s + w];
        }
    }

    /// Multiplies every frame in `scratch` by `Z` on each neighbour of `q`.
    fn spread_z_from_scratch(&mut self, q: QubitId) {
        for &w in self.graph.neighbors(q) {
            let span = w as usize * self.words..(w as usize + 1) * self.words;
            for (dst, src) in self.z[span].iter_mut().zip(&self.scratch) {
                *dst ^= *src;
            }
        }
    }

    fn clear(&mut self, q: QubitId) {
        let span = self.span(q.0);
        self.x[span.clone()].fill(0);
        self.z[span].fill(0);
    }

    /// Z measurement of `q` on the current graph state. Frames that
    /// anticommute with `Z_q` are multiplied by the stabilizer
    /// `X_q Z_N(q)`, which is exactly the outcome-flip byproduct.
    fn measure_z(&mut self, q: QubitId) {
        let span = self.span(q.0);
        self.scratch.copy_from_slice(&self.x[span]);
        self.spread_z_from_scratch(q);
        self.clear(q);
        self.graph.remove(q);
    }

    fn apply(&mut self, event: &Event) -> Result<()> {
        self.graph.check(event)?;
        let words = self.words;
        match *event {
            Event::MergeSuccess { source, target } => {
                // CNOT source -> target: X_s -> X_s X_t, Z_t -> Z_s Z_t
                Self::xor_within(&mut self.x, words, target.0, source.0);
                Self::xor_within(&mut self.z, words, source.0, target.0);
                // the target's stabilizer X_t Z_N(t) survives the CNOT unchanged
                let inherited: Vec<u32> = self.graph.neighbors(target).to_vec();
                let span = self.span(target.0);
                self.scratch.copy_from_slice(&self.x[span]);
                self.spread_z_from_scratch(target);
                self.clear(target);
                self.graph.remove(target);
                for w in inherited {
                    self.graph.toggle_edge(source.0, w);
                }
            }
            Event::MergeFailureErase { qubits: [a, b] } => {
                self.measure_z(a);
                self.measure_z(b);
            }
            Event::MeasureZ { qubit } => self.measure_z(qubit),
            Event::MeasureY { qubit } => {
                let span = self.span(qubit.0);
                for (w, s) in self.scratch.iter_mut().enumerate() {
                    *s = self.x[span.start + w] ^ self.z[span.start + w];
                }
                self.spread_z_from_scratch(qubit);
                // the graph-restoring correction sqrt(±iZ) on each neighbour
                // maps X <-> Y and leaves Z alone
                let neighbors: Vec<u32> = self.graph.neighbors(qubit).to_vec();
                for w in neighbors {
                    let start = w as usize * words;
                    for i in start..start + words {
                        self.z[i] ^= self.x[i];
                    }
                }
                self.clear(qubit);
                self.graph.local_complement(qubit);
                self.graph.remove(qubit);
            }
        }
        Ok(())
    }

    fn finish(self, outputs: [QubitId; 2]) -> Result<Vec<u8>> {
        let [a, b] = outputs;
        let alive: Vec<QubitId> = self.graph.alive_qubits().collect();
        if alive.len() != 2 || !alive.contains(&a) || !alive.contains(&b) {
            return Err(Error::inconsistent(format!(
                "replay leaves {alive:?} alive, expected exactly the outputs {a} and {b}"
            )));
        }
        if !self.graph.has_edge(a, b) {
            return Err(Error::inconsistent("the output qubits are not entangled"));
        }
        let n = self.x.len() / self.words;
        let (sa, sb) = (self.span(a.0).start, self.span(b.0).start);
        let bit = |rows: &[u64], start: usize, i: usize| (rows[start + i / 64] >> (i % 64)) & 1;
        Ok((0..n)
            .map(|i| {
                let left = bit(&self.z, sa, i) ^ bit(&self.x, sb, i);
                let right = bit(&self.z, sb, i) ^ bit(&self.x, sa, i);
                (2 * left + right) as u8
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trace::QubitInfo;
    use approx::assert_abs_diff_eq;

    fn pairs(count: u32) -> OperationTrace {
        let n = 2 * count;
        OperationTrace {
            qubits: (0..n)
                .map(|i| QubitInfo {
                    id: QubitId(i),
                    station: i.div_ceil(2),
                })
                .collect(),
            initial_pairs: (0..count).map(|i| [QubitId(2 * i), QubitId(2 * i + 1)]).collect(),
            events: Vec::new(),
            outputs: [QubitId(0), QubitId(n - 1)],
        }
    }

    fn z_on(qs: &[u32]) -> ZImage {
        let mut p = PauliString::identity();
        for &q in qs {
            p.set(QubitId(q), Pauli::Z);
        }
        ZImage::Output(p)
    }

    #[test]
    fn untouched_output_keeps_its_error() {
        let trace = pairs(1);
        assert_eq!(propagate_z(&trace, QubitId(0)).unwrap(), z_on(&[0]));
        assert_eq!(propagate_z(&trace, QubitId(1)).unwrap(), z_on(&[1]));
    }

    #[test]
    fn merge_target_error_moves_to_source() {
        // a=0, b=1, c=2, d=3; merge b into c, outputs a and d after Y on b
        let mut trace = pairs(2);
        trace.events.push(Event::MergeSuccess {
            source: QubitId(1),
            target: QubitId(2),
        });
        trace.events.push(Event::MeasureY { qubit: QubitId(1) });
        let b = propagate_z(&trace, QubitId(1)).unwrap();
        let c = propagate_z(&trace, QubitId(2)).unwrap();
        assert_eq!(b, c);
        assert_ne!(b, ZImage::Absorbed);
    }

    #[test]
    fn erased_qubits_are_absorbed() {
        // three pairs; the middle one is erased by failed merges on both sides
        // and the outer pairs are then joined
        let mut trace = pairs(3);
        trace.events.push(Event::MergeFailureErase {
            qubits: [QubitId(1), QubitId(2)],
        });
        trace.events.push(Event::MeasureZ { qubit: QubitId(3) });
        trace.events.push(Event::MeasureZ { qubit: QubitId(0) });
        trace.outputs = [QubitId(4), QubitId(5)];
        for q in 0..4 {
            assert_eq!(propagate_z(&trace, QubitId(q)).unwrap(), ZImage::Absorbed);
        }
    }

    #[test]
    fn unknown_qubit_is_an_error() {
        assert!(matches!(
            propagate_z(&pairs(1), QubitId(7)),
            Err(Error::UnknownQubit(QubitId(7)))
        ));
    }

    #[test]
    fn noiseless_pair_is_perfect() {
        let trace = pairs(1);
        let state = output_state(&trace, &MemoryLedger::new(2), &MemoryModel::seconds(1.0).unwrap()).unwrap();
        assert_eq!(state, BellDiagonalState::PERFECT);
        assert_eq!(qber(&state), (0.0, 0.0));
    }

    #[test]
    fn single_dephased_output() {
        let trace = pairs(1);
        let state = output_state_from_lambdas(&trace, &[0.3, 0.0]).unwrap();
        let p = state.probs();
        assert_abs_diff_eq!(p[0], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(p[2], 0.3, epsilon = 1e-15);
        let (ex, ez) = qber(&state);
        assert_abs_diff_eq!(ex, 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(ez, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn maximally_mixed_qber() {
        let s = BellDiagonalState::new([0.25; 4]).unwrap();
        assert_eq!(qber(&s), (0.5, 0.5));
    }

    #[test]
    fn rejects_invalid_probabilities() {
        assert!(BellDiagonalState::new([0.5, 0.5, 0.1, 0.0]).is_err());
        assert!(BellDiagonalState::new([1.1, -0.1, 0.0, 0.0]).is_err());
        assert!(output_state_from_lambdas(&pairs(1), &[-0.1, 0.0]).is_err());
    }

    #[test]
    fn leftover_qubits_make_the_trace_inconsistent() {
        let mut trace = pairs(2);
        trace.outputs = [QubitId(0), QubitId(3)];
        assert!(matches!(output_classes(&trace), Err(Error::InconsistentTrace(_))));
    }
}
