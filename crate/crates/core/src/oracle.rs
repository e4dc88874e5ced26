//! Dense density-matrix simulation of small traces.
//!
//! This is the reference the noise engine is checked against. It prepares
//! every initial pair as the graph-basis Bell state `CZ|++⟩`, applies the
//! dephasing channels exactly, and replays each event with explicit CNOTs,
//! projectors and outcome-dependent correction unitaries, averaging over
//! outcomes. Pairs are tensored in lazily and measured qubits are traced out
//! immediately, so the working dimension stays well below `2^n` for
//! protocol-shaped traces.
//!
//! Corrections restore the exact graph state after every measurement:
//!
//! | measurement | outcome +1 | outcome −1 |
//! |-------------|------------|------------|
//! | Z on `v` (also the fusion target) | none | `Z` on each neighbour |
//! | Y on `v` | `S†` on each neighbour | `S` on each neighbour |

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, Matrix4};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::noise::{BellDiagonalState, MemoryModel};
use crate::trace::{Event, MemoryLedger, OperationTrace, QubitId};

/// Largest trace the oracle accepts.
pub const MAX_ORACLE_QUBITS: usize = 12;

const BELL_RESIDUE_TOLERANCE: f64 = 1e-9;

type Gate = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);
const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

const PAULI_Z: Gate = [[ONE, ZERO], [ZERO, Complex64::new(-1.0, 0.0)]];
const PHASE: Gate = [[ONE, ZERO], [ZERO, I]];
const PHASE_DAG: Gate = [[ONE, ZERO], [ZERO, Complex64::new(0.0, -1.0)]];
const HADAMARD: Gate = [
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(FRAC_1_SQRT_2, 0.0)],
    [Complex64::new(FRAC_1_SQRT_2, 0.0), Complex64::new(-FRAC_1_SQRT_2, 0.0)],
];

/// Density matrix over an ordered list of qubits. Qubit `qubits[k]` is bit
/// `k` of the basis index.
#[derive(Clone, Debug)]
pub struct DenseState {
    qubits: Vec<QubitId>,
    dim: usize,
    rho: Vec<Complex64>,
}

impl DenseState {
    fn scalar() -> Self {
        DenseState {
            qubits: Vec::new(),
            dim: 1,
            rho: vec![ONE],
        }
    }

    pub fn qubits(&self) -> &[QubitId] {
        &self.qubits
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.rho[row * self.dim + col]
    }

    pub fn to_matrix(&self) -> DMatrix<Complex64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.rho)
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self.entry(i, i)).sum()
    }

    /// Largest deviation from unit trace, Hermiticity and positivity.
    pub fn physicality_defects(&self) -> (f64, f64, f64) {
        let trace_err = (self.trace() - ONE).norm();
        let mut herm_err: f64 = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                herm_err = herm_err.max((self.entry(r, c) - self.entry(c, r).conj()).norm());
            }
        }
        let m = self.to_matrix();
        let hermitian = (&m + m.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = hermitian
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        (trace_err, herm_err, (-min_eig).max(0.0))
    }

    fn position(&self, q: QubitId) -> Option<usize> {
        self.qubits.iter().position(|&x| x == q)
    }

    fn tensor(&mut self, qubits: [QubitId; 2], block: &[Complex64; 16]) {
        let n = self.qubits.len();
        let new_dim = self.dim * 4;
        let mut rho = vec![ZERO; new_dim * new_dim];
        for r_hi in 0..4 {
            for c_hi in 0..4 {
                let b = block[r_hi * 4 + c_hi];
                if b == ZERO {
                    continue;
                }
                for r in 0..self.dim {
                    let row = (r_hi << n) | r;
                    for c in 0..self.dim {
                        rho[row * new_dim + ((c_hi << n) | c)] = self.rho[r * self.dim + c] * b;
                    }
                }
            }
        }
        self.qubits.extend(qubits);
        self.dim = new_dim;
        self.rho = rho;
    }

    fn apply_gate(&mut self, pos: usize, u: &Gate) {
        let bit = 1usize << pos;
        let d = self.dim;
        for r0 in (0..d).filter(|r| r & bit == 0) {
            let r1 = r0 | bit;
            for c in 0..d {
                let (a, b) = (self.rho[r0 * d + c], self.rho[r1 * d + c]);
                self.rho[r0 * d + c] = u[0][0] * a + u[0][1] * b;
                self.rho[r1 * d + c] = u[1][0] * a + u[1][1] * b;
            }
        }
        for r in 0..d {
            for c0 in (0..d).filter(|c| c & bit == 0) {
                let c1 = c0 | bit;
                let (a, b) = (self.rho[r * d + c0], self.rho[r * d + c1]);
                self.rho[r * d + c0] = a * u[0][0].conj() + b * u[0][1].conj();
                self.rho[r * d + c1] = a * u[1][0].conj() + b * u[1][1].conj();
            }
        }
    }

    fn apply_cnot(&mut self, control: usize, target: usize) {
        let flip = |i: usize| i ^ (((i >> control) & 1) << target);
        let d = self.dim;
        let mut rho = vec![ZERO; d * d];
        for r in 0..d {
            for c in 0..d {
                rho[flip(r) * d + flip(c)] = self.rho[r * d + c];
            }
        }
        self.rho = rho;
    }

    fn dephase(&mut self, pos: usize, lambda: f64) {
        let factor = 1.0 - 2.0 * lambda;
        let d = self.dim;
        for r in 0..d {
            for c in 0..d {
                if ((r ^ c) >> pos) & 1 == 1 {
                    self.rho[r * d + c] *= factor;
                }
            }
        }
    }

    /// Projects qubit `pos` onto each basis vector, applies that branch's
    /// corrections to the remaining qubits, sums the branches and drops the
    /// measured qubit.
    fn measure(&mut self, pos: usize, basis: [[Complex64; 2]; 2], corrections: [&[(QubitId, Gate)]; 2]) {
        let d = self.dim;
        let half = d / 2;
        let low = (1usize << pos) - 1;
        let insert = |i: usize, b: usize| ((i & !low) << 1) | (b << pos) | (i & low);
        let measured = self.qubits.remove(pos);
        let mut total = vec![ZERO; half * half];
        for (v, fixes) in basis.iter().zip(corrections) {
            let mut branch = DenseState {
                qubits: self.qubits.clone(),
                dim: half,
                rho: vec![ZERO; half * half],
            };
            for r in 0..half {
                for c in 0..half {
                    let mut acc = ZERO;
                    for i in 0..2 {
                        for j in 0..2 {
                            acc += v[i].conj() * v[j] * self.rho[insert(r, i) * d + insert(c, j)];
                        }
                    }
                    branch.rho[r * half + c] = acc;
                }
            }
            for (q, gate) in fixes {
                let p = branch.position(*q).unwrap_or_else(|| {
                    panic!("correction on {q} which is not in the state after measuring {measured}")
                });
                branch.apply_gate(p, gate);
            }
            for (t, b) in total.iter_mut().zip(&branch.rho) {
                *t += *b;
            }
        }
        self.dim = half;
        self.rho = total;
    }

    /// `⟨G|ρ|G⟩` for the graph state on this state's qubits with the given
    /// edges (pairs of qubit ids; edges touching other qubits are ignored).
    pub fn graph_fidelity(&self, edges: &[(QubitId, QubitId)]) -> f64 {
        let local: Vec<(usize, usize)> = edges
            .iter()
            .filter_map(|&(a, b)| Some((self.position(a)?, self.position(b)?)))
            .collect();
        let amp = 1.0 / (self.dim as f64).sqrt();
        let psi: Vec<f64> = (0..self.dim)
            .map(|x| {
                let parity = local.iter().filter(|&&(a, b)| (x >> a) & (x >> b) & 1 == 1).count();
                if parity % 2 == 0 {
                    amp
                } else {
                    -amp
                }
            })
            .collect();
        let mut f = ZERO;
        for r in 0..self.dim {
            for c in 0..self.dim {
                f += psi[r] * self.rho[r * self.dim + c] * psi[c];
            }
        }
        f.re
    }
}

/// Event-by-event dense replay. Exposed so tests can inspect intermediate
/// states.
pub struct DenseSimulator<'a> {
    trace: &'a OperationTrace,
    lambdas: &'a [f64],
    state: DenseState,
    partner: Vec<QubitId>,
    joined: Vec<bool>,
    consumed: Vec<bool>,
    adjacency: BTreeMap<QubitId, BTreeSet<QubitId>>,
}

impl<'a> DenseSimulator<'a> {
    pub fn new(trace: &'a OperationTrace, lambdas: &'a [f64]) -> Result<Self> {
        trace.check_structure()?;
        let n = trace.qubit_count();
        if n > MAX_ORACLE_QUBITS {
            return Err(Error::TooManyQubits {
                qubits: n,
                cap: MAX_ORACLE_QUBITS,
            });
        }
        if lambdas.len() < n {
            return Err(Error::inconsistent(format!(
                "{} flip probabilities for {n} qubits",
                lambdas.len()
            )));
        }
        let mut partner = vec![QubitId(0); n];
        for &[a, b] in &trace.initial_pairs {
            partner[a.index()] = b;
            partner[b.index()] = a;
        }
        Ok(DenseSimulator {
            trace,
            lambdas,
            state: DenseState::scalar(),
            partner,
            joined: vec![false; n],
            consumed: vec![false; n],
            adjacency: BTreeMap::new(),
        })
    }

    pub fn state(&self) -> &DenseState {
        &self.state
    }

    /// Edges of the graph state the simulator believes it holds.
    pub fn edges(&self) -> Vec<(QubitId, QubitId)> {
        self.adjacency
            .iter()
            .flat_map(|(&a, ns)| ns.iter().filter(move |&&b| a < b).map(move |&b| (a, b)))
            .collect()
    }

    fn join(&mut self, q: QubitId) {
        if self.joined[q.index()] {
            return;
        }
        let p = self.partner[q.index()];
        let (a, b) = if q < p { (q, p) } else { (p, q) };
        // CZ|++> with a as the low bit: amplitudes (1, 1, 1, -1)/2
        let amp = [0.5, 0.5, 0.5, -0.5];
        let mut block = [ZERO; 16];
        for r in 0..4 {
            for c in 0..4 {
                block[r * 4 + c] = Complex64::new(amp[r] * amp[c], 0.0);
            }
        }
        self.state.tensor([a, b], &block);
        let n = self.state.qubits.len();
        self.state.dephase(n - 2, self.lambdas[a.index()]);
        self.state.dephase(n - 1, self.lambdas[b.index()]);
        self.joined[a.index()] = true;
        self.joined[b.index()] = true;
        self.adjacency.entry(a).or_default().insert(b);
        self.adjacency.entry(b).or_default().insert(a);
    }

    fn live(&mut self, q: QubitId) -> Result<usize> {
        if self.consumed[q.index()] {
            return Err(Error::inconsistent(format!("{q} is used after it was consumed")));
        }
        self.join(q);
        Ok(self.state.position(q).expect("joined qubits are in the state"))
    }

    fn neighbours(&self, q: QubitId) -> Vec<QubitId> {
        self.adjacency
            .get(&q)
            .map(|s| s.iter().copied().collect())
            .unwrap_or_default()
    }

    fn drop_vertex(&mut self, q: QubitId) {
        if let Some(ns) = self.adjacency.remove(&q) {
            for w in ns {
                if let Some(set) = self.adjacency.get_mut(&w) {
                    set.remove(&q);
                }
            }
        }
        self.consumed[q.index()] = true;
    }

    fn toggle(&mut self, a: QubitId, b: QubitId) {
        let set = self.adjacency.entry(a).or_default();
        if !set.remove(&b) {
            set.insert(b);
            self.adjacency.entry(b).or_default().insert(a);
        } else if let Some(other) = self.adjacency.get_mut(&b) {
            other.remove(&a);
        }
    }

    fn measure_z(&mut self, q: QubitId) -> Result<()> {
        let pos = self.live(q)?;
        let fixes: Vec<(QubitId, Gate)> = self.neighbours(q).into_iter().map(|w| (w, PAULI_Z)).collect();
        let basis = [[ONE, ZERO], [ZERO, ONE]];
        self.state.measure(pos, basis, [&[], &fixes]);
        self.drop_vertex(q);
        Ok(())
    }

    pub fn apply(&mut self, event: &Event) -> Result<()> {
        match *event {
            Event::MergeSuccess { source, target } => {
                if source == target {
                    return Err(Error::inconsistent(format!("{source} merged with itself")));
                }
                let _ = self.live(source)?;
                let _ = self.live(target)?;
                if self.neighbours(source).contains(&target) {
                    return Err(Error::inconsistent(format!("merge of adjacent {source} and {target}")));
                }
                let s = self.state.position(source).expect("joined");
                let t = self.state.position(target).expect("joined");
                self.state.apply_cnot(s, t);
                let inherited = self.neighbours(target);
                self.measure_z(target)?;
                for w in inherited {
                    self.toggle(source, w);
                }
            }
            Event::MergeFailureErase { qubits: [a, b] } => {
                if a == b {
                    return Err(Error::inconsistent(format!("{a} erased twice")));
                }
                // both must be live before either is measured
                let _ = self.live(a)?;
                let _ = self.live(b)?;
                self.measure_z(a)?;
                self.measure_z(b)?;
            }
            Event::MeasureZ { qubit } => self.measure_z(qubit)?,
            Event::MeasureY { qubit } => {
                let pos = self.live(qubit)?;
                let ns = self.neighbours(qubit);
                let plus: Vec<(QubitId, Gate)> = ns.iter().map(|&w| (w, PHASE_DAG)).collect();
                let minus: Vec<(QubitId, Gate)> = ns.iter().map(|&w| (w, PHASE)).collect();
                let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
                let basis = [[h, h * I], [h, -h * I]];
                self.state.measure(pos, basis, [&plus, &minus]);
                for (i, &u) in ns.iter().enumerate() {
                    for &w in &ns[i + 1..] {
                        self.toggle(u, w);
                    }
                }
                self.drop_vertex(qubit);
            }
        }
        Ok(())
    }

    /// Output pair as a 4×4 density matrix in the basis `|left right⟩`
    /// (index `2·left + right`), after the Hadamard on the right output.
    pub fn finish(mut self) -> Result<Matrix4<Complex64>> {
        let [left, right] = self.trace.outputs;
        for q in [left, right] {
            self.live(q)?;
        }
        let unjoined: Vec<usize> = (0..self.joined.len()).filter(|&i| !self.joined[i]).collect();
        if !unjoined.is_empty() {
            return Err(Error::inconsistent(format!("qubits {unjoined:?} are never used")));
        }
        if self.state.qubits.len() != 2 {
            return Err(Error::inconsistent(format!(
                "{} qubits remain, expected the two outputs",
                self.state.qubits.len()
            )));
        }
        let r = self.state.position(right).expect("live");
        self.state.apply_gate(r, &HADAMARD);
        let l = self.state.position(left).expect("live");
        let big_endian = |i: usize| {
            let lb = (i >> 1) & 1;
            let rb = i & 1;
            (lb << l) | (rb << r)
        };
        Ok(Matrix4::from_fn(|i, j| self.state.entry(big_endian(i), big_endian(j))))
    }
}

/// Dense replay with storage times from `ledger`.
pub fn simulate_trace_dense(
    trace: &OperationTrace,
    ledger: &MemoryLedger,
    memory: &MemoryModel,
) -> Result<Matrix4<Complex64>> {
    ledger.covers(trace)?;
    let lambdas: Vec<f64> = ledger.times()[..trace.qubit_count()]
        .iter()
        .map(|&t| memory.lambda(t))
        .collect();
    simulate_with_lambdas(trace, &lambdas)
}

pub fn simulate_with_lambdas(trace: &OperationTrace, lambdas: &[f64]) -> Result<Matrix4<Complex64>> {
    let mut sim = DenseSimulator::new(trace, lambdas)?;
    for event in &trace.events {
        sim.apply(event)?;
    }
    sim.finish()
}

fn bell_basis() -> [[Complex64; 4]; 4] {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    [
        [h, ZERO, ZERO, h],
        [ZERO, h, h, ZERO],
        [h, ZERO, ZERO, -h],
        [ZERO, h, -h, ZERO],
    ]
}

/// Bell-basis weights `[Φ+, Ψ+, Φ-, Ψ-]` of a two-qubit state.
pub fn bell_diagonal_of(rho: &Matrix4<Complex64>) -> Result<BellDiagonalState> {
    let basis = bell_basis();
    let element = |a: &[Complex64; 4], b: &[Complex64; 4]| {
        let mut acc = ZERO;
        for r in 0..4 {
            for c in 0..4 {
                acc += a[r].conj() * rho[(r, c)] * b[c];
            }
        }
        acc
    };
    let mut residue: f64 = 0.0;
    let mut probs = [0.0; 4];
    for i in 0..4 {
        for j in 0..4 {
            let e = element(&basis[i], &basis[j]);
            if i == j {
                residue = residue.max(e.im.abs());
                probs[i] = e.re;
            } else {
                residue = residue.max(e.norm());
            }
        }
    }
    if residue > BELL_RESIDUE_TOLERANCE {
        return Err(Error::NotBellDiagonal(residue));
    }
    BellDiagonalState::new(probs)
}

/// Largest off-diagonal magnitude in the Bell basis.
pub fn bell_residue(rho: &Matrix4<Complex64>) -> f64 {
    match bell_diagonal_of(rho) {
        Err(Error::NotBellDiagonal(r)) => r,
        _ => {
            let basis = bell_basis();
            let mut residue: f64 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        continue;
                    }
                    let mut acc = ZERO;
                    for r in 0..4 {
                        for c in 0..4 {
                            acc += basis[i][r].conj() * rho[(r, c)] * basis[j][c];
                        }
                    }
                    residue = residue.max(acc.norm());
                }
            }
            residue
        }
    }
}

/// `(e_x, e_z)` read directly off the density matrix:
/// `e_z = ⟨01|ρ|01⟩ + ⟨10|ρ|10⟩`, `e_x = ⟨+-|ρ|+-⟩ + ⟨-+|ρ|-+⟩`.
pub fn qber_of_matrix(rho: &Matrix4<Complex64>) -> (f64, f64) {
    let e_z = rho[(1, 1)].re + rho[(2, 2)].re;
    let h = FRAC_1_SQRT_2;
    let plus = [h, h];
    let minus = [h, -h];
    let product = |a: [f64; 2], b: [f64; 2]| [a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]];
    let expect = |v: [f64; 4]| {
        let mut acc = ZERO;
        for r in 0..4 {
            for c in 0..4 {
                acc += v[r] * rho[(r, c)] * v[c];
            }
        }
        acc.re
    };
    let e_x = expect(product(plus, minus)) + expect(product(minus, plus));
    (e_x, e_z)
}

/// Von Neumann entropy (bits) of the left output's reduced state.
pub fn reduced_entropy_bits(rho: &Matrix4<Complex64>) -> f64 {
    let mut reduced = nalgebra::Matrix2::<Complex64>::zeros();
    for a in 0..2 {
        for b in 0..2 {
            reduced[(a, b)] = rho[(2 * a, 2 * b)] + rho[(2 * a + 1, 2 * b + 1)];
        }
    }
    reduced
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&p| p > 1e-15)
        .map(|&p| -p * p.log2())
        .sum()
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

    #[test]
    fn bare_pair_becomes_phi_plus() {
        let trace = pairs(1);
        let rho = simulate_with_lambdas(&trace, &[0.0, 0.0]).unwrap();
        let state = bell_diagonal_of(&rho).unwrap();
        assert_abs_diff_eq!(state.probs()[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(reduced_entropy_bits(&rho), 1.0, epsilon = 1e-10);
    }

    #[test]
    fn bell_projection_of_simple_states() {
        let mixed = Matrix4::<Complex64>::identity() * Complex64::new(0.25, 0.0);
        let s = bell_diagonal_of(&mixed).unwrap();
        for p in s.probs() {
            assert_abs_diff_eq!(p, 0.25, epsilon = 1e-15);
        }
        let mut product = Matrix4::<Complex64>::zeros();
        product[(0, 0)] = ONE;
        assert!(matches!(bell_diagonal_of(&product), Err(Error::NotBellDiagonal(_))));
    }

    #[test]
    fn dephased_left_output_is_phi_minus_mixture() {
        let trace = pairs(1);
        let rho = simulate_with_lambdas(&trace, &[0.3, 0.0]).unwrap();
        let s = bell_diagonal_of(&rho).unwrap();
        assert_abs_diff_eq!(s.probs()[0], 0.7, epsilon = 1e-14);
        assert_abs_diff_eq!(s.probs()[2], 0.3, epsilon = 1e-14);
        let (ex, ez) = qber_of_matrix(&rho);
        assert_abs_diff_eq!(ex, 0.3, epsilon = 1e-14);
        assert_abs_diff_eq!(ez, 0.0, epsilon = 1e-14);
    }

    #[test]
    fn merge_target_noise_acts_on_source() {
        // four qubits a b | c d; merge b into c, then Y on b
        let mut trace = pairs(2);
        trace.events.push(Event::MergeSuccess {
            source: QubitId(1),
            target: QubitId(2),
        });
        trace.events.push(Event::MeasureY { qubit: QubitId(1) });
        let on_b = simulate_with_lambdas(&trace, &[0.0, 0.2, 0.0, 0.0]).unwrap();
        let on_c = simulate_with_lambdas(&trace, &[0.0, 0.0, 0.2, 0.0]).unwrap();
        assert!((on_b - on_c).norm() < 1e-12);
        // both qubits at time t compose into one channel at time 2t
        let l = 0.1;
        let both = simulate_with_lambdas(&trace, &[0.0, l, l, 0.0]).unwrap();
        let doubled = simulate_with_lambdas(&trace, &[0.0, 2.0 * l * (1.0 - l), 0.0, 0.0]).unwrap();
        assert!((both - doubled).norm() < 1e-12);
    }

    #[test]
    fn three_qubit_cluster_stays_a_graph_state() {
        let mut trace = pairs(2);
        trace.events.push(Event::MergeSuccess {
            source: QubitId(1),
            target: QubitId(2),
        });
        let lambdas = [0.0; 4];
        let mut sim = DenseSimulator::new(&trace, &lambdas).unwrap();
        sim.apply(&trace.events[0]).unwrap();
        assert_eq!(sim.state().qubits().len(), 3);
        assert_abs_diff_eq!(sim.state().graph_fidelity(&sim.edges()), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn refuses_large_traces() {
        let trace = pairs(7);
        let lambdas = vec![0.0; 14];
        assert!(matches!(
            simulate_with_lambdas(&trace, &lambdas),
            Err(Error::TooManyQubits { qubits: 14, .. })
        ));
    }

    #[test]
    fn noisy_states_are_physical() {
        let mut trace = pairs(3);
        trace.events = vec![
            Event::MergeSuccess {
                source: QubitId(1),
                target: QubitId(2),
            },
            Event::MergeSuccess {
                source: QubitId(3),
                target: QubitId(4),
            },
        ];
        let lambdas = [0.1, 0.2, 0.3, 0.05, 0.4, 0.15];
        let mut sim = DenseSimulator::new(&trace, &lambdas).unwrap();
        for e in &trace.events {
            sim.apply(e).unwrap();
            let (t, h, p) = sim.state().physicality_defects();
            assert!(t < 1e-12 && h < 1e-12 && p < 1e-10, "{t} {h} {p}");
        }
    }
}
