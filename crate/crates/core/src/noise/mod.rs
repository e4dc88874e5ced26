//! Memory dephasing and its propagation to the final Bell pair.
//!
//! Every memory suffers single-qubit dephasing for as long as it is stored.
//! Because all protocol operations are Clifford (fusions, Pauli measurements
//! and their byproduct corrections), a σz flip on any qubit is equivalent to a
//! fixed Pauli on the two output qubits. The engine computes that map once per
//! trace by propagating Pauli frames through the graph-state update rules and
//! then convolves the independent per-qubit flip probabilities.

mod dephasing;
mod engine;
pub mod graph;
mod pauli;

pub use dephasing::{compose_dephasing, dephasing_lambda, DephasingChannel, MemoryModel};
pub use engine::{output_state, output_state_from_lambdas, propagate_z, qber, BellDiagonalState, ZImage};
pub use pauli::{Pauli, PauliString};
