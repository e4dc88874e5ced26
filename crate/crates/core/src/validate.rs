//! Self-checks: noise engine against the dense oracle, samplers against the
//! analytic waiting times.

use std::fmt;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{mb_expected_rounds_4seg, sb_expected_rounds};
use crate::error::Result;
use crate::experiment::waiting_time;
use crate::noise::graph::GraphState;
use crate::noise::{output_state_from_lambdas, BellDiagonalState, MemoryModel};
use crate::oracle::{bell_diagonal_of, simulate_with_lambdas, MAX_ORACLE_QUBITS};
use crate::protocol::{self, PatchMode, Protocol, SamplerParams};
use crate::trace::{Event, MemoryLedger, OperationTrace, QubitId, QubitInfo};

/// A random valid trace over at most `max_qubits` qubits whose events leave
/// exactly one Bell pair. Events are drawn from all four kinds; sequences
/// that end in anything but two adjacent qubits are rejected and redrawn.
pub fn random_trace<R: Rng + ?Sized>(rng: &mut R, max_qubits: usize) -> OperationTrace {
    let max_pairs = (max_qubits / 2).max(1);
    loop {
        let pairs = rng.random_range(1..=max_pairs) as u32;
        let n = 2 * pairs;
        let mut trace = OperationTrace {
            qubits: (0..n)
                .map(|i| QubitInfo {
                    id: QubitId(i),
                    station: i.div_ceil(2),
                })
                .collect(),
            initial_pairs: (0..pairs).map(|i| [QubitId(2 * i), QubitId(2 * i + 1)]).collect(),
            events: Vec::new(),
            outputs: [QubitId(0), QubitId(1)],
        };
        let mut graph = GraphState::from_pairs(&trace).expect("well-formed pairs");
        while graph.alive_qubits().count() > 2 {
            let alive: Vec<QubitId> = graph.alive_qubits().collect();
            let q = *alive.choose(rng).expect("nonempty");
            let roll: f64 = rng.random();
            let event = if roll < 0.45 {
                let candidates: Vec<QubitId> = alive
                    .iter()
                    .copied()
                    .filter(|&t| t != q && !graph.has_edge(q, t))
                    .collect();
                match candidates.choose(rng) {
                    Some(&t) => Event::MergeSuccess { source: q, target: t },
                    None => continue,
                }
            } else if roll < 0.8 {
                Event::MeasureY { qubit: q }
            } else if roll < 0.93 {
                Event::MeasureZ { qubit: q }
            } else {
                let others: Vec<QubitId> = alive.iter().copied().filter(|&t| t != q).collect();
                let t = *others.choose(rng).expect("at least three alive");
                Event::MergeFailureErase { qubits: [q, t] }
            };
            graph.apply(&event).expect("event chosen to be valid");
            trace.events.push(event);
        }
        let mut ends: Vec<QubitId> = graph.alive_qubits().collect();
        if ends.len() == 2 && graph.has_edge(ends[0], ends[1]) {
            ends.shuffle(rng);
            trace.outputs = [ends[0], ends[1]];
            return trace;
        }
    }
}

/// Protocol traces small enough for the dense oracle.
pub fn small_protocol_traces(count: usize, seed: u64) -> Vec<OperationTrace> {
    let configs = [
        (
            Protocol::Mb,
            2,
            SamplerParams::with_mode(0.5, 0.5, 1, PatchMode::Limited),
        ),
        (
            Protocol::Mb,
            4,
            SamplerParams::with_mode(0.5, 0.5, 1, PatchMode::Unlimited),
        ),
        (
            Protocol::Mb,
            4,
            SamplerParams::with_mode(0.7, 0.9, 1, PatchMode::Limited),
        ),
        (
            Protocol::Sb,
            4,
            SamplerParams::with_mode(0.5, 0.5, 1, PatchMode::Limited),
        ),
    ];
    let mut out = Vec::with_capacity(count);
    let mut index = 0;
    while out.len() < count {
        let (protocol, segments, params) = &configs[out.len() % configs.len()];
        let params = params.as_ref().expect("valid parameters");
        let sample = protocol::sample(*protocol, *segments, params, seed, index).expect("small chains finish");
        index += 1;
        if sample.trace.qubit_count() <= MAX_ORACLE_QUBITS {
            out.push(sample.trace);
        }
    }
    out
}

/// Result of one named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status} {}: {}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

/// Worst engine/oracle disagreement over a set of traces.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleComparison {
    pub traces: usize,
    pub max_abs_error: f64,
    /// Traces where either side returned an error.
    pub errors: Vec<String>,
}

impl OracleComparison {
    pub fn passed(&self, tolerance: f64) -> bool {
        self.errors.is_empty() && self.max_abs_error < tolerance
    }
}

/// Compares `engine` with the dense oracle on each trace, with storage
/// times drawn uniformly from `[0, 2T]`.
pub fn compare_with_oracle<E>(traces: &[OperationTrace], seed: u64, engine: E) -> OracleComparison
where
    E: Fn(&OperationTrace, &[f64]) -> Result<BellDiagonalState>,
{
    let dephasing_time = 1.0;
    let memory = MemoryModel::seconds(dephasing_time).expect("positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_abs_error: f64 = 0.0;
    let mut errors = Vec::new();
    for (i, trace) in traces.iter().enumerate() {
        let times: Vec<f64> = (0..trace.qubit_count())
            .map(|_| rng.random_range(0.0..=2.0 * dephasing_time))
            .collect();
        let ledger = MemoryLedger::from_times(times).expect("nonnegative");
        let lambdas: Vec<f64> = ledger.times().iter().map(|&t| memory.lambda(t)).collect();
        let reference = simulate_with_lambdas(trace, &lambdas).and_then(|rho| bell_diagonal_of(&rho));
        match (engine(trace, &lambdas), reference) {
            (Ok(fast), Ok(exact)) => max_abs_error = max_abs_error.max(fast.max_abs_diff(&exact)),
            (Err(e), _) => errors.push(format!("trace {i}: engine: {e}")),
            (_, Err(e)) => errors.push(format!("trace {i}: oracle: {e}")),
        }
    }
    OracleComparison {
        traces: traces.len(),
        max_abs_error,
        errors,
    }
}

/// The shipped engine, in the shape [`compare_with_oracle`] expects.
pub fn engine(trace: &OperationTrace, lambdas: &[f64]) -> Result<BellDiagonalState> {
    output_state_from_lambdas(trace, lambdas)
}

/// Random and protocol-shaped traces for the oracle comparison.
pub fn oracle_traces(random: usize, from_protocols: usize, seed: u64) -> Vec<OperationTrace> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut traces: Vec<OperationTrace> = (0..random).map(|_| random_trace(&mut rng, MAX_ORACLE_QUBITS)).collect();
    traces.extend(small_protocol_traces(from_protocols, seed));
    traces
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationOptions {
    pub random_traces: usize,
    pub protocol_traces: usize,
    pub samples: u64,
    pub grid: Vec<f64>,
    pub seed: u64,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            random_traces: 200,
            protocol_traces: 40,
            samples: 200_000,
            grid: vec![0.3, 0.5, 0.9],
            seed: 2024,
        }
    }
}

fn within_three_se(name: String, mean: f64, se: f64, expected: f64) -> Check {
    let z = if se > 0.0 {
        (mean - expected) / se
    } else if mean == expected {
        0.0
    } else {
        f64::INFINITY
    };
    Check {
        name,
        passed: z.abs() <= 3.0,
        detail: format!("sampled {mean:.5} ± {se:.5}, exact {expected:.5}, z = {z:+.2}"),
    }
}

/// Waiting-time checks on the `(p_gen, p)` grid.
pub fn waiting_time_checks(options: &ValidationOptions) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let n = options.samples;
    let seed = options.seed;
    for &p_gen in &options.grid {
        for &p in &options.grid {
            for mode in [PatchMode::Limited, PatchMode::Unlimited] {
                let params = SamplerParams::with_mode(p_gen, p, 1, mode)?;
                let (mean, se) = waiting_time(Protocol::Mb, 4, &params, n, seed)?;
                let exact = mb_expected_rounds_4seg(p_gen, p, 1, mode)?;
                let name = format!("mb s=4 {} p_gen={p_gen} p={p}", mode.as_str());
                checks.push(within_three_se(name, mean, se, exact));
            }
            for s in [2, 4] {
                let params = SamplerParams::without_patching(p_gen, p)?;
                let (mean, se) = waiting_time(Protocol::Sb, s, &params, n, seed)?;
                let exact = sb_expected_rounds(s, p_gen, p)?;
                checks.push(within_three_se(
                    format!("sb s={s} p_gen={p_gen} p={p}"),
                    mean,
                    se,
                    exact,
                ));
            }
        }
    }
    Ok(checks)
}

/// Merges that never fail make both protocols draw the same randomness in
/// the same order, so their waiting times must agree sample by sample.
pub fn certain_merge_equivalence(options: &ValidationOptions) -> Result<Check> {
    let mut mismatches = 0u64;
    let n = options.samples.min(20_000);
    for &p_gen in &options.grid {
        for segments in [2, 4, 8, 16] {
            let params = SamplerParams::with_mode(p_gen, 1.0, 1, PatchMode::Limited)?;
            for i in 0..n {
                let mb = protocol::sample(Protocol::Mb, segments, &params, options.seed, i)?;
                let sb = protocol::sample(Protocol::Sb, segments, &params, options.seed, i)?;
                if mb.rounds != sb.rounds {
                    mismatches += 1;
                }
            }
        }
    }
    Ok(Check {
        name: "mb = sb waiting times at p = 1".to_owned(),
        passed: mismatches == 0,
        detail: format!("{mismatches} mismatching samples"),
    })
}

pub fn validate(options: &ValidationOptions) -> Result<ValidationReport> {
    let traces = oracle_traces(options.random_traces, options.protocol_traces, options.seed);
    let cmp = compare_with_oracle(&traces, options.seed, engine);
    let mut checks = vec![Check {
        name: "noise engine vs dense oracle".to_owned(),
        passed: cmp.passed(1e-10),
        detail: format!(
            "{} traces, max abs error {:.2e}{}",
            cmp.traces,
            cmp.max_abs_error,
            if cmp.errors.is_empty() {
                String::new()
            } else {
                format!(", errors: {:?}", cmp.errors)
            }
        ),
    }];
    checks.extend(waiting_time_checks(options)?);
    checks.push(certain_merge_equivalence(options)?);
    Ok(ValidationReport { checks })
}
