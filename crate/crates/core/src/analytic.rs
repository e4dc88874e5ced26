//! Exact expected waiting times for short chains.
//!
//! Time advances in rounds. Within a round every missing elementary link is
//! heralded independently with probability `p_gen`, and any fusion or swap
//! that becomes possible is attempted at the end of that round. The models
//! below enumerate the entanglement configurations under exactly the rules
//! the samplers implement and solve for the expected absorption time.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::protocol::PatchMode;

fn check_probability(name: &str, p: f64) -> Result<()> {
    if p > 0.0 && p <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("{p} is not in (0, 1]")))
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * f64::from(n - i) / f64::from(i + 1))
}

/// `E[max(G_1, ..., G_n)]` for i.i.d. geometric variables on `{1, 2, ...}`,
/// by inclusion–exclusion.
pub fn expected_max_geometric(p: f64, n: u32) -> Result<f64> {
    check_probability("p", p)?;
    if n == 0 {
        return Err(Error::param("n", "at least one variable is required"));
    }
    let q = 1.0 - p;
    Ok((1..=n)
        .map(|j| {
            let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
            sign * binomial(n, j) / (1.0 - q.powi(j as i32))
        })
        .sum())
}

/// The same expectation as a direct tail sum `Σ_t P(max > t)`.
pub fn expected_max_geometric_by_summation(p: f64, n: u32) -> Result<f64> {
    check_probability("p", p)?;
    let q = 1.0 - p;
    let mut total = 0.0;
    let mut miss: f64 = 1.0; // q^t
    for _ in 0..1_000_000 {
        let tail = 1.0 - (1.0 - miss).powi(n as i32);
        total += tail;
        if tail < 1e-17 {
            break;
        }
        miss *= q;
    }
    Ok(total)
}

/// A finite Markov chain with one absorbing state, stepped once per round.
#[derive(Clone, Debug)]
pub struct MarkovModel {
    labels: Vec<String>,
    transitions: DMatrix<f64>,
    absorbing: usize,
}

impl MarkovModel {
    pub fn new(labels: Vec<String>, transitions: DMatrix<f64>, absorbing: usize) -> Result<Self> {
        let n = labels.len();
        if transitions.nrows() != n || transitions.ncols() != n || absorbing >= n {
            return Err(Error::param("transitions", "shape does not match the state list"));
        }
        for (i, row) in transitions.row_iter().enumerate() {
            if row.iter().any(|&x| x < 0.0) {
                return Err(Error::param(
                    "transitions",
                    format!("negative entry in row `{}`", labels[i]),
                ));
            }
            let sum: f64 = row.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                return Err(Error::param(
                    "transitions",
                    format!("row `{}` sums to {sum}", labels[i]),
                ));
            }
        }
        if transitions[(absorbing, absorbing)] != 1.0 {
            return Err(Error::param("absorbing", "the absorbing state must map to itself"));
        }
        let model = MarkovModel {
            labels,
            transitions,
            absorbing,
        };
        if let Some(stuck) = model.unreachable_from() {
            return Err(Error::param(
                "transitions",
                format!("absorption is unreachable from `{}`", model.labels[stuck]),
            ));
        }
        Ok(model)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn transitions(&self) -> &DMatrix<f64> {
        &self.transitions
    }

    pub fn state(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    fn unreachable_from(&self) -> Option<usize> {
        let n = self.labels.len();
        let mut reaches = vec![false; n];
        reaches[self.absorbing] = true;
        loop {
            let mut changed = false;
            for i in 0..n {
                if !reaches[i] && (0..n).any(|j| reaches[j] && self.transitions[(i, j)] > 0.0) {
                    reaches[i] = true;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        reaches.iter().position(|r| !r)
    }

    /// Expected rounds to absorption from every state.
    pub fn expected_rounds(&self) -> Result<Vec<f64>> {
        let transient: Vec<usize> = (0..self.labels.len()).filter(|&i| i != self.absorbing).collect();
        let m = transient.len();
        let system = DMatrix::from_fn(m, m, |r, c| {
            let identity = if r == c { 1.0 } else { 0.0 };
            identity - self.transitions[(transient[r], transient[c])]
        });
        let solution = system
            .lu()
            .solve(&DVector::from_element(m, 1.0))
            .ok_or(Error::SingularSystem)?;
        let mut out = vec![0.0; self.labels.len()];
        for (k, &i) in transient.iter().enumerate() {
            out[i] = solution[k];
        }
        Ok(out)
    }

    pub fn expected_rounds_from(&self, label: &str) -> Result<f64> {
        let i = self
            .state(label)
            .ok_or_else(|| Error::param("state", format!("no state `{label}`")))?;
        Ok(self.expected_rounds()?[i])
    }
}

/// Progress of a two-segment block: no link, one link, or fused.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Block {
    Empty,
    OneLink,
    Done,
}

impl Block {
    /// One round of a two-segment block. A failed fusion loses both links.
    fn step(self, q: f64, p: f64) -> Vec<(Block, f64)> {
        match self {
            Block::Empty => vec![
                (Block::Done, q * q * p),
                (Block::Empty, q * q * (1.0 - p) + (1.0 - q) * (1.0 - q)),
                (Block::OneLink, 2.0 * q * (1.0 - q)),
            ],
            Block::OneLink => vec![
                (Block::Done, q * p),
                (Block::Empty, q * (1.0 - p)),
                (Block::OneLink, 1.0 - q),
            ],
            Block::Done => vec![(Block::Done, 1.0)],
        }
    }

    fn tag(self) -> &'static str {
        match self {
            Block::Empty => "0",
            Block::OneLink => "1",
            Block::Done => "D",
        }
    }
}

/// Incrementally assembled chain with string-labelled states.
struct ChainBuilder {
    labels: Vec<String>,
    rows: Vec<Vec<(String, f64)>>,
}

impl ChainBuilder {
    fn new() -> Self {
        ChainBuilder {
            labels: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn add(&mut self, label: String, row: Vec<(String, f64)>) {
        self.labels.push(label);
        self.rows.push(row);
    }

    fn build(self, absorbing: &str) -> Result<MarkovModel> {
        let n = self.labels.len();
        let index = |l: &str| {
            self.labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::param("state", format!("transition into unknown state `{l}`")))
        };
        let mut t = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for (to, prob) in row {
                t[(i, index(to)?)] += prob;
            }
        }
        let absorbing = index(absorbing)?;
        MarkovModel::new(self.labels, t, absorbing)
    }
}

const COMPLETE: &str = "complete";
const BLOCKS: [Block; 3] = [Block::Empty, Block::OneLink, Block::Done];

fn two_segment_model(p_gen: f64, p: f64) -> Result<MarkovModel> {
    let mut chain = ChainBuilder::new();
    for b in [Block::Empty, Block::OneLink] {
        let row = b
            .step(p_gen, p)
            .into_iter()
            .map(|(next, prob)| {
                let label = if next == Block::Done {
                    COMPLETE.to_owned()
                } else {
                    next.tag().to_owned()
                };
                (label, prob)
            })
            .collect();
        chain.add(b.tag().to_owned(), row);
    }
    chain.add(COMPLETE.to_owned(), vec![(COMPLETE.to_owned(), 1.0)]);
    chain.build(COMPLETE)
}

/// Four segments as two two-segment halves and a central fusion. With
/// `patching` a failed central fusion is followed by a two-segment patch
/// block; otherwise the level starts over.
fn four_segment_model(p_gen: f64, p: f64, patching: bool) -> Result<MarkovModel> {
    let halves = |a: Block, b: Block| format!("halves({},{})", a.tag(), b.tag());
    let restart = halves(Block::Empty, Block::Empty);
    let two_sided = |b: Block| format!("two-sided({})", b.tag());
    let one_sided = |b: Block| format!("one-sided({})", b.tag());
    let after_central_failure = if patching {
        two_sided(Block::Empty)
    } else {
        restart.clone()
    };

    let mut chain = ChainBuilder::new();
    for a in BLOCKS {
        for b in BLOCKS {
            if a == Block::Done && b == Block::Done {
                continue;
            }
            let mut row = Vec::new();
            for (a2, pa) in a.step(p_gen, p) {
                for (b2, pb) in b.step(p_gen, p) {
                    let prob = pa * pb;
                    if a2 == Block::Done && b2 == Block::Done {
                        row.push((COMPLETE.to_owned(), prob * p));
                        row.push((after_central_failure.clone(), prob * (1.0 - p)));
                    } else {
                        row.push((halves(a2, b2), prob));
                    }
                }
            }
            chain.add(halves(a, b), row);
        }
    }
    if patching {
        for b in [Block::Empty, Block::OneLink] {
            let mut two = Vec::new();
            let mut one = Vec::new();
            for (b2, pb) in b.step(p_gen, p) {
                if b2 == Block::Done {
                    two.push((COMPLETE.to_owned(), pb * p * p));
                    // exactly one boundary fusion failed: the gap moves to
                    // the edge of the scope
                    two.push((one_sided(Block::Empty), pb * 2.0 * p * (1.0 - p)));
                    // both failed: the gap would grow past what four
                    // segments can hold
                    two.push((restart.clone(), pb * (1.0 - p) * (1.0 - p)));
                    one.push((COMPLETE.to_owned(), pb * p));
                    one.push((restart.clone(), pb * (1.0 - p)));
                } else {
                    two.push((two_sided(b2), pb));
                    one.push((one_sided(b2), pb));
                }
            }
            chain.add(two_sided(b), two);
            chain.add(one_sided(b), one);
        }
    }
    chain.add(COMPLETE.to_owned(), vec![(COMPLETE.to_owned(), 1.0)]);
    chain.build(COMPLETE)
}

/// Markov model of the merging-based protocol on four segments.
///
/// The growth limit never matters here: any grown gap would span four
/// segments, which leaves no room in a four-segment scope, so growth always
/// restarts the level.
pub fn mb_model_4seg(p_gen: f64, p: f64, patch_mode: PatchMode) -> Result<MarkovModel> {
    check_probability("p_gen", p_gen)?;
    check_probability("p", p)?;
    four_segment_model(p_gen, p, 4 > patch_mode.min_segments())
}

pub fn mb_expected_rounds_4seg(p_gen: f64, p: f64, growth_limit: u32, patch_mode: PatchMode) -> Result<f64> {
    let _ = growth_limit;
    mb_model_4seg(p_gen, p, patch_mode)?.expected_rounds_from("halves(0,0)")
}

/// Expected rounds of the swapping-based protocol on 1, 2 or 4 segments.
pub fn sb_expected_rounds(segments: u32, p_gen: f64, p: f64) -> Result<f64> {
    check_probability("p_gen", p_gen)?;
    check_probability("p", p)?;
    match segments {
        1 => Ok(1.0 / p_gen),
        2 => two_segment_model(p_gen, p)?.expected_rounds_from("0"),
        4 => four_segment_model(p_gen, p, false)?.expected_rounds_from("halves(0,0)"),
        s => Err(Error::UnsupportedSegments(s)),
    }
}

/// Expected rounds of the merging-based protocol on 1, 2 or 4 segments.
pub fn mb_expected_rounds(segments: u32, p_gen: f64, p: f64, growth_limit: u32, patch_mode: PatchMode) -> Result<f64> {
    match segments {
        1 | 2 => sb_expected_rounds(segments, p_gen, p),
        4 => mb_expected_rounds_4seg(p_gen, p, growth_limit, patch_mode),
        s => Err(Error::UnsupportedSegments(s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn max_geometric_known_values() {
        assert_relative_eq!(expected_max_geometric(1.0, 5).unwrap(), 1.0);
        assert_relative_eq!(expected_max_geometric(0.5, 1).unwrap(), 2.0);
        assert_relative_eq!(expected_max_geometric(0.5, 2).unwrap(), 8.0 / 3.0, max_relative = 1e-14);
        assert!(expected_max_geometric(0.0, 2).is_err());
        assert!(expected_max_geometric(0.5, 0).is_err());
    }

    proptest! {
        #[test]
        fn inclusion_exclusion_matches_tail_sum(p in 0.05f64..=1.0, n in 1u32..12) {
            let a = expected_max_geometric(p, n).unwrap();
            let b = expected_max_geometric_by_summation(p, n).unwrap();
            prop_assert!((a - b).abs() <= 1e-9 * b, "{} vs {}", a, b);
        }

        #[test]
        fn max_geometric_is_monotone(p in 0.05f64..0.95, n in 1u32..10) {
            let here = expected_max_geometric(p, n).unwrap();
            prop_assert!(expected_max_geometric(p, n + 1).unwrap() > here);
            prop_assert!(expected_max_geometric(p + 0.05, n).unwrap() < here);
        }

        #[test]
        fn absorption_times_are_finite_and_at_least_one(p_gen in 0.05f64..=1.0, p in 0.05f64..=1.0) {
            for mode in [PatchMode::Limited, PatchMode::Unlimited] {
                let model = mb_model_4seg(p_gen, p, mode).unwrap();
                let times = model.expected_rounds().unwrap();
                let start = model.state("halves(0,0)").unwrap();
                prop_assert!(times[start].is_finite() && times[start] >= 1.0);
            }
        }
    }

    #[test]
    fn two_segments_closed_forms() {
        assert_relative_eq!(sb_expected_rounds(2, 1.0, 0.5).unwrap(), 2.0, max_relative = 1e-12);
        assert_relative_eq!(
            sb_expected_rounds(2, 0.5, 1.0).unwrap(),
            8.0 / 3.0,
            max_relative = 1e-12
        );
        // attempts are independent: E = E[max of two] / p
        for (q, p) in [(0.3, 0.5), (0.9, 0.3), (0.5, 0.9)] {
            let expected = expected_max_geometric(q, 2).unwrap() / p;
            assert_relative_eq!(sb_expected_rounds(2, q, p).unwrap(), expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn certain_merges_reduce_to_max_of_geometrics() {
        for q in [0.3, 0.5, 0.9] {
            let expected = expected_max_geometric(q, 4).unwrap();
            for mode in [PatchMode::Limited, PatchMode::Unlimited] {
                assert_relative_eq!(
                    mb_expected_rounds_4seg(q, 1.0, 1, mode).unwrap(),
                    expected,
                    max_relative = 1e-12
                );
            }
            assert_relative_eq!(sb_expected_rounds(4, q, 1.0).unwrap(), expected, max_relative = 1e-12);
        }
        assert_relative_eq!(mb_expected_rounds_4seg(1.0, 1.0, 0, PatchMode::Unlimited).unwrap(), 1.0);
    }

    /// Distribution of the two-segment block time by forward propagation.
    fn block_time_cdf(q: f64, p: f64, horizon: usize) -> Vec<f64> {
        let (mut empty, mut one, mut done) = (1.0, 0.0, 0.0);
        let mut cdf = Vec::with_capacity(horizon + 1);
        cdf.push(0.0);
        for _ in 0..horizon {
            let e = empty * ((1.0 - q) * (1.0 - q) + q * q * (1.0 - p)) + one * q * (1.0 - p);
            let o = empty * 2.0 * q * (1.0 - q) + one * (1.0 - q);
            done += empty * q * q * p + one * q * p;
            empty = e;
            one = o;
            cdf.push(done);
        }
        cdf
    }

    #[test]
    fn four_segment_swapping_matches_forward_propagation() {
        // attempts at four segments are i.i.d.: max of two block times, then
        // a central swap that succeeds with probability p
        for (q, p) in [(0.3, 0.3), (0.5, 0.5), (0.9, 0.3), (0.3, 0.9)] {
            let cdf = block_time_cdf(q, p, 20_000);
            let e_max: f64 = cdf.iter().map(|f| 1.0 - f * f).sum();
            assert_relative_eq!(sb_expected_rounds(4, q, p).unwrap(), e_max / p, max_relative = 1e-10);
        }
    }

    #[test]
    fn limited_four_segments_equal_swapping() {
        for (q, p) in [(0.3, 0.5), (0.9, 0.9)] {
            assert_relative_eq!(
                mb_expected_rounds_4seg(q, p, 1, PatchMode::Limited).unwrap(),
                sb_expected_rounds(4, q, p).unwrap(),
                max_relative = 1e-12
            );
        }
    }

    #[test]
    fn patching_changes_four_segment_times_only_when_merges_fail() {
        let limited = mb_expected_rounds_4seg(0.5, 0.5, 1, PatchMode::Limited).unwrap();
        let unlimited = mb_expected_rounds_4seg(0.5, 0.5, 1, PatchMode::Unlimited).unwrap();
        // a two-segment patch needs two more fusions, which at p = 1/2 is
        // slower than starting over
        assert!(unlimited > limited, "{unlimited} vs {limited}");
        let limited = mb_expected_rounds_4seg(0.5, 1.0, 1, PatchMode::Limited).unwrap();
        let unlimited = mb_expected_rounds_4seg(0.5, 1.0, 1, PatchMode::Unlimited).unwrap();
        assert_relative_eq!(limited, unlimited, max_relative = 1e-12);
    }

    #[test]
    fn model_validation() {
        let labels = vec!["a".to_owned(), "b".to_owned()];
        let bad_row = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.0, 1.0]);
        assert!(MarkovModel::new(labels.clone(), bad_row, 1).is_err());
        let trapped = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]);
        assert!(MarkovModel::new(labels.clone(), trapped, 1).is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.0, 1.0]);
        let m = MarkovModel::new(labels, ok, 1).unwrap();
        assert_relative_eq!(m.expected_rounds_from("a").unwrap(), 2.0, max_relative = 1e-14);
        assert!(matches!(
            sb_expected_rounds(8, 0.5, 0.5),
            Err(Error::UnsupportedSegments(8))
        ));
    }
}
