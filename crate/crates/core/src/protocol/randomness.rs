use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use crate::error::{Error, Result};

/// The two kinds of coin the samplers flip. Abstracted so tests can script
/// exact outcome sequences.
pub trait Randomness {
    /// Rounds until an elementary link is heralded (at least 1).
    fn generation_rounds(&mut self) -> u64;
    /// Whether the next merge or swap succeeds.
    fn merge_succeeds(&mut self) -> bool;
}

impl<R: Randomness + ?Sized> Randomness for &mut R {
    fn generation_rounds(&mut self) -> u64 {
        (**self).generation_rounds()
    }

    fn merge_succeeds(&mut self) -> bool {
        (**self).merge_succeeds()
    }
}

/// Geometric variate on `{1, 2, ...}` with success probability `p_gen`.
pub fn sample_elementary<R: Rng + ?Sized>(p_gen: f64, rng: &mut R) -> Result<u64> {
    let geometric = Geometric::new(p_gen)
        .ok()
        .filter(|_| p_gen > 0.0)
        .ok_or_else(|| Error::param("generation_probability", format!("{p_gen} is not in (0, 1]")))?;
    Ok(geometric.sample(rng).saturating_add(1))
}

/// Seeded generator for one sample. Each `(seed, index)` pair selects an
/// independent ChaCha stream, so results do not depend on how samples are
/// distributed over workers.
#[derive(Clone, Debug)]
pub struct StreamRandomness {
    rng: ChaCha8Rng,
    generation: Geometric,
    merge_probability: f64,
}

impl StreamRandomness {
    pub fn new(seed: u64, index: u64, p_gen: f64, p: f64) -> Result<Self> {
        if !(p_gen > 0.0 && p_gen <= 1.0) {
            return Err(Error::param(
                "generation_probability",
                format!("{p_gen} is not in (0, 1]"),
            ));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::param("merge_probability", format!("{p} is not in (0, 1]")));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        Ok(StreamRandomness {
            rng,
            generation: Geometric::new(p_gen).expect("checked above"),
            merge_probability: p,
        })
    }
}

impl Randomness for StreamRandomness {
    fn generation_rounds(&mut self) -> u64 {
        self.generation.sample(&mut self.rng).saturating_add(1)
    }

    fn merge_succeeds(&mut self) -> bool {
        self.rng.random_bool(self.merge_probability)
    }
}

/// Replays fixed outcome sequences; panics when a sequence runs out.
#[derive(Clone, Debug, Default)]
pub struct Scripted {
    pub rounds: std::collections::VecDeque<u64>,
    pub merges: std::collections::VecDeque<bool>,
    /// Returned once `rounds` is exhausted, if set.
    pub default_rounds: Option<u64>,
}

impl Scripted {
    pub fn new(rounds: impl IntoIterator<Item = u64>, merges: impl IntoIterator<Item = bool>) -> Self {
        Scripted {
            rounds: rounds.into_iter().collect(),
            merges: merges.into_iter().collect(),
            default_rounds: None,
        }
    }

    /// Every link takes exactly one round.
    pub fn instant_links(merges: impl IntoIterator<Item = bool>) -> Self {
        Scripted {
            default_rounds: Some(1),
            ..Self::new([], merges)
        }
    }

    pub fn exhausted(&self) -> bool {
        self.rounds.is_empty() && self.merges.is_empty()
    }
}

impl Randomness for Scripted {
    fn generation_rounds(&mut self) -> u64 {
        self.rounds
            .pop_front()
            .or(self.default_rounds)
            .expect("scripted generation rounds exhausted")
    }

    fn merge_succeeds(&mut self) -> bool {
        self.merges.pop_front().expect("scripted merge outcomes exhausted")
    }
}
