use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Requirement;
use crate::freewords::GenId;
use crate::qspace::{Symbol, Vec1};

/// Fair requirement schedule over a growing pool of points.
///
/// Points are visited in allocation order (symbol `s0`, `s1`, ...). Each
/// visit emits `max(W, G)` requirements for that point: every word index
/// once in a seeded random order, paired with generator ids cycling from a
/// seeded offset, so every (point, word) and (point, generator) pair is
/// eventually emitted. When the cursor runs past the current pool it wraps
/// back to the first point.
#[derive(Debug, Clone)]
pub struct Schedule {
    generators: usize,
    word_count: usize,
    rng: ChaCha8Rng,
    point: Option<u64>,
    slots: Vec<(usize, usize)>,
    pos: usize,
}

impl Schedule {
    pub fn new(generators: usize, word_count: usize, seed: u64) -> Self {
        Self {
            generators,
            word_count,
            rng: ChaCha8Rng::seed_from_u64(seed),
            point: None,
            slots: Vec::new(),
            pos: 0,
        }
    }

    /// Next requirement, drawn from points with id below `pool`.
    pub fn next(&mut self, pool: u64) -> Requirement {
        assert!(pool > 0, "schedule needs a nonempty pool");
        if self.pos == self.slots.len() {
            self.refill(pool);
        }
        let (word_idx, gen) = self.slots[self.pos];
        self.pos += 1;
        Requirement {
            x: Vec1::unit(Symbol(self.point.unwrap_or(0))),
            word_idx,
            gen: GenId(gen),
        }
    }

    fn refill(&mut self, pool: u64) {
        let next = self.point.map_or(0, |p| p + 1);
        self.point = Some(if next < pool { next } else { 0 });
        let mut words: Vec<usize> = (0..self.word_count).collect();
        words.shuffle(&mut self.rng);
        let offset = self.rng.gen_range(0..self.generators);
        let k = self.word_count.max(self.generators);
        self.slots = (0..k)
            .map(|i| (words[i % self.word_count], (offset + i) % self.generators))
            .collect();
        self.pos = 0;
    }
}
