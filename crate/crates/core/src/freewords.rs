//! Reduced words of the free group on generators `f0, f1, ...`.
//!
//! A word stores its letters in application order: `letters[0]` acts first.
//! The text form lists blocks in composition order, so the rightmost block
//! is applied first: `[(f0, 2), (f1, -1)]` prints as `f1^-1·f0^2`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GenId(pub usize);

impl fmt::Display for GenId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Letter {
    pub gen: GenId,
    pub exp: i64,
}

impl Letter {
    pub fn new(gen: usize, exp: i64) -> Self {
        Self {
            gen: GenId(gen),
            exp,
        }
    }

    fn order_key(&self) -> (usize, bool, u64) {
        (self.gen.0, self.exp < 0, self.exp.unsigned_abs())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WordError {
    #[error("letter {0} has exponent zero")]
    ZeroExponent(usize),
    #[error("letters {0} and {} use the same generator", .0 + 1)]
    AdjacentRepeat(usize),
    #[error("malformed word text {0:?}")]
    Syntax(String),
}

/// A reduced word: nonzero exponents and adjacent letters on distinct
/// generators. The empty word is the identity.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn identity() -> Self {
        Self::default()
    }

    /// Wraps letters that must already be reduced.
    pub fn from_reduced(letters: Vec<Letter>) -> Result<Self, WordError> {
        for (i, l) in letters.iter().enumerate() {
            if l.exp == 0 {
                return Err(WordError::ZeroExponent(i));
            }
            if i + 1 < letters.len() && letters[i + 1].gen == l.gen {
                return Err(WordError::AdjacentRepeat(i));
            }
        }
        Ok(Self { letters })
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn is_identity(&self) -> bool {
        self.letters.is_empty()
    }

    /// Number of blocks.
    pub fn blocks(&self) -> usize {
        self.letters.len()
    }

    /// Total number of letters, `Σ |exp|`.
    pub fn letter_count(&self) -> usize {
        self.letters
            .iter()
            .map(|l| l.exp.unsigned_abs() as usize)
            .sum()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self
                .letters
                .iter()
                .rev()
                .map(|l| Letter {
                    gen: l.gen,
                    exp: -l.exp,
                })
                .collect(),
        }
    }

    /// `self` applied first, then `next`; i.e. the composition `next ∘ self`.
    pub fn then(&self, next: &Word) -> Word {
        reduce(self.letters.iter().chain(next.letters.iter()).copied())
    }

    fn order_key(&self) -> (usize, usize, Vec<(usize, bool, u64)>) {
        (
            self.letter_count(),
            self.blocks(),
            self.letters.iter().map(Letter::order_key).collect(),
        )
    }

    pub fn max_gen(&self) -> Option<GenId> {
        self.letters.iter().map(|l| l.gen).max()
    }
}

/// Freely reduces a letter sequence: merges adjacent letters on the same
/// generator and drops blocks whose exponent becomes zero.
pub fn reduce<I: IntoIterator<Item = Letter>>(raw: I) -> Word {
    let mut stack: Vec<Letter> = Vec::new();
    for l in raw {
        if l.exp == 0 {
            continue;
        }
        match stack.last_mut() {
            Some(top) if top.gen == l.gen => {
                top.exp += l.exp;
                if top.exp == 0 {
                    stack.pop();
                }
            }
            _ => stack.push(l),
        }
    }
    Word { letters: stack }
}

pub fn inverse(w: &Word) -> Word {
    w.inverse()
}

/// Letter-sequence concatenation `a` then `b`, reduced. In composition
/// order this is the word `b ∘ a`.
pub fn concat(a: &Word, b: &Word) -> Word {
    a.then(b)
}

/// All nonempty reduced words on `generators` generators with at most
/// `max_letters` letters, ordered by letter count, then block count, then
/// lexicographically by (generator, positive before negative, |exponent|).
/// A word's position in this list is its word index.
pub fn enumerate_words(generators: usize, max_letters: usize) -> Vec<Word> {
    let mut out = Vec::new();
    for s in 1..=max_letters {
        for parts in compositions(s) {
            let mut gens = Vec::with_capacity(parts.len());
            gen_sequences(generators, parts.len(), &mut gens, &mut |gs| {
                for signs in 0..(1u32 << parts.len()) {
                    let letters = parts
                        .iter()
                        .zip(gs)
                        .enumerate()
                        .map(|(i, (&a, &g))| {
                            let neg = signs >> i & 1 == 1;
                            Letter::new(g, if neg { -(a as i64) } else { a as i64 })
                        })
                        .collect();
                    out.push(Word { letters });
                }
            });
        }
    }
    out.sort_by_cached_key(Word::order_key);
    out
}

/// Ordered compositions of `n` into positive parts.
fn compositions(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 1..=n {
        for mut rest in compositions(n - first) {
            rest.insert(0, first);
            out.push(rest);
        }
    }
    out
}

fn gen_sequences(g: usize, len: usize, acc: &mut Vec<usize>, emit: &mut dyn FnMut(&[usize])) {
    if acc.len() == len {
        emit(acc);
        return;
    }
    for next in 0..g {
        if acc.last() == Some(&next) {
            continue;
        }
        acc.push(next);
        gen_sequences(g, len, acc, emit);
        acc.pop();
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.letters.is_empty() {
            return f.write_str("id");
        }
        for (i, l) in self.letters.iter().rev().enumerate() {
            if i > 0 {
                f.write_str("·")?;
            }
            write!(f, "f{}^{}", l.gen.0, l.exp)?;
        }
        Ok(())
    }
}

impl FromStr for Word {
    type Err = WordError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "id" {
            return Ok(Word::identity());
        }
        let syntax = || WordError::Syntax(s.to_string());
        let mut letters = Vec::new();
        for block in s.split('·').rev() {
            let (g, n) = block
                .strip_prefix('f')
                .and_then(|b| b.split_once('^'))
                .ok_or_else(syntax)?;
            let g: usize = g.parse().map_err(|_| syntax())?;
            let n: i64 = n.parse().map_err(|_| syntax())?;
            letters.push(Letter::new(g, n));
        }
        Word::from_reduced(letters)
    }
}
