//! Finite injective partial maps on the surrogate space and partial
//! evaluation of words over them.

use imbl::OrdMap;
use thiserror::Error;

use crate::freewords::Word;
use crate::qspace::{PairVec, Vec1};

/// A point `<x | f(x)>` of a graph.
pub type GraphPoint = PairVec;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("{x} already maps to {existing}, cannot map it to {attempted}")]
    DomainClash {
        x: Vec1,
        existing: Vec1,
        attempted: Vec1,
    },
    #[error("{y} is already the image of {existing}, cannot also be the image of {attempted}")]
    InjectivityViolation {
        y: Vec1,
        existing: Vec1,
        attempted: Vec1,
    },
}

/// A finite partial injection with an inverse index. Both directions are
/// persistent maps, so clones share structure and stage snapshots are cheap.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PartialFn {
    forward: OrdMap<Vec1, Vec1>,
    backward: OrdMap<Vec1, Vec1>,
}

impl PartialFn {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Vec1, Vec1)>>(pairs: I) -> Result<Self, MapError> {
        let mut f = Self::new();
        for (x, y) in pairs {
            f.insert_mut(x, y)?;
        }
        Ok(f)
    }

    /// Returns `self ∪ {<x | y>}`, leaving `self` untouched.
    pub fn insert(&self, x: Vec1, y: Vec1) -> Result<PartialFn, MapError> {
        let mut next = self.clone();
        next.insert_mut(x, y)?;
        Ok(next)
    }

    pub fn insert_mut(&mut self, x: Vec1, y: Vec1) -> Result<(), MapError> {
        if let Some(existing) = self.forward.get(&x) {
            if *existing == y {
                return Ok(());
            }
            return Err(MapError::DomainClash {
                x,
                existing: existing.clone(),
                attempted: y,
            });
        }
        if let Some(existing) = self.backward.get(&y) {
            return Err(MapError::InjectivityViolation {
                y,
                existing: existing.clone(),
                attempted: x,
            });
        }
        self.forward.insert(x.clone(), y.clone());
        self.backward.insert(y, x);
        Ok(())
    }

    /// Writes both indices without any checks. A collision on the image
    /// leaves the two indices out of sync, which the injectivity checker
    /// reports. Used for loading untrusted dumps and planting corruptions.
    pub fn insert_unchecked(&mut self, x: Vec1, y: Vec1) {
        self.forward.insert(x.clone(), y.clone());
        self.backward.insert(y, x);
    }

    /// Deletes the point with first component `x`, if any.
    pub fn remove(&mut self, x: &Vec1) -> Option<Vec1> {
        let y = self.forward.remove(x)?;
        if self.backward.get(&y) == Some(x) {
            self.backward.remove(&y);
        }
        Some(y)
    }

    pub fn apply(&self, x: &Vec1) -> Option<&Vec1> {
        self.forward.get(x)
    }

    pub fn apply_inverse(&self, y: &Vec1) -> Option<&Vec1> {
        self.backward.get(y)
    }

    pub fn in_domain(&self, x: &Vec1) -> bool {
        self.forward.contains_key(x)
    }

    pub fn in_range(&self, y: &Vec1) -> bool {
        self.backward.contains_key(y)
    }

    pub fn len(&self) -> usize {
        self.forward.len()
    }

    pub fn is_empty(&self) -> bool {
        self.forward.is_empty()
    }

    pub fn domain(&self) -> impl Iterator<Item = &Vec1> {
        self.forward.keys()
    }

    pub fn range(&self) -> impl Iterator<Item = &Vec1> {
        self.backward.keys()
    }

    pub fn forward_pairs(&self) -> impl Iterator<Item = (&Vec1, &Vec1)> {
        self.forward.iter()
    }

    pub fn backward_pairs(&self) -> impl Iterator<Item = (&Vec1, &Vec1)> {
        self.backward.iter()
    }

    /// The graph as plane points, ordered by first component.
    pub fn graph(&self) -> Vec<GraphPoint> {
        self.forward
            .iter()
            .map(|(x, y)| PairVec::new(x.clone(), y.clone()))
            .collect()
    }

    pub fn contains_point(&self, x: &Vec1, y: &Vec1) -> bool {
        self.forward.get(x) == Some(y)
    }

    /// Literal graph inclusion `self ⊆ other`.
    pub fn is_subset_of(&self, other: &PartialFn) -> bool {
        self.forward.iter().all(|(x, y)| other.contains_point(x, y))
    }

    /// Points of `self` missing from `other`.
    pub fn missing_from(&self, other: &PartialFn) -> Vec<GraphPoint> {
        self.forward
            .iter()
            .filter(|(x, y)| !other.contains_point(x, y))
            .map(|(x, y)| PairVec::new(x.clone(), y.clone()))
            .collect()
    }

    /// Dump lines `  <x | y>`, sorted by the text of the first component.
    pub fn dump_lines(&self) -> Vec<String> {
        let mut rows: Vec<(String, String)> = self
            .forward
            .iter()
            .map(|(x, y)| (x.to_string(), y.to_string()))
            .collect();
        rows.sort();
        rows.into_iter()
            .map(|(x, y)| format!("  <{x} | {y}>"))
            .collect()
    }
}

/// Applies `w` to `x` letter by letter, right to left in composition order.
/// `None` as soon as a step is undefined.
pub fn eval_word(funcs: &[PartialFn], w: &Word, x: &Vec1) -> Option<Vec1> {
    let mut cur = x.clone();
    for l in w.letters() {
        let f = funcs.get(l.gen.0)?;
        for _ in 0..l.exp.unsigned_abs() {
            let next = if l.exp > 0 {
                f.apply(&cur)
            } else {
                f.apply_inverse(&cur)
            };
            cur = next?.clone();
        }
    }
    Some(cur)
}

/// The graph of the partial composition `w`, ordered by first component.
pub fn word_graph(funcs: &[PartialFn], w: &Word) -> Vec<GraphPoint> {
    let Some(first) = w.letters().first() else {
        return Vec::new();
    };
    let Some(f) = funcs.get(first.gen.0) else {
        return Vec::new();
    };
    let candidates: Box<dyn Iterator<Item = &Vec1>> = if first.exp > 0 {
        Box::new(f.domain())
    } else {
        Box::new(f.range())
    };
    let mut out: Vec<GraphPoint> = candidates
        .filter_map(|x| eval_word(funcs, w, x).map(|y| PairVec::new(x.clone(), y)))
        .collect();
    out.sort();
    out
}
