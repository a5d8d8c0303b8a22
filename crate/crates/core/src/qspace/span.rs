use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::{One, Zero};

use super::{merge_axpy, PairVec, Scalar, Symbol, Vec1};

/// Which component of a plane point a coordinate belongs to. First-slot
/// coordinates order before second-slot ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Slot {
    First,
    Second,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coord {
    pub slot: Slot,
    pub symbol: Symbol,
}

type Sparse = Vec<(Coord, Scalar)>;

fn flatten(v: &PairVec) -> Sparse {
    let first = v.first.terms().iter().map(|(s, q)| {
        (
            Coord {
                slot: Slot::First,
                symbol: *s,
            },
            q.clone(),
        )
    });
    let second = v.second.terms().iter().map(|(s, q)| {
        (
            Coord {
                slot: Slot::Second,
                symbol: *s,
            },
            q.clone(),
        )
    });
    first.chain(second).collect()
}

fn unflatten(entries: &Sparse) -> PairVec {
    let mut first = Vec::new();
    let mut second = Vec::new();
    for (c, q) in entries {
        match c.slot {
            Slot::First => first.push((c.symbol, q.clone())),
            Slot::Second => second.push((c.symbol, q.clone())),
        }
    }
    PairVec::new(Vec1::from_terms(first), Vec1::from_terms(second))
}

#[derive(Debug, Clone)]
struct Row {
    pivot: Coord,
    entries: Sparse,
    /// Row as a combination of inserted generators (only with provenance).
    combo: Vec<(usize, Scalar)>,
}

/// Span of a set of plane points, kept in fully reduced row-echelon form:
/// every pivot has coefficient one in its row and zero in every other row.
///
/// A column index of non-pivot occurrences makes eliminating a new pivot
/// from the existing rows touch only the rows that actually contain it.
#[derive(Debug, Clone, Default)]
pub struct SpanBasis {
    rows: Vec<Row>,
    by_pivot: BTreeMap<Coord, usize>,
    occurrences: HashMap<Coord, HashSet<usize>>,
    generators: Option<Vec<PairVec>>,
}

impl SpanBasis {
    pub fn new() -> Self {
        Self::default()
    }

    /// A basis that records every inserted vector so that [`Self::represent`]
    /// can express members of the span in terms of them.
    pub fn with_provenance() -> Self {
        Self {
            generators: Some(Vec::new()),
            ..Self::default()
        }
    }

    pub fn from_points<'a, I: IntoIterator<Item = &'a PairVec>>(points: I) -> Self {
        let mut s = Self::new();
        for p in points {
            s.insert(p);
        }
        s
    }

    pub fn from_points_with_provenance<'a, I: IntoIterator<Item = &'a PairVec>>(points: I) -> Self {
        let mut s = Self::with_provenance();
        for p in points {
            s.insert(p);
        }
        s
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn generators(&self) -> Option<&[PairVec]> {
        self.generators.as_deref()
    }

    /// Rows in pivot order, each with its pivot coordinate.
    pub fn rows(&self) -> impl Iterator<Item = (Coord, PairVec)> + '_ {
        self.by_pivot
            .iter()
            .map(move |(c, &i)| (*c, unflatten(&self.rows[i].entries)))
    }

    /// Reduces `v` against the basis. Returns the remainder and, when
    /// `track` is set, the combination of generators that was subtracted.
    fn reduce(&self, v: &Sparse, track: bool) -> (Sparse, Vec<(usize, Scalar)>) {
        let mut rem = v.clone();
        let mut used: Vec<(usize, Scalar)> = Vec::new();
        for (c, q) in v {
            if let Some(&ri) = self.by_pivot.get(c) {
                let row = &self.rows[ri];
                // other rows vanish on this pivot, so q is still the current coefficient
                rem = merge_axpy(&rem, &-q, &row.entries);
                if track {
                    used = merge_axpy(&used, q, &row.combo);
                }
            }
        }
        (rem, used)
    }

    /// Inserts `v`; returns true iff it was outside the previous span.
    pub fn insert(&mut self, v: &PairVec) -> bool {
        let flat = flatten(v);
        let track = self.generators.is_some();
        let gen_index = match &mut self.generators {
            Some(g) => {
                g.push(v.clone());
                g.len() - 1
            }
            None => 0,
        };
        let (rem, used) = self.reduce(&flat, track);
        if rem.is_empty() {
            return false;
        }
        let (pivot, lead) = rem[0].clone();
        let inv = Scalar::one() / lead;
        let entries: Sparse = rem.into_iter().map(|(c, q)| (c, q * &inv)).collect();
        let combo = if track {
            // rem = v - used, so the new row is (gen - used) / lead
            let own = vec![(gen_index, Scalar::one())];
            merge_axpy(&own, &-Scalar::one(), &used)
                .into_iter()
                .map(|(g, q)| (g, q * &inv))
                .collect()
        } else {
            Vec::new()
        };

        if let Some(holders) = self.occurrences.remove(&pivot) {
            for ri in holders {
                let row = &self.rows[ri];
                let c = row
                    .entries
                    .iter()
                    .find(|(k, _)| *k == pivot)
                    .map(|(_, q)| q.clone())
                    .unwrap_or_else(Scalar::zero);
                let new_entries = merge_axpy(&row.entries, &-&c, &entries);
                let new_combo = if track {
                    merge_axpy(&row.combo, &-&c, &combo)
                } else {
                    Vec::new()
                };
                let old: Vec<Coord> = row.entries.iter().map(|(k, _)| *k).collect();
                let row_pivot = row.pivot;
                for (k, _) in &new_entries {
                    if *k != row_pivot && *k != pivot {
                        self.occurrences.entry(*k).or_default().insert(ri);
                    }
                }
                for k in old {
                    if k != pivot && !new_entries.iter().any(|(n, _)| *n == k) {
                        if let Some(set) = self.occurrences.get_mut(&k) {
                            set.remove(&ri);
                        }
                    }
                }
                let row = &mut self.rows[ri];
                row.entries = new_entries;
                row.combo = new_combo;
            }
        }

        let ri = self.rows.len();
        for (k, _) in entries.iter().skip(1) {
            self.occurrences.entry(*k).or_default().insert(ri);
        }
        self.by_pivot.insert(pivot, ri);
        self.rows.push(Row {
            pivot,
            entries,
            combo,
        });
        true
    }

    pub fn contains(&self, v: &PairVec) -> bool {
        let (rem, _) = self.reduce(&flatten(v), false);
        rem.is_empty()
    }

    /// Coefficients `q_i` over the recorded generators with `Σ q_i·gen_i = v`,
    /// or `None` when `v` is outside the span.
    ///
    /// Panics if the basis was built without provenance.
    pub fn represent(&self, v: &PairVec) -> Option<Vec<Scalar>> {
        let n = self
            .generators
            .as_ref()
            .expect("represent needs a basis built with provenance")
            .len();
        let (rem, used) = self.reduce(&flatten(v), true);
        if !rem.is_empty() {
            return None;
        }
        let mut out = vec![Scalar::zero(); n];
        for (g, q) in used {
            out[g] = q;
        }
        Some(out)
    }

    /// Checks the reduced-echelon invariants; used by tests.
    pub fn check_invariants(&self) -> Result<(), String> {
        if self.by_pivot.len() != self.rows.len() {
            return Err("pivot map out of sync with rows".into());
        }
        for (pivot, &ri) in &self.by_pivot {
            let row = &self.rows[ri];
            if row.entries.is_empty() {
                return Err(format!("row {ri} is zero"));
            }
            if row.pivot != *pivot || row.entries[0].0 != *pivot || !row.entries[0].1.is_one() {
                return Err(format!("row {ri} has a bad pivot"));
            }
            for (other_pivot, &rj) in &self.by_pivot {
                if rj != ri && self.rows[rj].entries.iter().any(|(k, _)| k == pivot) {
                    return Err(format!(
                        "pivot {pivot:?} of row {ri} also occurs in row with pivot {other_pivot:?}"
                    ));
                }
            }
        }
        Ok(())
    }
}

/// True iff the points are linearly independent over the rationals.
pub fn is_plif<'a, I: IntoIterator<Item = &'a PairVec>>(points: I) -> bool {
    let mut s = SpanBasis::new();
    points.into_iter().all(|p| s.insert(p))
}
