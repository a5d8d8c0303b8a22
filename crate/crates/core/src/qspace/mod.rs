//! Exact linear algebra over a symbolic vector space over the rationals.
//!
//! The space is spanned by countably many [`Symbol`]s which are handed out on
//! demand by a [`SymbolAllocator`]. A freshly allocated symbol has a support
//! strictly above every vector that existed before it, so it is never in the
//! span of those vectors.

mod span;
mod text;

pub use span::{is_plif, SpanBasis};
pub use text::{parse_pair, parse_scalar, parse_symbol, parse_vec1, scalar_text, ParseError};

use std::fmt;
use std::ops::{Add, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

/// Exact rational. `BigRational` keeps itself in lowest terms with a positive
/// denominator.
pub type Scalar = BigRational;

pub fn scalar(n: i64, d: i64) -> Scalar {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Scalar {
    BigRational::from_integer(BigInt::from(n))
}

/// Index of a basis element of the surrogate space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Symbol(pub u64);

impl Symbol {
    pub fn id(self) -> u64 {
        self.0
    }
}

/// Hands out symbols with strictly increasing ids.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SymbolAllocator {
    next: u64,
}

impl SymbolAllocator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Resume an allocator that has already handed out ids `0..next`.
    pub fn resume(next: u64) -> Self {
        Self { next }
    }

    pub fn fresh_symbol(&mut self) -> Symbol {
        let s = Symbol(self.next);
        self.next += 1;
        s
    }

    pub fn fresh(&mut self) -> Vec1 {
        Vec1::unit(self.fresh_symbol())
    }

    /// Number of symbols allocated so far (also the id of the next one).
    pub fn allocated(&self) -> u64 {
        self.next
    }
}

/// A finite rational combination of symbols, kept canonical: sorted by
/// symbol id with no zero coefficients. Structural equality is therefore
/// mathematical equality.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Vec1 {
    terms: Vec<(Symbol, Scalar)>,
}

impl Vec1 {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn unit(s: Symbol) -> Self {
        Self {
            terms: vec![(s, Scalar::one())],
        }
    }

    /// Builds a canonical vector from arbitrary terms; repeated symbols are
    /// summed and zero coefficients dropped.
    pub fn from_terms<I>(terms: I) -> Self
    where
        I: IntoIterator<Item = (Symbol, Scalar)>,
    {
        let mut raw: Vec<(Symbol, Scalar)> = terms.into_iter().collect();
        raw.sort_by_key(|(s, _)| *s);
        let mut out: Vec<(Symbol, Scalar)> = Vec::with_capacity(raw.len());
        for (s, q) in raw {
            match out.last_mut() {
                Some((last, acc)) if *last == s => *acc += q,
                _ => out.push((s, q)),
            }
        }
        out.retain(|(_, q)| !q.is_zero());
        Self { terms: out }
    }

    pub fn terms(&self) -> &[(Symbol, Scalar)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, s: Symbol) -> Scalar {
        match self.terms.binary_search_by_key(&s, |(t, _)| *t) {
            Ok(i) => self.terms[i].1.clone(),
            Err(_) => Scalar::zero(),
        }
    }

    /// Largest symbol in the support.
    pub fn max_symbol(&self) -> Option<Symbol> {
        self.terms.last().map(|(s, _)| *s)
    }

    /// The single symbol if this vector is exactly `1·s`.
    pub fn as_unit(&self) -> Option<Symbol> {
        match self.terms.as_slice() {
            [(s, q)] if q.is_one() => Some(*s),
            _ => None,
        }
    }

    pub fn add(&self, other: &Vec1) -> Vec1 {
        self.axpy(&Scalar::one(), other)
    }

    pub fn neg(&self) -> Vec1 {
        Vec1 {
            terms: self.terms.iter().map(|(s, q)| (*s, -q)).collect(),
        }
    }

    pub fn scale(&self, q: &Scalar) -> Vec1 {
        if q.is_zero() {
            return Vec1::zero();
        }
        Vec1 {
            terms: self.terms.iter().map(|(s, c)| (*s, c * q)).collect(),
        }
    }

    /// `self + q·other`, merging the sorted supports.
    pub fn axpy(&self, q: &Scalar, other: &Vec1) -> Vec1 {
        Vec1 {
            terms: merge_axpy(&self.terms, q, &other.terms),
        }
    }
}

impl Add for &Vec1 {
    type Output = Vec1;
    fn add(self, rhs: &Vec1) -> Vec1 {
        Vec1::add(self, rhs)
    }
}

impl Sub for &Vec1 {
    type Output = Vec1;
    fn sub(self, rhs: &Vec1) -> Vec1 {
        self.axpy(&-Scalar::one(), rhs)
    }
}

impl Neg for &Vec1 {
    type Output = Vec1;
    fn neg(self) -> Vec1 {
        Vec1::neg(self)
    }
}

pub fn vec_add(a: &Vec1, b: &Vec1) -> Vec1 {
    a.add(b)
}

pub fn vec_neg(a: &Vec1) -> Vec1 {
    a.neg()
}

pub fn vec_scale(q: &Scalar, a: &Vec1) -> Vec1 {
    a.scale(q)
}

/// `a + q·b` over sorted sparse term lists.
pub(crate) fn merge_axpy<K: Ord + Copy>(
    a: &[(K, Scalar)],
    q: &Scalar,
    b: &[(K, Scalar)],
) -> Vec<(K, Scalar)> {
    if q.is_zero() {
        return a.to_vec();
    }
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i].clone());
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push((b[j].0, q * &b[j].1));
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                let c = &a[i].1 + q * &b[j].1;
                if !c.is_zero() {
                    out.push((a[i].0, c));
                }
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend(b[j..].iter().map(|(k, c)| (*k, q * c)));
    out
}

/// A point of the plane `V × V`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PairVec {
    pub first: Vec1,
    pub second: Vec1,
}

impl PairVec {
    pub fn new(first: Vec1, second: Vec1) -> Self {
        Self { first, second }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn is_zero(&self) -> bool {
        self.first.is_zero() && self.second.is_zero()
    }

    pub fn transpose(&self) -> PairVec {
        PairVec::new(self.second.clone(), self.first.clone())
    }

    pub fn scale(&self, q: &Scalar) -> PairVec {
        PairVec::new(self.first.scale(q), self.second.scale(q))
    }

    pub fn axpy(&self, q: &Scalar, other: &PairVec) -> PairVec {
        PairVec::new(
            self.first.axpy(q, &other.first),
            self.second.axpy(q, &other.second),
        )
    }
}

impl fmt::Display for Symbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "s{}", self.0)
    }
}

impl fmt::Display for Vec1 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (i, (s, q)) in self.terms.iter().enumerate() {
            if i > 0 {
                f.write_str("+")?;
            }
            write!(f, "({}){}", scalar_text(q), s)?;
        }
        Ok(())
    }
}

impl fmt::Display for PairVec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<{} | {}>", self.first, self.second)
    }
}
