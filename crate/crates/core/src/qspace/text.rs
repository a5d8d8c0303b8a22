use num_bigint::BigInt;
use num_traits::{One, Zero};
use thiserror::Error;

use super::{PairVec, Scalar, Symbol, Vec1};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("cannot parse {what} from {input:?}")]
pub struct ParseError {
    pub what: &'static str,
    pub input: String,
}

impl ParseError {
    fn new(what: &'static str, input: &str) -> Self {
        Self {
            what,
            input: input.to_string(),
        }
    }
}

/// `p/q`, or `p` when the denominator is one.
pub fn scalar_text(q: &Scalar) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn parse_scalar(s: &str) -> Result<Scalar, ParseError> {
    let err = || ParseError::new("scalar", s);
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n, d),
        None => (s, "1"),
    };
    let n: BigInt = n.trim().parse().map_err(|_| err())?;
    let d: BigInt = d.trim().parse().map_err(|_| err())?;
    if d.is_zero() {
        return Err(err());
    }
    Ok(Scalar::new(n, d))
}

pub fn parse_symbol(s: &str) -> Result<Symbol, ParseError> {
    s.strip_prefix('s')
        .and_then(|k| k.parse::<u64>().ok())
        .map(Symbol)
        .ok_or_else(|| ParseError::new("symbol", s))
}

/// Parses `(p/q)s<k>+(p/q)s<k>...` or `0`. Input need not be canonical.
pub fn parse_vec1(s: &str) -> Result<Vec1, ParseError> {
    let s = s.trim();
    if s == "0" {
        return Ok(Vec1::zero());
    }
    let mut terms = Vec::new();
    for term in s.split('+') {
        let rest = term
            .strip_prefix('(')
            .ok_or_else(|| ParseError::new("vector term", term))?;
        let (q, sym) = rest
            .split_once(')')
            .ok_or_else(|| ParseError::new("vector term", term))?;
        terms.push((parse_symbol(sym)?, parse_scalar(q)?));
    }
    Ok(Vec1::from_terms(terms))
}

/// Parses `<v | w>`.
pub fn parse_pair(s: &str) -> Result<PairVec, ParseError> {
    let err = || ParseError::new("pair", s);
    let inner = s
        .trim()
        .strip_prefix('<')
        .and_then(|r| r.strip_suffix('>'))
        .ok_or_else(err)?;
    let (a, b) = inner.split_once('|').ok_or_else(err)?;
    Ok(PairVec::new(parse_vec1(a)?, parse_vec1(b)?))
}
