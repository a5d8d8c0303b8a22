//! Independent re-checking of a constructed family.
//!
//! Every check works from the raw graphs and the requirement log only. Spans
//! are rebuilt from scratch; engine traces are never consulted.

use std::collections::BTreeMap;
use std::fmt;
use std::time::Instant;

use num_traits::{One, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::engine::{EngineState, StageRecord};
use crate::freewords::{enumerate_words, GenId, Word};
use crate::partialmaps::{eval_word, word_graph, GraphPoint, PartialFn};
use crate::qspace::{scalar_text, PairVec, Scalar, SpanBasis, Vec1};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Status::Pass => "PASS",
            Status::Warn => "WARN",
            Status::Fail => "FAIL",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub status: Status,
    pub counts: BTreeMap<String, usize>,
    pub witnesses: Vec<String>,
}

impl CheckOutcome {
    fn new(name: &str) -> Self {
        Self {
            name: name.to_string(),
            status: Status::Pass,
            counts: BTreeMap::new(),
            witnesses: Vec::new(),
        }
    }

    fn count(mut self, key: &str, n: usize) -> Self {
        self.counts.insert(key.to_string(), n);
        self
    }

    fn fail(&mut self, witness: String) {
        self.status = Status::Fail;
        self.witnesses.push(witness);
    }

    fn warn(&mut self, witness: String) {
        if self.status == Status::Pass {
            self.status = Status::Warn;
        }
        self.witnesses.push(witness);
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let counts: Vec<String> = self
            .counts
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        write!(
            f,
            "CHECK {}: {} ({})",
            self.name,
            self.status,
            counts.join(" ")
        )?;
        for w in &self.witnesses {
            write!(f, "\n    {w}")?;
        }
        Ok(())
    }
}

/// Outcome of the whole suite. Timings are kept beside the outcomes and do
/// not take part in equality.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Report {
    pub letter_cap: usize,
    pub checks: Vec<CheckOutcome>,
    #[serde(default)]
    pub timings_ms: Vec<f64>,
}

impl PartialEq for Report {
    fn eq(&self, other: &Self) -> bool {
        self.letter_cap == other.letter_cap && self.checks == other.checks
    }
}

impl Report {
    pub fn get(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.status == Status::Pass)
    }

    pub fn any_fail(&self) -> bool {
        self.checks.iter().any(|c| c.status == Status::Fail)
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        Ok(())
    }
}

fn combination_text(terms: &[(Scalar, GraphPoint)]) -> String {
    terms
        .iter()
        .map(|(q, p)| format!("({}){p}", scalar_text(q)))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// A nontrivial vanishing combination of `points`, if they are dependent.
pub fn dependence_witness(points: &[GraphPoint]) -> Option<Vec<(Scalar, GraphPoint)>> {
    let mut span = SpanBasis::with_provenance();
    for (k, p) in points.iter().enumerate() {
        if let Some(coeffs) = span.represent(p) {
            // p = Σ q_i p_i, so Σ q_i p_i - p = 0
            let mut terms: Vec<(Scalar, GraphPoint)> = coeffs
                .into_iter()
                .zip(&points[..k])
                .filter(|(q, _)| !q.is_zero())
                .map(|(q, p)| (q, p.clone()))
                .collect();
            terms.push((-Scalar::one(), p.clone()));
            return Some(terms);
        }
        span.insert(p);
    }
    None
}

/// Independence of the graph of every word with at most `max_letters` letters.
pub fn check_plif_all(funcs: &[PartialFn], max_letters: usize) -> CheckOutcome {
    let words = enumerate_words(funcs.len().max(1), max_letters);
    let graphs: Vec<Vec<GraphPoint>> = words.par_iter().map(|w| word_graph(funcs, w)).collect();
    let failures: Vec<Option<Vec<(Scalar, GraphPoint)>>> =
        graphs.par_iter().map(|g| dependence_witness(g)).collect();
    let points: usize = graphs.iter().map(Vec::len).sum();
    let mut out = CheckOutcome::new("plif_all")
        .count("words", words.len())
        .count("points", points)
        .count("letter_cap", max_letters);
    let mut failing = 0;
    for (w, f) in words.iter().zip(&failures) {
        if let Some(terms) = f {
            failing += 1;
            if out.witnesses.is_empty() {
                out.fail(format!("word {w}: {} = 0", combination_text(terms)));
            }
        }
    }
    if failing > 0 {
        out.status = Status::Fail;
        out.counts.insert("failing".into(), failing);
    }
    out
}

/// Forward and inverse indices of every generator agree.
pub fn check_injective(funcs: &[PartialFn]) -> CheckOutcome {
    let mut out = CheckOutcome::new("injective").count("generators", funcs.len());
    let mut points = 0;
    for (g, f) in funcs.iter().enumerate() {
        points += f.len();
        for (x, y) in f.forward_pairs() {
            match f.apply_inverse(y) {
                Some(back) if back == x => {}
                Some(other) => out.fail(format!(
                    "g{g}: <{x} | {y}> and <{other} | {y}> share the image {y}"
                )),
                None => out.fail(format!("g{g}: <{x} | {y}> missing from the inverse index")),
            }
        }
        for (y, x) in f.backward_pairs() {
            if f.apply(x) != Some(y) {
                out.fail(format!("g{g}: inverse entry <{x} | {y}> not in the graph"));
            }
        }
    }
    out.count("points", points)
}

fn letters_of(words: &[Word], rec: &StageRecord) -> Option<usize> {
    words.get(rec.req.word_idx).map(Word::letter_count)
}

/// Total graph size against the per-stage budget `2s + 2`.
pub fn check_growth(funcs: &[PartialFn], log: &[StageRecord], words: &[Word]) -> CheckOutcome {
    let total: usize = funcs.iter().map(PartialFn::len).sum();
    let mut budget = 0;
    let mut out = CheckOutcome::new("growth");
    for (k, rec) in log.iter().enumerate() {
        match letters_of(words, rec) {
            Some(s) => budget += 2 * s + 2,
            None => out.fail(format!(
                "stage {k}: unknown word index {}",
                rec.req.word_idx
            )),
        }
    }
    if total > budget {
        out.fail(format!(
            "{total} points exceed the budget of {budget} for {} stages",
            log.len()
        ));
    }
    out.count("points", total).count("budget", budget)
}

/// Each snapshot's graphs are contained in the next one's.
pub fn check_monotone(snapshots: &[Vec<PartialFn>]) -> CheckOutcome {
    let mut out = CheckOutcome::new("monotone").count("snapshots", snapshots.len());
    for (k, pair) in snapshots.windows(2).enumerate() {
        let (before, after) = (&pair[0], &pair[1]);
        if after.len() < before.len() {
            out.fail(format!("snapshot {} lost generators", k + 1));
            continue;
        }
        for (g, (a, b)) in before.iter().zip(after).enumerate() {
            if let Some(p) = a.missing_from(b).first() {
                out.fail(format!(
                    "g{g}: {p} present after stage {k} but missing after stage {}",
                    k + 1
                ));
            }
        }
    }
    out
}

/// Coefficients on the word's graph expressing `<0 | x>`, nonzero terms
/// only, or `None` when `<0 | x>` is outside the span.
pub fn condition_v_witness(
    funcs: &[PartialFn],
    word: &Word,
    x: &Vec1,
) -> Option<Vec<(Scalar, GraphPoint)>> {
    let graph = word_graph(funcs, word);
    let span = SpanBasis::from_points_with_provenance(&graph);
    let coeffs = span.represent(&PairVec::new(Vec1::zero(), x.clone()))?;
    Some(
        coeffs
            .into_iter()
            .zip(graph)
            .filter(|(q, _)| !q.is_zero())
            .collect(),
    )
}

/// `<0 | x>` lies in the span of the logged word's graph for every stage.
pub fn check_condition_v(funcs: &[PartialFn], log: &[StageRecord], words: &[Word]) -> CheckOutcome {
    let mut by_word: BTreeMap<usize, Vec<(usize, &Vec1)>> = BTreeMap::new();
    let mut out = CheckOutcome::new("condition_v").count("stages", log.len());
    for (k, rec) in log.iter().enumerate() {
        if rec.req.word_idx < words.len() {
            by_word
                .entry(rec.req.word_idx)
                .or_default()
                .push((k, &rec.req.x));
        } else {
            out.fail(format!(
                "stage {k}: unknown word index {}",
                rec.req.word_idx
            ));
        }
    }
    let groups: Vec<(usize, Vec<(usize, &Vec1)>)> = by_word.into_iter().collect();
    let misses: Vec<Vec<(usize, String)>> = groups
        .par_iter()
        .map(|(wi, targets)| {
            let word = &words[*wi];
            let span = SpanBasis::from_points(&word_graph(funcs, word));
            targets
                .iter()
                .filter(|(_, x)| !span.contains(&PairVec::new(Vec1::zero(), (*x).clone())))
                .map(|(k, x)| (*k, format!("stage {k}: <0 | {x}> not in LIN({word})")))
                .collect()
        })
        .collect();
    let mut failed: Vec<(usize, String)> = misses.into_iter().flatten().collect();
    failed.sort();
    for (_, w) in failed {
        out.fail(w);
    }
    out.count("words", groups.len())
}

/// Every logged point is in both domain and range of its generator.
pub fn check_dom_rng(funcs: &[PartialFn], log: &[StageRecord]) -> CheckOutcome {
    let mut out = CheckOutcome::new("dom_rng").count("stages", log.len());
    for (k, rec) in log.iter().enumerate() {
        let g = rec.req.gen;
        let Some(f) = funcs.get(g.0) else {
            out.fail(format!("stage {k}: unknown generator {g}"));
            continue;
        };
        if !f.in_domain(&rec.req.x) {
            out.fail(format!("stage {k}: {} not in dom({g})", rec.req.x));
        }
        if !f.in_range(&rec.req.x) {
            out.fail(format!("stage {k}: {} not in rng({g})", rec.req.x));
        }
    }
    out
}

/// Every word with a point it moves is separated from the identity.
///
/// Unseparated words that never had a non-skipped step I are a warning;
/// unseparated words that had one are a failure. With an empty log the
/// check is vacuous.
pub fn check_separation(
    funcs: &[PartialFn],
    log: &[StageRecord],
    max_letters: usize,
) -> CheckOutcome {
    let words = enumerate_words(funcs.len().max(1), max_letters);
    let mut scheduled: BTreeMap<usize, bool> = BTreeMap::new();
    for rec in log {
        let extended = scheduled.entry(rec.req.word_idx).or_default();
        *extended |= !rec.skipped[0];
    }
    let separated: Vec<bool> = words
        .par_iter()
        .map(|w| {
            let first = w.letters()[0];
            let Some(f) = funcs.get(first.gen.0) else {
                return false;
            };
            let candidates: Box<dyn Iterator<Item = &Vec1>> = if first.exp > 0 {
                Box::new(f.domain())
            } else {
                Box::new(f.range())
            };
            candidates
                .into_iter()
                .any(|x| eval_word(funcs, w, x).is_some_and(|y| y != *x))
        })
        .collect();
    let mut out = CheckOutcome::new("separation").count("words", words.len());
    if log.is_empty() {
        return out.count("separated", 0);
    }
    let mut n_sep = 0;
    for (i, (w, sep)) in words.iter().zip(&separated).enumerate() {
        if *sep {
            n_sep += 1;
        } else if scheduled.get(&i).copied().unwrap_or(false) {
            out.fail(format!(
                "word {w}: extended by step I but fixes every point"
            ));
        } else {
            out.warn(format!("word {w}: unseparated (insufficient stages)"));
        }
    }
    out.count("separated", n_sep)
}

/// What a Hamel-criterion query is about.
#[derive(Debug, Clone)]
pub enum Target {
    Word(Word),
    Generator(GenId),
}

/// Points `x` with `<0 | x>` outside the span of the target's graph.
pub fn hamel_defect(funcs: &[PartialFn], target: &Target, points: &[Vec1]) -> Vec<Vec1> {
    let graph = match target {
        Target::Word(w) => word_graph(funcs, w),
        Target::Generator(g) => funcs.get(g.0).map(PartialFn::graph).unwrap_or_default(),
    };
    let span = SpanBasis::from_points(&graph);
    points
        .iter()
        .filter(|x| !span.contains(&PairVec::new(Vec1::zero(), (*x).clone())))
        .cloned()
        .collect()
}

/// Runs the whole suite. `snapshots` are the per-stage families; the final
/// family is appended when it differs from the last snapshot.
pub fn verify_all(state: &EngineState, max_letters: usize) -> Report {
    let words = enumerate_words(state.generators, state.max_letters);
    let mut chain: Vec<Vec<PartialFn>> = state.snapshots.clone();
    if chain.last() != Some(&state.funcs) {
        chain.push(state.funcs.clone());
    }
    let funcs = &state.funcs;
    let log = &state.log;
    let mut checks = Vec::new();
    let mut timings_ms = Vec::new();
    let mut timed = |f: &dyn Fn() -> CheckOutcome| {
        let t = Instant::now();
        checks.push(f());
        timings_ms.push(t.elapsed().as_secs_f64() * 1e3);
    };
    timed(&|| check_plif_all(funcs, max_letters));
    timed(&|| check_injective(funcs));
    timed(&|| check_growth(funcs, log, &words));
    timed(&|| check_monotone(&chain));
    timed(&|| check_condition_v(funcs, log, &words));
    timed(&|| check_dom_rng(funcs, log));
    timed(&|| check_separation(funcs, log, max_letters));
    Report {
        letter_cap: max_letters,
        checks,
        timings_ms,
    }
}
