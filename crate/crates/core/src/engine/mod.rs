//! Stage-by-stage construction of the generator family.
//!
//! Each stage takes one [`Requirement`] `(x, word, generator)` and runs
//! three steps, each with an "already satisfied" early exit:
//!
//! 1. make `<0 | x>` a member of the span of the word's graph, by threading
//!    a fresh point `x̂` to a fresh `y` and `-x̂` to `x - y` through chains of
//!    fresh intermediate values, one hop per letter;
//! 2. put `x` into the domain of the generator, mapping it to a fresh value;
//! 3. put `x` into the range of the generator, from a fresh argument.
//!
//! State is cumulative, so the empty initial family and unions at limit
//! stages need no code of their own.

mod schedule;
mod trace;

pub use schedule::Schedule;
pub use trace::render_trace;

use std::collections::{HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::freewords::{enumerate_words, GenId, Word};
use crate::partialmaps::{eval_word, word_graph, GraphPoint, MapError, PartialFn};
use crate::qspace::{is_plif, PairVec, SpanBasis, SymbolAllocator, Vec1};

/// One obligation: `<0 | x>` must enter the span of word `word_idx`, and
/// `x` must enter both domain and range of generator `gen`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Requirement {
    pub x: Vec1,
    pub word_idx: usize,
    pub gen: GenId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum SnapshotPolicy {
    None,
    #[default]
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum AssertLevel {
    /// Full independence sweep over every word after every stage.
    Stage,
    /// One sweep after the last stage.
    #[default]
    End,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineConfig {
    pub generators: usize,
    pub max_letters: usize,
    pub stages: usize,
    pub seed: u64,
    pub seed_symbols: u64,
    pub snapshots: SnapshotPolicy,
    pub assert_level: AssertLevel,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self {
            generators: 1,
            max_letters: 1,
            stages: 0,
            seed: 0,
            seed_symbols: 1,
            snapshots: SnapshotPolicy::All,
            assert_level: AssertLevel::End,
        }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        let bad = |m: &str| Err(EngineError::InvalidConfig(m.to_string()));
        if self.generators == 0 {
            return bad("generators must be at least 1");
        }
        if self.max_letters == 0 {
            return bad("max word letters must be at least 1");
        }
        if self.seed_symbols == 0 {
            return bad("seed symbols must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid requirement at stage {stage}: {reason}")]
    InvalidRequirement { stage: usize, reason: String },
    #[error("construction soundness failure at stage {stage}: {source}\n{trace}")]
    Map {
        stage: usize,
        #[source]
        source: MapError,
        trace: String,
    },
    #[error("step I postcondition failed at stage {stage}: {detail}")]
    Postcondition { stage: usize, detail: String },
    #[error("graph of word {word} is not linearly independent after stage {stage}")]
    Dependence { stage: usize, word: String },
}

/// Insertions made for one block of the word in step I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockInserts {
    pub gen: GenId,
    pub exp: i64,
    pub points: Vec<GraphPoint>,
}

/// The chains built by a non-skipped step I.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepIChains {
    pub x: Vec1,
    /// `z[0] = x`, `z[s] = y`.
    pub z: Vec<Vec1>,
    /// `r[0] = -x`, `r[s] = y'`.
    pub r: Vec<Vec1>,
    pub y: Vec1,
    pub y_prime: Vec1,
    /// Block offsets `p[0] = 0`, `p[j] = Σ_{i<j} |n_i|`, `p[m] = s`.
    pub offsets: Vec<usize>,
    pub blocks: Vec<BlockInserts>,
}

impl StepIChains {
    /// Every inserted point with its generator, in insertion order.
    pub fn added(&self) -> impl Iterator<Item = (GenId, &GraphPoint)> {
        self.blocks
            .iter()
            .flat_map(|b| b.points.iter().map(move |p| (b.gen, p)))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepITrace {
    pub word: Word,
    pub target: Vec1,
    /// `None` when `<0 | target>` was already in the span.
    pub chains: Option<StepIChains>,
}

impl StepITrace {
    pub fn skipped(&self) -> bool {
        self.chains.is_none()
    }
}

/// Full in-memory record of one stage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageTrace {
    pub step_i: StepITrace,
    pub step_ii: Option<GraphPoint>,
    pub step_iii: Option<GraphPoint>,
}

/// Log line for one stage: the requirement and which steps took their
/// early exit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageRecord {
    pub req: Requirement,
    pub skipped: [bool; 3],
}

#[derive(Debug, Clone)]
pub struct EngineState {
    pub generators: usize,
    pub max_letters: usize,
    pub words: Vec<Word>,
    pub funcs: Vec<PartialFn>,
    pub allocator: SymbolAllocator,
    pub log: Vec<StageRecord>,
    /// Parallel to `log` for states built in this process; empty for
    /// states loaded from a dump.
    pub traces: Vec<StageTrace>,
    /// `snapshots[k]` is the family after stage `k`.
    pub snapshots: Vec<Vec<PartialFn>>,
    pub snapshot_policy: SnapshotPolicy,
    pub assert_level: AssertLevel,
    /// Incremental spans of word graphs, keyed by word index. Valid because
    /// the engine only ever adds points.
    pub(crate) spans: HashMap<usize, WordSpan>,
}

#[derive(Debug, Clone, Default)]
pub(crate) struct WordSpan {
    basis: SpanBasis,
    seen: HashSet<GraphPoint>,
}

impl EngineState {
    /// Empty family with `seed_symbols` injected points `s0, s1, ...`.
    pub fn new(config: &EngineConfig) -> Result<Self, EngineError> {
        config.validate()?;
        let mut allocator = SymbolAllocator::new();
        for _ in 0..config.seed_symbols {
            allocator.fresh_symbol();
        }
        Ok(Self {
            generators: config.generators,
            max_letters: config.max_letters,
            words: enumerate_words(config.generators, config.max_letters),
            funcs: vec![PartialFn::new(); config.generators],
            allocator,
            log: Vec::new(),
            traces: Vec::new(),
            snapshots: Vec::new(),
            snapshot_policy: config.snapshots,
            assert_level: config.assert_level,
            spans: HashMap::new(),
        })
    }

    pub fn stage(&self) -> usize {
        self.log.len()
    }

    pub fn total_points(&self) -> usize {
        self.funcs.iter().map(PartialFn::len).sum()
    }

    pub fn word(&self, idx: usize) -> Option<&Word> {
        self.words.get(idx)
    }

    fn fatal(&self, source: MapError, partial: &str) -> EngineError {
        EngineError::Map {
            stage: self.stage(),
            source,
            trace: partial.to_string(),
        }
    }

    /// Span of the current graph of word `idx`, brought up to date.
    fn word_span(&mut self, idx: usize) -> &SpanBasis {
        let graph = word_graph(&self.funcs, &self.words[idx]);
        let cache = self.spans.entry(idx).or_default();
        for p in graph {
            if !cache.seen.contains(&p) {
                cache.basis.insert(&p);
                cache.seen.insert(p);
            }
        }
        &cache.basis
    }

    fn check_requirement(&self, req: &Requirement) -> Result<(), EngineError> {
        let stage = self.stage();
        let invalid = |reason: String| Err(EngineError::InvalidRequirement { stage, reason });
        if req.word_idx >= self.words.len() {
            return invalid(format!(
                "word index {} out of range ({} words)",
                req.word_idx,
                self.words.len()
            ));
        }
        if req.gen.0 >= self.generators {
            return invalid(format!("generator {} out of range", req.gen));
        }
        if req.x.is_zero() {
            return invalid("target point is zero".into());
        }
        if req
            .x
            .max_symbol()
            .is_some_and(|s| s.0 >= self.allocator.allocated())
        {
            return invalid(format!("target {} uses unallocated symbols", req.x));
        }
        Ok(())
    }

    /// Step I: make `<0 | req.x>` a member of the span of the graph of the
    /// requirement's word.
    pub fn step_v(&mut self, req: &Requirement) -> Result<StepITrace, EngineError> {
        self.check_requirement(req)?;
        let word = self.words[req.word_idx].clone();
        let target = PairVec::new(Vec1::zero(), req.x.clone());
        if self.word_span(req.word_idx).contains(&target) {
            return Ok(StepITrace {
                word,
                target: req.x.clone(),
                chains: None,
            });
        }

        let s = word.letter_count();
        let x = self.allocator.fresh();
        let mut z = vec![x.clone()];
        z.extend((1..s).map(|_| self.allocator.fresh()));
        let mut r = vec![x.neg()];
        r.extend((1..s).map(|_| self.allocator.fresh()));
        let y = self.allocator.fresh();
        let y_prime = &req.x - &y;
        z.push(y.clone());
        r.push(y_prime.clone());

        let mut offsets = vec![0];
        for l in word.letters() {
            offsets.push(offsets.last().unwrap() + l.exp.unsigned_abs() as usize);
        }

        let mut blocks = Vec::with_capacity(word.blocks());
        for (j, l) in word.letters().iter().enumerate() {
            let start = offsets[j];
            let hops = l.exp.unsigned_abs() as usize;
            let mut points = Vec::with_capacity(2 * hops);
            for chain in [&z, &r] {
                for t in 0..hops {
                    let (a, b) = (&chain[start + t], &chain[start + t + 1]);
                    // negative exponent: the hop a -> b is made by the inverse
                    let (from, to) = if l.exp > 0 { (a, b) } else { (b, a) };
                    points.push(PairVec::new(from.clone(), to.clone()));
                }
            }
            for p in &points {
                if let Err(e) = self.funcs[l.gen.0].insert_mut(p.first.clone(), p.second.clone()) {
                    return Err(self.fatal(e, &format!("step I for word {word}, block {j}")));
                }
            }
            blocks.push(BlockInserts {
                gen: l.gen,
                exp: l.exp,
                points,
            });
        }

        let chains = StepIChains {
            x: x.clone(),
            z,
            r,
            y: y.clone(),
            y_prime: y_prime.clone(),
            offsets,
            blocks,
        };
        let post = |detail: String| EngineError::Postcondition {
            stage: self.stage(),
            detail,
        };
        if eval_word(&self.funcs, &word, &x).as_ref() != Some(&y) {
            return Err(post(format!("{word} does not send {x} to {y}")));
        }
        if eval_word(&self.funcs, &word, &x.neg()).as_ref() != Some(&y_prime) {
            return Err(post(format!("{word} does not send -({x}) to {y_prime}")));
        }
        let stage = self.stage();
        if !self.word_span(req.word_idx).contains(&target) {
            return Err(EngineError::Postcondition {
                stage,
                detail: format!("<0 | {}> still outside span of {word}", req.x),
            });
        }
        Ok(StepITrace {
            word,
            target: req.x.clone(),
            chains: Some(chains),
        })
    }

    /// Step II: put `req.x` into the domain of the requirement's generator.
    pub fn step_vi(&mut self, req: &Requirement) -> Result<Option<GraphPoint>, EngineError> {
        self.check_requirement(req)?;
        if self.funcs[req.gen.0].in_domain(&req.x) {
            return Ok(None);
        }
        let y = self.allocator.fresh();
        if let Err(e) = self.funcs[req.gen.0].insert_mut(req.x.clone(), y.clone()) {
            return Err(self.fatal(e, "step II"));
        }
        Ok(Some(PairVec::new(req.x.clone(), y)))
    }

    /// Step III: put `req.x` into the range of the requirement's generator.
    pub fn step_vii(&mut self, req: &Requirement) -> Result<Option<GraphPoint>, EngineError> {
        self.check_requirement(req)?;
        if self.funcs[req.gen.0].in_range(&req.x) {
            return Ok(None);
        }
        let u = self.allocator.fresh();
        if let Err(e) = self.funcs[req.gen.0].insert_mut(u.clone(), req.x.clone()) {
            return Err(self.fatal(e, "step III"));
        }
        Ok(Some(PairVec::new(u, req.x.clone())))
    }

    /// One successor stage: steps I, II and III in order.
    pub fn run_stage(&mut self, req: &Requirement) -> Result<&StageTrace, EngineError> {
        let before = self.total_points();
        let step_i = self.step_v(req)?;
        let step_ii = self.step_vi(req)?;
        let step_iii = self.step_vii(req)?;
        let s = step_i.word.letter_count();
        let grown = self.total_points() - before;
        if grown > 2 * s + 2 {
            return Err(EngineError::Postcondition {
                stage: self.stage(),
                detail: format!("stage added {grown} points, budget {}", 2 * s + 2),
            });
        }
        self.log.push(StageRecord {
            req: req.clone(),
            skipped: [step_i.skipped(), step_ii.is_none(), step_iii.is_none()],
        });
        self.traces.push(StageTrace {
            step_i,
            step_ii,
            step_iii,
        });
        if self.snapshot_policy == SnapshotPolicy::All {
            self.snapshots.push(self.funcs.clone());
        }
        if self.assert_level == AssertLevel::Stage {
            self.assert_independent()?;
        }
        Ok(self.traces.last().unwrap())
    }

    /// Checks that every enumerated word has a linearly independent graph.
    pub fn assert_independent(&self) -> Result<(), EngineError> {
        let bad = self
            .words
            .par_iter()
            .find_first(|w| !is_plif(&word_graph(&self.funcs, w)));
        match bad {
            Some(w) => Err(EngineError::Dependence {
                stage: self.stage().saturating_sub(1),
                word: w.to_string(),
            }),
            None => Ok(()),
        }
    }

    /// Runs each requirement of `stream` as a stage.
    pub fn replay(&mut self, stream: &[Requirement]) -> Result<(), EngineError> {
        for req in stream {
            self.run_stage(req)?;
        }
        self.finish()
    }

    fn finish(&self) -> Result<(), EngineError> {
        if self.assert_level == AssertLevel::End {
            self.assert_independent()?;
        }
        Ok(())
    }

    pub fn requirements(&self) -> Vec<Requirement> {
        self.log.iter().map(|r| r.req.clone()).collect()
    }
}

/// Runs `config.stages` stages driven by the default [`Schedule`].
pub fn run(config: &EngineConfig) -> Result<EngineState, EngineError> {
    let mut state = EngineState::new(config)?;
    let mut schedule = Schedule::new(config.generators, state.words.len(), config.seed);
    for _ in 0..config.stages {
        let req = schedule.next(state.allocator.allocated());
        state.run_stage(&req)?;
    }
    state.finish()?;
    Ok(state)
}

/// Runs an explicitly supplied requirement stream from the empty family.
pub fn run_with_stream(
    config: &EngineConfig,
    stream: &[Requirement],
) -> Result<EngineState, EngineError> {
    let mut state = EngineState::new(config)?;
    state.replay(stream)?;
    Ok(state)
}

/// The requirement stream the default schedule produces for `config`.
/// Which points exist depends on earlier stages, so this runs the
/// construction and reads the stream back from the log.
pub fn default_stream(config: &EngineConfig) -> Result<Vec<Requirement>, EngineError> {
    let quiet = EngineConfig {
        snapshots: SnapshotPolicy::None,
        assert_level: AssertLevel::End,
        ..config.clone()
    };
    let mut state = EngineState::new(&quiet)?;
    let mut schedule = Schedule::new(quiet.generators, state.words.len(), quiet.seed);
    for _ in 0..quiet.stages {
        let req = schedule.next(state.allocator.allocated());
        state.run_stage(&req)?;
    }
    Ok(state.requirements())
}
