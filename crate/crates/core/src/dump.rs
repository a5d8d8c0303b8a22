//! Line-based state dumps and their JSON mirror.
//!
//! ```text
//! hamel-forge v1 G=2 stages=1
//! max-letters 2
//! symbols 5
//! gen 0:
//!   <(-1)s1 | (1)s0+(-1)s2>
//!   <(1)s0 | (1)s3>
//!   <(1)s1 | (1)s2>
//!   <(1)s4 | (1)s0>
//! gen 1:
//! log:
//!   0 x=(1)s0 word=#0:f0^1 gen=g0 I=run II=run III=run
//! ```
//!
//! Graph lines are sorted by the text of their first component.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::{AssertLevel, EngineState, Requirement, SnapshotPolicy, StageRecord};
use crate::freewords::{enumerate_words, GenId, Word};
use crate::partialmaps::PartialFn;
use crate::qspace::{parse_pair, parse_vec1, SymbolAllocator};

pub const MAGIC: &str = "hamel-forge v1";

#[derive(Debug, Error)]
pub enum DumpError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("structured dump: {0}")]
    Json(#[from] serde_json::Error),
}

fn perr<T>(line: usize, message: impl Into<String>) -> Result<T, DumpError> {
    Err(DumpError::Parse {
        line,
        message: message.into(),
    })
}

fn step_word(skipped: bool) -> &'static str {
    if skipped {
        "skip"
    } else {
        "run"
    }
}

pub fn render_text(state: &EngineState) -> String {
    let mut out = format!(
        "{MAGIC} G={} stages={}\nmax-letters {}\nsymbols {}\n",
        state.generators,
        state.log.len(),
        state.max_letters,
        state.allocator.allocated()
    );
    for (g, f) in state.funcs.iter().enumerate() {
        out.push_str(&format!("gen {g}:\n"));
        for line in f.dump_lines() {
            out.push_str(&line);
            out.push('\n');
        }
    }
    out.push_str("log:\n");
    for (k, rec) in state.log.iter().enumerate() {
        let word = &state.words[rec.req.word_idx];
        out.push_str(&format!(
            "  {k} x={} word=#{}:{} gen={} I={} II={} III={}\n",
            rec.req.x,
            rec.req.word_idx,
            word,
            rec.req.gen,
            step_word(rec.skipped[0]),
            step_word(rec.skipped[1]),
            step_word(rec.skipped[2]),
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredDump {
    pub format: String,
    pub generators: usize,
    pub stages: usize,
    pub max_letters: usize,
    pub symbols: u64,
    /// Graph lines per generator, in the text order.
    pub gens: Vec<Vec<String>>,
    pub log: Vec<StructuredStage>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructuredStage {
    pub stage: usize,
    pub x: String,
    pub word_idx: usize,
    pub word: String,
    pub gen: usize,
    pub steps: [String; 3],
}

pub fn to_structured(state: &EngineState) -> StructuredDump {
    StructuredDump {
        format: MAGIC.to_string(),
        generators: state.generators,
        stages: state.log.len(),
        max_letters: state.max_letters,
        symbols: state.allocator.allocated(),
        gens: state
            .funcs
            .iter()
            .map(|f| {
                f.dump_lines()
                    .into_iter()
                    .map(|l| l.trim().to_string())
                    .collect()
            })
            .collect(),
        log: state
            .log
            .iter()
            .enumerate()
            .map(|(k, rec)| StructuredStage {
                stage: k,
                x: rec.req.x.to_string(),
                word_idx: rec.req.word_idx,
                word: state.words[rec.req.word_idx].to_string(),
                gen: rec.req.gen.0,
                steps: rec.skipped.map(|s| step_word(s).to_string()),
            })
            .collect(),
    }
}

pub fn render_structured(state: &EngineState) -> String {
    let mut s = serde_json::to_string_pretty(&to_structured(state)).expect("dump serializes");
    s.push('\n');
    s
}

struct Builder {
    generators: usize,
    max_letters: usize,
    stages: usize,
    symbols: u64,
    words: Vec<Word>,
    funcs: Vec<PartialFn>,
    log: Vec<StageRecord>,
}

impl Builder {
    fn new(
        generators: usize,
        stages: usize,
        max_letters: usize,
        symbols: u64,
        line: usize,
    ) -> Result<Self, DumpError> {
        if generators == 0 || max_letters == 0 {
            return perr(line, "generator count and max letters must be positive");
        }
        Ok(Self {
            generators,
            max_letters,
            stages,
            symbols,
            words: enumerate_words(generators, max_letters),
            funcs: vec![PartialFn::new(); generators],
            log: Vec::new(),
        })
    }

    fn point(&mut self, g: usize, text: &str, line: usize) -> Result<(), DumpError> {
        let p = parse_pair(text).or_else(|e| perr(line, e.to_string()))?;
        for v in [&p.first, &p.second] {
            if v.max_symbol().is_some_and(|s| s.0 >= self.symbols) {
                return perr(line, format!("{v} uses a symbol beyond the symbol count"));
            }
        }
        let f = &mut self.funcs[g];
        if f.in_domain(&p.first) {
            return perr(
                line,
                format!("{} appears twice as a first component", p.first),
            );
        }
        // a repeated second component is kept; the injectivity check reports it
        f.insert_unchecked(p.first, p.second);
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn stage(
        &mut self,
        k: usize,
        x: &str,
        word_idx: usize,
        word: &str,
        gen: usize,
        steps: [&str; 3],
        line: usize,
    ) -> Result<(), DumpError> {
        if k != self.log.len() {
            return perr(
                line,
                format!("expected stage {}, found {k}", self.log.len()),
            );
        }
        let x = parse_vec1(x).or_else(|e| perr(line, e.to_string()))?;
        let Some(w) = self.words.get(word_idx) else {
            return perr(line, format!("word index {word_idx} out of range"));
        };
        if w.to_string() != word {
            return perr(line, format!("word #{word_idx} is {w}, not {word}"));
        }
        if gen >= self.generators {
            return perr(line, format!("generator g{gen} out of range"));
        }
        let mut skipped = [false; 3];
        for (slot, s) in skipped.iter_mut().zip(steps) {
            *slot = match s {
                "run" => false,
                "skip" => true,
                other => return perr(line, format!("step flag {other:?} is neither run nor skip")),
            };
        }
        self.log.push(StageRecord {
            req: Requirement {
                x,
                word_idx,
                gen: GenId(gen),
            },
            skipped,
        });
        Ok(())
    }

    fn finish(self, line: usize) -> Result<EngineState, DumpError> {
        if self.log.len() != self.stages {
            return perr(
                line,
                format!(
                    "header announces {} stages, log has {}",
                    self.stages,
                    self.log.len()
                ),
            );
        }
        Ok(EngineState {
            generators: self.generators,
            max_letters: self.max_letters,
            words: self.words,
            funcs: self.funcs,
            allocator: SymbolAllocator::resume(self.symbols),
            log: self.log,
            traces: Vec::new(),
            snapshots: Vec::new(),
            snapshot_policy: SnapshotPolicy::None,
            assert_level: AssertLevel::End,
            spans: Default::default(),
        })
    }
}

fn header_field<'a>(tok: Option<&'a str>, key: &str, line: usize) -> Result<&'a str, DumpError> {
    match tok.and_then(|t| t.strip_prefix(key)) {
        Some(v) => Ok(v),
        None => perr(line, format!("expected {key}<value>")),
    }
}

fn num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, DumpError> {
    s.parse()
        .or_else(|_| perr(line, format!("bad number {s:?}")))
}

pub fn parse_text(text: &str) -> Result<EngineState, DumpError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let (n, head) = lines.next().unwrap_or((1, ""));
    let rest = match head.strip_prefix(MAGIC) {
        Some(r) => r,
        None => return perr(n, format!("missing header {MAGIC:?}")),
    };
    let mut toks = rest.split_whitespace();
    let generators: usize = num(header_field(toks.next(), "G=", n)?, n)?;
    let stages: usize = num(header_field(toks.next(), "stages=", n)?, n)?;

    let mut keyed = |key: &str| -> Result<(usize, String), DumpError> {
        let (n, l) = lines.next().unwrap_or((0, ""));
        match l.strip_prefix(key) {
            Some(v) => Ok((n, v.trim().to_string())),
            None => perr(n, format!("expected {key:?}")),
        }
    };
    let (n2, ml) = keyed("max-letters ")?;
    let max_letters: usize = num(&ml, n2)?;
    let (n3, sy) = keyed("symbols ")?;
    let symbols: u64 = num(&sy, n3)?;
    let mut b = Builder::new(generators, stages, max_letters, symbols, n)?;

    enum Section {
        Gen(usize),
        Log,
    }
    let mut section: Option<Section> = None;
    let mut next_gen = 0;
    let mut last = n3;
    for (n, l) in lines {
        last = n;
        if l.trim().is_empty() {
            continue;
        }
        if let Some(g) = l.strip_prefix("gen ").and_then(|r| r.strip_suffix(':')) {
            let g: usize = num(g, n)?;
            if g != next_gen || g >= generators {
                return perr(n, format!("unexpected section gen {g}"));
            }
            next_gen += 1;
            section = Some(Section::Gen(g));
            continue;
        }
        if l == "log:" {
            if next_gen != generators {
                return perr(n, format!("log before all {generators} generator sections"));
            }
            section = Some(Section::Log);
            continue;
        }
        let Some(body) = l.strip_prefix("  ") else {
            return perr(n, format!("unexpected line {l:?}"));
        };
        match section {
            None => return perr(n, "content before any section"),
            Some(Section::Gen(g)) => b.point(g, body, n)?,
            Some(Section::Log) => {
                let t: Vec<&str> = body.split_whitespace().collect();
                if t.len() != 7 {
                    return perr(n, "log lines have 7 fields");
                }
                let k: usize = num(t[0], n)?;
                let x = header_field(Some(t[1]), "x=", n)?;
                let (wi, w) = header_field(Some(t[2]), "word=#", n)?
                    .split_once(':')
                    .map_or_else(|| perr(n, "expected word=#<idx>:<word>"), Ok)?;
                let wi: usize = num(wi, n)?;
                let g: usize = num(header_field(Some(t[3]), "gen=g", n)?, n)?;
                let steps = [
                    header_field(Some(t[4]), "I=", n)?,
                    header_field(Some(t[5]), "II=", n)?,
                    header_field(Some(t[6]), "III=", n)?,
                ];
                b.stage(k, x, wi, w, g, steps, n)?;
            }
        }
    }
    if !matches!(section, Some(Section::Log)) {
        return perr(last + 1, "missing log section");
    }
    b.finish(last + 1)
}

pub fn parse_structured(text: &str) -> Result<EngineState, DumpError> {
    let doc: StructuredDump = serde_json::from_str(text)?;
    if doc.format != MAGIC {
        return perr(0, format!("unknown format {:?}", doc.format));
    }
    if doc.gens.len() != doc.generators {
        return perr(0, "generator sections do not match G");
    }
    let mut b = Builder::new(doc.generators, doc.stages, doc.max_letters, doc.symbols, 0)?;
    for (g, pts) in doc.gens.iter().enumerate() {
        for p in pts {
            b.point(g, p, 0)?;
        }
    }
    for s in &doc.log {
        let steps = [
            s.steps[0].as_str(),
            s.steps[1].as_str(),
            s.steps[2].as_str(),
        ];
        b.stage(s.stage, &s.x, s.word_idx, &s.word, s.gen, steps, 0)?;
    }
    b.finish(0)
}

/// Loads either format; JSON is recognised by a leading `{`.
pub fn load(text: &str) -> Result<EngineState, DumpError> {
    if text.trim_start().starts_with('{') {
        parse_structured(text)
    } else {
        parse_text(text)
    }
}
