use std::fmt::Write;

use num_traits::Zero;

use super::EngineState;
use crate::partialmaps::word_graph;
use crate::qspace::{scalar_text, PairVec, SpanBasis, Vec1};

/// Human-readable account of stage `stage`: chains, block offsets and the
/// points each block inserted, or the span witness when step I was skipped.
pub fn render_trace(state: &EngineState, stage: usize) -> Result<String, String> {
    let record = state
        .log
        .get(stage)
        .ok_or_else(|| format!("stage {stage} out of range (0..{})", state.log.len()))?;
    let trace = state
        .traces
        .get(stage)
        .ok_or_else(|| format!("no trace recorded for stage {stage}"))?;
    let req = &record.req;
    let word = &trace.step_i.word;
    let mut out = String::new();
    let w = &mut out;
    let _ = writeln!(
        w,
        "stage {stage}: x_k={} word=#{} {} gen={}",
        req.x, req.word_idx, word, req.gen
    );
    match &trace.step_i.chains {
        None => {
            let _ = writeln!(w, "step I: skipped: <0 | {}> already in span", req.x);
            // the graph only grows, and it stays independent, so the
            // representation in the current graph is the one from that stage
            let graph = match state.snapshots.get(stage) {
                Some(snap) => word_graph(snap, word),
                None => word_graph(&state.funcs, word),
            };
            let span = SpanBasis::from_points_with_provenance(&graph);
            let target = PairVec::new(Vec1::zero(), req.x.clone());
            match span.represent(&target) {
                Some(coeffs) => {
                    for (q, p) in coeffs.iter().zip(&graph) {
                        if !q.is_zero() {
                            let _ = writeln!(w, "  witness ({}) {}", scalar_text(q), p);
                        }
                    }
                }
                None => {
                    let _ = writeln!(w, "  witness unavailable");
                }
            }
        }
        Some(c) => {
            let s = word.letter_count();
            let _ = writeln!(w, "step I: extended (s={s})");
            let _ = writeln!(w, "  x  = {}", c.x);
            let _ = writeln!(w, "  y  = {}", c.y);
            let _ = writeln!(w, "  y' = {}", c.y_prime);
            let join = |v: &[Vec1]| {
                v.iter()
                    .map(ToString::to_string)
                    .collect::<Vec<_>>()
                    .join(", ")
            };
            let _ = writeln!(w, "  z: {}", join(&c.z));
            let _ = writeln!(w, "  r: {}", join(&c.r));
            let offsets: Vec<String> = c.offsets.iter().map(ToString::to_string).collect();
            let _ = writeln!(w, "  p: {}", offsets.join(", "));
            let _ = writeln!(w, "  block | gen | exp | case | inserted");
            for (j, b) in c.blocks.iter().enumerate() {
                let case = if b.exp < 0 { "(a)" } else { "(b)" };
                for (i, p) in b.points.iter().enumerate() {
                    if i == 0 {
                        let _ = writeln!(
                            w,
                            "  {j:>5} | {:>3} | {:>3} | {case:>4} | {p}",
                            b.gen, b.exp
                        );
                    } else {
                        let _ =
                            writeln!(w, "  {:>5} | {:>3} | {:>3} | {:>4} | {p}", "", "", "", "");
                    }
                }
            }
        }
    }
    match &trace.step_ii {
        Some(p) => {
            let _ = writeln!(w, "step II: inserted {p} into {}", req.gen);
        }
        None => {
            let _ = writeln!(w, "step II: skipped: {} already in dom({})", req.x, req.gen);
        }
    }
    match &trace.step_iii {
        Some(p) => {
            let _ = writeln!(w, "step III: inserted {p} into {}", req.gen);
        }
        None => {
            let _ = writeln!(
                w,
                "step III: skipped: {} already in rng({})",
                req.x, req.gen
            );
        }
    }
    Ok(out)
}
