//! Acceptance suite. Runs every criterion, prints one line per criterion and
//! exits nonzero if any of them fails.

use std::collections::{BTreeSet, HashMap};
use std::time::Instant;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use hamel_forge::cli::{cmd_build, cmd_trace, cmd_verify, load_dump, render_state, Format};
use hamel_forge::dump;
use hamel_forge::engine::{
    default_stream, run, run_with_stream, AssertLevel, EngineConfig, EngineState, Requirement,
    SnapshotPolicy,
};
use hamel_forge::freewords::{concat, enumerate_words, inverse, GenId, Letter, Word};
use hamel_forge::partialmaps::{word_graph, GraphPoint};
use hamel_forge::qspace::{
    is_plif, parse_pair, parse_vec1, scalar, PairVec, Scalar, SpanBasis, Symbol, Vec1,
};
use hamel_forge::verify::{check_separation, verify_all, Status};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn config(g: usize, l: usize, stages: usize, seed: u64) -> EngineConfig {
    EngineConfig {
        generators: g,
        max_letters: l,
        stages,
        seed,
        ..EngineConfig::default()
    }
}

const CORE_CHECKS: [&str; 6] = [
    "plif_all",
    "injective",
    "growth",
    "monotone",
    "condition_v",
    "dom_rng",
];

fn soundness() -> Outcome {
    let mut grid = Vec::new();
    for g in 1..=3 {
        for l in 1..=3 {
            for stages in [10, 100, 500] {
                for seed in 0..5 {
                    grid.push(config(g, l, stages, seed));
                }
            }
        }
    }
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let failures: Vec<String> = grid
        .par_iter()
        .filter_map(|cfg| {
            let tag = format!(
                "G={} L={} stages={} seed={}",
                cfg.generators, cfg.max_letters, cfg.stages, cfg.seed
            );
            let state = match cmd_build(cfg) {
                Ok(s) => s,
                Err(e) => return Some(format!("{tag}: build exit {}: {}", e.code, e.message)),
            };
            let path = dir.path().join(format!(
                "g{}l{}n{}s{}.dump",
                cfg.generators, cfg.max_letters, cfg.stages, cfg.seed
            ));
            if let Err(e) = std::fs::write(&path, render_state(&state, Format::Text)) {
                return Some(format!("{tag}: {e}"));
            }
            let loaded = match load_dump(&path) {
                Ok(s) => s,
                Err(e) => return Some(format!("{tag}: reload: {}", e.message)),
            };
            if loaded.funcs != state.funcs || loaded.log != state.log {
                return Some(format!("{tag}: dump does not reload to the built state"));
            }
            // snapshots live in memory only, so monotonicity is checked there
            for (which, s) in [("built", &state), ("reloaded", &loaded)] {
                let (report, _) = cmd_verify(s, true);
                for name in CORE_CHECKS {
                    let c = report.get(name).expect("check present");
                    if c.status != Status::Pass {
                        return Some(format!("{tag} ({which}): {c}"));
                    }
                }
            }
            None
        })
        .collect();
    if failures.is_empty() {
        Ok(format!(
            "{} configurations, six core checks PASS",
            grid.len()
        ))
    } else {
        Err(format!("{} failing: {}", failures.len(), failures[0]))
    }
}

fn represent_witness() -> Outcome {
    let mut stages_seen = 0;
    for stages in [10, 100, 500] {
        for seed in 0..5 {
            let state = run(&config(1, 1, stages, seed)).map_err(|e| e.to_string())?;
            let mut spans: HashMap<usize, (Vec<GraphPoint>, SpanBasis)> = HashMap::new();
            for (k, (rec, tr)) in state.log.iter().zip(&state.traces).enumerate() {
                let Some(c) = &tr.step_i.chains else { continue };
                stages_seen += 1;
                let (graph, span) = spans.entry(rec.req.word_idx).or_insert_with(|| {
                    let g = word_graph(&state.funcs, &tr.step_i.word);
                    let s = SpanBasis::from_points_with_provenance(&g);
                    (g, s)
                });
                let target = PairVec::new(Vec1::zero(), rec.req.x.clone());
                let coeffs = span
                    .represent(&target)
                    .ok_or(format!("seed {seed} stage {k}: <0 | x_k> not represented"))?;
                let expect_a = PairVec::new(c.x.clone(), c.y.clone());
                let expect_b = PairVec::new(c.x.neg(), c.y_prime.clone());
                let support: Vec<(&GraphPoint, &Scalar)> = graph
                    .iter()
                    .zip(&coeffs)
                    .filter(|(_, q)| !q.is_zero())
                    .collect();
                let ok = support.len() == 2
                    && support
                        .iter()
                        .all(|(p, q)| q.is_one() && (**p == expect_a || **p == expect_b));
                if !ok {
                    return Err(format!(
                        "seed {seed} stages {stages} stage {k}: witness support {support:?}"
                    ));
                }
            }
        }
    }
    Ok(format!(
        "{stages_seen} non-skipped stages, all witnesses (1, 1)"
    ))
}

fn rename(v: &Vec1, names: &HashMap<Symbol, Symbol>) -> Vec1 {
    Vec1::from_terms(v.terms().iter().map(|(s, q)| (names[s], q.clone())))
}

fn sym(k: u64) -> Vec1 {
    Vec1::unit(Symbol(k))
}

struct HandTrace {
    word: &'static str,
    /// Inserted (generator, pair) in terms of x_k = 0, x = 1, then fresh
    /// symbols 2, 3, ... in allocation order: z_1..z_{s-1}, r_1..r_{s-1}, y.
    points: Vec<(usize, PairVec)>,
}

fn hand_traces() -> Vec<HandTrace> {
    let xk = sym(0);
    let x = sym(1);
    let p = |a: &Vec1, b: &Vec1| PairVec::new(a.clone(), b.clone());
    // f0^1: x -> y, -x -> x_k - y
    let y = sym(2);
    let f0 = vec![(0, p(&x, &y)), (0, p(&x.neg(), &(&xk - &y)))];
    // f0^-1: reversed hops y -> x, x_k - y -> -x
    let f0_inv = vec![(0, p(&y, &x)), (0, p(&(&xk - &y), &x.neg()))];
    // f1^1·f0^1: z1 = 2, r1 = 3, y = 4
    let (z1, r1, y) = (sym(2), sym(3), sym(4));
    let yp = &xk - &y;
    let two = vec![
        (0, p(&x, &z1)),
        (0, p(&x.neg(), &r1)),
        (1, p(&z1, &y)),
        (1, p(&r1, &yp)),
    ];
    vec![
        HandTrace {
            word: "f0^1",
            points: f0,
        },
        HandTrace {
            word: "f0^-1",
            points: f0_inv,
        },
        HandTrace {
            word: "f1^1·f0^1",
            points: two,
        },
    ]
}

/// Pulls `(generator, pair)` rows out of the inserted-points table.
fn parse_inserted(text: &str) -> Result<Vec<(usize, PairVec)>, String> {
    let mut out = Vec::new();
    let mut gen = None;
    let mut in_table = false;
    for line in text.lines() {
        if line.trim_start().starts_with("block |") {
            in_table = true;
            continue;
        }
        if !in_table {
            continue;
        }
        if !line.starts_with("  ") {
            break;
        }
        let cols: Vec<&str> = line.splitn(5, " | ").collect();
        if cols.len() != 5 {
            return Err(format!("bad table row {line:?}"));
        }
        if let Some(g) = cols[1].trim().strip_prefix('g') {
            gen = Some(g.parse::<usize>().map_err(|e| e.to_string())?);
        }
        let pt = parse_pair(cols[4].trim()).map_err(|e| e.to_string())?;
        out.push((gen.ok_or("row without generator")?, pt));
    }
    Ok(out)
}

fn field<'a>(text: &'a str, prefix: &str) -> Result<&'a str, String> {
    text.lines()
        .find_map(|l| l.trim_start().strip_prefix(prefix))
        .map(str::trim)
        .ok_or(format!("no {prefix:?} line"))
}

fn trace_fidelity() -> Outcome {
    let cfg = config(2, 2, 200, 0);
    let state = run(&cfg).map_err(|e| e.to_string())?;
    let mut matched = Vec::new();
    for hand in hand_traces() {
        let word: Word = hand.word.parse().map_err(|e| format!("{e}"))?;
        let stage = state
            .traces
            .iter()
            .position(|t| t.step_i.word == word && !t.step_i.skipped())
            .ok_or(format!("no extending stage for {word} in the default run"))?;
        let text = cmd_trace(&cfg, stage).map_err(|e| e.message)?;
        let xk = parse_vec1(
            field(&text, &format!("stage {stage}: x_k="))?
                .split(' ')
                .next()
                .unwrap(),
        )
        .map_err(|e| e.to_string())?;
        let xk = xk.as_unit().ok_or("x_k is not a single symbol")?;
        let got = parse_inserted(&text)?;
        // x_k becomes symbol 0; fresh symbols are numbered from 1 in
        // allocation order, which is increasing id order
        let fresh: BTreeSet<Symbol> = got
            .iter()
            .flat_map(|(_, p)| p.first.terms().iter().chain(p.second.terms()))
            .map(|(s, _)| *s)
            .filter(|s| *s != xk)
            .collect();
        let mut names: HashMap<Symbol, Symbol> = HashMap::from([(xk, Symbol(0))]);
        names.extend(fresh.into_iter().zip(1..).map(|(s, i)| (s, Symbol(i))));
        let renamed: Vec<(usize, PairVec)> = got
            .iter()
            .map(|(g, p)| {
                (
                    *g,
                    PairVec::new(rename(&p.first, &names), rename(&p.second, &names)),
                )
            })
            .collect();
        if renamed != hand.points {
            return Err(format!(
                "{word} at stage {stage}: got {renamed:?}, expected {:?}",
                hand.points
            ));
        }
        matched.push(format!("{word}@{stage}"));
    }
    Ok(format!("pair-for-pair match: {}", matched.join(", ")))
}

/// Dense rank over the rationals by plain Gaussian elimination.
fn dense_rank(rows: &[Vec<Scalar>]) -> usize {
    let mut m: Vec<Vec<Scalar>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| !m[r][c].is_zero()) else {
            continue;
        };
        m.swap(rank, p);
        let pivot = m[rank][c].clone();
        for r in 0..m.len() {
            if r != rank && !m[r][c].is_zero() {
                let f = &m[r][c] / &pivot;
                let pivot_row = m[rank].clone();
                for (dst, src) in m[r].iter_mut().zip(&pivot_row) {
                    *dst -= &f * src;
                }
            }
        }
        rank += 1;
    }
    rank
}

fn dense(p: &PairVec, symbols: u64) -> Vec<Scalar> {
    let mut row = vec![Scalar::zero(); 2 * symbols as usize];
    for (s, q) in p.first.terms() {
        row[s.0 as usize] = q.clone();
    }
    for (s, q) in p.second.terms() {
        row[(symbols + s.0) as usize] = q.clone();
    }
    row
}

fn random_vec(rng: &mut ChaCha8Rng, symbols: u64) -> Vec1 {
    let density = rng.gen_range(0.2..0.8);
    let mut terms = Vec::new();
    for s in 0..symbols {
        if rng.gen_bool(density) {
            terms.push((
                Symbol(s),
                scalar(rng.gen_range(-10..=10), rng.gen_range(1..=10)),
            ));
        }
    }
    Vec1::from_terms(terms)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0dd5);
    let (mut dependent, mut inside) = (0, 0);
    for i in 0..1000 {
        let symbols = rng.gen_range(1..=8);
        let n = rng.gen_range(0..=12);
        let mut points: Vec<PairVec> = Vec::new();
        for _ in 0..n {
            // sometimes plant a dependence on earlier points
            if !points.is_empty() && rng.gen_bool(0.2) {
                let a = &points[rng.gen_range(0..points.len())];
                let b = &points[rng.gen_range(0..points.len())];
                let q = scalar(rng.gen_range(-10..=10), rng.gen_range(1..=10));
                points.push(a.axpy(&q, b));
            } else {
                points.push(PairVec::new(
                    random_vec(&mut rng, symbols),
                    random_vec(&mut rng, symbols),
                ));
            }
        }
        let target = if !points.is_empty() && rng.gen_bool(0.5) {
            let mut t = PairVec::zero();
            for p in &points {
                t = t.axpy(&scalar(rng.gen_range(-10..=10), rng.gen_range(1..=10)), p);
            }
            t
        } else {
            PairVec::new(random_vec(&mut rng, symbols), random_vec(&mut rng, symbols))
        };
        let rows: Vec<Vec<Scalar>> = points.iter().map(|p| dense(p, symbols)).collect();
        let rank = dense_rank(&rows);
        let oracle_plif = rank == points.len();
        let mut with_target = rows.clone();
        with_target.push(dense(&target, symbols));
        let oracle_contains = dense_rank(&with_target) == rank;
        dependent += usize::from(!oracle_plif);
        inside += usize::from(oracle_contains);
        if is_plif(&points) != oracle_plif {
            return Err(format!("instance {i}: is_plif disagrees on {points:?}"));
        }
        let span = SpanBasis::from_points(&points);
        if span.contains(&target) != oracle_contains || span.rank() != rank {
            return Err(format!(
                "instance {i}: span disagrees on {points:?} / {target:?}"
            ));
        }
    }
    Ok(format!(
        "1000 instances, 0 disagreements ({dependent} dependent, {inside} targets in span)"
    ))
}

fn freeness() -> Outcome {
    let words = enumerate_words(2, 2);
    let cfg = EngineConfig {
        generators: 2,
        max_letters: 2,
        seed_symbols: words.len() as u64,
        ..EngineConfig::default()
    };
    let stream: Vec<Requirement> = (0..words.len())
        .map(|i| Requirement {
            x: sym(i as u64),
            word_idx: i,
            gen: GenId(i % 2),
        })
        .collect();
    let state = run_with_stream(&cfg, &stream).map_err(|e| e.to_string())?;
    if let Some(k) = state.log.iter().position(|r| r.skipped[0]) {
        return Err(format!("stage {k} skipped step I"));
    }
    let sep = check_separation(&state.funcs, &state.log, 2);
    if sep.status != Status::Pass || sep.counts.get("separated") != Some(&words.len()) {
        return Err(sep.to_string());
    }
    let mut pairs = 0;
    for a in &words {
        for b in &words {
            if a != b {
                pairs += 1;
                if concat(a, &inverse(b)).is_identity() {
                    return Err(format!("{a} · ({b})^-1 reduces to the identity"));
                }
            }
        }
    }
    Ok(format!(
        "{} words separated, {pairs} distinct pairs nontrivial",
        words.len()
    ))
}

/// Dump text without the stage count and the log.
fn family_part(text: &str) -> String {
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    let header = header.rsplit_once(" stages=").map_or(header, |(h, _)| h);
    let mut out = vec![header];
    out.extend(lines.take_while(|l| *l != "log:"));
    out.join("\n")
}

fn idempotence() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut runs = 0;
    for (g, l) in [(1, 1), (2, 2), (3, 3)] {
        let cfg = EngineConfig {
            snapshots: SnapshotPolicy::None,
            ..config(g, l, 100, 7)
        };
        let stream = default_stream(&cfg).map_err(|e| e.to_string())?;
        let built = run_with_stream(&cfg, &stream).map_err(|e| e.to_string())?;
        let d0 = dump::render_text(&built);
        let path = dir.path().join("state.dump");
        std::fs::write(&path, &d0).map_err(|e| e.to_string())?;
        let mut texts = vec![d0];
        for _ in 0..2 {
            let mut state = load_dump(&path).map_err(|e| e.message)?;
            let before = state.log.len();
            state.replay(&stream).map_err(|e| e.to_string())?;
            if let Some(r) = state.log[before..].iter().find(|r| r.skipped != [true; 3]) {
                return Err(format!("G={g} L={l}: replayed stage ran a step: {r:?}"));
            }
            let text = dump::render_text(&state);
            std::fs::write(&path, &text).map_err(|e| e.to_string())?;
            texts.push(text);
        }
        for t in &texts[1..] {
            if family_part(t) != family_part(&texts[0]) {
                return Err(format!("G={g} L={l}: replay changed the family"));
            }
        }
        runs += 1;
    }
    Ok(format!(
        "{runs} persisted states, two replays each: families and symbol counters byte-identical, every replayed step skipped"
    ))
}

fn failing_with_witness(state: &EngineState) -> Vec<String> {
    verify_all(state, state.max_letters)
        .checks
        .into_iter()
        .filter(|c| c.status == Status::Fail && !c.witnesses.is_empty())
        .map(|c| c.name)
        .collect()
}

fn mutation_sensitivity() -> Outcome {
    let cfg = EngineConfig {
        snapshots: SnapshotPolicy::None,
        assert_level: AssertLevel::End,
        ..config(2, 2, 100, 3)
    };
    let built = run(&cfg).map_err(|e| e.to_string())?;
    let base = dump::parse_text(&dump::render_text(&built)).map_err(|e| e.to_string())?;
    if !failing_with_witness(&base).is_empty() {
        return Err("unmutated state already fails".into());
    }
    let first_ii = built
        .traces
        .iter()
        .find_map(|t| t.step_ii.clone())
        .ok_or("no step II insertion")?;
    let g = built.log[0].req.gen.0;
    let mut report = Vec::new();

    let mut deleted = base.clone();
    let victim = built.traces[0]
        .step_i
        .chains
        .as_ref()
        .ok_or("stage 0 skipped step I")?
        .blocks[0]
        .clone();
    let gen0 = victim.gen.0;
    deleted.funcs[gen0].remove(&victim.points[0].first);
    report.push(("delete", failing_with_witness(&deleted)));

    let mut scaled = base.clone();
    let two = scalar(2, 1);
    scaled.funcs[g]
        .insert_mut(first_ii.first.scale(&two), first_ii.second.scale(&two))
        .map_err(|e| e.to_string())?;
    report.push(("scaled duplicate", failing_with_witness(&scaled)));

    let mut swapped = base.clone();
    swapped.funcs[g].remove(&first_ii.first);
    swapped.funcs[g].insert_unchecked(first_ii.second.clone(), first_ii.first.clone());
    report.push(("swap", failing_with_witness(&swapped)));

    let summary: Vec<String> = report
        .iter()
        .map(|(m, f)| format!("{m} -> [{}]", f.join(",")))
        .collect();
    if report.iter().any(|(_, f)| f.is_empty()) {
        return Err(format!("undetected mutation: {}", summary.join("; ")));
    }
    Ok(summary.join("; "))
}

/// Reduced words by brute force: all strings over `f_i^±1`, keep those with
/// no cancelling neighbours, then group runs into blocks.
fn brute_force_words(generators: usize, max_letters: usize) -> Vec<Word> {
    let alphabet: Vec<(usize, i64)> = (0..generators).flat_map(|g| [(g, 1), (g, -1)]).collect();
    let mut out = Vec::new();
    let mut frontier: Vec<Vec<(usize, i64)>> = vec![Vec::new()];
    for _ in 0..max_letters {
        let mut next = Vec::new();
        for s in &frontier {
            for &a in &alphabet {
                let mut t = s.clone();
                t.push(a);
                next.push(t);
            }
        }
        for s in &next {
            if s.windows(2)
                .all(|w| !(w[0].0 == w[1].0 && w[0].1 == -w[1].1))
            {
                let mut blocks: Vec<Letter> = Vec::new();
                for &(g, e) in s {
                    match blocks.last_mut() {
                        Some(b) if b.gen.0 == g => b.exp += e,
                        _ => blocks.push(Letter::new(g, e)),
                    }
                }
                out.push(Word::from_reduced(blocks).expect("runs form a reduced word"));
            }
        }
        frontier = next;
    }
    out
}

fn word_key(w: &Word) -> (usize, usize, Vec<(usize, bool, u64)>) {
    (
        w.letter_count(),
        w.blocks(),
        w.letters()
            .iter()
            .map(|l| (l.gen.0, l.exp < 0, l.exp.unsigned_abs()))
            .collect(),
    )
}

fn enumeration() -> Outcome {
    let mut sizes = Vec::new();
    for g in 1..=3 {
        for l in 1..=4 {
            let got = enumerate_words(g, l);
            let brute = brute_force_words(g, l);
            let got_set: BTreeSet<String> = got.iter().map(ToString::to_string).collect();
            let brute_set: BTreeSet<String> = brute.iter().map(ToString::to_string).collect();
            if got_set != brute_set || got.len() != brute.len() {
                return Err(format!(
                    "G={g} L={l}: {} vs {} words",
                    got.len(),
                    brute.len()
                ));
            }
            if !got.windows(2).all(|w| word_key(&w[0]) < word_key(&w[1])) {
                return Err(format!("G={g} L={l}: not strictly sorted by key"));
            }
            if enumerate_words(g, l) != got {
                return Err(format!("G={g} L={l}: unstable across calls"));
            }
            sizes.push(got.len());
        }
    }
    Ok(format!(
        "12 (G, L) cases match brute force, sizes {sizes:?}"
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("construction soundness", soundness),
        ("represent witness (1, 1)", represent_witness),
        ("step I trace fidelity", trace_fidelity),
        ("oracle equivalence", oracle_equivalence),
        ("freeness at finite scale", freeness),
        ("skip-branch idempotence", idempotence),
        ("mutation sensitivity", mutation_sensitivity),
        ("enumeration correctness", enumeration),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = f();
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
