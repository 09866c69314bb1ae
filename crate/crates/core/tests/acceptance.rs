//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if
//! any criterion fails.

mod common;

use std::collections::BTreeSet;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use implcache::canon::{canonize, normalize_atomic, slice, Normalized};
use implcache::cli::{config_for, replay, Report};
use implcache::corpus::Corpus;
use implcache::expr::{parse, Atom, CmpOp};
use implcache::gen::{generate, GenSpec, Mutation};
use implcache::imply::rule_table;
use implcache::pipeline::{
    compute_metrics, Answer, Config, Engine, Provenance, QueryOutcome, Stats, Stores, Strategy,
};
use implcache::query::{check_subset, check_superset, oracle_subset, oracle_superset};
use implcache::reduce::merge_group;
use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;
type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (
            "examples 1-4 corpus: 4 solver calls, pair seconds reused",
            examples_corpus,
        ),
        (
            "section 4 worked example reduces character for character",
            worked_example,
        ),
        ("rule table soundness, exhaustive", rule_soundness),
        (
            "oracle equivalence on 10^4 random (store, query) pairs",
            oracle_equivalence,
        ),
        (
            "verdict soundness, logic vs no reuse, 10^4 queries at D=50",
            verdict_soundness,
        ),
        (
            "hit monotonicity, logic hits contain exact hits",
            hit_monotonicity,
        ),
        (
            "cross-run reuse of a deletion-edited corpus",
            cross_run_deletion,
        ),
        ("metric formulas on published counts", metric_formulas),
        (
            "persistence round trip preserves a 10^3-query replay",
            persistence,
        ),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let verdict = check();
        let secs = start.elapsed().as_secs_f64();
        match verdict {
            Ok(detail) => println!("PASS  [{}] {name} ({detail}; {secs:.2}s)", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL  [{}] {name} ({detail}; {secs:.2}s)", i + 1);
            }
        }
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn within(start: Instant, limit: Duration, what: &str) -> Result<(), String> {
    let took = start.elapsed();
    if took > limit {
        Err(format!("{what} took {took:.2?}, limit {limit:?}"))
    } else {
        Ok(())
    }
}

const EXAMPLES: &str = "\
x>0 && x<y && y-x>1\t0
x<y && y-x>1\t0
x<0 && x>1\t0
x<0 && x>1 && x!=10\t0
x<-1\t0
x<0 && x!=-1\t0
x<0 && x>1\t0
x<-1 && x>2\t0
";

fn examples_corpus() -> Verdict {
    let start = Instant::now();
    let corpus = Corpus::parse(EXAMPLES).map_err(|e| e.to_string())?;
    let mut engine = Engine::new(config_for(&corpus, Strategy::Logic, 50), Stores::default());
    let out = replay(&mut engine, &corpus).map_err(|e| e.to_string())?;
    within(start, Duration::from_secs(1), "replay")?;
    let seconds: Vec<Provenance> = out
        .iter()
        .skip(1)
        .step_by(2)
        .map(|o| o.provenance)
        .collect();
    let expected = [
        Provenance::ReusedSat,
        Provenance::ReusedUnsat,
        Provenance::ReusedSat,
        Provenance::ReusedUnsat,
    ];
    let answers: Vec<Answer> = out.iter().map(|o| o.answer).collect();
    let paper_answers = [
        Answer::Sat,
        Answer::Sat,
        Answer::Unsat,
        Answer::Unsat,
        Answer::Sat,
        Answer::Sat,
        Answer::Unsat,
        Answer::Unsat,
    ];
    let all: Vec<&str> = out.iter().map(|o| o.provenance.name()).collect();
    let detail = format!(
        "solver_calls={}, provenance=[{}]",
        engine.stats.solver_calls,
        all.join(",")
    );
    if answers != paper_answers {
        return Err(format!("wrong verdicts {answers:?}; {detail}"));
    }
    if engine.stats.solver_calls == 4 && seconds == expected {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn atom(text: &str) -> Atom {
    match normalize_atomic(&parse(text).unwrap()[0]) {
        Normalized::Atom(a) => a,
        other => panic!("{other:?}"),
    }
}

fn worked_example() -> Verdict {
    let group: Vec<Atom> = [
        "x+y+3>=0", "x+y+5>=0", "x+y-4<=0", "x+y!=0", "x+y+6!=0", "x+y-4!=0",
    ]
    .iter()
    .map(|t| atom(t))
    .collect();
    let merged = merge_group(&group).map_err(|c| format!("unexpected {c}"))?;
    let text = merged
        .iter()
        .map(Atom::key)
        .collect::<Vec<_>>()
        .join(" && ");
    let want = "x+y+3>=0 && x+y-3<=0 && x+y!=0";
    if text == want {
        Ok(text)
    } else {
        Err(format!("got `{text}`, want `{want}`"))
    }
}

fn holds(op: CmpOp, v: i64) -> bool {
    op.holds(&BigInt::from(v))
}

fn rule_soundness() -> Verdict {
    let start = Instant::now();
    let mut firings = 0u64;
    let mut unsound = Vec::new();
    for p in common::OPS {
        for c in common::OPS {
            for n in -10i64..=10 {
                for n2 in -10i64..=10 {
                    if !rule_table(p, c, &BigInt::from(n), &BigInt::from(n2)) {
                        continue;
                    }
                    firings += 1;
                    if (-30i64..=30).any(|t| holds(p, t + n) && !holds(c, t + n2)) {
                        unsound.push(format!("{p:?}{n}->{c:?}{n2}"));
                    }
                }
            }
        }
    }
    within(start, Duration::from_secs(5), "rule check")?;
    if unsound.is_empty() {
        Ok(format!("{firings} firings, 0 unsound"))
    } else {
        Err(format!("unsound firings: {}", unsound.join(" ")))
    }
}

fn oracle_equivalence() -> Verdict {
    const PAIRS: u64 = 10_000;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let (mut sup_hits, mut sub_hits, mut literal_divergences) = (0, 0, 0);
    let mut problems = Vec::new();
    for i in 0..PAIRS {
        let w = common::workload(&mut rng);
        let got = check_superset(&w.query, &w.scs);
        let want = oracle_superset(&w.query, &w.scs);
        if got.is_some() != want.is_some() {
            problems.push(format!(
                "pair {i}: superset {} vs oracle {}",
                got.is_some(),
                want.is_some()
            ));
        }
        if let Some(sol) = &got {
            sup_hits += 1;
            if !w.query.holds(sol).unwrap_or(false) {
                problems.push(format!("pair {i}: solution {sol} violates {}", w.query));
            }
        }
        if common::literal_check_superset(&w.query, &w.scs) != want.is_some() {
            literal_divergences += 1;
        }
        let sub = check_subset(&w.query, &w.ucs);
        if sub != oracle_subset(&w.query, &w.ucs) {
            problems.push(format!("pair {i}: subset {sub} disagrees with oracle"));
        }
        sub_hits += sub as u64;
    }
    within(start, Duration::from_secs(60), "oracle pairs")?;
    let detail = format!(
        "{PAIRS} pairs, {sup_hits} superset hits, {sub_hits} subset hits, \
         printed Algorithm 1 diverges on {literal_divergences}"
    );
    if problems.is_empty() {
        Ok(detail)
    } else {
        problems.truncate(5);
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

/// Generated corpora in the envelope; sizes sum to `total` queries.
fn corpora(total: usize, seed0: u64, mutation: Mutation) -> Vec<(Corpus, Option<Corpus>)> {
    let per = 500;
    (0..total.div_ceil(per))
        .map(|i| {
            let spec = GenSpec {
                seed: seed0 + i as u64,
                paths: per.min(total - i * per),
                var_count: 2 + i % 3,
                mutation,
                ..GenSpec::default()
            };
            generate(&spec).expect("valid spec")
        })
        .collect()
}

fn run(corpus: &Corpus, strategy: Strategy, stores: Stores) -> (Vec<QueryOutcome>, Engine) {
    let mut engine = Engine::new(config_for(corpus, strategy, 50), stores);
    let out = replay(&mut engine, corpus).expect("generated corpus replays");
    (out, engine)
}

fn verdict_soundness() -> Verdict {
    let start = Instant::now();
    let mut queries = 0;
    let mut problems = Vec::new();
    let mut unknown = 0;
    for (corpus, _) in corpora(10_000, 100, Mutation::None) {
        let (logic, _) = run(&corpus, Strategy::Logic, Stores::default());
        let (plain, _) = run(&corpus, Strategy::NoReuse, Stores::default());
        for ((line, l), p) in corpus.lines.iter().zip(&logic).zip(&plain) {
            queries += 1;
            unknown += (p.answer == Answer::Unknown) as u64;
            if l.answer != p.answer {
                problems.push(format!(
                    "`{}`: logic {} vs solver {}",
                    line.text, l.answer, p.answer
                ));
            }
            if let Some(sol) = &l.solution {
                let sliced = slice(&line.raw, line.fresh_count);
                let canon = canonize(&sliced);
                let ok = sliced.iter().all(|r| match normalize_atomic(r) {
                    Normalized::Atom(a) => a.holds(sol).unwrap_or(false),
                    Normalized::True => true,
                    Normalized::False => false,
                });
                if !ok || canon.contradiction {
                    problems.push(format!(
                        "`{}`: solution {sol} does not satisfy it",
                        line.text
                    ));
                }
            }
        }
    }
    within(start, Duration::from_secs(300), "verdict replay")?;
    let detail = format!("{queries} queries, {unknown} unknown");
    if unknown > 0 {
        problems.push(format!("{unknown} queries unknown to the solver"));
    }
    if problems.is_empty() {
        Ok(detail)
    } else {
        problems.truncate(5);
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn hit_indices(out: &[QueryOutcome]) -> BTreeSet<usize> {
    out.iter()
        .enumerate()
        .filter(|(_, o)| o.provenance.is_hit())
        .map(|(i, _)| i)
        .collect()
}

fn hit_monotonicity() -> Verdict {
    let mut checked = 0;
    let (mut logic_hits, mut exact_hits) = (0, 0);
    let mut problems = Vec::new();
    for mutation in [Mutation::None, Mutation::Add, Mutation::Del, Mutation::Mod] {
        for (base, edited) in corpora(2_000, 300, mutation) {
            for corpus in std::iter::once(&base).chain(edited.as_ref()) {
                let (l, _) = run(corpus, Strategy::Logic, Stores::default());
                let (e, _) = run(corpus, Strategy::ExactMatch, Stores::default());
                let (lh, eh) = (hit_indices(&l), hit_indices(&e));
                checked += 1;
                logic_hits += lh.len();
                exact_hits += eh.len();
                if let Some(i) = eh.difference(&lh).next() {
                    problems.push(format!("exact hit at line {} missed by logic", i + 1));
                }
            }
        }
    }
    let detail = format!("{checked} corpora, {logic_hits} logic hits vs {exact_hits} exact hits");
    if problems.is_empty() {
        Ok(detail)
    } else {
        problems.truncate(5);
        Err(format!("{detail}; {}", problems.join("; ")))
    }
}

fn cross_run_deletion() -> Verdict {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut details = Vec::new();
    let mut failures = Vec::new();
    for (i, (base, edited)) in corpora(2_500, 700, Mutation::Del).into_iter().enumerate() {
        let edited = edited.expect("deletion requested");
        for strategy in [Strategy::ExactMatch, Strategy::Logic] {
            let (_, first) = run(&base, strategy, Stores::default());
            let path = dir.path().join(format!("{i}-{strategy}"));
            first.stores.save_dir(&path).map_err(|e| e.to_string())?;
            let stores = Stores::load_dir(&path).map_err(|e| e.to_string())?;
            let (_, second) = run(&edited, strategy, stores);
            details.push(format!("{strategy}:{}", second.stats.solver_calls));
            if second.stats.solver_calls != 0 {
                failures.push(format!(
                    "corpus {i} under {strategy}: {} solver calls on replay",
                    second.stats.solver_calls
                ));
            }
        }
    }
    let detail = format!("replay solver calls {}", details.join(" "));
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("{detail}; {}", failures.join("; ")))
    }
}

fn metric_formulas() -> Verdict {
    let run = |n: u64| Stats {
        queries: 1_000,
        solver_calls: n,
        ..Stats::default()
    };
    let pct = |r: Option<f64>| r.map(|r| format!("{:.2}%", r * 100.0));
    let r = pct(compute_metrics(&run(680), &run(14))
        .map_err(|e| e.to_string())?
        .reuse_ratio);
    let r2 = pct(compute_metrics(&run(41), &run(14))
        .map_err(|e| e.to_string())?
        .reuse_ratio);
    let zero = compute_metrics(&run(0), &run(0))
        .map_err(|e| e.to_string())?
        .reuse_ratio;
    let detail = format!("R={r:?} R'={r2:?} 0/0={zero:?}");
    if r.as_deref() == Some("97.94%") && r2.as_deref() == Some("65.85%") && zero.is_none() {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn persistence() -> Verdict {
    // fill a store with at least 10^3 constraints
    let mut engine = Engine::new(
        Config {
            strategy: Strategy::Logic,
            bound: 50,
            store_reduced_conflicts: false,
            envelope: true,
        },
        Stores::default(),
    );
    let stored = |e: &Engine| e.stores.scs.constraints().len() + e.stores.ucs.constraints().len();
    let mut seed = 900;
    while stored(&engine) < 1_000 {
        let spec = GenSpec {
            seed,
            paths: 500,
            var_count: 4,
            ..GenSpec::default()
        };
        let (corpus, _) = generate(&spec).map_err(|e| e.to_string())?;
        replay(&mut engine, &corpus).map_err(|e| e.to_string())?;
        seed += 1;
    }
    let constraints = stored(&engine);
    let snapshot = engine.stores.clone();

    let log = generate(&GenSpec {
        seed: 999,
        paths: 1_000,
        var_count: 4,
        ..GenSpec::default()
    })
    .map_err(|e| e.to_string())?
    .0;

    let report = |stores: Stores| -> Result<String, String> {
        let (outcomes, e) = run(&log, Strategy::Logic, stores);
        Ok(Report {
            strategy: Strategy::Logic,
            bound: 50,
            stats: e.stats.clone(),
            outcomes,
            baseline: None,
        }
        .render(true, false))
    };
    let in_memory = report(snapshot.clone())?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    snapshot.save_dir(dir.path()).map_err(|e| e.to_string())?;
    let loaded = Stores::load_dir(dir.path()).map_err(|e| e.to_string())?;
    let texts_equal = loaded.scs.to_text() == snapshot.scs.to_text()
        && loaded.ucs.to_text() == snapshot.ucs.to_text()
        && loaded.exact == snapshot.exact;
    let reloaded = report(loaded)?;
    let hits = reloaded
        .lines()
        .filter(|l| l.starts_with('q') && !l.contains(" solved"))
        .count();
    let detail =
        format!("{constraints} stored constraints, 1000 queries, {hits} answered from the stores");
    if !texts_equal {
        return Err(format!("{detail}; reloaded stores serialize differently"));
    }
    if in_memory != reloaded {
        let diff = in_memory
            .lines()
            .zip(reloaded.lines())
            .find(|(a, b)| a != b)
            .map(|(a, b)| format!("`{a}` vs `{b}`"))
            .unwrap_or_default();
        return Err(format!("{detail}; reports differ: {diff}"));
    }
    Ok(detail)
}
