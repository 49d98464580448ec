//! End-to-end acceptance checks. Each test prints one `PASS`/`FAIL` line
//! straight to stderr, bypassing output capture, so the summary is visible
//! in a plain `cargo test` run.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::{Arc, OnceLock};
use std::time::Instant;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sep_core::baselines::pass_at_k;
use sep_core::domain::{derive_bounds, inject_assumptions, satisfies};
use sep_core::equiv::{EquivChecker, EquivOptions, EquivVerdict};
use sep_core::minilang::{interpret, ExecutionOutcome, FunctionDef, Program, Value};
use sep_core::partition::{sep_select, PairResult};
use sep_core::solver::{EnumerativeSolver, ExternalSolver, SolverQuery, DEFAULT_SOLVER_CMD};
use sep_core::symcore::{declarations, input_symbols, sym_execute, AbandonReason, PathCondition, SymOutcomeKind};
use sep_core::term::{Sort, Term};
use sep_core::{Budget, ProblemSpec, Solver, SolverVerdict};
use sep_harness::corpus::{load_problem, Problem};
use sep_harness::enumerate::{domain_points, BoxLimits};
use sep_harness::evaluate::{normalize_report_line, pair_accuracy, SelectorKind};
use sep_harness::metrics::{label_pool, summarize_pair_accuracy, SepVerdict};
use sep_harness::{evaluate, generate_corpus, load_corpus, write_corpus, BackendChoice, GenConfig, RunConfig};

const FUEL: u64 = 100_000;
const CORPUS_SEED: u64 = 20_240_601;
const SUITE_SEED: u64 = 17;

type Outcome = Result<String, String>;

fn report(id: u32, name: &str, start: Instant, outcome: &Outcome) {
    let secs = start.elapsed().as_secs_f64();
    let line = match outcome {
        Ok(detail) => format!("acceptance {id} {name}: PASS ({detail}) [{secs:.1}s]\n"),
        Err(detail) => format!("acceptance {id} {name}: FAIL ({detail}) [{secs:.1}s]\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
}

fn conclude(id: u32, name: &str, start: Instant, outcome: Outcome) {
    report(id, name, start, &outcome);
    if let Err(e) = outcome {
        panic!("acceptance {id} {name} failed: {e}");
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn external() -> Result<Arc<ExternalSolver>, String> {
    let s = ExternalSolver::new(DEFAULT_SOLVER_CMD).map_err(|e| e.to_string())?;
    s.probe().map_err(|e| e.to_string())?;
    Ok(Arc::new(s))
}

fn external_backend() -> BackendChoice {
    BackendChoice::External {
        command: DEFAULT_SOLVER_CMD.into(),
    }
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

/// The 50-problem corpus shared by the selection, metric and determinism
/// checks.
fn shared_corpus() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("acceptance-corpus");
        if dir.exists() {
            std::fs::remove_dir_all(&dir).expect("stale corpus removable");
        }
        let problems = generate_corpus(&GenConfig::new(CORPUS_SEED, 50, 10, 0.6)).expect("corpus generates");
        write_corpus(&dir, &problems).expect("corpus writes");
        dir
    })
}

/// Full enumeration of a scalar domain, or `None` when a parameter is
/// unbounded or the domain exceeds `cap` points.
fn enumerate_domain(spec: &ProblemSpec, cap: u64) -> Option<Vec<Vec<Value>>> {
    let bounds = derive_bounds(&spec.constraints, &spec.signature);
    let mut axes: Vec<Vec<Value>> = Vec::new();
    for p in &spec.signature.params {
        let axis = match p.ty {
            sep_core::minilang::Type::Bool => vec![Value::Bool(false), Value::Bool(true)],
            sep_core::minilang::Type::Int => {
                let (lo, hi) = bounds.get(&p.name)?;
                let (lo, hi): (i64, i64) = (lo.try_into().ok()?, hi.try_into().ok()?);
                (lo..=hi).map(Value::int).collect()
            }
            _ => return None,
        };
        axes.push(axis);
    }
    let size = axes.iter().try_fold(1u64, |acc, a| acc.checked_mul(a.len() as u64))?;
    if size > cap {
        return None;
    }
    let mut points: Vec<Vec<Value>> = vec![vec![]];
    for axis in &axes {
        points = points
            .into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(v.clone());
                    p
                })
            })
            .collect();
    }
    points.retain(|p| satisfies(&spec.constraints, &spec.signature, p));
    Some(points)
}

fn behaviour(f: &FunctionDef, points: &[Vec<Value>]) -> Vec<ExecutionOutcome> {
    points
        .iter()
        .map(|p| interpret(f, p, FUEL).expect("well-typed arguments"))
        .collect()
}

fn oracle_agreement() -> Outcome {
    let solver = external()?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let problems = generate_corpus(&GenConfig::new(SUITE_SEED, 48, 6, 0.5)).map_err(|e| e.to_string())?;
    write_corpus(dir.path(), &problems).map_err(|e| e.to_string())?;
    let corpus = load_corpus(dir.path()).map_err(|e| e.to_string())?;
    let (mut scored, mut skipped_non_exhaustive, mut problems_used) = (0usize, 0usize, 0usize);
    let mut distinct = 0usize;
    for problem in &corpus.problems {
        let Some(points) = enumerate_domain(&problem.spec, 1_000_000) else { continue };
        problems_used += 1;
        let truth: Vec<Vec<ExecutionOutcome>> = problem.pool.iter().map(|p| behaviour(&p.ast, &points)).collect();
        let checker = EquivChecker::new(&problem.spec, solver.as_ref(), Budget::default(), EquivOptions::default())
            .map_err(|e| format!("{}: {e}", problem.spec.id))?;
        for i in 0..problem.pool.len() {
            for j in i + 1..problem.pool.len() {
                let (pi, pj) = (&problem.pool[i], &problem.pool[j]);
                let verdict = checker
                    .check(pi, pj)
                    .map_err(|e| format!("{} {}/{}: {e}", problem.spec.id, pi.id, pj.id))?
                    .verdict;
                let differ = truth[i] != truth[j];
                match &verdict {
                    EquivVerdict::NotDistinguished { exhaustive: false, .. } => {
                        skipped_non_exhaustive += 1;
                        continue;
                    }
                    EquivVerdict::Distinct { counterexample, .. } => {
                        ensure(satisfies(&problem.spec.constraints, &problem.spec.signature, counterexample), || {
                            format!("{} {}/{}: counterexample outside the domain", problem.spec.id, pi.id, pj.id)
                        })?;
                        distinct += 1;
                    }
                    EquivVerdict::NotDistinguished { .. } => {}
                }
                ensure(verdict.is_distinct() == differ, || {
                    format!(
                        "{} {}/{}: checker says distinct={}, enumeration says {}",
                        problem.spec.id,
                        pi.id,
                        pj.id,
                        verdict.is_distinct(),
                        differ
                    )
                })?;
                scored += 1;
            }
        }
    }
    ensure(scored >= 200, || format!("only {scored} exhaustive pairs"))?;
    Ok(format!(
        "{scored}/{scored} exhaustive pairs agree over {problems_used} problems, {distinct} distinct, {skipped_non_exhaustive} non-exhaustive skipped"
    ))
}

#[test]
fn oracle_agreement_with_enumeration() {
    let start = Instant::now();
    conclude(1, "oracle agreement", start, oracle_agreement());
}

fn pruning() -> Outcome {
    let solver = external()?;
    let problem = load_problem(&repo_root().join("benchmarks/count_up")).map_err(|e| e.to_string())?;
    let f = &problem.pool[0].ast;
    let inputs = input_symbols(&f.params, &BTreeMap::new());
    let decls = declarations(&f.params, &inputs);
    let assumptions = inject_assumptions(&problem.spec.constraints, &problem.spec.signature, &inputs)
        .map_err(|e| e.to_string())?;
    let budget = Budget {
        loop_unroll_limit: 32,
        ..Budget::default()
    };
    let with = sym_execute(f, &inputs, &assumptions, &budget, solver.as_ref(), &decls).map_err(|e| e.to_string())?;
    let without = sym_execute(f, &inputs, &PathCondition::default(), &budget, solver.as_ref(), &decls)
        .map_err(|e| e.to_string())?;
    ensure(with.leaves.len() == 8 && with.abandoned() == 0, || {
        format!("with assumptions: {} paths, {} abandoned", with.leaves.len(), with.abandoned())
    })?;
    let unrolled = without
        .leaves
        .iter()
        .filter(|l| l.outcome == SymOutcomeKind::Abandoned(AbandonReason::UnrollLimit))
        .count();
    ensure(unrolled > 0, || {
        format!("without assumptions: {} paths and none abandoned at the unroll limit", without.leaves.len())
    })?;
    Ok(format!(
        "8 paths with assumptions; {} paths without, {unrolled} abandoned at the unroll limit",
        without.leaves.len()
    ))
}

#[test]
fn assumption_pruning_on_loop_benchmark() {
    let start = Instant::now();
    conclude(2, "pruning effectiveness", start, pruning());
}

fn accounting_spec() -> ProblemSpec {
    let f = sep_core::minilang::parse("fn f(x: int) -> int { return x; }").unwrap();
    let signature = sep_core::Signature::of(&f);
    let constraints =
        sep_core::domain::parse_constraints(&["-10 <= x <= 10".to_string()], &signature).unwrap();
    ProblemSpec {
        id: "accounting".into(),
        signature,
        constraints,
        public_examples: vec![],
    }
}

fn pool(bodies: &[String]) -> Vec<Program> {
    bodies
        .iter()
        .enumerate()
        .map(|(k, b)| Program::new((k + 1).to_string(), format!("fn f(x: int) -> int {{ {b} }}"), k).unwrap())
        .collect()
}

fn accounting() -> Outcome {
    let solver = external()?;
    let spec = accounting_spec();
    let checker =
        EquivChecker::new(&spec, solver.as_ref(), Budget::default(), EquivOptions::default()).map_err(|e| e.to_string())?;
    let run = |bodies: Vec<String>| sep_select(&pool(&bodies), &spec, &checker, FUEL).expect("non-empty pool");

    let same = run((1..=10).map(|k| format!("return x + {k} - {};", k - 1)).collect());
    ensure(same.pair_checks.len() == 9 && same.partitions.sizes() == [10], || {
        format!("equivalent pool: {} checks, sizes {:?}", same.pair_checks.len(), same.partitions.sizes())
    })?;

    let distinct = run((0..10).map(|k| format!("return x + {k};")).collect());
    ensure(distinct.pair_checks.len() == 45 && distinct.partitions.sizes() == [1; 10], || {
        format!("distinct pool: {} checks, sizes {:?}", distinct.pair_checks.len(), distinct.partitions.sizes())
    })?;

    let trace = run(
        ["return x + 1;", "return 1 + x;", "return x + 2;", "t = x; return t + 1;"]
            .map(String::from)
            .to_vec(),
    );
    let steps: Vec<(String, String, bool)> = trace
        .pair_checks
        .iter()
        .map(|c| (c.i.clone(), c.j.clone(), c.result.joins()))
        .collect();
    let expected = [("2", "1", true), ("3", "1", false), ("4", "1", true)]
        .map(|(i, j, joins)| (i.to_string(), j.to_string(), joins))
        .to_vec();
    ensure(steps == expected, || format!("[A,A,B,A] trace {steps:?}"))?;
    ensure(trace.selected == "1" && trace.partitions.sizes() == [3, 1], || {
        format!("[A,A,B,A] selected {} with sizes {:?}", trace.selected, trace.partitions.sizes())
    })?;
    let failed = [&same, &distinct, &trace]
        .iter()
        .flat_map(|r| &r.pair_checks)
        .filter(|c| matches!(c.result, PairResult::Failed(_)))
        .count();
    ensure(failed == 0, || format!("{failed} checks failed"))?;
    Ok("9, 45 and 3 pair checks; trace matches".into())
}

#[test]
fn pair_check_accounting() {
    let start = Instant::now();
    conclude(3, "pair-check accounting", start, accounting());
}

fn pass_at_k_fidelity() -> Outcome {
    const DRAWS: usize = 100_000;
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let (mut cells, mut worst) = (0usize, 0f64);
    for n in 1u64..=20 {
        for c in 0..=n {
            // Position of the first correct sample in a uniformly random
            // order; a k-subset contains a correct sample iff it is < k.
            let mut first = vec![0usize; n as usize + 1];
            for _ in 0..DRAWS {
                let mut t = 0u64;
                while t < n && rng.random_range(0..n - t) >= c {
                    t += 1;
                }
                first[t as usize] += 1;
            }
            let mut hits = 0usize;
            for k in 1..=n {
                hits += first[k as usize - 1];
                let estimate = hits as f64 / DRAWS as f64;
                let closed: f64 = pass_at_k(n, c, k).map_err(|e| e.to_string())?;
                let err = (closed - estimate).abs();
                worst = worst.max(err);
                ensure(err <= 0.01, || format!("n={n} c={c} k={k}: {closed} vs estimate {estimate}"))?;
                if c == 0 {
                    ensure(closed == 0.0, || format!("n={n} k={k}: c=0 gives {closed}"))?;
                }
                if k == n && c >= 1 {
                    ensure(closed == 1.0, || format!("n={n} c={c}: k=n gives {closed}"))?;
                }
                if k == 1 {
                    ensure(closed == c as f64 / n as f64, || format!("n={n} c={c}: k=1 gives {closed}"))?;
                }
                cells += 1;
            }
        }
    }
    Ok(format!("{cells} grid cells, max deviation {worst:.4}"))
}

#[test]
fn pass_at_k_against_monte_carlo() {
    let start = Instant::now();
    conclude(4, "pass@k fidelity", start, pass_at_k_fidelity());
}

/// Survivors of the public examples, grouped by behaviour over the
/// enumeration box (the full domain for scalar problems).
fn wrong_class_sizes(problem: &Problem, survivors: &BTreeSet<&str>, labels: &[bool]) -> Option<(usize, usize)> {
    let points = domain_points(&problem.spec, &BoxLimits::default())?;
    let mut correct = 0;
    let mut classes: Vec<(Vec<ExecutionOutcome>, usize)> = Vec::new();
    for (p, &ok) in problem.pool.iter().zip(labels) {
        if !survivors.contains(p.id.as_str()) {
            continue;
        }
        if ok {
            correct += 1;
        } else {
            let b = behaviour(&p.ast, &points);
            match classes.iter_mut().find(|(k, _)| *k == b) {
                Some((_, n)) => *n += 1,
                None => classes.push((b, 1)),
            }
        }
    }
    Some((correct, classes.iter().map(|c| c.1).max().unwrap_or(0)))
}

fn end_to_end() -> Outcome {
    external()?;
    let root = shared_corpus();
    let cfg = RunConfig::new(root, external_backend());
    let report = evaluate(&cfg).map_err(|e| e.to_string())?;
    let corpus = load_corpus(root).map_err(|e| e.to_string())?;
    let mut eligible = 0;
    for (problem, result) in corpus.problems.iter().zip(&report.problems) {
        assert_eq!(problem.spec.id, result.problem);
        let sep = &result.selectors["sep"];
        let details = sep.sep.as_ref().ok_or_else(|| format!("{}: no sep details", result.problem))?;
        let labels = label_pool(problem, cfg.fuel);
        let survivors: BTreeSet<&str> = details.prefilter_survivors.iter().map(String::as_str).collect();
        let Some((correct, largest_wrong)) = wrong_class_sizes(problem, &survivors, &labels) else { continue };
        if correct > largest_wrong && details.all_exhaustive {
            eligible += 1;
            ensure(sep.correct, || {
                format!(
                    "{}: selected {:?} although the correct class ({correct}) beats every wrong class ({largest_wrong})",
                    result.problem, sep.selected
                )
            })?;
        }
    }
    let acc = |k| report.accuracy(k).unwrap_or(0.0);
    let (sep, dual, sim) = (acc(SelectorKind::Sep), acc(SelectorKind::DualAgreement), acc(SelectorKind::Similarity));
    ensure(sep >= dual && dual >= sim, || format!("ordering violated: sep {sep}, dual {dual}, similarity {sim}"))?;
    Ok(format!(
        "{eligible}/{eligible} eligible problems correct; sep {sep:.2} >= dual {dual:.2} >= similarity {sim:.2}"
    ))
}

#[test]
fn end_to_end_selection() {
    let start = Instant::now();
    conclude(5, "end-to-end selection", start, end_to_end());
}

const SUM_LOOP: &str = "fn f(n: int) -> int { s = 0; i = 0; while (i < n) { i = i + 1; s = s + i; } return s; }";
const SUM_ALT: &str = "fn f(n: int) -> int { t = 0; k = 1; while (k <= n) { t = t + k; k = k + 1; } return t; }";
/// Wrong only for n > 20, which a short unroll limit never reaches.
const SUM_LATE: &str =
    "fn f(n: int) -> int { s = 0; i = 0; while (i < n) { i = i + 1; s = s + i; } if (n > 20) { return s + 1; } return s; }";
/// Wrong at n = 0.
const SUM_EARLY: &str =
    "fn f(n: int) -> int { if (n == 0) { return 1; } s = 0; i = 0; while (i < n) { i = i + 1; s = s + i; } return s; }";

fn worked_example(root: &Path) -> Result<(), String> {
    let dir = root.join("sum");
    std::fs::create_dir_all(dir.join("candidates")).map_err(|e| e.to_string())?;
    let test = |n: i64| serde_json::json!({ "args": [n], "expected": { "kind": "return", "value": n * (n + 1) / 2 } });
    let spec = serde_json::json!({
        "id": "sum",
        "signature": { "name": "f", "params": [{ "name": "n", "type": "int" }], "ret": "int" },
        "constraints": ["0 <= n <= 30"],
        "public_examples": [test(3)],
        "hidden_tests": [test(0), test(5), test(25), test(30)],
    });
    std::fs::write(dir.join("spec.json"), spec.to_string()).map_err(|e| e.to_string())?;
    for (k, src) in [SUM_LOOP, SUM_LATE, SUM_ALT, SUM_EARLY].iter().enumerate() {
        std::fs::write(dir.join("candidates").join(format!("{k}.ml")), src).map_err(|e| e.to_string())?;
    }
    Ok(())
}

fn pairwise_metric() -> Outcome {
    external()?;
    // Hand computation for the worked example, pairs (i, j) in order:
    // (0,1) correct/wrong, not distinguished within 8 unrollings: miss
    // (0,2) correct/correct, not distinguished: hit
    // (0,3) correct/wrong, distinct at n = 0: hit
    // (1,2) wrong/correct, not distinguished: miss
    // (1,3) wrong/wrong: excluded
    // (2,3) correct/wrong, distinct: hit
    // accuracy = 3/5 over 5 scored pairs, 1 excluded.
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    worked_example(dir.path())?;
    let mut cfg = RunConfig::new(dir.path(), external_backend());
    cfg.budget.loop_unroll_limit = 8;
    let small = pair_accuracy(&cfg).map_err(|e| e.to_string())?;
    let verdicts: Vec<Option<SepVerdict>> = small.per_problem[0].iter().map(|r| r.sep_verdict).collect();
    use SepVerdict::*;
    let expected = vec![
        Some(NotDistinguished),
        Some(NotDistinguished),
        Some(Distinct),
        Some(NotDistinguished),
        None,
        Some(Distinct),
    ];
    ensure(verdicts == expected, || format!("worked example verdicts {verdicts:?}"))?;
    let s = summarize_pair_accuracy(&small.per_problem).map_err(|e| e.to_string())?;
    ensure(s.tally.scored == 5 && s.tally.excluded == 1 && s.tally.matched == 3, || {
        format!("worked example tally {:?}", s.tally)
    })?;
    ensure(s.micro == 3.0 / 5.0 && s.macro_ == 3.0 / 5.0, || format!("worked example accuracy {}", s.micro))?;

    let full = pair_accuracy(&RunConfig::new(shared_corpus(), external_backend())).map_err(|e| e.to_string())?;
    let summary = full.summary.ok_or("no scored pair on the corpus")?;
    ensure(summary.micro >= 0.95, || format!("corpus accuracy {:.4}", summary.micro))?;
    Ok(format!(
        "worked example 3/5 with 1 excluded; corpus micro {:.4} macro {:.4} over {} pairs",
        summary.micro, summary.macro_, summary.tally.scored
    ))
}

#[test]
fn pairwise_equivalence_metric() {
    let start = Instant::now();
    conclude(6, "pairwise accuracy metric", start, pairwise_metric());
}

fn determinism() -> Outcome {
    external()?;
    let out = tempfile::tempdir().map_err(|e| e.to_string())?;
    let run = |name: &str| -> Result<Vec<String>, String> {
        let path = out.path().join(name);
        let status = Command::new(env!("CARGO_BIN_EXE_sep"))
            .args(["run", "--n", "10", "--seed", "3", "--corpus"])
            .arg(shared_corpus())
            .arg("--out")
            .arg(&path)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || String::from_utf8_lossy(&status.stderr).into_owned())?;
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        Ok(text.lines().map(normalize_report_line).collect())
    };
    let (a, b) = (run("a.jsonl")?, run("b.jsonl")?);
    ensure(a.last() == b.last(), || "aggregate lines differ".into())?;
    let differing = a.iter().zip(&b).filter(|(x, y)| x != y).count();
    ensure(a.len() == b.len() && differing == 0, || format!("{differing} problem lines differ"))?;
    Ok(format!("{} report lines byte-equal after normalization", a.len()))
}

#[test]
fn repeated_runs_are_identical() {
    let start = Instant::now();
    conclude(7, "determinism", start, determinism());
}

const BOUND: i64 = 6;

fn random_int(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    let x = Term::var("x", Sort::Int);
    let y = Term::var("y", Sort::Int);
    if depth == 0 || rng.random_bool(0.3) {
        return match rng.random_range(0..3) {
            0 => x,
            1 => y,
            _ => Term::int(rng.random_range(-BOUND..=BOUND)),
        };
    }
    let a = random_int(rng, depth - 1);
    match rng.random_range(0..7) {
        0 => a.add(&random_int(rng, depth - 1)),
        1 => a.sub(&random_int(rng, depth - 1)),
        2 => a.mul(&Term::int(rng.random_range(-3..=3))),
        3 => a.mul(&random_int(rng, depth - 1)),
        4 => a.neg(),
        5 => a.div(&Term::int(*[-3, -2, 2, 3].get(rng.random_range(0..4)).unwrap())),
        _ => a.modulo(&Term::int(rng.random_range(2..=4))),
    }
}

fn random_bool(rng: &mut ChaCha8Rng, depth: u32) -> Term {
    if depth == 0 || rng.random_bool(0.5) {
        let (a, b) = (random_int(rng, 2), random_int(rng, 2));
        return match rng.random_range(0..6) {
            0 => a.eq(&b),
            1 => a.ne(&b),
            2 => a.lt(&b),
            3 => a.le(&b),
            4 => a.gt(&b),
            _ => Term::var("p", Sort::Bool).and(&a.ge(&b)),
        };
    }
    let a = random_bool(rng, depth - 1);
    match rng.random_range(0..3) {
        0 => a.and(&random_bool(rng, depth - 1)),
        1 => a.or(&random_bool(rng, depth - 1)),
        _ => a.not(),
    }
}

fn backend_agreement() -> Outcome {
    let z3 = external()?;
    let bounds: BTreeMap<String, (BigInt, BigInt)> =
        ["x", "y"].iter().map(|n| (n.to_string(), ((-BOUND).into(), BOUND.into()))).collect();
    let enumerative = EnumerativeSolver::new(bounds);
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let (mut sat, mut unsat, mut unknown) = (0, 0, 0);
    for q in 0..500 {
        let (x, y) = (Term::var("x", Sort::Int), Term::var("y", Sort::Int));
        let mut assertions = vec![
            x.ge(&Term::int(-BOUND)),
            x.le(&Term::int(BOUND)),
            y.ge(&Term::int(-BOUND)),
            y.le(&Term::int(BOUND)),
        ];
        for _ in 0..rng.random_range(1..=3) {
            assertions.push(random_bool(&mut rng, 2));
        }
        let query = SolverQuery {
            declarations: vec![("x".into(), Sort::Int), ("y".into(), Sort::Int), ("p".into(), Sort::Bool)],
            assertions,
            timeout_ms: 2_000,
        };
        let a = z3.check(&query).map_err(|e| format!("query {q}: external: {e}"))?;
        let b = enumerative.check(&query).map_err(|e| format!("query {q}: enumerative: {e}"))?;
        for (name, v) in [("external", &a), ("enumerative", &b)] {
            if let SolverVerdict::Sat(m) = v {
                let lookup = |n: &str| m.get(n).cloned();
                let holds = query.assertions.iter().all(|t| t.eval_bool(&lookup) == Ok(true));
                let complete = query.declarations.iter().all(|(n, _)| m.contains_key(n));
                ensure(holds && complete, || format!("query {q}: {name} model {m:?} does not validate"))?;
            }
        }
        match (&a, &b) {
            (SolverVerdict::Unknown(_), _) | (_, SolverVerdict::Unknown(_)) => unknown += 1,
            _ => {
                ensure(a.is_sat() == b.is_sat(), || {
                    format!("query {q} disagrees: external {a:?}, enumerative {b:?}")
                })?;
                if a.is_sat() {
                    sat += 1;
                } else {
                    unsat += 1;
                }
            }
        }
    }
    Ok(format!("500 queries: {sat} sat, {unsat} unsat agree; {unknown} unknown"))
}

#[test]
fn solver_backends_agree() {
    let start = Instant::now();
    conclude(8, "backend agreement", start, backend_agreement());
}
