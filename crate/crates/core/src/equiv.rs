//! Bounded equivalence of two candidates under a problem domain.
//!
//! Both programs are explored over one shared set of input symbols. For
//! each array-length case the checker asks for an input that satisfies the
//! domain, one leaf of each program, and an outcome difference. A model is
//! replayed through the interpreter before it is reported.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use thiserror::Error;

use crate::domain::{
    array_length_strategy, ensure_nonempty, inject_assumptions, length_range_truncated, satisfies,
    DomainError, ProblemSpec,
};
use crate::minilang::{outcomes_equal, ExecutionOutcome, OutcomeKind, Program, Value};
use crate::solver::{Solver, SolverError, SolverQuery, SolverVerdict};
use crate::symcore::{
    arguments_from_model, declarations, execute, input_symbols, Budget, PathCondition,
    SymOutcome, SymOutcomeKind, SymRun, SymValue,
};
use crate::term::{Sort, Term};

pub const DEFAULT_FUEL: u64 = 100_000;
pub const DEFAULT_MAX_ARRAY_LEN: usize = 4;

/// Leaf pairs per divergence query.
const PAIRS_PER_QUERY: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EquivVerdict {
    Distinct {
        /// Arguments by position.
        counterexample: Vec<Value>,
        outcome_i: ExecutionOutcome,
        outcome_j: ExecutionOutcome,
    },
    NotDistinguished {
        exhaustive: bool,
        abandoned_paths: usize,
    },
}

impl EquivVerdict {
    pub fn is_distinct(&self) -> bool {
        matches!(self, EquivVerdict::Distinct { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum EquivError {
    #[error("program `{0}` does not match the problem signature")]
    SignatureMismatch(String),
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EquivOptions {
    pub max_array_len: usize,
    /// Interpreter fuel for replaying counterexamples.
    pub fuel: u64,
}

impl Default for EquivOptions {
    fn default() -> Self {
        EquivOptions {
            max_array_len: DEFAULT_MAX_ARRAY_LEN,
            fuel: DEFAULT_FUEL,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairCheck {
    pub verdict: EquivVerdict,
    pub smt_queries: usize,
}

/// One concrete choice of array lengths with its symbols and assumptions.
#[derive(Clone, Debug)]
struct LengthCase {
    lengths: BTreeMap<String, usize>,
    inputs: Vec<SymValue>,
    decls: Vec<(String, Sort)>,
    assumptions: PathCondition,
}

struct Counting<'s> {
    inner: &'s dyn Solver,
    queries: AtomicUsize,
}

impl Solver for Counting<'_> {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        self.queries.fetch_add(1, Ordering::Relaxed);
        self.inner.check(query)
    }

    fn is_complete_for(&self, declarations: &[(String, Sort)]) -> bool {
        self.inner.is_complete_for(declarations)
    }
}

/// Pair checker for one problem. Symbolic runs are cached per program
/// source and length case, so checking a candidate against several
/// representatives explores it once.
pub struct EquivChecker<'a> {
    spec: &'a ProblemSpec,
    solver: &'a dyn Solver,
    budget: Budget,
    options: EquivOptions,
    cases: Vec<LengthCase>,
    truncated: bool,
    cache: Mutex<HashMap<(String, usize), Arc<SymRun>>>,
}

impl<'a> EquivChecker<'a> {
    /// Fails with `EmptyDomain` if no length case admits an input.
    pub fn new(
        spec: &'a ProblemSpec,
        solver: &'a dyn Solver,
        budget: Budget,
        options: EquivOptions,
    ) -> Result<Self, EquivError> {
        let sig = &spec.signature;
        let mut per_param: Vec<(String, Vec<usize>)> = Vec::new();
        let mut truncated = false;
        for p in sig.array_params() {
            let lens = array_length_strategy(&p.name, &spec.constraints, options.max_array_len)?;
            truncated |= length_range_truncated(&p.name, &spec.constraints, options.max_array_len);
            per_param.push((p.name.clone(), lens));
        }
        let mut combos: Vec<BTreeMap<String, usize>> = vec![BTreeMap::new()];
        for (name, lens) in &per_param {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    lens.iter().map(move |&l| {
                        let mut c = c.clone();
                        c.insert(name.clone(), l);
                        c
                    })
                })
                .collect();
        }
        let mut cases = Vec::new();
        for lengths in combos {
            let inputs = input_symbols(&sig.params, &lengths);
            let decls = declarations(&sig.params, &inputs);
            let assumptions = match inject_assumptions(&spec.constraints, sig, &inputs) {
                Ok(a) => a,
                Err(DomainError::EmptyDomain) => continue,
                Err(e) => return Err(e.into()),
            };
            match ensure_nonempty(&assumptions, &decls, solver) {
                Ok(()) => {}
                Err(DomainError::EmptyDomain) => continue,
                Err(e) => return Err(e.into()),
            }
            cases.push(LengthCase {
                lengths,
                inputs,
                decls,
                assumptions,
            });
        }
        if cases.is_empty() {
            return Err(DomainError::EmptyDomain.into());
        }
        Ok(EquivChecker {
            spec,
            solver,
            budget,
            options,
            cases,
            truncated,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn spec(&self) -> &ProblemSpec {
        self.spec
    }

    pub fn budget(&self) -> &Budget {
        &self.budget
    }

    fn explore(
        &self,
        p: &Program,
        case_idx: usize,
        deadline: Instant,
        solver: &dyn Solver,
    ) -> Result<Arc<SymRun>, EquivError> {
        let key = (p.source.clone(), case_idx);
        if let Some(r) = self.cache.lock().expect("sym cache").get(&key) {
            return Ok(r.clone());
        }
        let case = &self.cases[case_idx];
        let run = execute(
            &p.ast,
            &case.inputs,
            &case.assumptions,
            &self.budget,
            solver,
            &case.decls,
            deadline,
        )?;
        let timed_out = run.leaves.iter().any(|l| {
            l.outcome == SymOutcomeKind::Abandoned(crate::symcore::AbandonReason::SolverTimeout)
        });
        let run = Arc::new(run);
        // Deadline-dependent runs are not reusable by later checks.
        if !timed_out {
            self.cache.lock().expect("sym cache").insert(key, run.clone());
        }
        Ok(run)
    }

    pub fn check(&self, p_i: &Program, p_j: &Program) -> Result<PairCheck, EquivError> {
        let counting = Counting {
            inner: self.solver,
            queries: AtomicUsize::new(0),
        };
        let verdict = self.check_with(p_i, p_j, &counting)?;
        Ok(PairCheck {
            verdict,
            smt_queries: counting.queries.load(Ordering::Relaxed),
        })
    }

    fn check_with(
        &self,
        p_i: &Program,
        p_j: &Program,
        solver: &dyn Solver,
    ) -> Result<EquivVerdict, EquivError> {
        for p in [p_i, p_j] {
            if !self.spec.signature.matches(&p.ast) {
                return Err(EquivError::SignatureMismatch(p.id.clone()));
            }
        }
        let deadline = self.budget.deadline_from(Instant::now());
        let mut exhaustive = !self.truncated;
        let mut abandoned_paths = 0;
        for (idx, case) in self.cases.iter().enumerate() {
            if Instant::now() >= deadline {
                return Ok(EquivVerdict::NotDistinguished {
                    exhaustive: false,
                    abandoned_paths,
                });
            }
            let ri = self.explore(p_i, idx, deadline, solver)?;
            let rj = self.explore(p_j, idx, deadline, solver)?;
            abandoned_paths += ri.abandoned() + rj.abandoned();
            if ri.abandoned() + rj.abandoned() > 0
                || ri.stats.unknown_verdicts + rj.stats.unknown_verdicts > 0
                || !solver.is_complete_for(&case.decls)
            {
                exhaustive = false;
            }
            let disjuncts: Vec<Term> = ri
                .live()
                .flat_map(|li| rj.live().map(move |lj| (li, lj)))
                .filter_map(|(li, lj)| {
                    let diff = outcome_difference(li, lj);
                    if diff.as_bool() == Some(false) {
                        return None;
                    }
                    let t = li.pc.conjunction().and(&lj.pc.conjunction()).and(&diff);
                    (t.as_bool() != Some(false)).then_some(t)
                })
                .collect();
            for chunk in disjuncts.chunks(PAIRS_PER_QUERY) {
                let remaining = deadline.saturating_duration_since(Instant::now()).as_millis() as u64;
                let mut assertions = case.assumptions.conjuncts.clone();
                assertions.push(Term::or_all(chunk));
                let query = SolverQuery {
                    declarations: case.decls.clone(),
                    assertions,
                    timeout_ms: self.budget.solver_timeout_ms.min(remaining.max(1)),
                };
                match solver.check(&query)? {
                    SolverVerdict::Unsat => {}
                    SolverVerdict::Unknown(_) => exhaustive = false,
                    SolverVerdict::Sat(model) => {
                        let args =
                            arguments_from_model(&self.spec.signature.params, &case.lengths, &model);
                        if let Some((oi, oj)) = self.replay(p_i, p_j, &args) {
                            return Ok(EquivVerdict::Distinct {
                                counterexample: args,
                                outcome_i: oi,
                                outcome_j: oj,
                            });
                        }
                        exhaustive = false;
                    }
                }
            }
        }
        Ok(EquivVerdict::NotDistinguished {
            exhaustive,
            abandoned_paths,
        })
    }

    /// Concrete outcomes if `args` is in the domain and really separates
    /// the programs. Fuel exhaustion never counts as a divergence.
    fn replay(
        &self,
        p_i: &Program,
        p_j: &Program,
        args: &[Value],
    ) -> Option<(ExecutionOutcome, ExecutionOutcome)> {
        if !satisfies(&self.spec.constraints, &self.spec.signature, args) {
            return None;
        }
        let oi = p_i.run(args, self.options.fuel).ok()?;
        let oj = p_j.run(args, self.options.fuel).ok()?;
        let exhausted = |o: &ExecutionOutcome| o.kind == OutcomeKind::ResourceExhausted;
        if exhausted(&oi) || exhausted(&oj) || outcomes_equal(&oi, &oj) {
            return None;
        }
        Some((oi, oj))
    }
}

/// Boolean term that holds exactly when the two leaves' outcomes differ.
pub fn outcome_difference(a: &SymOutcome, b: &SymOutcome) -> Term {
    use SymOutcomeKind::*;
    let kind = match (&a.outcome, &b.outcome) {
        (Return(Some(x)), Return(Some(y))) => x.ne(y),
        (Return(None), Return(None)) => Term::bool(false),
        (Exception(x), Exception(y)) => Term::bool(x != y),
        (Abandoned(_), _) | (_, Abandoned(_)) => return Term::bool(false),
        _ => Term::bool(true),
    };
    let mut parts = vec![kind];
    for (pos, xs) in &a.mutated_inputs {
        let Some(ys) = b.mutated_inputs.get(pos) else { continue };
        parts.extend(xs.iter().zip(ys).map(|(x, y)| x.ne(y)));
    }
    Term::or_all(&parts)
}

/// One-off check of a single pair.
pub fn check_divergence(
    p_i: &Program,
    p_j: &Program,
    spec: &ProblemSpec,
    budget: &Budget,
    solver: &dyn Solver,
) -> Result<EquivVerdict, EquivError> {
    EquivChecker::new(spec, solver, *budget, EquivOptions::default())?
        .check(p_i, p_j)
        .map(|c| c.verdict)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PublicCheck {
    Pass,
    Fail {
        index: usize,
        got: Option<ExecutionOutcome>,
    },
}

impl PublicCheck {
    pub fn passed(&self) -> bool {
        *self == PublicCheck::Pass
    }
}

/// Runs the public examples in order and stops at the first mismatch.
pub fn run_public_examples(p: &Program, spec: &ProblemSpec, fuel: u64) -> PublicCheck {
    for (index, ex) in spec.public_examples.iter().enumerate() {
        match p.run(&ex.args, fuel) {
            Ok(got) if outcomes_equal(&got, &ex.expected) => {}
            Ok(got) => {
                return PublicCheck::Fail {
                    index,
                    got: Some(got),
                }
            }
            Err(_) => return PublicCheck::Fail { index, got: None },
        }
    }
    PublicCheck::Pass
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{parse_constraints, Signature, TestCase};
    use crate::solver::EnumerativeSolver;

    fn spec(src: &str, constraints: &[&str], examples: Vec<TestCase>) -> ProblemSpec {
        let f = crate::minilang::parse(src).unwrap();
        let signature = Signature::of(&f);
        let raw: Vec<String> = constraints.iter().map(|s| s.to_string()).collect();
        ProblemSpec {
            id: "t".into(),
            constraints: parse_constraints(&raw, &signature).unwrap(),
            signature,
            public_examples: examples,
        }
    }

    fn prog(id: &str, src: &str) -> Program {
        Program::new(id, src, 0).unwrap()
    }

    fn x_box(lo: i64, hi: i64) -> EnumerativeSolver {
        EnumerativeSolver::new([("x".to_string(), (lo.into(), hi.into()))].into())
    }

    /// Inputs in `lo..=hi` on which the two programs disagree.
    fn diverging_inputs(a: &Program, b: &Program, lo: i64, hi: i64) -> Vec<i64> {
        (lo..=hi)
            .filter(|&x| {
                let args = [Value::int(x)];
                a.run(&args, 1000).unwrap() != b.run(&args, 1000).unwrap()
            })
            .collect()
    }

    #[test]
    fn doubling_forms_agree() {
        let s = spec("fn f(x: int) -> int { return x; }", &["-10 <= x <= 10"], vec![]);
        let a = prog("a", "fn f(x: int) -> int { return x + x; }");
        let b = prog("b", "fn f(x: int) -> int { return 2 * x; }");
        assert!(diverging_inputs(&a, &b, -10, 10).is_empty());
        let v = check_divergence(&a, &b, &s, &Budget::default(), &x_box(-10, 10)).unwrap();
        assert_eq!(
            v,
            EquivVerdict::NotDistinguished {
                exhaustive: true,
                abandoned_paths: 0
            }
        );
    }

    #[test]
    fn absolute_value_differs_on_negatives() {
        let s = spec("fn f(x: int) -> int { return x; }", &["-10 <= x <= 10"], vec![]);
        let a = prog("a", "fn f(x: int) -> int { if (x < 0) return -x; else return x; }");
        let b = prog("b", "fn f(x: int) -> int { return x; }");
        let expected = diverging_inputs(&a, &b, -10, 10);
        assert_eq!(expected, (-10..=-1).collect::<Vec<_>>());
        let v = check_divergence(&a, &b, &s, &Budget::default(), &x_box(-10, 10)).unwrap();
        let EquivVerdict::Distinct {
            counterexample,
            outcome_i,
            outcome_j,
        } = v
        else {
            panic!("expected a counterexample, got {v:?}")
        };
        let x = counterexample[0].as_int().unwrap().clone();
        assert!(expected.iter().any(|&e| x == e.into()));
        assert_ne!(outcome_i, outcome_j);

        let s = spec("fn f(x: int) -> int { return x; }", &["0 <= x <= 10"], vec![]);
        assert!(diverging_inputs(&a, &b, 0, 10).is_empty());
        let v = check_divergence(&a, &b, &s, &Budget::default(), &x_box(-10, 10)).unwrap();
        assert!(matches!(
            v,
            EquivVerdict::NotDistinguished {
                exhaustive: true,
                ..
            }
        ));
    }

    #[test]
    fn exception_kinds_compared() {
        let s = spec("fn f(x: int) -> int { return x; }", &["-3 <= x <= 3"], vec![]);
        let a = prog("a", "fn f(x: int) -> int { return 6 / x; }");
        let b = prog("b", "fn f(x: int) -> int { return 6 % x + 6 / x - 6 % x; }");
        let c = prog("c", "fn f(x: int) -> int { assert(x != 0); return 6 / x; }");
        let solver = x_box(-3, 3);
        // b raises ModByZero first at x = 0.
        let v = check_divergence(&a, &b, &s, &Budget::default(), &solver).unwrap();
        match v {
            EquivVerdict::Distinct { counterexample, .. } => {
                assert_eq!(counterexample, vec![Value::int(0)])
            }
            other => panic!("{other:?}"),
        }
        assert!(check_divergence(&a, &c, &s, &Budget::default(), &solver)
            .unwrap()
            .is_distinct());
    }

    #[test]
    fn array_mutation_compared() {
        let s = spec(
            "fn f(a: int[]) -> unit { return; }",
            &["len(a) <= 2"],
            vec![],
        );
        let a = prog(
            "a",
            "fn f(a: int[]) -> unit { i = 0; while (i < len(a)) { a[i] = a[i] * 2; i = i + 1; } }",
        );
        let b = prog(
            "b",
            "fn f(v: int[]) -> unit { j = 0; while (j < len(v)) { v[j] = v[j] + v[j]; j = j + 1; } }",
        );
        let c = prog(
            "c",
            "fn f(a: int[]) -> unit { if (len(a) > 0) { a[0] = a[0] * 2; } }",
        );
        let solver = EnumerativeSolver::default()
            .with_default_range(-2, 2)
            .with_grid_cap(1_000);
        let v = check_divergence(&a, &b, &s, &Budget::default(), &solver).unwrap();
        assert!(!v.is_distinct());
        let v = check_divergence(&a, &c, &s, &Budget::default(), &solver).unwrap();
        let EquivVerdict::Distinct {
            counterexample,
            outcome_i,
            outcome_j,
        } = v
        else {
            panic!("{v:?}")
        };
        assert_eq!(counterexample.len(), 1);
        assert_ne!(outcome_i.mutated_inputs, outcome_j.mutated_inputs);
    }

    #[test]
    fn public_examples() {
        let ex = |arg: i64, ret: i64| TestCase {
            args: vec![Value::int(arg)],
            expected: ExecutionOutcome::returned(Value::int(ret)),
        };
        let s = spec("fn f(x: int) -> int { return x; }", &[], vec![ex(7, 7)]);
        assert!(run_public_examples(&prog("id", "fn f(x: int) -> int { return x; }"), &s, 100).passed());
        assert_eq!(
            run_public_examples(&prog("zero", "fn f(x: int) -> int { return 0; }"), &s, 100),
            PublicCheck::Fail {
                index: 0,
                got: Some(ExecutionOutcome::returned(Value::int(0)))
            }
        );
        let loop_sum = "fn f(n: int) -> int { s = 0; i = 1; while (i <= n) { s = s + i; i = i + 1; } return s; }";
        let s = spec(loop_sum, &[], vec![ex(4, 10), ex(1, 1)]);
        assert!(run_public_examples(&prog("sum", loop_sum), &s, 1000).passed());
    }

    #[test]
    fn signature_mismatch() {
        let s = spec("fn f(x: int) -> int { return x; }", &[], vec![]);
        let a = prog("a", "fn f(x: int) -> int { return x; }");
        let b = prog("b", "fn f(x: bool) -> int { return 1; }");
        assert_eq!(
            check_divergence(&a, &b, &s, &Budget::default(), &x_box(-2, 2)),
            Err(EquivError::SignatureMismatch("b".into()))
        );
    }
}
