//! Symbolic execution of MiniLang functions.
//!
//! Exploration is depth-first with the then-branch first, so the leaf order
//! is a pure function of the program, the assumptions and the solver's
//! verdicts. Arrays have a concrete length per run and one integer symbol
//! per element (`a@0`, `a@1`, ...).

mod engine;

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::minilang::{ExceptionKind, ExecutionOutcome, FunctionDef, OutcomeKind, Param, Type, Value};
use crate::solver::{Solver, SolverError, DEFAULT_SOLVER_TIMEOUT_MS};
use crate::term::{Sort, Term};

pub use engine::execute;

/// Symbolic value of a program variable.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymValue {
    Scalar(Term),
    Array(Vec<Term>),
}

impl SymValue {
    pub fn as_scalar(&self) -> Option<&Term> {
        match self {
            SymValue::Scalar(t) => Some(t),
            SymValue::Array(_) => None,
        }
    }
}

/// Conjunction of boolean terms in the order they were collected.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PathCondition {
    pub conjuncts: Vec<Term>,
}

impl PathCondition {
    pub fn new(conjuncts: Vec<Term>) -> Self {
        PathCondition { conjuncts }
    }

    pub fn conjunction(&self) -> Term {
        Term::and_all(&self.conjuncts)
    }

    pub fn is_trivially_true(&self) -> bool {
        self.conjuncts.iter().all(|c| c.as_bool() == Some(true))
    }
}

impl fmt::Display for PathCondition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.conjuncts.is_empty() {
            return f.write_str("true");
        }
        for (k, c) in self.conjuncts.iter().enumerate() {
            if k > 0 {
                f.write_str(" && ")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AbandonReason {
    UnrollLimit,
    PathLimit,
    SolverTimeout,
}

impl AbandonReason {
    pub fn name(self) -> &'static str {
        match self {
            AbandonReason::UnrollLimit => "unroll_limit",
            AbandonReason::PathLimit => "path_limit",
            AbandonReason::SolverTimeout => "solver_timeout",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SymOutcomeKind {
    /// `None` for `unit` functions.
    Return(Option<Term>),
    Exception(ExceptionKind),
    Abandoned(AbandonReason),
}

/// One explored leaf.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymOutcome {
    pub pc: PathCondition,
    pub outcome: SymOutcomeKind,
    /// Final element terms of every array parameter, by position.
    pub mutated_inputs: BTreeMap<usize, Vec<Term>>,
}

impl SymOutcome {
    pub fn is_abandoned(&self) -> bool {
        matches!(self.outcome, SymOutcomeKind::Abandoned(_))
    }

    /// Whether the path condition holds under `lookup`. Undefined terms
    /// count as false.
    pub fn holds_at(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> bool {
        self.pc
            .conjuncts
            .iter()
            .all(|c| matches!(c.eval_bool(lookup), Ok(true)))
    }

    /// The concrete outcome this leaf predicts under `lookup`, or `None` for
    /// abandoned leaves and undefined terms.
    pub fn concretize(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Option<ExecutionOutcome> {
        let kind = match &self.outcome {
            SymOutcomeKind::Return(None) => OutcomeKind::Return(Value::Unit),
            SymOutcomeKind::Return(Some(t)) => OutcomeKind::Return(t.eval(lookup).ok()?),
            SymOutcomeKind::Exception(k) => OutcomeKind::Exception(*k),
            SymOutcomeKind::Abandoned(_) => return None,
        };
        let mut mutated_inputs = BTreeMap::new();
        for (pos, items) in &self.mutated_inputs {
            let mut vals = Vec::with_capacity(items.len());
            for t in items {
                match t.eval(lookup).ok()? {
                    Value::Int(v) => vals.push(v),
                    _ => return None,
                }
            }
            mutated_inputs.insert(*pos, vals);
        }
        Some(ExecutionOutcome {
            kind,
            mutated_inputs,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Budget {
    pub max_paths: usize,
    pub loop_unroll_limit: usize,
    pub solver_timeout_ms: u64,
    pub total_deadline_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("budget field `{0}` must be positive")]
pub struct BudgetError(pub &'static str);

impl Budget {
    pub fn new(
        max_paths: usize,
        loop_unroll_limit: usize,
        solver_timeout_ms: u64,
        total_deadline_ms: u64,
    ) -> Result<Budget, BudgetError> {
        let b = Budget {
            max_paths,
            loop_unroll_limit,
            solver_timeout_ms,
            total_deadline_ms,
        };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<(), BudgetError> {
        if self.max_paths == 0 {
            return Err(BudgetError("max_paths"));
        }
        if self.loop_unroll_limit == 0 {
            return Err(BudgetError("loop_unroll_limit"));
        }
        if self.solver_timeout_ms == 0 {
            return Err(BudgetError("solver_timeout_ms"));
        }
        if self.total_deadline_ms == 0 {
            return Err(BudgetError("total_deadline_ms"));
        }
        Ok(())
    }

    pub fn deadline_from(&self, start: Instant) -> Instant {
        start + Duration::from_millis(self.total_deadline_ms)
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget {
            max_paths: 512,
            loop_unroll_limit: 32,
            solver_timeout_ms: DEFAULT_SOLVER_TIMEOUT_MS,
            total_deadline_ms: 30_000,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SymStats {
    pub solver_queries: usize,
    pub unknown_verdicts: usize,
    pub forks: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SymRun {
    pub leaves: Vec<SymOutcome>,
    pub stats: SymStats,
}

impl SymRun {
    pub fn abandoned(&self) -> usize {
        self.leaves.iter().filter(|l| l.is_abandoned()).count()
    }

    pub fn live(&self) -> impl Iterator<Item = &SymOutcome> {
        self.leaves.iter().filter(|l| !l.is_abandoned())
    }
}

/// Name of the symbol standing for element `k` of array parameter `array`.
pub fn element_symbol(array: &str, k: usize) -> String {
    format!("{array}@{k}")
}

/// Fresh input symbols for `params`, named after the parameters. Array
/// parameters take their length from `lengths` (missing entries mean 0).
pub fn input_symbols(params: &[Param], lengths: &BTreeMap<String, usize>) -> Vec<SymValue> {
    params
        .iter()
        .map(|p| match p.ty {
            Type::Int => SymValue::Scalar(Term::var(&p.name, Sort::Int)),
            Type::Bool => SymValue::Scalar(Term::var(&p.name, Sort::Bool)),
            Type::IntArray => {
                let n = lengths.get(&p.name).copied().unwrap_or(0);
                SymValue::Array(
                    (0..n)
                        .map(|k| Term::var(element_symbol(&p.name, k), Sort::Int))
                        .collect(),
                )
            }
            Type::Unit => unreachable!("parameters are never unit"),
        })
        .collect()
}

/// Symbol assignment that corresponds to concrete arguments.
pub fn assignment(params: &[Param], args: &[Value]) -> BTreeMap<String, Value> {
    let mut out = BTreeMap::new();
    for (p, a) in params.iter().zip(args) {
        match a {
            Value::IntArray(items) => {
                for (k, v) in items.iter().enumerate() {
                    out.insert(element_symbol(&p.name, k), Value::Int(v.clone()));
                }
            }
            other => {
                out.insert(p.name.clone(), other.clone());
            }
        }
    }
    out
}

/// Concrete arguments read back from a model over [`input_symbols`].
/// Symbols absent from the model default to 0 / `false`.
pub fn arguments_from_model(
    params: &[Param],
    lengths: &BTreeMap<String, usize>,
    model: &BTreeMap<String, Value>,
) -> Vec<Value> {
    params
        .iter()
        .map(|p| match p.ty {
            Type::Int => model.get(&p.name).cloned().unwrap_or(Value::int(0)),
            Type::Bool => model.get(&p.name).cloned().unwrap_or(Value::Bool(false)),
            Type::IntArray => {
                let n = lengths.get(&p.name).copied().unwrap_or(0);
                Value::IntArray(
                    (0..n)
                        .map(|k| match model.get(&element_symbol(&p.name, k)) {
                            Some(Value::Int(v)) => v.clone(),
                            _ => 0.into(),
                        })
                        .collect(),
                )
            }
            Type::Unit => Value::Unit,
        })
        .collect()
}

/// Solver declarations for every symbol in `inputs`, in parameter order.
pub fn declarations(params: &[Param], inputs: &[SymValue]) -> Vec<(String, Sort)> {
    let mut out = Vec::new();
    for (p, v) in params.iter().zip(inputs) {
        match v {
            SymValue::Scalar(_) => out.push((
                p.name.clone(),
                if p.ty == Type::Bool { Sort::Bool } else { Sort::Int },
            )),
            SymValue::Array(items) => {
                out.extend((0..items.len()).map(|k| (element_symbol(&p.name, k), Sort::Int)))
            }
        }
    }
    out
}

/// Explores `f` over `inputs` (one entry per parameter, positionally).
///
/// Every fork asks `oracle` whether `assumptions ∧ pc ∧ branch` is
/// satisfiable; UNSAT branches are pruned, UNKNOWN branches are explored.
/// Budget exhaustion yields abandoned leaves; only solver backend failures
/// are errors.
pub fn sym_execute(
    f: &FunctionDef,
    inputs: &[SymValue],
    assumptions: &PathCondition,
    budget: &Budget,
    oracle: &dyn Solver,
    declarations: &[(String, Sort)],
) -> Result<SymRun, SolverError> {
    let deadline = budget.deadline_from(Instant::now());
    execute(f, inputs, assumptions, budget, oracle, declarations, deadline)
}
