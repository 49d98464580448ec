//! Problem domains: constraint parsing, assumption injection and pruning.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use thiserror::Error;

use crate::minilang::{
    parse_constraint_expr, BinOp, ExecutionOutcome, Expr, FunctionDef, Param, ParseError,
    ParseErrorKind, Type, UnOp, Value,
};
use crate::solver::{Solver, SolverError, SolverQuery, SolverVerdict, DEFAULT_SOLVER_TIMEOUT_MS};
use crate::symcore::{PathCondition, SymValue};
use crate::term::{Sort, Term};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum DomainError {
    #[error("constraint {index} (`{text}`): {error}")]
    ConstraintParse {
        index: usize,
        text: String,
        error: ParseError,
    },
    #[error("constraint {index} refers to unknown parameter `{name}`")]
    UnknownParameter { index: usize, name: String },
    #[error("the constrained input domain is empty")]
    EmptyDomain,
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Function header shared by every candidate of a problem.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    pub name: String,
    pub params: Vec<Param>,
    pub ret: Type,
}

impl Signature {
    pub fn of(f: &FunctionDef) -> Signature {
        Signature {
            name: f.name.clone(),
            params: f.params.clone(),
            ret: f.ret,
        }
    }

    /// Same parameter types (by position) and return type. Names may differ.
    pub fn matches(&self, f: &FunctionDef) -> bool {
        self.ret == f.ret
            && self.params.len() == f.params.len()
            && self.params.iter().zip(&f.params).all(|(a, b)| a.ty == b.ty)
    }

    pub fn array_params(&self) -> impl Iterator<Item = &Param> {
        self.params.iter().filter(|p| p.ty == Type::IntArray)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub args: Vec<Value>,
    pub expected: ExecutionOutcome,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DomainConstraints {
    pub raw: Vec<String>,
    /// Binary comparisons and boolean combinations over parameters and
    /// `len(..)`; top-level conjunctions are split.
    pub normalized: Vec<Expr>,
}

/// What a selector may see of a problem. Hidden tests are deliberately not
/// part of this type.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProblemSpec {
    pub id: String,
    pub signature: Signature,
    pub constraints: DomainConstraints,
    pub public_examples: Vec<TestCase>,
}

fn split_conjuncts(e: Expr, out: &mut Vec<Expr>) {
    match e {
        Expr::Binary {
            op: BinOp::And,
            lhs,
            rhs,
        } => {
            split_conjuncts(*lhs, out);
            split_conjuncts(*rhs, out);
        }
        other => out.push(other),
    }
}

pub fn parse_constraints(
    raw: &[String],
    signature: &Signature,
) -> Result<DomainConstraints, DomainError> {
    let mut normalized = Vec::new();
    for (index, text) in raw.iter().enumerate() {
        let e = parse_constraint_expr(text, &signature.params).map_err(|error| {
            match error.kind {
                ParseErrorKind::UnknownIdentifier(name) => {
                    DomainError::UnknownParameter { index, name }
                }
                _ => DomainError::ConstraintParse {
                    index,
                    text: text.clone(),
                    error,
                },
            }
        })?;
        split_conjuncts(e, &mut normalized);
    }
    Ok(DomainConstraints {
        raw: raw.to_vec(),
        normalized,
    })
}

/// Translates a constraint to a term. `scalar` supplies parameter terms and
/// `len` the concrete length of an array parameter.
pub fn constraint_term(
    e: &Expr,
    scalar: &dyn Fn(&str) -> Term,
    len: &dyn Fn(&str) -> usize,
) -> Term {
    match e {
        Expr::Int(v) => Term::int(v.clone()),
        Expr::Bool(b) => Term::bool(*b),
        Expr::Var(n) => scalar(n),
        Expr::Len(n) => Term::int(len(n)),
        Expr::Index { .. } => unreachable!("rejected when the constraint was parsed"),
        Expr::Unary { op, operand } => {
            let t = constraint_term(operand, scalar, len);
            match op {
                UnOp::Neg => t.neg(),
                UnOp::Not => t.not(),
            }
        }
        Expr::Binary { op, lhs, rhs } => Term::apply(
            *op,
            &constraint_term(lhs, scalar, len),
            &constraint_term(rhs, scalar, len),
        ),
    }
}

/// Assumption conjuncts over `inputs` (one per signature parameter). Lengths
/// fold to constants; conjuncts that fold to `true` are dropped.
pub fn inject_assumptions(
    constraints: &DomainConstraints,
    signature: &Signature,
    inputs: &[SymValue],
) -> Result<PathCondition, DomainError> {
    let by_name: BTreeMap<&str, &SymValue> = signature
        .params
        .iter()
        .map(|p| p.name.as_str())
        .zip(inputs)
        .collect();
    let scalar = |n: &str| match by_name.get(n) {
        Some(SymValue::Scalar(t)) => t.clone(),
        _ => unreachable!("constraint names were checked against the signature"),
    };
    let len = |n: &str| match by_name.get(n) {
        Some(SymValue::Array(items)) => items.len(),
        _ => unreachable!("len() only accepts array parameters"),
    };
    let mut conjuncts = Vec::new();
    for e in &constraints.normalized {
        let t = constraint_term(e, &scalar, &len);
        match t.as_bool() {
            Some(true) => {}
            Some(false) => return Err(DomainError::EmptyDomain),
            None => conjuncts.push(t),
        }
    }
    Ok(PathCondition::new(conjuncts))
}

/// Fails with `EmptyDomain` if `assumptions` alone are unsatisfiable.
/// UNKNOWN is accepted.
pub fn ensure_nonempty(
    assumptions: &PathCondition,
    declarations: &[(String, Sort)],
    solver: &dyn Solver,
) -> Result<(), DomainError> {
    if assumptions.conjuncts.is_empty() {
        return Ok(());
    }
    let q = SolverQuery {
        declarations: declarations.to_vec(),
        assertions: assumptions.conjuncts.clone(),
        timeout_ms: DEFAULT_SOLVER_TIMEOUT_MS,
    };
    match solver.check(&q)? {
        SolverVerdict::Unsat => Err(DomainError::EmptyDomain),
        _ => Ok(()),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Prune {
    Keep,
    Drop,
}

/// `Drop` exactly when `pc ∧ assumptions` is UNSAT.
pub fn prune_on_violation(
    pc: &PathCondition,
    assumptions: &PathCondition,
    solver: &dyn Solver,
) -> Result<Prune, SolverError> {
    let assertions: Vec<Term> = assumptions
        .conjuncts
        .iter()
        .chain(&pc.conjuncts)
        .cloned()
        .collect();
    if assertions.iter().any(|t| t.as_bool() == Some(false)) {
        return Ok(Prune::Drop);
    }
    let mut symbols = BTreeSet::new();
    for t in &assertions {
        t.free_symbols(&mut symbols);
    }
    let q = SolverQuery {
        declarations: symbols.into_iter().collect(),
        assertions,
        timeout_ms: DEFAULT_SOLVER_TIMEOUT_MS,
    };
    Ok(match solver.check(&q)? {
        SolverVerdict::Unsat => Prune::Drop,
        _ => Prune::Keep,
    })
}

/// Concrete check of `args` against the constraints.
pub fn satisfies(constraints: &DomainConstraints, signature: &Signature, args: &[Value]) -> bool {
    if args.len() != signature.params.len() {
        return false;
    }
    let by_name: BTreeMap<&str, &Value> = signature
        .params
        .iter()
        .map(|p| p.name.as_str())
        .zip(args)
        .collect();
    let scalar = |n: &str| Term::from_value(by_name[n]).expect("scalar argument");
    let len = |n: &str| match by_name[n] {
        Value::IntArray(items) => items.len(),
        _ => 0,
    };
    constraints.normalized.iter().all(|e| {
        let t = constraint_term(e, &scalar, &len);
        matches!(t.eval_bool(&|_| None), Ok(true))
    })
}

/// Integer ranges for scalar parameters read off conjuncts of the form
/// `param OP literal` or `literal OP param`. Parameters without both a lower
/// and an upper bound are absent from the result.
pub fn derive_bounds(
    constraints: &DomainConstraints,
    signature: &Signature,
) -> BTreeMap<String, (BigInt, BigInt)> {
    let mut lo: BTreeMap<String, BigInt> = BTreeMap::new();
    let mut hi: BTreeMap<String, BigInt> = BTreeMap::new();
    let literal = |e: &Expr| -> Option<BigInt> {
        match e {
            Expr::Int(v) => Some(v.clone()),
            Expr::Unary {
                op: UnOp::Neg,
                operand,
            } => match operand.as_ref() {
                Expr::Int(v) => Some(-v),
                _ => None,
            },
            _ => None,
        }
    };
    for e in &constraints.normalized {
        let Expr::Binary { op, lhs, rhs } = e else { continue };
        // Normalize to `name OP value`.
        let (name, op, v) = match (lhs.as_ref(), literal(rhs), literal(lhs), rhs.as_ref()) {
            (Expr::Var(n), Some(v), _, _) => (n.as_str(), *op, v),
            (_, _, Some(v), Expr::Var(n)) => {
                let flipped = match op {
                    BinOp::Lt => BinOp::Gt,
                    BinOp::Le => BinOp::Ge,
                    BinOp::Gt => BinOp::Lt,
                    BinOp::Ge => BinOp::Le,
                    other => *other,
                };
                (n.as_str(), flipped, v)
            }
            _ => continue,
        };
        let tighten_lo = |m: &mut BTreeMap<String, BigInt>, v: BigInt| {
            let e = m.entry(name.to_string()).or_insert_with(|| v.clone());
            if v > *e {
                *e = v;
            }
        };
        let tighten_hi = |m: &mut BTreeMap<String, BigInt>, v: BigInt| {
            let e = m.entry(name.to_string()).or_insert_with(|| v.clone());
            if v < *e {
                *e = v;
            }
        };
        match op {
            BinOp::Ge => tighten_lo(&mut lo, v),
            BinOp::Gt => tighten_lo(&mut lo, v + 1),
            BinOp::Le => tighten_hi(&mut hi, v),
            BinOp::Lt => tighten_hi(&mut hi, v - 1),
            BinOp::Eq => {
                tighten_lo(&mut lo, v.clone());
                tighten_hi(&mut hi, v);
            }
            _ => {}
        }
    }
    signature
        .params
        .iter()
        .filter(|p| p.ty == Type::Int)
        .filter_map(|p| {
            let l = lo.get(&p.name)?;
            let h = hi.get(&p.name)?;
            Some((p.name.clone(), (l.clone(), h.clone())))
        })
        .collect()
}

/// Array lengths in `0..=max_len` allowed by the constraints that mention
/// only `len(param)`. Constraints involving other parameters are left to
/// the solver.
pub fn array_length_strategy(
    param: &str,
    constraints: &DomainConstraints,
    max_len: usize,
) -> Result<Vec<usize>, DomainError> {
    let lengths: Vec<usize> = (0..=max_len)
        .filter(|&n| length_allowed(param, constraints, n))
        .collect();
    if lengths.is_empty() {
        return Err(DomainError::EmptyDomain);
    }
    Ok(lengths)
}

/// Whether some length above `max_len` would also be allowed, meaning a
/// search capped at `max_len` does not cover the whole domain.
pub fn length_range_truncated(param: &str, constraints: &DomainConstraints, max_len: usize) -> bool {
    (max_len + 1..=max_len + 64).any(|n| length_allowed(param, constraints, n))
}

fn length_allowed(param: &str, constraints: &DomainConstraints, n: usize) -> bool {
    constraints.normalized.iter().all(|e| {
        let mut only_this = true;
        let mut mentions = false;
        visit_len_refs(e, &mut |name, is_len| {
            if is_len && name == param {
                mentions = true;
            } else {
                only_this = false;
            }
        });
        if !mentions || !only_this {
            return true;
        }
        let t = constraint_term(e, &|_| unreachable!(), &|_| n);
        !matches!(t.eval_bool(&|_| None), Ok(false))
    })
}

fn visit_len_refs(e: &Expr, f: &mut dyn FnMut(&str, bool)) {
    match e {
        Expr::Int(_) | Expr::Bool(_) => {}
        Expr::Var(n) => f(n, false),
        Expr::Len(n) => f(n, true),
        Expr::Index { array, index } => {
            f(array, false);
            visit_len_refs(index, f);
        }
        Expr::Unary { operand, .. } => visit_len_refs(operand, f),
        Expr::Binary { lhs, rhs, .. } => {
            visit_len_refs(lhs, f);
            visit_len_refs(rhs, f);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minilang::print_expr;
    use crate::solver::EnumerativeSolver;
    use crate::symcore::input_symbols;

    fn sig(params: &[(&str, Type)]) -> Signature {
        Signature {
            name: "f".into(),
            params: params
                .iter()
                .map(|(n, t)| Param {
                    name: n.to_string(),
                    ty: *t,
                })
                .collect(),
            ret: Type::Int,
        }
    }

    fn strings(items: &[&str]) -> Vec<String> {
        items.iter().map(|s| s.to_string()).collect()
    }

    fn n_sym() -> Term {
        Term::var("n", Sort::Int)
    }

    #[test]
    fn chained_bounds_split() {
        let s = sig(&[("n", Type::Int)]);
        let c = parse_constraints(&strings(&["1 <= n <= 100"]), &s).unwrap();
        let printed: Vec<String> = c.normalized.iter().map(print_expr).collect();
        assert_eq!(printed, ["1 <= n", "n <= 100"]);
        let c = parse_constraints(&strings(&["x > 0"]), &sig(&[("x", Type::Int)])).unwrap();
        assert_eq!(c.normalized.len(), 1);
        assert_eq!(print_expr(&c.normalized[0]), "x > 0");
    }

    #[test]
    fn element_references_rejected() {
        let s = sig(&[("a", Type::IntArray)]);
        let err = parse_constraints(&strings(&["len(a) <= 3 && a[0] >= 0"]), &s).unwrap_err();
        assert!(matches!(err, DomainError::ConstraintParse { .. }), "{err:?}");
        let err = parse_constraints(&strings(&["m > 0"]), &sig(&[("n", Type::Int)])).unwrap_err();
        assert_eq!(
            err,
            DomainError::UnknownParameter {
                index: 0,
                name: "m".into()
            }
        );
    }

    #[test]
    fn injection_cases() {
        let s = sig(&[("n", Type::Int)]);
        let c = parse_constraints(&strings(&["1 <= n <= 100"]), &s).unwrap();
        let inputs = input_symbols(&s.params, &BTreeMap::new());
        let pc = inject_assumptions(&c, &s, &inputs).unwrap();
        assert_eq!(
            pc.conjuncts,
            vec![Term::int(1).le(&n_sym()), n_sym().le(&Term::int(100))]
        );

        let s = sig(&[("a", Type::IntArray)]);
        let c = parse_constraints(&strings(&["len(a) == 2"]), &s).unwrap();
        let inputs = input_symbols(&s.params, &[("a".to_string(), 2)].into());
        assert!(inject_assumptions(&c, &s, &inputs).unwrap().is_trivially_true());

        let s = sig(&[("n", Type::Int)]);
        let c = parse_constraints(&strings(&["n >= 1", "n <= 0"]), &s).unwrap();
        let inputs = input_symbols(&s.params, &BTreeMap::new());
        let pc = inject_assumptions(&c, &s, &inputs).unwrap();
        let solver = EnumerativeSolver::new([("n".to_string(), ((-5).into(), 5.into()))].into());
        let decls = vec![("n".to_string(), Sort::Int)];
        assert_eq!(ensure_nonempty(&pc, &decls, &solver), Err(DomainError::EmptyDomain));
    }

    #[test]
    fn pruning_cases() {
        let solver = EnumerativeSolver::new([("n".to_string(), ((-200).into(), 200.into()))].into());
        let n = n_sym();
        let assumptions = PathCondition::new(vec![
            Term::int(1).le(&n),
            n.le(&Term::int(100)),
        ]);
        let pc = PathCondition::new(vec![n.gt(&Term::int(100))]);
        assert_eq!(prune_on_violation(&pc, &assumptions, &solver).unwrap(), Prune::Drop);
        let pc = PathCondition::new(vec![n.gt(&Term::int(50))]);
        assert_eq!(prune_on_violation(&pc, &assumptions, &solver).unwrap(), Prune::Keep);
        let two = Term::int(2);
        let pc = PathCondition::new(vec![
            n.modulo(&two).eq(&Term::int(0)),
            n.modulo(&two).eq(&Term::int(1)),
        ]);
        let expected = if (-200..=200).any(|v: i64| v.rem_euclid(2) == 0 && v.rem_euclid(2) == 1) {
            Prune::Keep
        } else {
            Prune::Drop
        };
        assert_eq!(
            prune_on_violation(&pc, &PathCondition::default(), &solver).unwrap(),
            expected
        );
    }

    #[test]
    fn bounds_from_comparisons() {
        let s = sig(&[("n", Type::Int), ("m", Type::Int), ("k", Type::Int)]);
        let c = parse_constraints(
            &strings(&["1 <= n <= 100", "n < 50", "-3 < m", "m <= 7", "k > 0"]),
            &s,
        )
        .unwrap();
        let b = derive_bounds(&c, &s);
        assert_eq!(b["n"], (BigInt::from(1), BigInt::from(49)));
        assert_eq!(b["m"], (BigInt::from(-2), BigInt::from(7)));
        assert!(!b.contains_key("k"));
    }

    #[test]
    fn length_strategy() {
        let s = sig(&[("a", Type::IntArray)]);
        let c = parse_constraints(&strings(&["1 <= len(a) <= 3"]), &s).unwrap();
        assert_eq!(array_length_strategy("a", &c, 4).unwrap(), vec![1, 2, 3]);
        assert!(!length_range_truncated("a", &c, 4));
        let none = DomainConstraints::default();
        assert_eq!(array_length_strategy("a", &none, 2).unwrap(), vec![0, 1, 2]);
        assert!(length_range_truncated("a", &none, 2));
        let c = parse_constraints(&strings(&["len(a) == 5"]), &s).unwrap();
        assert_eq!(array_length_strategy("a", &c, 4), Err(DomainError::EmptyDomain));
    }

    #[test]
    fn concrete_satisfaction() {
        let s = sig(&[("n", Type::Int), ("a", Type::IntArray)]);
        let c = parse_constraints(&strings(&["0 <= n < len(a)"]), &s).unwrap();
        assert!(satisfies(&c, &s, &[Value::int(1), Value::array([4, 5])]));
        assert!(!satisfies(&c, &s, &[Value::int(2), Value::array([4, 5])]));
    }
}
