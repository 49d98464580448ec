use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{
    AbandonReason, Budget, PathCondition, SymOutcome, SymOutcomeKind, SymRun, SymStats, SymValue,
};
use crate::minilang::{BinOp, ExceptionKind, Expr, FunctionDef, Stmt, UnOp};
use crate::solver::{Solver, SolverError, SolverQuery, SolverVerdict};
use crate::term::{Sort, Term};

#[derive(Clone)]
struct State {
    env: HashMap<String, SymValue>,
    pc: Vec<Term>,
}

#[derive(Clone, Copy)]
enum Frame<'a> {
    Block { stmts: &'a [Stmt], next: usize },
    Loop { cond: &'a Expr, body: &'a [Stmt], iter: usize },
}

enum Work<'a> {
    Run(State, Vec<Frame<'a>>),
    Leaf(SymOutcome),
}

enum Stop {
    Raise(ExceptionKind),
    Abandon(AbandonReason),
}

/// Result of evaluating an expression along one sub-path.
type Branch = (Vec<Term>, Result<Term, Stop>);

/// Feasible continuation of one side of a fork.
enum Side {
    Pruned,
    Go(Vec<Term>),
    Abandon(Vec<Term>, AbandonReason),
}

struct Engine<'a> {
    f: &'a FunctionDef,
    assumptions: &'a [Term],
    budget: &'a Budget,
    oracle: &'a dyn Solver,
    decls: &'a [(String, Sort)],
    deadline: Instant,
    paths: usize,
    stats: SymStats,
}

/// [`super::sym_execute`] with an explicit wall-clock deadline.
pub fn execute(
    f: &FunctionDef,
    inputs: &[SymValue],
    assumptions: &PathCondition,
    budget: &Budget,
    oracle: &dyn Solver,
    declarations: &[(String, Sort)],
    deadline: Instant,
) -> Result<SymRun, SolverError> {
    assert_eq!(inputs.len(), f.params.len(), "one input per parameter");
    let env = f
        .params
        .iter()
        .zip(inputs)
        .map(|(p, v)| (p.name.clone(), v.clone()))
        .collect();
    let mut engine = Engine {
        f,
        assumptions: &assumptions.conjuncts,
        budget,
        oracle,
        decls: declarations,
        deadline,
        paths: 1,
        stats: SymStats::default(),
    };
    let mut leaves = Vec::new();
    let mut work = vec![Work::Run(
        State {
            env,
            pc: Vec::new(),
        },
        vec![Frame::Block {
            stmts: &f.body,
            next: 0,
        }],
    )];
    let mut successors = Vec::new();
    while let Some(item) = work.pop() {
        match item {
            Work::Leaf(l) => leaves.push(l),
            Work::Run(st, stack) => {
                engine.step(st, stack, &mut successors)?;
                work.extend(successors.drain(..).rev());
            }
        }
    }
    Ok(SymRun {
        leaves,
        stats: engine.stats,
    })
}

impl<'a> Engine<'a> {
    fn leaf(&self, st: &State, pc: Vec<Term>, outcome: SymOutcomeKind) -> Work<'a> {
        let mutated_inputs: BTreeMap<usize, Vec<Term>> = self
            .f
            .array_params()
            .map(|pos| match &st.env[&self.f.params[pos].name] {
                SymValue::Array(items) => (pos, items.clone()),
                SymValue::Scalar(_) => unreachable!("array parameter keeps its type"),
            })
            .collect();
        Work::Leaf(SymOutcome {
            pc: PathCondition::new(pc),
            outcome,
            mutated_inputs,
        })
    }

    fn stopped(&self, st: &State, pc: Vec<Term>, stop: Stop) -> Work<'a> {
        let kind = match stop {
            Stop::Raise(k) => SymOutcomeKind::Exception(k),
            Stop::Abandon(r) => SymOutcomeKind::Abandoned(r),
        };
        self.leaf(st, pc, kind)
    }

    fn feasible(&mut self, pc: &[Term]) -> Result<Option<bool>, SolverError> {
        let now = Instant::now();
        let remaining = self.deadline.saturating_duration_since(now).as_millis() as u64;
        let query = SolverQuery {
            declarations: self.decls.to_vec(),
            assertions: self.assumptions.iter().chain(pc).cloned().collect(),
            timeout_ms: self.budget.solver_timeout_ms.min(remaining.max(1)),
        };
        self.stats.solver_queries += 1;
        Ok(match self.oracle.check(&query)? {
            SolverVerdict::Sat(_) => Some(true),
            SolverVerdict::Unsat => Some(false),
            SolverVerdict::Unknown(_) => {
                self.stats.unknown_verdicts += 1;
                None
            }
        })
    }

    /// Splits `pc` on `cond`. A side is pruned only on a definite UNSAT.
    fn fork(&mut self, pc: &[Term], cond: &Term) -> Result<(Side, Side), SolverError> {
        let with = |c: Term| {
            let mut v = pc.to_vec();
            v.push(c);
            v
        };
        match cond.as_bool() {
            Some(true) => return Ok((Side::Go(pc.to_vec()), Side::Pruned)),
            Some(false) => return Ok((Side::Pruned, Side::Go(pc.to_vec()))),
            None => {}
        }
        if Instant::now() >= self.deadline {
            return Ok((
                Side::Abandon(pc.to_vec(), AbandonReason::SolverTimeout),
                Side::Pruned,
            ));
        }
        let then_pc = with(cond.clone());
        let else_pc = with(cond.not());
        if self.feasible(&then_pc)? == Some(false) {
            // The parent is feasible, so the negation must be.
            return Ok((Side::Pruned, Side::Go(else_pc)));
        }
        if self.feasible(&else_pc)? == Some(false) {
            return Ok((Side::Go(then_pc), Side::Pruned));
        }
        self.stats.forks += 1;
        if self.paths >= self.budget.max_paths {
            return Ok((
                Side::Go(then_pc),
                Side::Abandon(else_pc, AbandonReason::PathLimit),
            ));
        }
        self.paths += 1;
        Ok((Side::Go(then_pc), Side::Go(else_pc)))
    }

    fn step(
        &mut self,
        mut st: State,
        mut stack: Vec<Frame<'a>>,
        out: &mut Vec<Work<'a>>,
    ) -> Result<(), SolverError> {
        loop {
            let Some(top) = stack.last_mut() else {
                let pc = std::mem::take(&mut st.pc);
                out.push(self.leaf(&st, pc, SymOutcomeKind::Return(None)));
                return Ok(());
            };
            match *top {
                Frame::Block { stmts, next } => {
                    if next == stmts.len() {
                        stack.pop();
                        continue;
                    }
                    *top = Frame::Block {
                        stmts,
                        next: next + 1,
                    };
                    let s = &stmts[next];
                    if let Stmt::While { cond, body } = s {
                        stack.push(Frame::Loop {
                            cond,
                            body,
                            iter: 0,
                        });
                        continue;
                    }
                    return self.stmt(st, stack, s, out);
                }
                Frame::Loop { cond, body, iter } => {
                    let pc = std::mem::take(&mut st.pc);
                    for (pc, r) in self.eval(&st.env, pc, cond)? {
                        let c = match r {
                            Ok(c) => c,
                            Err(stop) => {
                                out.push(self.stopped(&st, pc, stop));
                                continue;
                            }
                        };
                        let (then_side, else_side) = self.fork(&pc, &c)?;
                        match then_side {
                            Side::Pruned => {}
                            Side::Abandon(pc, r) => out.push(self.stopped(&st, pc, Stop::Abandon(r))),
                            Side::Go(pc) if iter >= self.budget.loop_unroll_limit => {
                                out.push(self.stopped(&st, pc, Stop::Abandon(AbandonReason::UnrollLimit)))
                            }
                            Side::Go(pc) => {
                                let mut s2 = stack.clone();
                                *s2.last_mut().expect("loop frame") = Frame::Loop {
                                    cond,
                                    body,
                                    iter: iter + 1,
                                };
                                s2.push(Frame::Block {
                                    stmts: body,
                                    next: 0,
                                });
                                out.push(Work::Run(
                                    State {
                                        env: st.env.clone(),
                                        pc,
                                    },
                                    s2,
                                ));
                            }
                        }
                        match else_side {
                            Side::Pruned => {}
                            Side::Abandon(pc, r) => out.push(self.stopped(&st, pc, Stop::Abandon(r))),
                            Side::Go(pc) => {
                                let mut s2 = stack.clone();
                                s2.pop();
                                out.push(Work::Run(
                                    State {
                                        env: st.env.clone(),
                                        pc,
                                    },
                                    s2,
                                ));
                            }
                        }
                    }
                    return Ok(());
                }
            }
        }
    }

    fn stmt(
        &mut self,
        mut st: State,
        stack: Vec<Frame<'a>>,
        s: &'a Stmt,
        out: &mut Vec<Work<'a>>,
    ) -> Result<(), SolverError> {
        let pc = std::mem::take(&mut st.pc);
        match s {
            Stmt::Assign { target, value } => {
                for (pc, r) in self.eval(&st.env, pc, value)? {
                    match r {
                        Ok(v) => {
                            let mut env = st.env.clone();
                            env.insert(target.clone(), SymValue::Scalar(v));
                            out.push(Work::Run(State { env, pc }, stack.clone()));
                        }
                        Err(stop) => out.push(self.stopped(&st, pc, stop)),
                    }
                }
            }
            Stmt::Store {
                array,
                index,
                value,
            } => {
                for (pc, idx) in self.eval(&st.env, pc, index)? {
                    let idx = match idx {
                        Ok(i) => i,
                        Err(stop) => {
                            out.push(self.stopped(&st, pc, stop));
                            continue;
                        }
                    };
                    for (pc, v) in self.eval(&st.env, pc, value)? {
                        let v = match v {
                            Ok(v) => v,
                            Err(stop) => {
                                out.push(self.stopped(&st, pc, stop));
                                continue;
                            }
                        };
                        let len = match &st.env[array] {
                            SymValue::Array(items) => items.len(),
                            SymValue::Scalar(_) => unreachable!("checked by the parser"),
                        };
                        for (pc, slot) in self.resolve_index(pc, &idx, len)? {
                            match slot {
                                Ok(k) => {
                                    let mut env = st.env.clone();
                                    if let Some(SymValue::Array(items)) = env.get_mut(array) {
                                        items[k] = v.clone();
                                    }
                                    out.push(Work::Run(State { env, pc }, stack.clone()));
                                }
                                Err(stop) => out.push(self.stopped(&st, pc, stop)),
                            }
                        }
                    }
                }
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                for (pc, r) in self.eval(&st.env, pc, cond)? {
                    let c = match r {
                        Ok(c) => c,
                        Err(stop) => {
                            out.push(self.stopped(&st, pc, stop));
                            continue;
                        }
                    };
                    let (then_side, else_side) = self.fork(&pc, &c)?;
                    for (side, block) in [
                        (then_side, Some(then_branch)),
                        (else_side, else_branch.as_ref()),
                    ] {
                        match side {
                            Side::Pruned => {}
                            Side::Abandon(pc, r) => out.push(self.stopped(&st, pc, Stop::Abandon(r))),
                            Side::Go(pc) => {
                                let mut s2 = stack.clone();
                                if let Some(b) = block {
                                    s2.push(Frame::Block { stmts: b, next: 0 });
                                }
                                out.push(Work::Run(
                                    State {
                                        env: st.env.clone(),
                                        pc,
                                    },
                                    s2,
                                ));
                            }
                        }
                    }
                }
            }
            Stmt::While { .. } => unreachable!("loops are entered by the block frame"),
            Stmt::Return(None) => out.push(self.leaf(&st, pc, SymOutcomeKind::Return(None))),
            Stmt::Return(Some(e)) => {
                for (pc, r) in self.eval(&st.env, pc, e)? {
                    out.push(match r {
                        Ok(v) => self.leaf(&st, pc, SymOutcomeKind::Return(Some(v))),
                        Err(stop) => self.stopped(&st, pc, stop),
                    });
                }
            }
            Stmt::Assert(e) => {
                for (pc, r) in self.eval(&st.env, pc, e)? {
                    let c = match r {
                        Ok(c) => c,
                        Err(stop) => {
                            out.push(self.stopped(&st, pc, stop));
                            continue;
                        }
                    };
                    let (then_side, else_side) = self.fork(&pc, &c)?;
                    match then_side {
                        Side::Pruned => {}
                        Side::Abandon(pc, r) => out.push(self.stopped(&st, pc, Stop::Abandon(r))),
                        Side::Go(pc) => out.push(Work::Run(
                            State {
                                env: st.env.clone(),
                                pc,
                            },
                            stack.clone(),
                        )),
                    }
                    match else_side {
                        Side::Pruned => {}
                        Side::Abandon(pc, r) => out.push(self.stopped(&st, pc, Stop::Abandon(r))),
                        Side::Go(pc) => {
                            out.push(self.stopped(&st, pc, Stop::Raise(ExceptionKind::AssertFailed)))
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Concrete slot for `idx` in an array of length `len`: forks once per
    /// feasible in-bounds position, then the out-of-bounds case.
    fn resolve_index(
        &mut self,
        pc: Vec<Term>,
        idx: &Term,
        len: usize,
    ) -> Result<Vec<(Vec<Term>, Result<usize, Stop>)>, SolverError> {
        let oob = Stop::Raise(ExceptionKind::IndexOutOfBounds);
        if let Some(i) = idx.as_int() {
            let slot = usize::try_from(i).ok().filter(|&k| k < len);
            return Ok(vec![(pc, slot.ok_or(oob))]);
        }
        let mut out = Vec::new();
        let mut rest = pc;
        for k in 0..len {
            let (hit, miss) = self.fork(&rest, &idx.eq(&Term::int(k)))?;
            match hit {
                Side::Pruned => {}
                Side::Go(pc) => out.push((pc, Ok(k))),
                Side::Abandon(pc, r) => out.push((pc, Err(Stop::Abandon(r)))),
            }
            match miss {
                Side::Pruned => return Ok(out),
                Side::Go(pc) => rest = pc,
                Side::Abandon(pc, r) => {
                    out.push((pc, Err(Stop::Abandon(r))));
                    return Ok(out);
                }
            }
        }
        out.push((rest, Err(oob)));
        Ok(out)
    }

    fn eval(
        &mut self,
        env: &HashMap<String, SymValue>,
        pc: Vec<Term>,
        e: &Expr,
    ) -> Result<Vec<Branch>, SolverError> {
        Ok(match e {
            Expr::Int(v) => vec![(pc, Ok(Term::int(v.clone())))],
            Expr::Bool(b) => vec![(pc, Ok(Term::bool(*b)))],
            Expr::Var(n) => match &env[n] {
                SymValue::Scalar(t) => vec![(pc, Ok(t.clone()))],
                SymValue::Array(_) => unreachable!("arrays are not first-class values"),
            },
            Expr::Len(n) => match &env[n] {
                SymValue::Array(items) => vec![(pc, Ok(Term::int(items.len())))],
                SymValue::Scalar(_) => unreachable!(),
            },
            Expr::Index { array, index } => {
                let items = match &env[array] {
                    SymValue::Array(items) => items.clone(),
                    SymValue::Scalar(_) => unreachable!(),
                };
                let mut out = Vec::new();
                for (pc, idx) in self.eval(env, pc, index)? {
                    match idx {
                        Err(stop) => out.push((pc, Err(stop))),
                        Ok(idx) => {
                            for (pc, slot) in self.resolve_index(pc, &idx, items.len())? {
                                out.push((pc, slot.map(|k| items[k].clone())));
                            }
                        }
                    }
                }
                out
            }
            Expr::Unary { op, operand } => self
                .eval(env, pc, operand)?
                .into_iter()
                .map(|(pc, r)| {
                    (
                        pc,
                        r.map(|t| match op {
                            UnOp::Neg => t.neg(),
                            UnOp::Not => t.not(),
                        }),
                    )
                })
                .collect(),
            Expr::Binary { op, lhs, rhs } => self.binary(env, pc, *op, lhs, rhs)?,
        })
    }

    fn binary(
        &mut self,
        env: &HashMap<String, SymValue>,
        pc: Vec<Term>,
        op: BinOp,
        lhs: &Expr,
        rhs: &Expr,
    ) -> Result<Vec<Branch>, SolverError> {
        let mut out = Vec::new();
        for (pc, l) in self.eval(env, pc, lhs)? {
            let l = match l {
                Ok(l) => l,
                Err(stop) => {
                    out.push((pc, Err(stop)));
                    continue;
                }
            };
            let logical = matches!(op, BinOp::And | BinOp::Or);
            if logical && rhs.may_raise() {
                // Short-circuit matters: the right operand runs only on one side.
                let decided = Term::bool(op == BinOp::Or);
                let (then_side, else_side) = self.fork(&pc, &l)?;
                let (eval_side, const_side) = if op == BinOp::And {
                    (then_side, else_side)
                } else {
                    (else_side, then_side)
                };
                let mut eval_part = Vec::new();
                match eval_side {
                    Side::Pruned => {}
                    Side::Abandon(pc, r) => eval_part.push((pc, Err(Stop::Abandon(r)))),
                    Side::Go(pc) => eval_part.extend(self.eval(env, pc, rhs)?),
                }
                let mut const_part = Vec::new();
                match const_side {
                    Side::Pruned => {}
                    Side::Abandon(pc, r) => const_part.push((pc, Err(Stop::Abandon(r)))),
                    Side::Go(pc) => const_part.push((pc, Ok(decided.clone()))),
                }
                // Keep then-before-else order.
                if op == BinOp::And {
                    out.extend(eval_part);
                    out.extend(const_part);
                } else {
                    out.extend(const_part);
                    out.extend(eval_part);
                }
                continue;
            }
            for (pc, r) in self.eval(env, pc, rhs)? {
                let r = match r {
                    Ok(r) => r,
                    Err(stop) => {
                        out.push((pc, Err(stop)));
                        continue;
                    }
                };
                if !matches!(op, BinOp::Div | BinOp::Mod) {
                    out.push((pc, Ok(Term::apply(op, &l, &r))));
                    continue;
                }
                let exc = if op == BinOp::Div {
                    ExceptionKind::DivByZero
                } else {
                    ExceptionKind::ModByZero
                };
                if let Some(d) = r.as_int() {
                    let res = if d.is_zero() {
                        Err(Stop::Raise(exc))
                    } else {
                        Ok(Term::apply(op, &l, &r))
                    };
                    out.push((pc, res));
                    continue;
                }
                let (zero, nonzero) = self.fork(&pc, &r.eq(&Term::int(BigInt::zero())))?;
                match zero {
                    Side::Pruned => {}
                    Side::Go(pc) => out.push((pc, Err(Stop::Raise(exc)))),
                    Side::Abandon(pc, reason) => out.push((pc, Err(Stop::Abandon(reason)))),
                }
                match nonzero {
                    Side::Pruned => {}
                    Side::Go(pc) => out.push((pc, Ok(Term::apply(op, &l, &r)))),
                    Side::Abandon(pc, reason) => out.push((pc, Err(Stop::Abandon(reason)))),
                }
            }
        }
        Ok(out)
    }
}
