use std::collections::HashMap;

use num_bigint::BigInt;
use num_traits::{Euclid, Zero};

use super::ast::{BinOp, Expr, FunctionDef, Stmt, UnOp};
use super::value::{ExceptionKind, ExecutionOutcome, OutcomeKind, Value};
use super::InterpError;

/// Euclidean quotient: the remainder is always non-negative, as in SMT-LIB `div`.
pub fn euclid_div(a: &BigInt, b: &BigInt) -> BigInt {
    a.div_euclid(b)
}

/// Euclidean remainder in `[0, |b|)`, as in SMT-LIB `mod`.
pub fn euclid_mod(a: &BigInt, b: &BigInt) -> BigInt {
    a.rem_euclid(b)
}

/// Runs `f` on concrete arguments. Each executed statement and each loop
/// condition test consumes one unit of fuel.
pub fn interpret(f: &FunctionDef, args: &[Value], fuel: u64) -> Result<ExecutionOutcome, InterpError> {
    if args.len() != f.params.len() {
        return Err(InterpError::Arity {
            expected: f.params.len(),
            found: args.len(),
        });
    }
    let mut env = HashMap::with_capacity(f.params.len() + 4);
    for (k, (param, arg)) in f.params.iter().zip(args).enumerate() {
        if arg.ty() != param.ty {
            return Err(InterpError::TypeMismatch {
                position: k,
                expected: param.ty,
                found: arg.ty(),
            });
        }
        env.insert(param.name.clone(), arg.clone());
    }
    let mut m = Machine { env, fuel };
    let kind = match m.block(&f.body) {
        Ok(Some(v)) => OutcomeKind::Return(v),
        Ok(None) => OutcomeKind::Return(Value::Unit),
        Err(Stop::Raise(k)) => OutcomeKind::Exception(k),
        Err(Stop::OutOfFuel) => OutcomeKind::ResourceExhausted,
    };
    let mutated_inputs = f
        .array_params()
        .map(|pos| match m.env.remove(&f.params[pos].name) {
            Some(Value::IntArray(items)) => (pos, items),
            _ => unreachable!("array parameter keeps its type"),
        })
        .collect();
    Ok(ExecutionOutcome {
        kind,
        mutated_inputs,
    })
}

enum Stop {
    Raise(ExceptionKind),
    OutOfFuel,
}

struct Machine {
    env: HashMap<String, Value>,
    fuel: u64,
}

impl Machine {
    fn tick(&mut self) -> Result<(), Stop> {
        if self.fuel == 0 {
            return Err(Stop::OutOfFuel);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn block(&mut self, stmts: &[Stmt]) -> Result<Option<Value>, Stop> {
        for s in stmts {
            if let Some(v) = self.stmt(s)? {
                return Ok(Some(v));
            }
        }
        Ok(None)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Option<Value>, Stop> {
        self.tick()?;
        match s {
            Stmt::Assign { target, value } => {
                let v = self.eval(value)?;
                self.env.insert(target.clone(), v);
                Ok(None)
            }
            Stmt::Store {
                array,
                index,
                value,
            } => {
                let idx = self.int(index)?;
                let v = self.int(value)?;
                let Some(Value::IntArray(items)) = self.env.get_mut(array) else {
                    unreachable!("checked by the parser")
                };
                let slot = checked_index(&idx, items.len())?;
                items[slot] = v;
                Ok(None)
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                if self.bool(cond)? {
                    self.block(then_branch)
                } else if let Some(b) = else_branch {
                    self.block(b)
                } else {
                    Ok(None)
                }
            }
            Stmt::While { cond, body } => {
                while self.bool(cond)? {
                    if let Some(v) = self.block(body)? {
                        return Ok(Some(v));
                    }
                    self.tick()?;
                }
                Ok(None)
            }
            Stmt::Return(None) => Ok(Some(Value::Unit)),
            Stmt::Return(Some(e)) => self.eval(e).map(Some),
            Stmt::Assert(e) => {
                if self.bool(e)? {
                    Ok(None)
                } else {
                    Err(Stop::Raise(ExceptionKind::AssertFailed))
                }
            }
        }
    }

    fn int(&mut self, e: &Expr) -> Result<BigInt, Stop> {
        match self.eval(e)? {
            Value::Int(v) => Ok(v),
            other => unreachable!("expected int, parser admitted {other:?}"),
        }
    }

    fn bool(&mut self, e: &Expr) -> Result<bool, Stop> {
        match self.eval(e)? {
            Value::Bool(b) => Ok(b),
            other => unreachable!("expected bool, parser admitted {other:?}"),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, Stop> {
        Ok(match e {
            Expr::Int(v) => Value::Int(v.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::Var(n) => self.env[n].clone(),
            Expr::Len(n) => match &self.env[n] {
                Value::IntArray(items) => Value::int(items.len()),
                _ => unreachable!(),
            },
            Expr::Index { array, index } => {
                let idx = self.int(index)?;
                let Value::IntArray(items) = &self.env[array] else {
                    unreachable!()
                };
                let slot = checked_index(&idx, items.len())?;
                Value::Int(items[slot].clone())
            }
            Expr::Unary { op, operand } => match (op, self.eval(operand)?) {
                (UnOp::Neg, Value::Int(v)) => Value::Int(-v),
                (UnOp::Not, Value::Bool(b)) => Value::Bool(!b),
                _ => unreachable!(),
            },
            Expr::Binary { op, lhs, rhs } => match op {
                BinOp::And => Value::Bool(self.bool(lhs)? && self.bool(rhs)?),
                BinOp::Or => Value::Bool(self.bool(lhs)? || self.bool(rhs)?),
                BinOp::Eq | BinOp::Ne => {
                    let l = self.eval(lhs)?;
                    let r = self.eval(rhs)?;
                    Value::Bool((l == r) == (*op == BinOp::Eq))
                }
                _ => {
                    let l = self.int(lhs)?;
                    let r = self.int(rhs)?;
                    apply_int_op(*op, &l, &r).map_err(Stop::Raise)?
                }
            },
        })
    }
}

fn checked_index(idx: &BigInt, len: usize) -> Result<usize, Stop> {
    usize::try_from(idx)
        .ok()
        .filter(|&i| i < len)
        .ok_or(Stop::Raise(ExceptionKind::IndexOutOfBounds))
}

/// Integer arithmetic and comparisons shared by the interpreter and the
/// concrete term evaluator.
pub fn apply_int_op(op: BinOp, l: &BigInt, r: &BigInt) -> Result<Value, ExceptionKind> {
    Ok(match op {
        BinOp::Add => Value::Int(l + r),
        BinOp::Sub => Value::Int(l - r),
        BinOp::Mul => Value::Int(l * r),
        BinOp::Div if r.is_zero() => return Err(ExceptionKind::DivByZero),
        BinOp::Div => Value::Int(euclid_div(l, r)),
        BinOp::Mod if r.is_zero() => return Err(ExceptionKind::ModByZero),
        BinOp::Mod => Value::Int(euclid_mod(l, r)),
        BinOp::Lt => Value::Bool(l < r),
        BinOp::Le => Value::Bool(l <= r),
        BinOp::Gt => Value::Bool(l > r),
        BinOp::Ge => Value::Bool(l >= r),
        BinOp::Eq => Value::Bool(l == r),
        BinOp::Ne => Value::Bool(l != r),
        BinOp::And | BinOp::Or => unreachable!("logical operator on ints"),
    })
}
