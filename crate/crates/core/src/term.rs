//! Symbolic terms over input symbols.
//!
//! Terms are immutable and reference counted so symbolic states can share
//! structure freely. The smart constructors fold constants and apply a few
//! identities; they never change meaning under any assignment that makes
//! every guarding path condition true.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::minilang::{apply_int_op, BinOp, ExceptionKind, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sort {
    Int,
    Bool,
}

impl Sort {
    pub fn smt_name(self) -> &'static str {
        match self {
            Sort::Int => "Int",
            Sort::Bool => "Bool",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Lt,
    Le,
    And,
    Or,
}

impl Op {
    pub fn result_sort(self) -> Sort {
        match self {
            Op::Add | Op::Sub | Op::Mul | Op::Div | Op::Mod => Sort::Int,
            _ => Sort::Bool,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Node {
    Int(BigInt),
    Bool(bool),
    Var(String, Sort),
    Neg(Term),
    Not(Term),
    Bin(Op, Term, Term),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Term(Arc<Node>);

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum EvalError {
    #[error("symbol `{0}` has no value")]
    Unbound(String),
    #[error("{0} while evaluating a term")]
    Undefined(ExceptionKind),
}

impl Term {
    fn new(node: Node) -> Term {
        Term(Arc::new(node))
    }

    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn int(v: impl Into<BigInt>) -> Term {
        Term::new(Node::Int(v.into()))
    }

    pub fn bool(b: bool) -> Term {
        Term::new(Node::Bool(b))
    }

    pub fn var(name: impl Into<String>, sort: Sort) -> Term {
        Term::new(Node::Var(name.into(), sort))
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self.node() {
            Node::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self.node() {
            Node::Bool(b) => Some(*b),
            _ => None,
        }
    }

    pub fn is_const(&self) -> bool {
        matches!(self.node(), Node::Int(_) | Node::Bool(_))
    }

    pub fn sort(&self) -> Sort {
        match self.node() {
            Node::Int(_) | Node::Neg(_) => Sort::Int,
            Node::Bool(_) | Node::Not(_) => Sort::Bool,
            Node::Var(_, s) => *s,
            Node::Bin(op, _, _) => op.result_sort(),
        }
    }

    pub fn from_value(v: &Value) -> Option<Term> {
        match v {
            Value::Int(i) => Some(Term::int(i.clone())),
            Value::Bool(b) => Some(Term::bool(*b)),
            _ => None,
        }
    }

    pub fn neg(&self) -> Term {
        match self.node() {
            Node::Int(v) => Term::int(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Term::new(Node::Neg(self.clone())),
        }
    }

    pub fn not(&self) -> Term {
        match self.node() {
            Node::Bool(b) => Term::bool(!b),
            Node::Not(inner) => inner.clone(),
            _ => Term::new(Node::Not(self.clone())),
        }
    }

    fn bin(op: Op, a: Term, b: Term) -> Term {
        Term::new(Node::Bin(op, a, b))
    }

    pub fn add(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) => Term::int(x + y),
            (Some(x), _) if x.is_zero() => other.clone(),
            (_, Some(y)) if y.is_zero() => self.clone(),
            _ => Term::bin(Op::Add, self.clone(), other.clone()),
        }
    }

    pub fn sub(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) => Term::int(x - y),
            (_, Some(y)) if y.is_zero() => self.clone(),
            _ if self == other => Term::int(0),
            _ => Term::bin(Op::Sub, self.clone(), other.clone()),
        }
    }

    pub fn mul(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) => Term::int(x * y),
            (Some(x), _) | (_, Some(x)) if x.is_zero() => Term::int(0),
            (Some(x), _) if x.is_one() => other.clone(),
            (_, Some(y)) if y.is_one() => self.clone(),
            _ => Term::bin(Op::Mul, self.clone(), other.clone()),
        }
    }

    /// Euclidean quotient. Callers guarantee a non-zero divisor on the
    /// current path.
    pub fn div(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) if !y.is_zero() => Term::int(crate::minilang::euclid_div(x, y)),
            (_, Some(y)) if y.is_one() => self.clone(),
            _ => Term::bin(Op::Div, self.clone(), other.clone()),
        }
    }

    /// Euclidean remainder. Callers guarantee a non-zero divisor.
    pub fn modulo(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) if !y.is_zero() => Term::int(crate::minilang::euclid_mod(x, y)),
            (_, Some(y)) if y.is_one() => Term::int(0),
            _ => Term::bin(Op::Mod, self.clone(), other.clone()),
        }
    }

    pub fn eq(&self, other: &Term) -> Term {
        if self == other {
            return Term::bool(true);
        }
        match (self.node(), other.node()) {
            (Node::Int(x), Node::Int(y)) => Term::bool(x == y),
            (Node::Bool(x), Node::Bool(y)) => Term::bool(x == y),
            _ => Term::bin(Op::Eq, self.clone(), other.clone()),
        }
    }

    pub fn ne(&self, other: &Term) -> Term {
        self.eq(other).not()
    }

    pub fn lt(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) => Term::bool(x < y),
            _ if self == other => Term::bool(false),
            _ => Term::bin(Op::Lt, self.clone(), other.clone()),
        }
    }

    pub fn le(&self, other: &Term) -> Term {
        match (self.as_int(), other.as_int()) {
            (Some(x), Some(y)) => Term::bool(x <= y),
            _ if self == other => Term::bool(true),
            _ => Term::bin(Op::Le, self.clone(), other.clone()),
        }
    }

    pub fn gt(&self, other: &Term) -> Term {
        other.lt(self)
    }

    pub fn ge(&self, other: &Term) -> Term {
        other.le(self)
    }

    pub fn and(&self, other: &Term) -> Term {
        match (self.as_bool(), other.as_bool()) {
            (Some(false), _) | (_, Some(false)) => Term::bool(false),
            (Some(true), _) => other.clone(),
            (_, Some(true)) => self.clone(),
            _ => Term::bin(Op::And, self.clone(), other.clone()),
        }
    }

    pub fn or(&self, other: &Term) -> Term {
        match (self.as_bool(), other.as_bool()) {
            (Some(true), _) | (_, Some(true)) => Term::bool(true),
            (Some(false), _) => other.clone(),
            (_, Some(false)) => self.clone(),
            _ => Term::bin(Op::Or, self.clone(), other.clone()),
        }
    }

    pub fn and_all<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Term {
        terms
            .into_iter()
            .fold(Term::bool(true), |acc, t| acc.and(t))
    }

    pub fn or_all<'a>(terms: impl IntoIterator<Item = &'a Term>) -> Term {
        terms
            .into_iter()
            .fold(Term::bool(false), |acc, t| acc.or(t))
    }

    /// Applies a MiniLang binary operator (division/modulo assume a
    /// non-zero divisor).
    pub fn apply(op: BinOp, a: &Term, b: &Term) -> Term {
        match op {
            BinOp::Add => a.add(b),
            BinOp::Sub => a.sub(b),
            BinOp::Mul => a.mul(b),
            BinOp::Div => a.div(b),
            BinOp::Mod => a.modulo(b),
            BinOp::Eq => a.eq(b),
            BinOp::Ne => a.ne(b),
            BinOp::Lt => a.lt(b),
            BinOp::Le => a.le(b),
            BinOp::Gt => a.gt(b),
            BinOp::Ge => a.ge(b),
            BinOp::And => a.and(b),
            BinOp::Or => a.or(b),
        }
    }

    pub fn free_symbols(&self, out: &mut BTreeSet<(String, Sort)>) {
        match self.node() {
            Node::Int(_) | Node::Bool(_) => {}
            Node::Var(n, s) => {
                out.insert((n.clone(), *s));
            }
            Node::Neg(t) | Node::Not(t) => t.free_symbols(out),
            Node::Bin(_, a, b) => {
                a.free_symbols(out);
                b.free_symbols(out);
            }
        }
    }

    /// True when the term leaves linear integer arithmetic: a product of two
    /// non-constant terms, or division/modulo by a non-constant.
    pub fn is_nonlinear(&self) -> bool {
        match self.node() {
            Node::Int(_) | Node::Bool(_) | Node::Var(..) => false,
            Node::Neg(t) | Node::Not(t) => t.is_nonlinear(),
            Node::Bin(op, a, b) => {
                let here = match op {
                    Op::Mul => !a.is_const() && !b.is_const(),
                    Op::Div | Op::Mod => !b.is_const(),
                    _ => false,
                };
                here || a.is_nonlinear() || b.is_nonlinear()
            }
        }
    }

    /// Concrete evaluation. `And`/`Or` short-circuit left to right.
    pub fn eval(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Result<Value, EvalError> {
        Ok(match self.node() {
            Node::Int(v) => Value::Int(v.clone()),
            Node::Bool(b) => Value::Bool(*b),
            Node::Var(n, _) => lookup(n).ok_or_else(|| EvalError::Unbound(n.clone()))?,
            Node::Neg(t) => match t.eval(lookup)? {
                Value::Int(v) => Value::Int(-v),
                other => unreachable!("ill-sorted negation of {other}"),
            },
            Node::Not(t) => Value::Bool(!t.eval_bool(lookup)?),
            Node::Bin(Op::And, a, b) => Value::Bool(a.eval_bool(lookup)? && b.eval_bool(lookup)?),
            Node::Bin(Op::Or, a, b) => Value::Bool(a.eval_bool(lookup)? || b.eval_bool(lookup)?),
            Node::Bin(Op::Eq, a, b) => Value::Bool(a.eval(lookup)? == b.eval(lookup)?),
            Node::Bin(op, a, b) => {
                let x = a.eval(lookup)?;
                let y = b.eval(lookup)?;
                let (Value::Int(x), Value::Int(y)) = (x, y) else {
                    unreachable!("ill-sorted arithmetic")
                };
                let bin = match op {
                    Op::Add => BinOp::Add,
                    Op::Sub => BinOp::Sub,
                    Op::Mul => BinOp::Mul,
                    Op::Div => BinOp::Div,
                    Op::Mod => BinOp::Mod,
                    Op::Lt => BinOp::Lt,
                    Op::Le => BinOp::Le,
                    Op::Eq | Op::And | Op::Or => unreachable!(),
                };
                apply_int_op(bin, &x, &y).map_err(EvalError::Undefined)?
            }
        })
    }

    pub fn eval_bool(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> Result<bool, EvalError> {
        match self.eval(lookup)? {
            Value::Bool(b) => Ok(b),
            other => unreachable!("expected a boolean term, got {other}"),
        }
    }
}

impl fmt::Debug for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Int(v) => write!(f, "{v}"),
            Node::Bool(b) => write!(f, "{b}"),
            Node::Var(n, _) => f.write_str(n),
            Node::Neg(t) => write!(f, "-({t})"),
            Node::Not(t) => write!(f, "!({t})"),
            Node::Bin(op, a, b) => {
                let sym = match op {
                    Op::Add => "+",
                    Op::Sub => "-",
                    Op::Mul => "*",
                    Op::Div => "div",
                    Op::Mod => "mod",
                    Op::Eq => "==",
                    Op::Lt => "<",
                    Op::Le => "<=",
                    Op::And => "&&",
                    Op::Or => "||",
                };
                write!(f, "({a} {sym} {b})")
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folding() {
        let x = Term::var("x", Sort::Int);
        assert_eq!(Term::int(2).add(&Term::int(3)), Term::int(5));
        assert_eq!(x.add(&Term::int(0)), x);
        assert_eq!(x.mul(&Term::int(0)), Term::int(0));
        assert_eq!(x.eq(&x), Term::bool(true));
        assert_eq!(x.lt(&x), Term::bool(false));
        assert_eq!(x.gt(&Term::int(0)).not().not(), Term::int(0).lt(&x));
        assert_eq!(Term::int(-7).div(&Term::int(2)), Term::int(-4));
        assert_eq!(Term::int(-7).modulo(&Term::int(2)), Term::int(1));
    }

    #[test]
    fn linearity() {
        let x = Term::var("x", Sort::Int);
        let y = Term::var("y", Sort::Int);
        assert!(!x.mul(&Term::int(3)).is_nonlinear());
        assert!(x.mul(&y).is_nonlinear());
        assert!(!x.modulo(&Term::int(7)).is_nonlinear());
        assert!(x.div(&y).is_nonlinear());
    }

    #[test]
    fn evaluation_short_circuits() {
        let x = Term::var("x", Sort::Int);
        let guard = x.ne(&Term::int(0));
        let body = Term::int(10).div(&x).gt(&Term::int(1));
        let t = guard.and(&body);
        let at = |v: i64| move |n: &str| (n == "x").then(|| Value::int(v));
        assert_eq!(t.eval(&at(0)), Ok(Value::Bool(false)));
        assert_eq!(t.eval(&at(3)), Ok(Value::Bool(true)));
        assert_eq!(
            body.eval(&at(0)),
            Err(EvalError::Undefined(ExceptionKind::DivByZero))
        );
    }
}
