use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use super::ast::Type;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Value {
    Int(BigInt),
    Bool(bool),
    IntArray(Vec<BigInt>),
    Unit,
}

impl Value {
    pub fn int(v: impl Into<BigInt>) -> Value {
        Value::Int(v.into())
    }

    pub fn array<I: Into<BigInt>>(items: impl IntoIterator<Item = I>) -> Value {
        Value::IntArray(items.into_iter().map(Into::into).collect())
    }

    pub fn ty(&self) -> Type {
        match self {
            Value::Int(_) => Type::Int,
            Value::Bool(_) => Type::Bool,
            Value::IntArray(_) => Type::IntArray,
            Value::Unit => Type::Unit,
        }
    }

    pub fn as_int(&self) -> Option<&BigInt> {
        match self {
            Value::Int(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Value::Bool(b) => Some(*b),
            _ => None,
        }
    }
}

impl fmt::Display for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Value::Int(v) => write!(f, "{v}"),
            Value::Bool(b) => write!(f, "{b}"),
            Value::IntArray(items) => {
                f.write_str("[")?;
                for (k, v) in items.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{v}")?;
                }
                f.write_str("]")
            }
            Value::Unit => f.write_str("()"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ExceptionKind {
    DivByZero,
    ModByZero,
    IndexOutOfBounds,
    AssertFailed,
}

impl ExceptionKind {
    pub const ALL: [ExceptionKind; 4] = [
        ExceptionKind::DivByZero,
        ExceptionKind::ModByZero,
        ExceptionKind::IndexOutOfBounds,
        ExceptionKind::AssertFailed,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExceptionKind::DivByZero => "DivByZero",
            ExceptionKind::ModByZero => "ModByZero",
            ExceptionKind::IndexOutOfBounds => "IndexOutOfBounds",
            ExceptionKind::AssertFailed => "AssertFailed",
        }
    }

    pub fn from_name(name: &str) -> Option<ExceptionKind> {
        ExceptionKind::ALL.into_iter().find(|k| k.name() == name)
    }
}

impl fmt::Display for ExceptionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum OutcomeKind {
    Return(Value),
    Exception(ExceptionKind),
    ResourceExhausted,
}

/// Observable result of one run: how it terminated plus the final contents
/// of every array parameter.
///
/// `mutated_inputs` is keyed by parameter position, so candidates that name
/// their parameters differently still compare equal.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ExecutionOutcome {
    pub kind: OutcomeKind,
    pub mutated_inputs: BTreeMap<usize, Vec<BigInt>>,
}

impl ExecutionOutcome {
    pub fn returned(value: Value) -> Self {
        ExecutionOutcome {
            kind: OutcomeKind::Return(value),
            mutated_inputs: BTreeMap::new(),
        }
    }

    pub fn raised(kind: ExceptionKind) -> Self {
        ExecutionOutcome {
            kind: OutcomeKind::Exception(kind),
            mutated_inputs: BTreeMap::new(),
        }
    }

    pub fn with_mutated(mut self, position: usize, contents: Vec<BigInt>) -> Self {
        self.mutated_inputs.insert(position, contents);
        self
    }

    pub fn is_crash(&self) -> bool {
        !matches!(self.kind, OutcomeKind::Return(_))
    }
}

impl fmt::Display for ExecutionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            OutcomeKind::Return(v) => write!(f, "return {v}")?,
            OutcomeKind::Exception(k) => write!(f, "raise {k}")?,
            OutcomeKind::ResourceExhausted => f.write_str("resource exhausted")?,
        }
        for (pos, contents) in &self.mutated_inputs {
            write!(f, "; arg{pos} = {}", Value::IntArray(contents.clone()))?;
        }
        Ok(())
    }
}

/// Equal termination kind, equal return value and equal final array
/// contents. `ResourceExhausted` equals only itself.
pub fn outcomes_equal(a: &ExecutionOutcome, b: &ExecutionOutcome) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equality_cases() {
        let three = ExecutionOutcome::returned(Value::int(3));
        assert!(outcomes_equal(&three, &three.clone()));
        assert!(!outcomes_equal(
            &three,
            &ExecutionOutcome::raised(ExceptionKind::DivByZero)
        ));
        let a = ExecutionOutcome::returned(Value::Unit).with_mutated(0, vec![1.into(), 2.into()]);
        let b = ExecutionOutcome::returned(Value::Unit).with_mutated(0, vec![1.into(), 3.into()]);
        assert!(!outcomes_equal(&a, &b));
        let exhausted = ExecutionOutcome {
            kind: OutcomeKind::ResourceExhausted,
            mutated_inputs: BTreeMap::new(),
        };
        assert!(outcomes_equal(&exhausted, &exhausted.clone()));
        assert!(!outcomes_equal(&exhausted, &ExecutionOutcome::returned(Value::Unit)));
    }
}
