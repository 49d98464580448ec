//! Satisfiability of path-condition formulas.
//!
//! Two backends share one query type: an external SMT-LIB2 process
//! ([`ExternalSolver`]) and a brute-force search over a finite box
//! ([`EnumerativeSolver`]) that doubles as a test oracle. Every SAT model is
//! re-evaluated against all assertions before it is returned, whatever the
//! backend.

mod enumerative;
mod external;
pub mod sexp;
mod smtlib;

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use thiserror::Error;

use crate::minilang::Value;
use crate::term::{Sort, Term};

pub use enumerative::{enumerative_check, EnumerativeSolver, DEFAULT_GRID_CAP, DEFAULT_INT_RANGE};
pub use external::{ExternalSolver, DEFAULT_SOLVER_CMD};
pub use smtlib::{emit_smtlib, logic_for, symbol, term_to_smtlib};

pub const DEFAULT_SOLVER_TIMEOUT_MS: u64 = 2_000;

pub type Model = BTreeMap<String, Value>;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverQuery {
    pub declarations: Vec<(String, Sort)>,
    pub assertions: Vec<Term>,
    pub timeout_ms: u64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverVerdict {
    Sat(Model),
    Unsat,
    Unknown(String),
}

impl SolverVerdict {
    pub fn is_sat(&self) -> bool {
        matches!(self, SolverVerdict::Sat(_))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum SolverError {
    #[error("solver backend unavailable: {0}")]
    BackendUnavailable(String),
    #[error("malformed solver response: {reason}")]
    MalformedResponse { reason: String, transcript: String },
    #[error("solver model failed validation: {reason}")]
    InvalidModel { reason: String, transcript: String },
    #[error("unsupported term: {0}")]
    UnsupportedTerm(String),
    #[error("enumeration grid of {points} points exceeds the cap of {cap}")]
    GridTooLarge { points: u64, cap: u64 },
}

pub trait Solver: Send + Sync {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError>;

    /// Whether UNSAT from this backend means UNSAT over all integers for a
    /// query over `declarations`, rather than only within a finite box.
    fn is_complete_for(&self, _declarations: &[(String, Sort)]) -> bool {
        true
    }
}

impl<S: Solver + ?Sized> Solver for &S {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        (**self).check(query)
    }

    fn is_complete_for(&self, declarations: &[(String, Sort)]) -> bool {
        (**self).is_complete_for(declarations)
    }
}

impl<S: Solver + ?Sized> Solver for Box<S> {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        (**self).check(query)
    }

    fn is_complete_for(&self, declarations: &[(String, Sort)]) -> bool {
        (**self).is_complete_for(declarations)
    }
}

impl<S: Solver + ?Sized> Solver for std::sync::Arc<S> {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        (**self).check(query)
    }

    fn is_complete_for(&self, declarations: &[(String, Sort)]) -> bool {
        (**self).is_complete_for(declarations)
    }
}

/// Backend selector for [`check`].
pub enum Backend<'a> {
    External(&'a ExternalSolver),
    Enumerative(&'a EnumerativeSolver),
}

pub fn check(query: &SolverQuery, backend: Backend<'_>) -> Result<SolverVerdict, SolverError> {
    match backend {
        Backend::External(s) => s.check(query),
        Backend::Enumerative(s) => s.check(query),
    }
}

/// Every declared symbol has a value of its sort and every assertion
/// evaluates to true.
pub fn validate_model(query: &SolverQuery, model: &Model) -> Result<(), String> {
    for (name, sort) in &query.declarations {
        match (model.get(name), sort) {
            (Some(Value::Int(_)), Sort::Int) | (Some(Value::Bool(_)), Sort::Bool) => {}
            (Some(v), _) => return Err(format!("`{name}` has ill-sorted value {v}")),
            (None, _) => return Err(format!("model does not assign `{name}`")),
        }
    }
    let lookup = |n: &str| model.get(n).cloned();
    for (k, a) in query.assertions.iter().enumerate() {
        match a.eval(&lookup) {
            Ok(Value::Bool(true)) => {}
            Ok(_) => return Err(format!("assertion {k} is false under the model: {a}")),
            Err(e) => return Err(format!("assertion {k} is undefined under the model: {e}")),
        }
    }
    Ok(())
}

/// Memoizes definite verdicts by script text. UNKNOWN is never cached.
pub struct CachingSolver<S> {
    inner: S,
    cache: Mutex<HashMap<String, SolverVerdict>>,
}

impl<S: Solver> CachingSolver<S> {
    pub fn new(inner: S) -> Self {
        CachingSolver {
            inner,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: Solver> Solver for CachingSolver<S> {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        let key = emit_smtlib(query)?;
        if let Some(v) = self.cache.lock().expect("solver cache").get(&key) {
            return Ok(v.clone());
        }
        let v = self.inner.check(query)?;
        if !matches!(v, SolverVerdict::Unknown(_)) {
            self.cache.lock().expect("solver cache").insert(key, v.clone());
        }
        Ok(v)
    }

    fn is_complete_for(&self, declarations: &[(String, Sort)]) -> bool {
        self.inner.is_complete_for(declarations)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_rejects_false_assertions() {
        let x = Term::var("x", Sort::Int);
        let q = SolverQuery {
            declarations: vec![("x".into(), Sort::Int)],
            assertions: vec![x.gt(&Term::int(5))],
            timeout_ms: 0,
        };
        let good: Model = [("x".to_string(), Value::int(6))].into();
        let bad: Model = [("x".to_string(), Value::int(5))].into();
        assert!(validate_model(&q, &good).is_ok());
        assert!(validate_model(&q, &bad).is_err());
        assert!(validate_model(&q, &Model::new()).is_err());
    }
}
