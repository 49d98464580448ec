use std::collections::BTreeMap;

use num_bigint::BigInt;

use super::{validate_model, Model, Solver, SolverError, SolverQuery, SolverVerdict};
use crate::minilang::Value;
use crate::term::Sort;

pub const DEFAULT_GRID_CAP: u64 = 1_000_000;
pub const DEFAULT_INT_RANGE: (i64, i64) = (-64, 63);

/// Exhaustive search over a finite box. Complete within the box: it never
/// answers UNKNOWN, and a SAT answer is the lexicographically smallest
/// assignment in declaration order (integers ascending, `false` before `true`).
#[derive(Clone, Debug)]
pub struct EnumerativeSolver {
    bounds: BTreeMap<String, (BigInt, BigInt)>,
    default_range: (BigInt, BigInt),
    grid_cap: u64,
}

impl Default for EnumerativeSolver {
    fn default() -> Self {
        EnumerativeSolver {
            bounds: BTreeMap::new(),
            default_range: (DEFAULT_INT_RANGE.0.into(), DEFAULT_INT_RANGE.1.into()),
            grid_cap: DEFAULT_GRID_CAP,
        }
    }
}

impl EnumerativeSolver {
    pub fn new(bounds: BTreeMap<String, (BigInt, BigInt)>) -> Self {
        EnumerativeSolver {
            bounds,
            ..Default::default()
        }
    }

    pub fn with_grid_cap(mut self, cap: u64) -> Self {
        self.grid_cap = cap;
        self
    }

    pub fn with_default_range(mut self, lo: impl Into<BigInt>, hi: impl Into<BigInt>) -> Self {
        self.default_range = (lo.into(), hi.into());
        self
    }

    pub fn bounds(&self) -> &BTreeMap<String, (BigInt, BigInt)> {
        &self.bounds
    }

    fn domain(&self, name: &str, sort: Sort) -> Vec<Value> {
        match sort {
            Sort::Bool => vec![Value::Bool(false), Value::Bool(true)],
            Sort::Int => {
                let (lo, hi) = self.bounds.get(name).unwrap_or(&self.default_range);
                let mut out = Vec::new();
                let mut v = lo.clone();
                while v <= *hi {
                    out.push(Value::Int(v.clone()));
                    v += 1;
                }
                out
            }
        }
    }
}

/// `query` decided by brute force over `bounds` (symbols without an entry
/// range over the default `[-64, 63]`).
pub fn enumerative_check(
    query: &SolverQuery,
    bounds: &BTreeMap<String, (BigInt, BigInt)>,
) -> Result<SolverVerdict, SolverError> {
    EnumerativeSolver::new(bounds.clone()).check(query)
}

impl Solver for EnumerativeSolver {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        let domains: Vec<Vec<Value>> = query
            .declarations
            .iter()
            .map(|(n, s)| self.domain(n, *s))
            .collect();
        let mut points: u128 = 1;
        for d in &domains {
            points = points.saturating_mul(d.len() as u128);
        }
        if points > self.grid_cap as u128 {
            return Err(SolverError::GridTooLarge {
                points: points.min(u64::MAX as u128) as u64,
                cap: self.grid_cap,
            });
        }
        if domains.iter().any(Vec::is_empty) {
            return Ok(SolverVerdict::Unsat);
        }

        let names: Vec<&str> = query.declarations.iter().map(|(n, _)| n.as_str()).collect();
        let mut cursor = vec![0usize; domains.len()];
        loop {
            let lookup = |name: &str| {
                names
                    .iter()
                    .position(|n| *n == name)
                    .map(|k| domains[k][cursor[k]].clone())
            };
            // An assertion that is undefined at this point (division by zero
            // outside its guard) does not hold here.
            let holds = query
                .assertions
                .iter()
                .all(|a| matches!(a.eval(&lookup), Ok(Value::Bool(true))));
            if holds {
                let model: Model = names
                    .iter()
                    .enumerate()
                    .map(|(k, n)| (n.to_string(), domains[k][cursor[k]].clone()))
                    .collect();
                validate_model(query, &model).map_err(|reason| SolverError::InvalidModel {
                    reason,
                    transcript: String::new(),
                })?;
                return Ok(SolverVerdict::Sat(model));
            }
            // Odometer: last declaration varies fastest.
            let mut k = domains.len();
            loop {
                if k == 0 {
                    return Ok(SolverVerdict::Unsat);
                }
                k -= 1;
                cursor[k] += 1;
                if cursor[k] < domains[k].len() {
                    break;
                }
                cursor[k] = 0;
            }
        }
    }

    fn is_complete_for(&self, declarations: &[(String, Sort)]) -> bool {
        declarations
            .iter()
            .all(|(n, s)| *s == Sort::Bool || self.bounds.contains_key(n))
    }
}
