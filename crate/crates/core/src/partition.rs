//! Greedy representative partitioning and selection.

use std::time::Instant;

use crate::domain::ProblemSpec;
use crate::equiv::{run_public_examples, EquivChecker, EquivVerdict, PairCheck};
use crate::minilang::Program;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub representative: String,
    pub members: Vec<String>,
    pub created_at: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PartitionSet {
    pub partitions: Vec<Partition>,
}

impl PartitionSet {
    pub fn sizes(&self) -> Vec<usize> {
        self.partitions.iter().map(|p| p.members.len()).collect()
    }

    pub fn partition_of(&self, id: &str) -> Option<&Partition> {
        self.partitions
            .iter()
            .find(|p| p.members.iter().any(|m| m == id))
    }
}

/// Outcome of one candidate-vs-representative comparison.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PairResult {
    Checked(EquivVerdict),
    /// The check failed; the pair is treated as distinct.
    Failed(String),
}

impl PairResult {
    pub fn joins(&self) -> bool {
        matches!(self, PairResult::Checked(EquivVerdict::NotDistinguished { .. }))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PairCheckRecord {
    /// The candidate being placed.
    pub i: String,
    /// The representative it was compared against.
    pub j: String,
    pub result: PairResult,
    pub wall_ms: f64,
    pub smt_queries: usize,
}

/// Answers whether a candidate can be told apart from a representative.
pub trait PairOracle {
    fn compare(&self, candidate: &Program, representative: &Program) -> Result<PairCheck, String>;
}

impl PairOracle for EquivChecker<'_> {
    fn compare(&self, candidate: &Program, representative: &Program) -> Result<PairCheck, String> {
        self.check(candidate, representative).map_err(|e| e.to_string())
    }
}

impl<F> PairOracle for F
where
    F: Fn(&Program, &Program) -> Result<PairCheck, String>,
{
    fn compare(&self, candidate: &Program, representative: &Program) -> Result<PairCheck, String> {
        self(candidate, representative)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Prefiltered {
    /// Indices into the pool, in generation order.
    pub survivors: Vec<usize>,
    pub fallback_used: bool,
}

/// Candidates that pass every public example. If none does, the whole pool
/// is kept and `fallback_used` is set.
pub fn prefilter(pool: &[Program], spec: &ProblemSpec, fuel: u64) -> Prefiltered {
    let mut order: Vec<usize> = (0..pool.len()).collect();
    order.sort_by_key(|&k| pool[k].generation_index);
    let survivors: Vec<usize> = order
        .iter()
        .copied()
        .filter(|&k| run_public_examples(&pool[k], spec, fuel).passed())
        .collect();
    if survivors.is_empty() {
        Prefiltered {
            survivors: order,
            fallback_used: true,
        }
    } else {
        Prefiltered {
            survivors,
            fallback_used: false,
        }
    }
}

/// Each candidate, in generation order, is compared with the existing
/// representatives from the largest partition down (older first on equal
/// size) and joins the first one it cannot be distinguished from.
pub fn partition(
    pool: &[&Program],
    oracle: &dyn PairOracle,
) -> (PartitionSet, Vec<PairCheckRecord>) {
    let mut order: Vec<&Program> = pool.to_vec();
    order.sort_by_key(|p| p.generation_index);
    let mut parts: Vec<(Partition, &Program)> = Vec::new();
    let mut checks = Vec::new();
    for cand in order {
        let mut ranked: Vec<usize> = (0..parts.len()).collect();
        ranked.sort_by(|&a, &b| {
            parts[b]
                .0
                .members
                .len()
                .cmp(&parts[a].0.members.len())
                .then(parts[a].0.created_at.cmp(&parts[b].0.created_at))
        });
        let mut joined = None;
        for k in ranked {
            let rep = parts[k].1;
            let start = Instant::now();
            let (result, smt_queries) = match oracle.compare(cand, rep) {
                Ok(c) => (PairResult::Checked(c.verdict), c.smt_queries),
                Err(e) => (PairResult::Failed(e), 0),
            };
            let joins = result.joins();
            checks.push(PairCheckRecord {
                i: cand.id.clone(),
                j: rep.id.clone(),
                result,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
                smt_queries,
            });
            if joins {
                joined = Some(k);
                break;
            }
        }
        match joined {
            Some(k) => parts[k].0.members.push(cand.id.clone()),
            None => {
                let created_at = parts.len();
                parts.push((
                    Partition {
                        representative: cand.id.clone(),
                        members: vec![cand.id.clone()],
                        created_at,
                    },
                    cand,
                ));
            }
        }
    }
    (
        PartitionSet {
            partitions: parts.into_iter().map(|(p, _)| p).collect(),
        },
        checks,
    )
}

/// Representative of the largest partition; the earliest created wins ties.
pub fn select(ps: &PartitionSet) -> Option<&str> {
    ps.partitions
        .iter()
        .min_by(|a, b| {
            b.members
                .len()
                .cmp(&a.members.len())
                .then(a.created_at.cmp(&b.created_at))
        })
        .map(|p| p.representative.as_str())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelectionReport {
    pub selected: String,
    pub partitions: PartitionSet,
    pub prefilter_survivors: Vec<String>,
    pub pair_checks: Vec<PairCheckRecord>,
    pub fallback_used: bool,
}

impl SelectionReport {
    /// True when every pair check finished without error and without any
    /// budget or solver incompleteness.
    pub fn all_exhaustive(&self) -> bool {
        self.pair_checks.iter().all(|c| match &c.result {
            PairResult::Checked(EquivVerdict::NotDistinguished { exhaustive, .. }) => *exhaustive,
            PairResult::Checked(EquivVerdict::Distinct { .. }) => true,
            PairResult::Failed(_) => false,
        })
    }
}

/// Prefilter, partition and select over a non-empty pool.
pub fn sep_select(
    pool: &[Program],
    spec: &ProblemSpec,
    oracle: &dyn PairOracle,
    fuel: u64,
) -> Option<SelectionReport> {
    if pool.is_empty() {
        return None;
    }
    let pre = prefilter(pool, spec, fuel);
    let survivors: Vec<&Program> = pre.survivors.iter().map(|&k| &pool[k]).collect();
    let (partitions, pair_checks) = partition(&survivors, oracle);
    let selected = select(&partitions)?.to_string();
    Some(SelectionReport {
        selected,
        prefilter_survivors: survivors.iter().map(|p| p.id.clone()).collect(),
        partitions,
        pair_checks,
        fallback_used: pre.fallback_used,
    })
}
