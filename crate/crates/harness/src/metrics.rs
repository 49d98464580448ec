//! Scoring against hidden tests and the pairwise equivalence accuracy.

use serde::Serialize;
use thiserror::Error;

use sep_core::equiv::EquivVerdict;
use sep_core::minilang::{outcomes_equal, Program};

use crate::corpus::{HiddenTests, Problem};

pub fn passes_hidden(p: &Program, hidden: &HiddenTests, fuel: u64) -> bool {
    hidden
        .0
        .iter()
        .all(|t| matches!(p.run(&t.args, fuel), Ok(o) if outcomes_equal(&o, &t.expected)))
}

/// Correctness of every pool member, in pool order.
pub fn label_pool(problem: &Problem, fuel: u64) -> Vec<bool> {
    problem
        .pool
        .iter()
        .map(|p| passes_hidden(p, problem.hidden_tests(), fuel))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceLabel {
    Equivalent,
    NonEquivalent,
    Excluded,
}

pub fn reference_label(correct_i: bool, correct_j: bool) -> ReferenceLabel {
    match (correct_i, correct_j) {
        (true, true) => ReferenceLabel::Equivalent,
        (false, false) => ReferenceLabel::Excluded,
        _ => ReferenceLabel::NonEquivalent,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SepVerdict {
    Distinct,
    NotDistinguished,
    /// The check failed; scored as distinct.
    Error,
}

impl SepVerdict {
    pub fn from_verdict(v: &EquivVerdict) -> SepVerdict {
        match v {
            EquivVerdict::Distinct { .. } => SepVerdict::Distinct,
            EquivVerdict::NotDistinguished { .. } => SepVerdict::NotDistinguished,
        }
    }

    pub fn says_equivalent(self) -> bool {
        self == SepVerdict::NotDistinguished
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairwiseEvalRecord {
    pub problem: String,
    pub i: String,
    pub j: String,
    pub correct_i: bool,
    pub correct_j: bool,
    /// `None` for excluded pairs, which are not checked.
    pub sep_verdict: Option<SepVerdict>,
    pub exhaustive: bool,
    pub reference_label: ReferenceLabel,
}

impl PairwiseEvalRecord {
    fn says_equivalent(&self) -> bool {
        self.sep_verdict.is_some_and(SepVerdict::says_equivalent)
    }

    pub fn matches(&self) -> Option<bool> {
        match self.reference_label {
            ReferenceLabel::Excluded => None,
            ReferenceLabel::Equivalent => Some(self.says_equivalent()),
            ReferenceLabel::NonEquivalent => Some(!self.says_equivalent()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Error)]
#[error("no pair with a correct member; the metric is undefined")]
pub struct UndefinedMetric;

/// Matching and scored pair counts; the ratio is the accuracy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct PairTally {
    pub matched: usize,
    pub scored: usize,
    pub excluded: usize,
}

impl PairTally {
    pub fn of(records: &[PairwiseEvalRecord]) -> PairTally {
        let mut t = PairTally::default();
        for r in records {
            match r.matches() {
                None => t.excluded += 1,
                Some(m) => {
                    t.scored += 1;
                    t.matched += usize::from(m);
                }
            }
        }
        t
    }

    pub fn accuracy(&self) -> Result<f64, UndefinedMetric> {
        if self.scored == 0 {
            return Err(UndefinedMetric);
        }
        Ok(self.matched as f64 / self.scored as f64)
    }
}

pub fn pairwise_equivalence_accuracy(records: &[PairwiseEvalRecord]) -> Result<f64, UndefinedMetric> {
    PairTally::of(records).accuracy()
}

/// Micro average pools all scored pairs; macro averages per-problem
/// accuracies over problems with at least one scored pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairAccuracySummary {
    pub micro: f64,
    #[serde(rename = "macro")]
    pub macro_: f64,
    pub tally: PairTally,
    pub problems_scored: usize,
}

pub fn summarize_pair_accuracy(per_problem: &[Vec<PairwiseEvalRecord>]) -> Result<PairAccuracySummary, UndefinedMetric> {
    let tallies: Vec<PairTally> = per_problem.iter().map(|r| PairTally::of(r)).collect();
    let total = tallies.iter().fold(PairTally::default(), |a, t| PairTally {
        matched: a.matched + t.matched,
        scored: a.scored + t.scored,
        excluded: a.excluded + t.excluded,
    });
    let micro = total.accuracy()?;
    let accs: Vec<f64> = tallies.iter().filter_map(|t| t.accuracy().ok()).collect();
    Ok(PairAccuracySummary {
        micro,
        macro_: accs.iter().sum::<f64>() / accs.len() as f64,
        tally: total,
        problems_scored: accs.len(),
    })
}
