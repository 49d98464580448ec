use std::collections::BTreeMap;

use crate::domain::TestCase;
use crate::minilang::{outcomes_equal, Program};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TestResult {
    Pass,
    Fail,
    /// Failed by raising or running out of fuel.
    Crash,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    pub results: Vec<TestResult>,
}

impl Fingerprint {
    pub fn passed(&self) -> usize {
        self.results.iter().filter(|r| **r == TestResult::Pass).count()
    }
}

pub fn fingerprint(pool: &[Program], tests: &[TestCase], fuel: u64) -> Vec<Fingerprint> {
    pool.iter()
        .map(|p| Fingerprint {
            results: tests
                .iter()
                .map(|t| match p.run(&t.args, fuel) {
                    Ok(o) if outcomes_equal(&o, &t.expected) => TestResult::Pass,
                    Ok(o) if o.is_crash() => TestResult::Crash,
                    Ok(_) => TestResult::Fail,
                    Err(_) => TestResult::Crash,
                })
                .collect(),
        })
        .collect()
}

/// Groups identical fingerprints and scores each group as
/// `tests passed × group size`. Returns the lowest index in the best group;
/// score ties prefer more passed tests, then the lowest index.
pub fn dual_agreement_select(fingerprints: &[Fingerprint]) -> Option<usize> {
    let mut groups: BTreeMap<&Fingerprint, Vec<usize>> = BTreeMap::new();
    for (k, f) in fingerprints.iter().enumerate() {
        groups.entry(f).or_default().push(k);
    }
    groups
        .iter()
        .map(|(f, members)| (f.passed() * members.len(), f.passed(), members[0]))
        .max_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)).then(b.2.cmp(&a.2)))
        .map(|(_, _, first)| first)
}
