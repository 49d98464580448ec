//! Seeded synthetic corpus: a reference program per problem, preserving
//! variants labelled correct and enumeration-checked mutants labelled wrong.

mod rewrite;
mod templates;

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use thiserror::Error;

use sep_core::domain::{parse_constraints, ProblemSpec, Signature, TestCase};
use sep_core::minilang::{
    interpret, parse, print_function, ExecutionOutcome, FunctionDef, OutcomeKind, Value,
};

use crate::corpus::{CorpusError, MatrixJson, ProblemFiles};
use crate::enumerate::{domain_points, BoxLimits};

pub use rewrite::{mutant, negate, variant, MutationKind};
pub use templates::{Template, TEMPLATES};

pub const GEN_FUEL: u64 = 10_000;
const ATTEMPTS_PER_MUTANT: usize = 64;
const SUB_SEEDS: u64 = 16;

#[derive(Clone, Debug, PartialEq)]
pub struct GenConfig {
    pub seed: u64,
    pub n_problems: usize,
    pub pool_size: usize,
    pub correct_fraction: f64,
    /// Probability that a generated (dual-agreement) test carries a wrong
    /// expected outcome.
    pub test_noise: f64,
}

impl GenConfig {
    pub fn new(seed: u64, n_problems: usize, pool_size: usize, correct_fraction: f64) -> Self {
        GenConfig {
            seed,
            n_problems,
            pool_size,
            correct_fraction,
            test_noise: 0.15,
        }
    }

    /// `ceil(pool_size * correct_fraction)`, ignoring float noise such as
    /// `25 * 0.28 = 7.000000000000001`.
    pub fn n_correct(&self) -> usize {
        let exact = self.pool_size as f64 * self.correct_fraction;
        let nearest = exact.round();
        if (exact - nearest).abs() < 1e-9 {
            nearest as usize
        } else {
            exact.ceil() as usize
        }
    }
}

#[derive(Debug, Error)]
pub enum GenError {
    #[error("invalid generator parameters: {0}")]
    Parameters(String),
    #[error("generation failed for problem {problem}: {reason}")]
    GenerationFailed { problem: String, reason: String },
    #[error(transparent)]
    Corpus(#[from] CorpusError),
}

/// One generated problem with construction-time labels.
#[derive(Clone, Debug)]
pub struct GeneratedProblem {
    pub files: ProblemFiles,
    pub labels: Vec<bool>,
    pub template: &'static str,
}

fn run(f: &FunctionDef, args: &[Value]) -> ExecutionOutcome {
    interpret(f, args, GEN_FUEL).expect("arguments come from the signature")
}

fn reparse(f: &FunctionDef) -> Option<(String, FunctionDef)> {
    let src = print_function(f);
    let ast = parse(&src).ok()?;
    Some((src, ast))
}

fn perturb(o: &ExecutionOutcome) -> ExecutionOutcome {
    let mut o = o.clone();
    match &mut o.kind {
        OutcomeKind::Return(Value::Int(v)) => *v += 1,
        OutcomeKind::Return(Value::Bool(b)) => *b = !*b,
        _ => {
            if let Some(items) = o.mutated_inputs.values_mut().find(|a| !a.is_empty()) {
                items[0] += 1;
            }
        }
    }
    o
}

fn trigram_counts(s: &str) -> BTreeMap<[char; 3], f64> {
    let chars: Vec<char> = s.split_whitespace().collect::<Vec<_>>().join(" ").chars().collect();
    let mut m = BTreeMap::new();
    for w in chars.windows(3) {
        *m.entry([w[0], w[1], w[2]]).or_insert(0.0) += 1.0;
    }
    m
}

/// Cosine similarity of character trigram counts: a stand-in for an
/// embedding model's similarity file.
pub fn trigram_cosine(a: &str, b: &str) -> f64 {
    let (x, y) = (trigram_counts(a), trigram_counts(b));
    let dot: f64 = x.iter().map(|(k, v)| v * y.get(k).copied().unwrap_or(0.0)).sum();
    let norm = |m: &BTreeMap<[char; 3], f64>| m.values().map(|v| v * v).sum::<f64>().sqrt();
    let d = norm(&x) * norm(&y);
    if d == 0.0 {
        return if a == b { 1.0 } else { 0.0 };
    }
    (dot / d).clamp(0.0, 1.0)
}

fn sample_points(points: &[Vec<Value>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<Value>> {
    points.choose_multiple(rng, k.min(points.len())).cloned().collect()
}

fn tests_for(reference: &FunctionDef, inputs: &[Vec<Value>]) -> Vec<TestCase> {
    inputs
        .iter()
        .map(|args| TestCase {
            args: args.clone(),
            expected: run(reference, args),
        })
        .collect()
}

fn try_problem(
    id: &str,
    template: &Template,
    cfg: &GenConfig,
    rng: &mut ChaCha8Rng,
) -> Result<GeneratedProblem, String> {
    let (source, raw_constraints) = (template.build)(rng);
    let reference = parse(&source).map_err(|e| format!("template `{}` does not parse: {e}", template.name))?;
    let signature = Signature::of(&reference);
    let constraints = parse_constraints(&raw_constraints, &signature).map_err(|e| e.to_string())?;
    let mut spec = ProblemSpec {
        id: id.to_string(),
        signature,
        constraints,
        public_examples: vec![],
    };
    let points = domain_points(&spec, &BoxLimits::default()).ok_or("input box too large")?;
    if points.is_empty() {
        return Err("empty domain".into());
    }
    let expected: Vec<ExecutionOutcome> = points.iter().map(|p| run(&reference, p)).collect();
    if expected.iter().any(|o| o.kind == OutcomeKind::ResourceExhausted) {
        return Err("reference runs out of fuel".into());
    }

    let n_correct = cfg.n_correct();
    let mut candidates: Vec<(String, bool, String)> = Vec::new();
    for _ in 0..n_correct {
        let v = variant(&reference, rng);
        let (src, ast) = reparse(&v).ok_or("variant does not re-parse")?;
        if points.iter().zip(&expected).any(|(p, e)| run(&ast, p) != *e) {
            return Err(format!("variant changed behaviour:\n{src}"));
        }
        candidates.push((src, true, "variant".into()));
    }

    let mut witnesses: Vec<Vec<Value>> = Vec::new();
    let mut seen: BTreeSet<String> = BTreeSet::new();
    for _ in n_correct..cfg.pool_size {
        let mut accepted = None;
        let mut fallback = None;
        for _ in 0..ATTEMPTS_PER_MUTANT {
            let (m, kind) = mutant(&reference, rng);
            let Some((src, ast)) = reparse(&m) else { continue };
            let outcomes: Vec<ExecutionOutcome> = points.iter().map(|p| run(&ast, p)).collect();
            if outcomes.iter().any(|o| o.kind == OutcomeKind::ResourceExhausted) {
                continue;
            }
            let diffs: Vec<usize> = (0..points.len()).filter(|&k| outcomes[k] != expected[k]).collect();
            if diffs.is_empty() {
                continue;
            }
            let witness = points[*diffs.choose(rng).expect("non-empty")].clone();
            if seen.contains(&src) {
                fallback.get_or_insert((src, kind, witness));
                continue;
            }
            accepted = Some((src, kind, witness));
            break;
        }
        let (src, kind, witness) = accepted
            .or(fallback)
            .ok_or("no mutant could be verified non-equivalent")?;
        seen.insert(src.clone());
        witnesses.push(witness);
        candidates.push((src, false, kind.name().into()));
    }
    candidates.shuffle(rng);

    let public = sample_points(&points, 2, rng);
    spec.public_examples = tests_for(&reference, &public);
    let mut hidden_inputs = witnesses;
    hidden_inputs.extend(sample_points(&points, 12, rng));
    hidden_inputs.sort();
    hidden_inputs.dedup();
    let hidden = tests_for(&reference, &hidden_inputs);
    let mut generated = tests_for(&reference, &sample_points(&points, 5, rng));
    for t in &mut generated {
        if rng.random_bool(cfg.test_noise) {
            t.expected = perturb(&t.expected);
        }
    }

    let sources: Vec<String> = candidates.iter().map(|c| c.0.clone()).collect();
    let labels: Vec<bool> = candidates.iter().map(|c| c.1).collect();
    let mut files = ProblemFiles::new(&spec, &hidden, Some(&generated), sources.clone());
    let n = sources.len();
    let mut values = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            let v = trigram_cosine(&sources[i], &sources[j]);
            values[i][j] = v;
            values[j][i] = v;
        }
    }
    files.spec.similarity = Some(MatrixJson { n, values });
    files.spec.notes = Some(json!({
        "template": template.name,
        "labels": labels,
        "origins": candidates.iter().map(|c| c.2.clone()).collect::<Vec<_>>(),
    }));
    files.reference = Some(print_function(&reference));
    Ok(GeneratedProblem {
        files,
        labels,
        template: template.name,
    })
}

/// Deterministic in `cfg`: the same configuration yields the same corpus.
pub fn generate_corpus(cfg: &GenConfig) -> Result<Vec<GeneratedProblem>, GenError> {
    if cfg.n_problems == 0 || cfg.pool_size == 0 {
        return Err(GenError::Parameters("problem count and pool size must be positive".into()));
    }
    if !(0.0..=1.0).contains(&cfg.correct_fraction) {
        return Err(GenError::Parameters("correct fraction must lie in [0, 1]".into()));
    }
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::with_capacity(cfg.n_problems);
    for p in 0..cfg.n_problems {
        let id = format!("p{p:03}");
        let template = &TEMPLATES[p % TEMPLATES.len()];
        let base: u64 = master.random();
        let mut last = String::new();
        let mut done = None;
        for sub in 0..SUB_SEEDS {
            let mut rng = ChaCha8Rng::seed_from_u64(base.wrapping_add(sub));
            match try_problem(&id, template, cfg, &mut rng) {
                Ok(g) => {
                    done = Some(g);
                    break;
                }
                Err(e) => last = e,
            }
        }
        out.push(done.ok_or(GenError::GenerationFailed {
            problem: id,
            reason: last,
        })?);
    }
    Ok(out)
}

pub fn write_corpus(root: &Path, problems: &[GeneratedProblem]) -> Result<(), GenError> {
    for p in problems {
        p.files.write(root)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_corpus;
    use crate::metrics::label_pool;

    #[test]
    fn small_corpus_labels_match_hidden_tests() {
        let cfg = GenConfig::new(1, 1, 4, 0.75);
        let g = generate_corpus(&cfg).unwrap();
        assert_eq!(g[0].labels.iter().filter(|&&l| l).count(), 3);
        assert_eq!(g[0].labels.len(), 4);
        let dir = tempfile::tempdir().unwrap();
        write_corpus(dir.path(), &g).unwrap();
        let c = load_corpus(dir.path()).unwrap();
        assert_eq!(label_pool(&c.problems[0], GEN_FUEL), g[0].labels);
    }

    #[test]
    fn every_template_generates() {
        let cfg = GenConfig::new(11, TEMPLATES.len(), 6, 0.5);
        for g in generate_corpus(&cfg).unwrap() {
            assert_eq!(g.labels.iter().filter(|&&l| l).count(), 3, "{}", g.template);
        }
    }

    #[test]
    fn zero_fraction_is_all_mutants() {
        let g = generate_corpus(&GenConfig::new(3, 2, 3, 0.0)).unwrap();
        assert!(g.iter().all(|p| p.labels.iter().all(|l| !l)));
    }

    #[test]
    fn bad_parameters() {
        assert!(generate_corpus(&GenConfig::new(1, 0, 4, 0.5)).is_err());
        assert!(generate_corpus(&GenConfig::new(1, 1, 4, 1.5)).is_err());
    }

    #[test]
    fn correct_count_ignores_float_noise() {
        assert_eq!(GenConfig::new(0, 1, 10, 0.3).n_correct(), 3);
        assert_eq!(GenConfig::new(0, 1, 25, 0.28).n_correct(), 7);
        assert_eq!(GenConfig::new(0, 1, 10, 0.25).n_correct(), 3);
    }

    #[test]
    fn cosine() {
        assert!((trigram_cosine("abcd", "abcd") - 1.0).abs() < 1e-12);
        assert_eq!(trigram_cosine("abc", "xyz"), 0.0);
    }
}
