//! Running every selector over a corpus and scoring the choices.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value as Json};
use thiserror::Error;

use sep_core::baselines::{
    dual_agreement_select, fingerprint, hac_medoid_select, pass_at_k, similarity_matrix,
    DEFAULT_TAU,
};
use sep_core::domain::{derive_bounds, DomainError};
use sep_core::equiv::{EquivChecker, EquivError, EquivOptions, EquivVerdict, DEFAULT_FUEL};
use sep_core::partition::{sep_select, PairResult};
use sep_core::solver::{CachingSolver, EnumerativeSolver, ExternalSolver, Solver, SolverError};
use sep_core::symcore::Budget;

use crate::corpus::{load_corpus, CorpusError, Problem};
use crate::metrics::{
    label_pool, reference_label, summarize_pair_accuracy, PairAccuracySummary, PairwiseEvalRecord,
    ReferenceLabel, SepVerdict,
};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SelectorKind {
    Sep,
    Similarity,
    ExternalSimilarity,
    DualAgreement,
    RandomPass1,
    OraclePassN,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 6] = [
        SelectorKind::Sep,
        SelectorKind::Similarity,
        SelectorKind::ExternalSimilarity,
        SelectorKind::DualAgreement,
        SelectorKind::RandomPass1,
        SelectorKind::OraclePassN,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Sep => "sep",
            SelectorKind::Similarity => "similarity",
            SelectorKind::ExternalSimilarity => "external_similarity",
            SelectorKind::DualAgreement => "dual_agreement",
            SelectorKind::RandomPass1 => "random_pass1",
            SelectorKind::OraclePassN => "oracle_passN",
        }
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        SelectorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                let names: Vec<&str> = SelectorKind::ALL.iter().map(|k| k.name()).collect();
                format!("unknown selector `{s}`; expected one of {}", names.join(", "))
            })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BackendChoice {
    /// An SMT-LIB2 process such as `z3 -in`.
    External { command: String },
    /// Bounded grid search, complete only where every integer is bounded.
    Enumerative,
}

impl BackendChoice {
    pub fn name(&self) -> &'static str {
        match self {
            BackendChoice::External { .. } => "external",
            BackendChoice::Enumerative => "enumerative",
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub selectors: Vec<SelectorKind>,
    pub n_candidates: usize,
    pub budget: Budget,
    pub seed: u64,
    pub backend: BackendChoice,
    pub output: Option<PathBuf>,
    /// Directory for solver transcripts.
    pub log_smt: Option<PathBuf>,
    pub fuel: u64,
    pub max_array_len: usize,
    pub tau: f64,
}

impl RunConfig {
    pub fn new(corpus_path: impl Into<PathBuf>, backend: BackendChoice) -> Self {
        RunConfig {
            corpus_path: corpus_path.into(),
            selectors: SelectorKind::ALL.to_vec(),
            n_candidates: 10,
            budget: Budget::default(),
            seed: 0,
            backend,
            output: None,
            log_smt: None,
            fuel: DEFAULT_FUEL,
            max_array_len: sep_core::equiv::DEFAULT_MAX_ARRAY_LEN,
            tau: DEFAULT_TAU,
        }
    }

    fn options(&self) -> EquivOptions {
        EquivOptions {
            max_array_len: self.max_array_len,
            fuel: self.fuel,
        }
    }
}

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error("solver backend unavailable: {0}")]
    Backend(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Builds the solver for one problem. The external solver is shared; the
/// enumerative one takes its bounds from the problem's constraints.
pub struct SolverFactory {
    external: Option<Arc<CachingSolver<ExternalSolver>>>,
}

impl SolverFactory {
    pub fn new(backend: &BackendChoice, log_smt: Option<&Path>) -> Result<Self, EvalError> {
        match backend {
            BackendChoice::External { command } => {
                let mut s = ExternalSolver::new(command).map_err(|e| EvalError::Backend(e.to_string()))?;
                if let Some(dir) = log_smt {
                    fs::create_dir_all(dir).map_err(|source| EvalError::Io {
                        path: dir.to_path_buf(),
                        source,
                    })?;
                    s = s.with_transcripts(dir);
                }
                s.probe().map_err(|e| EvalError::Backend(e.to_string()))?;
                Ok(SolverFactory {
                    external: Some(Arc::new(CachingSolver::new(s))),
                })
            }
            BackendChoice::Enumerative => Ok(SolverFactory { external: None }),
        }
    }

    pub fn for_problem(&self, problem: &Problem) -> Arc<dyn Solver> {
        match &self.external {
            Some(s) => s.clone(),
            None => Arc::new(EnumerativeSolver::new(derive_bounds(
                &problem.spec.constraints,
                &problem.spec.signature,
            ))),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct SepDetails {
    pub partitions: Vec<Vec<String>>,
    pub prefilter_survivors: Vec<String>,
    pub pair_checks: usize,
    pub smt_queries: usize,
    pub all_exhaustive: bool,
    pub fallback_used: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectorOutcome {
    pub selected: Option<String>,
    pub correct: bool,
    /// Why no selection was made, if none was.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub unavailable: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sep: Option<SepDetails>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Timing {
    pub total_ms: f64,
    pub stages: BTreeMap<String, f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProblemResult {
    pub schema_version: u32,
    pub record: &'static str,
    pub problem: String,
    pub n: usize,
    pub c: usize,
    pub live_pool: usize,
    pub excluded: Vec<String>,
    pub pass_at_1: f64,
    pub pass_at_n: f64,
    pub selectors: BTreeMap<String, SelectorOutcome>,
    pub timing: Timing,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectorAggregate {
    pub correct: usize,
    pub available: usize,
    /// Correct selections over all problems.
    pub accuracy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Aggregate {
    pub schema_version: u32,
    pub record: &'static str,
    pub problems: usize,
    pub skipped: Vec<String>,
    pub n: usize,
    pub seed: u64,
    pub backend: &'static str,
    pub selectors: BTreeMap<String, SelectorAggregate>,
    pub mean_pass_at_1: f64,
    pub mean_pass_at_n: f64,
    pub timing: Timing,
}

#[derive(Clone, Debug)]
pub struct RunReport {
    pub problems: Vec<ProblemResult>,
    pub aggregate: Aggregate,
}

impl RunReport {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for p in &self.problems {
            out.push_str(&serde_json::to_string(p).expect("result serializes"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.aggregate).expect("aggregate serializes"));
        out.push('\n');
        out
    }

    pub fn accuracy(&self, s: SelectorKind) -> Option<f64> {
        self.aggregate.selectors.get(s.name()).map(|a| a.accuracy)
    }
}

/// Drops every `timing` key so reports can be compared byte for byte.
pub fn normalize_report_line(line: &str) -> String {
    let mut v: Json = serde_json::from_str(line).expect("report line is JSON");
    if let Some(o) = v.as_object_mut() {
        o.remove("timing");
    }
    serde_json::to_string(&v).expect("re-serializes")
}

fn stable_hash(s: &str) -> u64 {
    // FNV-1a; stable across runs and platforms.
    s.bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn is_backend_down(e: &EquivError) -> Option<String> {
    match e {
        EquivError::Solver(SolverError::BackendUnavailable(m))
        | EquivError::Domain(DomainError::Solver(SolverError::BackendUnavailable(m))) => Some(m.clone()),
        _ => None,
    }
}

struct Stopwatch {
    stages: BTreeMap<String, f64>,
    last: Instant,
}

impl Stopwatch {
    fn new() -> Self {
        Stopwatch {
            stages: BTreeMap::new(),
            last: Instant::now(),
        }
    }

    fn lap(&mut self, stage: &str) {
        let now = Instant::now();
        *self.stages.entry(stage.to_string()).or_insert(0.0) += (now - self.last).as_secs_f64() * 1e3;
        self.last = now;
    }
}

fn run_sep(
    problem: &Problem,
    solver: &dyn Solver,
    cfg: &RunConfig,
    labels: &[bool],
) -> Result<SelectorOutcome, String> {
    let checker = match EquivChecker::new(&problem.spec, solver, cfg.budget, cfg.options()) {
        Ok(c) => c,
        Err(e) => {
            if let Some(m) = is_backend_down(&e) {
                return Err(m);
            }
            return Ok(SelectorOutcome {
                selected: None,
                correct: false,
                unavailable: Some(e.to_string()),
                sep: None,
            });
        }
    };
    let report = sep_select(&problem.pool, &problem.spec, &checker, cfg.fuel).expect("non-empty pool");
    for c in &report.pair_checks {
        if let PairResult::Failed(m) = &c.result {
            if m.contains("backend unavailable") {
                return Err(m.clone());
            }
        }
    }
    let idx = problem
        .pool
        .iter()
        .position(|p| p.id == report.selected)
        .expect("selection comes from the pool");
    Ok(SelectorOutcome {
        selected: Some(report.selected.clone()),
        correct: labels[idx],
        unavailable: None,
        sep: Some(SepDetails {
            partitions: report.partitions.partitions.iter().map(|p| p.members.clone()).collect(),
            prefilter_survivors: report.prefilter_survivors.clone(),
            pair_checks: report.pair_checks.len(),
            smt_queries: report.pair_checks.iter().map(|c| c.smt_queries).sum(),
            all_exhaustive: report.all_exhaustive(),
            fallback_used: report.fallback_used,
        }),
    })
}

fn picked(problem: &Problem, labels: &[bool], idx: Option<usize>, why: &str) -> SelectorOutcome {
    match idx {
        Some(k) => SelectorOutcome {
            selected: Some(problem.pool[k].id.clone()),
            correct: labels[k],
            unavailable: None,
            sep: None,
        },
        None => SelectorOutcome {
            selected: None,
            correct: false,
            unavailable: Some(why.to_string()),
            sep: None,
        },
    }
}

/// Scores every configured selector on one problem, truncated to the
/// first `n_candidates` candidates.
pub fn evaluate_problem(
    problem: &Problem,
    cfg: &RunConfig,
    solvers: &SolverFactory,
) -> Result<ProblemResult, EvalError> {
    let start = Instant::now();
    let mut sw = Stopwatch::new();
    let problem = problem.truncated(cfg.n_candidates);
    let solver = solvers.for_problem(&problem);
    sw.lap("setup");
    let labels = label_pool(&problem, cfg.fuel);
    let c = labels.iter().filter(|&&l| l).count();
    // Unparsable files still count; files that do not exist do not.
    let n = problem.candidate_count;
    sw.lap("scoring");

    let mut selectors = BTreeMap::new();
    for &kind in &cfg.selectors {
        let outcome = if problem.pool.is_empty() {
            picked(&problem, &labels, None, "empty pool")
        } else {
            match kind {
                SelectorKind::Sep => run_sep(&problem, solver.as_ref(), cfg, &labels).map_err(EvalError::Backend)?,
                SelectorKind::Similarity => {
                    let m = similarity_matrix::<f64>(&problem.pool);
                    picked(&problem, &labels, hac_medoid_select(&m, cfg.tau), "")
                }
                SelectorKind::ExternalSimilarity => {
                    let idx = problem.pool_similarity().and_then(|m| hac_medoid_select(&m, cfg.tau));
                    picked(&problem, &labels, idx, "no similarity matrix")
                }
                SelectorKind::DualAgreement => {
                    let idx = if problem.generated_tests.is_empty() {
                        None
                    } else {
                        dual_agreement_select(&fingerprint(&problem.pool, &problem.generated_tests, cfg.fuel))
                    };
                    picked(&problem, &labels, idx, "no generated tests")
                }
                SelectorKind::RandomPass1 => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ stable_hash(&problem.spec.id));
                    let k = rng.random_range(0..problem.pool.len());
                    picked(&problem, &labels, Some(k), "")
                }
                SelectorKind::OraclePassN => {
                    let k = labels.iter().position(|&l| l).unwrap_or(0);
                    picked(&problem, &labels, Some(k), "")
                }
            }
        };
        selectors.insert(kind.name().to_string(), outcome);
        sw.lap(kind.name());
    }
    let pass = |k: u64| {
        if n == 0 || k as usize > n {
            return 0.0;
        }
        pass_at_k::<f64>(n as u64, c.min(n) as u64, k).unwrap_or(0.0)
    };
    let (pass_at_1, pass_at_n) = (pass(1), pass(n as u64));
    sw.lap("metrics");
    Ok(ProblemResult {
        schema_version: SCHEMA_VERSION,
        record: "problem",
        problem: problem.spec.id.clone(),
        n,
        c,
        live_pool: problem.pool.len(),
        excluded: problem.excluded.iter().map(|e| e.file.display().to_string()).collect(),
        pass_at_1,
        pass_at_n,
        selectors,
        timing: Timing {
            total_ms: start.elapsed().as_secs_f64() * 1e3,
            stages: sw.stages,
        },
    })
}

fn aggregate(cfg: &RunConfig, results: &[ProblemResult], skipped: Vec<String>, timing: Timing) -> Aggregate {
    let mut selectors = BTreeMap::new();
    for kind in &cfg.selectors {
        let outcomes: Vec<&SelectorOutcome> = results.iter().filter_map(|r| r.selectors.get(kind.name())).collect();
        let correct = outcomes.iter().filter(|o| o.correct).count();
        let available = outcomes.iter().filter(|o| o.selected.is_some()).count();
        selectors.insert(
            kind.name().to_string(),
            SelectorAggregate {
                correct,
                available,
                accuracy: if results.is_empty() {
                    0.0
                } else {
                    correct as f64 / results.len() as f64
                },
            },
        );
    }
    let mean = |f: fn(&ProblemResult) -> f64| {
        if results.is_empty() {
            0.0
        } else {
            results.iter().map(f).sum::<f64>() / results.len() as f64
        }
    };
    Aggregate {
        schema_version: SCHEMA_VERSION,
        record: "aggregate",
        problems: results.len(),
        skipped,
        n: cfg.n_candidates,
        seed: cfg.seed,
        backend: cfg.backend.name(),
        selectors,
        mean_pass_at_1: mean(|r| r.pass_at_1),
        mean_pass_at_n: mean(|r| r.pass_at_n),
        timing,
    }
}

pub fn evaluate(cfg: &RunConfig) -> Result<RunReport, EvalError> {
    if cfg.n_candidates == 0 {
        return Err(EvalError::Config("n_candidates must be at least 1".into()));
    }
    cfg.budget.validate().map_err(|e| EvalError::Config(e.to_string()))?;
    let start = Instant::now();
    let corpus = load_corpus(&cfg.corpus_path)?;
    let load_ms = start.elapsed().as_secs_f64() * 1e3;
    let solvers = SolverFactory::new(&cfg.backend, cfg.log_smt.as_deref())?;
    let results: Vec<ProblemResult> = corpus
        .problems
        .par_iter()
        .map(|p| evaluate_problem(p, cfg, &solvers))
        .collect::<Result<_, _>>()?;
    let mut stages: BTreeMap<String, f64> = BTreeMap::new();
    stages.insert("load".into(), load_ms);
    for r in &results {
        for (k, v) in &r.timing.stages {
            *stages.entry(k.clone()).or_insert(0.0) += v;
        }
    }
    let skipped = corpus.skipped.iter().map(|(id, why)| format!("{id}: {why}")).collect();
    let report = RunReport {
        aggregate: aggregate(
            cfg,
            &results,
            skipped,
            Timing {
                total_ms: start.elapsed().as_secs_f64() * 1e3,
                stages,
            },
        ),
        problems: results,
    };
    if let Some(path) = &cfg.output {
        write_text(path, &report.to_jsonl())?;
    }
    Ok(report)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), EvalError> {
    let io = |source| EvalError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io)?;
    }
    let mut f = fs::File::create(path).map_err(io)?;
    f.write_all(text.as_bytes()).map_err(io)
}

/// Checks every pair with at least one correct member; wrong-wrong pairs
/// are recorded as excluded without a check.
pub fn pair_records(
    problem: &Problem,
    cfg: &RunConfig,
    solver: &dyn Solver,
) -> Result<Vec<PairwiseEvalRecord>, EvalError> {
    let labels = label_pool(problem, cfg.fuel);
    let checker = EquivChecker::new(&problem.spec, solver, cfg.budget, cfg.options());
    let mut out = Vec::new();
    for i in 0..problem.pool.len() {
        for j in i + 1..problem.pool.len() {
            let reference = reference_label(labels[i], labels[j]);
            let (verdict, exhaustive) = if reference == ReferenceLabel::Excluded {
                (None, false)
            } else {
                match &checker {
                    Ok(ch) => match ch.check(&problem.pool[i], &problem.pool[j]) {
                        Ok(c) => {
                            let exhaustive = match &c.verdict {
                                EquivVerdict::NotDistinguished { exhaustive, .. } => *exhaustive,
                                EquivVerdict::Distinct { .. } => true,
                            };
                            (Some(SepVerdict::from_verdict(&c.verdict)), exhaustive)
                        }
                        Err(e) => {
                            if let Some(m) = is_backend_down(&e) {
                                return Err(EvalError::Backend(m));
                            }
                            (Some(SepVerdict::Error), false)
                        }
                    },
                    Err(e) => {
                        if let Some(m) = is_backend_down(e) {
                            return Err(EvalError::Backend(m));
                        }
                        (Some(SepVerdict::Error), false)
                    }
                }
            };
            out.push(PairwiseEvalRecord {
                problem: problem.spec.id.clone(),
                i: problem.pool[i].id.clone(),
                j: problem.pool[j].id.clone(),
                correct_i: labels[i],
                correct_j: labels[j],
                sep_verdict: verdict,
                exhaustive,
                reference_label: reference,
            });
        }
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct PairAccuracyReport {
    pub per_problem: Vec<Vec<PairwiseEvalRecord>>,
    /// `None` when no scored pair exists.
    pub summary: Option<PairAccuracySummary>,
}

impl PairAccuracyReport {
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for r in self.per_problem.iter().flatten() {
            out.push_str(&serde_json::to_string(r).expect("record serializes"));
            out.push('\n');
        }
        let summary = json!({
            "schema_version": SCHEMA_VERSION,
            "record": "pair_accuracy",
            "summary": self.summary,
        });
        out.push_str(&summary.to_string());
        out.push('\n');
        out
    }
}

pub fn pair_accuracy(cfg: &RunConfig) -> Result<PairAccuracyReport, EvalError> {
    let corpus = load_corpus(&cfg.corpus_path)?;
    let solvers = SolverFactory::new(&cfg.backend, cfg.log_smt.as_deref())?;
    let per_problem: Vec<Vec<PairwiseEvalRecord>> = corpus
        .problems
        .par_iter()
        .map(|p| {
            let p = p.truncated(cfg.n_candidates);
            pair_records(&p, cfg, solvers.for_problem(&p).as_ref())
        })
        .collect::<Result<_, _>>()?;
    let summary = summarize_pair_accuracy(&per_problem).ok();
    let report = PairAccuracyReport { per_problem, summary };
    if let Some(path) = &cfg.output {
        write_text(path, &report.to_jsonl())?;
    }
    Ok(report)
}
