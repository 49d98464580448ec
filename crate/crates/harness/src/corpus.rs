//! On-disk corpus layout: `<root>/<problem_id>/spec.json` and
//! `<root>/<problem_id>/candidates/<k>.ml`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value as Json;
use thiserror::Error;

use sep_core::baselines::SimilarityMatrixF64;
use sep_core::domain::{parse_constraints, satisfies, ProblemSpec, Signature, TestCase};
use sep_core::minilang::{Param, Program, Type};

use crate::record::{test_from_json, test_to_json};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{}: {reason}", file.display())]
    Format { file: PathBuf, reason: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn format_err(file: &Path, reason: impl Into<String>) -> CorpusError {
    CorpusError::Format {
        file: file.to_path_buf(),
        reason: reason.into(),
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CorpusError + '_ {
    move |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct ParamJson {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: Type,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SignatureJson {
    pub name: String,
    pub params: Vec<ParamJson>,
    pub ret: Type,
}

impl SignatureJson {
    pub fn from_signature(s: &Signature) -> Self {
        SignatureJson {
            name: s.name.clone(),
            params: s
                .params
                .iter()
                .map(|p| ParamJson {
                    name: p.name.clone(),
                    ty: p.ty,
                })
                .collect(),
            ret: s.ret,
        }
    }

    pub fn to_signature(&self) -> Signature {
        Signature {
            name: self.name.clone(),
            params: self
                .params
                .iter()
                .map(|p| Param {
                    name: p.name.clone(),
                    ty: p.ty,
                })
                .collect(),
            ret: self.ret,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub n: usize,
    pub values: Vec<Vec<f64>>,
}

/// Contents of `spec.json`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct SpecFile {
    pub id: String,
    pub signature: SignatureJson,
    pub constraints: Vec<String>,
    pub public_examples: Vec<Json>,
    pub hidden_tests: Vec<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generated_tests: Option<Vec<Json>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<MatrixJson>,
    /// Free-form generator metadata; never read by the evaluator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notes: Option<Json>,
}

/// Tests used only to score selections.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HiddenTests(pub(crate) Vec<TestCase>);

impl HiddenTests {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Exclusion {
    pub file: PathBuf,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Problem {
    pub spec: ProblemSpec,
    /// Parsable candidates ordered by generation index.
    pub pool: Vec<Program>,
    /// Number of candidate files, parsable or not.
    pub candidate_count: usize,
    pub excluded: Vec<Exclusion>,
    pub generated_tests: Vec<TestCase>,
    /// Indexed by generation index, over all candidate files.
    pub similarity: Option<SimilarityMatrixF64>,
    pub(crate) hidden: HiddenTests,
}

impl Problem {
    /// Keeps only candidates with generation index below `n`.
    pub fn truncated(&self, n: usize) -> Problem {
        let mut p = self.clone();
        p.pool.retain(|c| c.generation_index < n);
        p.candidate_count = p.candidate_count.min(n);
        p
    }

    pub fn hidden_tests(&self) -> &HiddenTests {
        &self.hidden
    }

    /// Similarity restricted to the live pool, in pool order.
    pub fn pool_similarity(&self) -> Option<SimilarityMatrixF64> {
        let m = self.similarity.as_ref()?;
        let idx: Vec<usize> = self.pool.iter().map(|p| p.generation_index).collect();
        if idx.iter().any(|&k| k >= m.n()) {
            return None;
        }
        Some(SimilarityMatrixF64::from_fn(idx.len(), |a, b| m.get(idx[a], idx[b])))
    }
}

#[derive(Clone, Debug)]
pub struct LoadedCorpus {
    pub problems: Vec<Problem>,
    /// Problems with no parsable candidate.
    pub skipped: Vec<(String, String)>,
}

impl LoadedCorpus {
    pub fn exclusions(&self) -> impl Iterator<Item = &Exclusion> {
        self.problems.iter().flat_map(|p| &p.excluded)
    }
}

fn parse_tests(raw: &[Json], sig: &Signature, file: &Path, what: &str) -> Result<Vec<TestCase>, CorpusError> {
    raw.iter()
        .enumerate()
        .map(|(k, j)| test_from_json(j, sig).map_err(|e| format_err(file, format!("{what}[{k}]: {e}"))))
        .collect()
}

fn candidate_files(dir: &Path) -> Result<Vec<(usize, PathBuf)>, CorpusError> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("ml") {
            continue;
        }
        let k = path
            .file_stem()
            .and_then(|s| s.to_str())
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| format_err(&path, "candidate file name must be `<k>.ml`"))?;
        files.push((k, path));
    }
    files.sort();
    Ok(files)
}

pub fn load_problem(dir: &Path) -> Result<Problem, CorpusError> {
    let spec_path = dir.join("spec.json");
    let text = fs::read_to_string(&spec_path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => format_err(&spec_path, "missing spec.json"),
        _ => CorpusError::Io {
            path: spec_path.clone(),
            source: e,
        },
    })?;
    let file: SpecFile = serde_json::from_str(&text).map_err(|e| format_err(&spec_path, e.to_string()))?;
    let signature = file.signature.to_signature();
    let constraints =
        parse_constraints(&file.constraints, &signature).map_err(|e| format_err(&spec_path, e.to_string()))?;
    let public_examples = parse_tests(&file.public_examples, &signature, &spec_path, "public_examples")?;
    for (k, t) in public_examples.iter().enumerate() {
        if !satisfies(&constraints, &signature, &t.args) {
            return Err(format_err(
                &spec_path,
                format!("public_examples[{k}] violates the domain constraints"),
            ));
        }
    }
    let hidden = HiddenTests(parse_tests(&file.hidden_tests, &signature, &spec_path, "hidden_tests")?);
    let generated_tests = parse_tests(
        file.generated_tests.as_deref().unwrap_or_default(),
        &signature,
        &spec_path,
        "generated_tests",
    )?;
    let similarity = file
        .similarity
        .map(|m| {
            if m.values.len() != m.n {
                return Err(format_err(&spec_path, "similarity.n does not match the matrix"));
            }
            SimilarityMatrixF64::new(m.values).map_err(|e| format_err(&spec_path, e.to_string()))
        })
        .transpose()?;

    let cand_dir = dir.join("candidates");
    let files = candidate_files(&cand_dir)?;
    let mut pool = Vec::new();
    let mut excluded = Vec::new();
    for (k, path) in &files {
        let source = fs::read_to_string(path).map_err(io_err(path))?;
        match Program::new(k.to_string(), source, *k) {
            Ok(p) if signature.matches(&p.ast) => pool.push(p),
            Ok(_) => excluded.push(Exclusion {
                file: path.clone(),
                reason: "signature does not match the problem".into(),
            }),
            Err(e) => excluded.push(Exclusion {
                file: path.clone(),
                reason: e.to_string(),
            }),
        }
    }
    let candidate_count = files.last().map_or(0, |(k, _)| k + 1).max(files.len());
    Ok(Problem {
        spec: ProblemSpec {
            id: file.id,
            signature,
            constraints,
            public_examples,
        },
        pool,
        candidate_count,
        excluded,
        generated_tests,
        similarity,
        hidden,
    })
}

/// Loads every problem directory under `root`, sorted by name.
pub fn load_corpus(root: &Path) -> Result<LoadedCorpus, CorpusError> {
    let mut dirs = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let path = entry.map_err(io_err(root))?.path();
        if path.is_dir() {
            dirs.push(path);
        }
    }
    dirs.sort();
    let mut problems = Vec::new();
    let mut skipped = Vec::new();
    for dir in dirs {
        let p = load_problem(&dir)?;
        if p.pool.is_empty() {
            skipped.push((p.spec.id.clone(), "no parsable candidate".to_string()));
        } else {
            problems.push(p);
        }
    }
    Ok(LoadedCorpus { problems, skipped })
}

/// Everything needed to write one problem directory.
#[derive(Clone, Debug)]
pub struct ProblemFiles {
    pub spec: SpecFile,
    pub candidates: Vec<String>,
    pub reference: Option<String>,
}

impl ProblemFiles {
    pub fn new(
        spec: &ProblemSpec,
        hidden: &[TestCase],
        generated: Option<&[TestCase]>,
        candidates: Vec<String>,
    ) -> Self {
        let sig = &spec.signature;
        let enc = |ts: &[TestCase]| ts.iter().map(|t| test_to_json(t, sig)).collect::<Vec<_>>();
        ProblemFiles {
            spec: SpecFile {
                id: spec.id.clone(),
                signature: SignatureJson::from_signature(sig),
                constraints: spec.constraints.raw.clone(),
                public_examples: enc(&spec.public_examples),
                hidden_tests: enc(hidden),
                generated_tests: generated.map(enc),
                similarity: None,
                notes: None,
            },
            candidates,
            reference: None,
        }
    }

    pub fn write(&self, root: &Path) -> Result<(), CorpusError> {
        let dir = root.join(&self.spec.id);
        let cand_dir = dir.join("candidates");
        fs::create_dir_all(&cand_dir).map_err(io_err(&cand_dir))?;
        let spec_path = dir.join("spec.json");
        let mut text = serde_json::to_string_pretty(&self.spec).expect("spec serializes");
        text.push('\n');
        fs::write(&spec_path, text).map_err(io_err(&spec_path))?;
        for (k, src) in self.candidates.iter().enumerate() {
            let path = cand_dir.join(format!("{k}.ml"));
            fs::write(&path, src).map_err(io_err(&path))?;
        }
        if let Some(r) = &self.reference {
            let path = dir.join("reference.ml");
            fs::write(&path, r).map_err(io_err(&path))?;
        }
        Ok(())
    }
}
