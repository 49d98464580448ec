use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc;
use std::thread;
use std::time::Duration;

use num_bigint::BigInt;

use super::sexp::{parse_all, Sexp};
use super::smtlib::emit_smtlib;
use super::{validate_model, Model, Solver, SolverError, SolverQuery, SolverVerdict};
use crate::minilang::Value;
use crate::term::Sort;

pub const DEFAULT_SOLVER_CMD: &str = "z3 -in";

/// Runs an SMT-LIB2 solver as a child process, one process per query.
#[derive(Debug)]
pub struct ExternalSolver {
    program: String,
    args: Vec<String>,
    log_dir: Option<PathBuf>,
    seq: AtomicU64,
}

impl ExternalSolver {
    /// `command` is split on whitespace; the solver must read a script on
    /// stdin (for z3 that is `z3 -in`).
    pub fn new(command: &str) -> Result<Self, SolverError> {
        let mut parts = command.split_whitespace().map(str::to_string);
        let program = parts
            .next()
            .ok_or_else(|| SolverError::BackendUnavailable("empty solver command".into()))?;
        Ok(ExternalSolver {
            program,
            args: parts.collect(),
            log_dir: None,
            seq: AtomicU64::new(0),
        })
    }

    /// Writes every script and raw response under `dir`.
    pub fn with_transcripts(mut self, dir: impl Into<PathBuf>) -> Self {
        self.log_dir = Some(dir.into());
        self
    }

    pub fn command_line(&self) -> String {
        std::iter::once(self.program.as_str())
            .chain(self.args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Confirms the solver starts and answers a trivial query.
    pub fn probe(&self) -> Result<(), SolverError> {
        let q = SolverQuery {
            declarations: vec![("x".into(), Sort::Int)],
            assertions: vec![crate::term::Term::var("x", Sort::Int).gt(&crate::term::Term::int(0))],
            timeout_ms: 5_000,
        };
        match self.check(&q)? {
            SolverVerdict::Sat(_) => Ok(()),
            other => Err(SolverError::BackendUnavailable(format!(
                "`{}` answered {other:?} to a satisfiable probe",
                self.command_line()
            ))),
        }
    }

    fn run(&self, script: &str, timeout: Duration) -> Result<Option<String>, SolverError> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| {
                SolverError::BackendUnavailable(format!("cannot start `{}`: {e}", self.command_line()))
            })?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stdout = child.stdout.take().expect("piped stdout");
        let script_owned = script.to_string();
        let writer = thread::spawn(move || {
            let _ = stdin.write_all(script_owned.as_bytes());
        });
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            let mut s = String::new();
            let res = stdout.read_to_string(&mut s).map(|_| s);
            let _ = tx.send(res);
        });
        let result = match rx.recv_timeout(timeout) {
            Ok(Ok(text)) => {
                let _ = child.wait();
                Ok(Some(text))
            }
            Ok(Err(e)) => {
                let _ = child.kill();
                let _ = child.wait();
                Err(SolverError::BackendUnavailable(format!("reading solver output: {e}")))
            }
            Err(_) => {
                let _ = child.kill();
                let _ = child.wait();
                Ok(None)
            }
        };
        let _ = writer.join();
        result
    }

    fn log(&self, script: &str, response: &str) {
        let Some(dir) = &self.log_dir else { return };
        let n = self.seq.fetch_add(1, Ordering::Relaxed);
        let _ = std::fs::create_dir_all(dir);
        let mut text = script.to_string();
        text.push_str("; --- response ---\n");
        for line in response.lines() {
            text.push_str("; ");
            text.push_str(line);
            text.push('\n');
        }
        let _ = std::fs::write(dir.join(format!("query-{n:06}.smt2")), text);
    }
}

impl Solver for ExternalSolver {
    fn check(&self, query: &SolverQuery) -> Result<SolverVerdict, SolverError> {
        let script = emit_smtlib(query)?;
        let timeout = Duration::from_millis(query.timeout_ms.max(1));
        let Some(response) = self.run(&script, timeout)? else {
            self.log(&script, "<timeout>");
            return Ok(SolverVerdict::Unknown("timeout".into()));
        };
        self.log(&script, &response);
        let transcript = || format!("{script}\n;; response\n{response}");
        let malformed = |reason: String| SolverError::MalformedResponse {
            reason,
            transcript: transcript(),
        };
        let items = parse_all(&response).map_err(malformed)?;
        let verdict = match items.first().and_then(Sexp::as_atom) {
            Some("sat") => {
                let raw = items
                    .get(1)
                    .ok_or_else(|| malformed("missing model after `sat`".into()))?;
                let mut model = parse_model(raw).map_err(malformed)?;
                // Solvers may omit symbols that do not affect satisfaction.
                for (name, sort) in &query.declarations {
                    model.entry(name.clone()).or_insert_with(|| match sort {
                        Sort::Int => Value::int(0),
                        Sort::Bool => Value::Bool(false),
                    });
                }
                validate_model(query, &model).map_err(|reason| SolverError::InvalidModel {
                    reason,
                    transcript: transcript(),
                })?;
                SolverVerdict::Sat(model)
            }
            Some("unsat") => SolverVerdict::Unsat,
            Some("unknown") => SolverVerdict::Unknown("solver returned unknown".into()),
            Some("timeout") => SolverVerdict::Unknown("timeout".into()),
            _ => {
                if response.trim().is_empty() {
                    return Err(SolverError::BackendUnavailable(format!(
                        "`{}` produced no output",
                        self.command_line()
                    )));
                }
                return Err(malformed("expected sat, unsat or unknown".into()));
            }
        };
        Ok(verdict)
    }
}

fn parse_value(s: &Sexp) -> Result<Value, String> {
    match s {
        Sexp::Atom(a) if a == "true" => Ok(Value::Bool(true)),
        Sexp::Atom(a) if a == "false" => Ok(Value::Bool(false)),
        Sexp::Atom(a) => a
            .parse::<BigInt>()
            .map(Value::Int)
            .map_err(|_| format!("unsupported model value `{a}`")),
        Sexp::List(items) => match items.as_slice() {
            [Sexp::Atom(minus), inner] if minus == "-" => match parse_value(inner)? {
                Value::Int(v) => Ok(Value::Int(-v)),
                other => Err(format!("cannot negate {other}")),
            },
            _ => Err(format!("unsupported model value {s:?}")),
        },
    }
}

fn parse_model(raw: &Sexp) -> Result<Model, String> {
    let items = raw.as_list().ok_or("model is not a list")?;
    let defs = match items.first() {
        Some(Sexp::Atom(head)) if head == "model" => &items[1..],
        _ => items,
    };
    let mut model = BTreeMap::new();
    for def in defs {
        let parts = def.as_list().ok_or("model entry is not a list")?;
        match parts {
            [Sexp::Atom(kw), Sexp::Atom(name), Sexp::List(args), _sort, value]
                if kw == "define-fun" && args.is_empty() =>
            {
                model.insert(name.clone(), parse_value(value)?);
            }
            // Interpretations of helper functions such as `div0` or `mod0`.
            [Sexp::Atom(kw), Sexp::Atom(_), Sexp::List(args), _, _] if kw == "define-fun" && !args.is_empty() => {}
            _ => return Err(format!("unsupported model entry {def:?}")),
        }
    }
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn model_parsing_variants() {
        let text = "((define-fun x () Int (- 3)) (define-fun b () Bool true))";
        let m = parse_model(&parse_all(text).unwrap()[0]).unwrap();
        assert_eq!(m["x"], Value::int(-3));
        assert_eq!(m["b"], Value::Bool(true));
        let old = "(model (define-fun x () Int 4))";
        let m = parse_model(&parse_all(old).unwrap()[0]).unwrap();
        assert_eq!(m["x"], Value::int(4));
    }

    #[test]
    fn helper_functions_are_skipped() {
        let text = "((define-fun x () Int 0) (define-fun mod0 ((x!0 Int) (x!1 Int)) Int 0))";
        let m = parse_model(&parse_all(text).unwrap()[0]).unwrap();
        assert_eq!(m.len(), 1);
        assert_eq!(m["x"], Value::int(0));
    }

    #[test]
    fn missing_binary_is_unavailable() {
        let s = ExternalSolver::new("definitely-not-a-solver-binary -in").unwrap();
        assert!(matches!(s.probe(), Err(SolverError::BackendUnavailable(_))));
    }
}
