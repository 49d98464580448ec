use std::collections::BTreeSet;
use std::fmt::Write;

use num_bigint::Sign;

use super::{SolverError, SolverQuery};
use crate::term::{Node, Op, Sort, Term};

/// Words that cannot appear as bare constant names in a script.
const RESERVED: &[&str] = &[
    "_", "!", "as", "let", "exists", "forall", "match", "par", "and", "or", "not", "xor", "ite",
    "distinct", "div", "mod", "abs", "true", "false", "Int", "Bool", "Real", "assert",
    "check-sat", "declare-const", "declare-fun", "define-fun", "get-model", "push", "pop",
    "BINARY", "DECIMAL", "HEXADECIMAL", "NUMERAL", "STRING",
];

fn is_simple_symbol(name: &str) -> bool {
    let extra = "~!@$%^&*_-+=<>.?/";
    !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && !name.starts_with('@')
        && name.chars().all(|c| c.is_ascii_alphanumeric() || extra.contains(c))
        && !RESERVED.contains(&name)
}

pub fn symbol(name: &str) -> String {
    if is_simple_symbol(name) {
        name.to_string()
    } else {
        format!("|{name}|")
    }
}

fn write_term(out: &mut String, t: &Term) {
    match t.node() {
        Node::Int(v) => {
            if v.sign() == Sign::Minus {
                let _ = write!(out, "(- {})", -v);
            } else {
                let _ = write!(out, "{v}");
            }
        }
        Node::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Node::Var(n, _) => out.push_str(&symbol(n)),
        Node::Neg(a) => {
            out.push_str("(- ");
            write_term(out, a);
            out.push(')');
        }
        Node::Not(a) => {
            out.push_str("(not ");
            write_term(out, a);
            out.push(')');
        }
        Node::Bin(op, a, b) => {
            let head = match op {
                Op::Add => "+",
                Op::Sub => "-",
                Op::Mul => "*",
                Op::Div => "div",
                Op::Mod => "mod",
                Op::Eq => "=",
                Op::Lt => "<",
                Op::Le => "<=",
                Op::And => "and",
                Op::Or => "or",
            };
            let _ = write!(out, "({head} ");
            write_term(out, a);
            out.push(' ');
            write_term(out, b);
            out.push(')');
        }
    }
}

pub fn term_to_smtlib(t: &Term) -> String {
    let mut s = String::new();
    write_term(&mut s, t);
    s
}

/// Chooses `QF_LIA` unless some assertion multiplies two non-constants or
/// divides by a non-constant, in which case `QF_NIA`.
pub fn logic_for(query: &SolverQuery) -> &'static str {
    if query.assertions.iter().any(Term::is_nonlinear) {
        "QF_NIA"
    } else {
        "QF_LIA"
    }
}

/// Renders a complete one-shot script. The output depends only on the
/// query, so identical queries produce identical bytes.
pub fn emit_smtlib(query: &SolverQuery) -> Result<String, SolverError> {
    let declared: BTreeSet<(String, Sort)> = query.declarations.iter().cloned().collect();
    let mut out = String::new();
    out.push_str("(set-option :produce-models true)\n");
    let _ = writeln!(out, "(set-logic {})", logic_for(query));
    for (name, sort) in &query.declarations {
        let _ = writeln!(out, "(declare-const {} {})", symbol(name), sort.smt_name());
    }
    for a in &query.assertions {
        if a.sort() != Sort::Bool {
            return Err(SolverError::UnsupportedTerm(format!(
                "assertion is not boolean: {a}"
            )));
        }
        let mut free = BTreeSet::new();
        a.free_symbols(&mut free);
        if let Some((name, sort)) = free.iter().find(|s| !declared.contains(*s)) {
            return Err(SolverError::UnsupportedTerm(format!(
                "undeclared symbol `{name}` of sort {}",
                sort.smt_name()
            )));
        }
        out.push_str("(assert ");
        write_term(&mut out, a);
        out.push_str(")\n");
    }
    out.push_str("(check-sat)\n(get-model)\n");
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(decls: &[(&str, Sort)], assertions: Vec<Term>) -> SolverQuery {
        SolverQuery {
            declarations: decls.iter().map(|(n, s)| (n.to_string(), *s)).collect(),
            assertions,
            timeout_ms: 1000,
        }
    }

    #[test]
    fn equality_script() {
        let x = Term::var("x", Sort::Int);
        let script = emit_smtlib(&q(&[("x", Sort::Int)], vec![x.eq(&Term::int(0))])).unwrap();
        assert!(script.contains("(assert (= x 0))"), "{script}");
        assert!(script.contains("(set-logic QF_LIA)"));
        assert!(script.ends_with("(check-sat)\n(get-model)\n"));
        assert_eq!(script, emit_smtlib(&q(&[("x", Sort::Int)], vec![x.eq(&Term::int(0))])).unwrap());
    }

    #[test]
    fn array_elements() {
        let a0 = Term::var("a@0", Sort::Int);
        let a1 = Term::var("a@1", Sort::Int);
        let script = emit_smtlib(&q(
            &[("a@0", Sort::Int), ("a@1", Sort::Int)],
            vec![a0.lt(&a1)],
        ))
        .unwrap();
        assert_eq!(script.matches("(declare-const").count(), 2);
        assert_eq!(script.matches("(assert").count(), 1);
        assert!(script.contains("(assert (< a@0 a@1))"));
    }

    #[test]
    fn euclidean_div_and_negatives() {
        let x = Term::var("x", Sort::Int);
        let t = x.div(&Term::int(-3)).eq(&Term::int(-2));
        let script = emit_smtlib(&q(&[("x", Sort::Int)], vec![t])).unwrap();
        assert!(script.contains("(assert (= (div x (- 3)) (- 2)))"), "{script}");
        let y = Term::var("y", Sort::Int);
        let nl = x.modulo(&y).eq(&Term::int(0));
        let script = emit_smtlib(&q(&[("x", Sort::Int), ("y", Sort::Int)], vec![nl])).unwrap();
        assert!(script.contains("QF_NIA"));
    }

    #[test]
    fn reserved_names_are_quoted() {
        assert_eq!(symbol("mod"), "|mod|");
        assert_eq!(symbol("n"), "n");
    }

    #[test]
    fn rejects_undeclared_and_non_boolean() {
        let x = Term::var("x", Sort::Int);
        assert!(matches!(
            emit_smtlib(&q(&[], vec![x.eq(&Term::int(1))])),
            Err(SolverError::UnsupportedTerm(_))
        ));
        assert!(matches!(
            emit_smtlib(&q(&[("x", Sort::Int)], vec![x.clone()])),
            Err(SolverError::UnsupportedTerm(_))
        ));
    }
}
