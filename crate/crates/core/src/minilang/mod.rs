//! MiniLang: the candidate-program language.
//!
//! A source file holds one function over `int` (arbitrary precision),
//! `bool` and `int[]` parameters. Statements are assignment, array store,
//! `if`/`else`, `while`, `return` and `assert`. Division and modulo are
//! Euclidean, matching SMT-LIB integer `div`/`mod`. The full grammar is in
//! `docs/grammar.md`.

pub mod ast;
mod interp;
pub mod lexer;
mod parser;
mod printer;
mod value;

use thiserror::Error;

pub use ast::{BinOp, Expr, FunctionDef, Param, Stmt, Type, UnOp};
pub use interp::{apply_int_op, euclid_div, euclid_mod, interpret};
pub use parser::parse_constraint_expr;
pub use printer::{print_expr, print_function};
pub use value::{outcomes_equal, ExceptionKind, ExecutionOutcome, OutcomeKind, Value};

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("unexpected character `{0}`")]
    UnexpectedChar(char),
    #[error("unexpected {found}, expected one of: {}", expected.join(", "))]
    UnexpectedToken { found: String, expected: Vec<String> },
    #[error("function `{0}` is defined more than once")]
    DuplicateFunction(String),
    #[error("only one function per source file is supported")]
    MultipleFunctions,
    #[error("duplicate parameter `{0}`")]
    DuplicateParam(String),
    #[error("unknown identifier `{0}`")]
    UnknownIdentifier(String),
    #[error("type error: {0}")]
    Type(String),
    #[error("comparisons cannot be chained here")]
    ChainedComparison,
    #[error("array element access `{0}[...]` is not allowed in constraints")]
    IndexInConstraint(String),
    #[error("function `{0}` does not return a value on every path")]
    MissingReturn(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
#[error("{line}:{col}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    pub fn new(line: usize, col: usize, kind: ParseErrorKind) -> Self {
        ParseError { line, col, kind }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("expected {expected} arguments, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("argument {position}: expected {expected}, got {found}")]
    TypeMismatch {
        position: usize,
        expected: Type,
        found: Type,
    },
}

/// Parses a single-function source file.
pub fn parse(source: &str) -> Result<FunctionDef, ParseError> {
    parser::parse_function(source)
}

/// A parsed candidate together with its place in the pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Program {
    pub id: String,
    pub source: String,
    pub ast: FunctionDef,
    pub generation_index: usize,
}

impl Program {
    pub fn new(
        id: impl Into<String>,
        source: impl Into<String>,
        generation_index: usize,
    ) -> Result<Program, ParseError> {
        let source = source.into();
        let ast = parse(&source)?;
        Ok(Program {
            id: id.into(),
            source,
            ast,
            generation_index,
        })
    }

    pub fn run(&self, args: &[Value], fuel: u64) -> Result<ExecutionOutcome, InterpError> {
        interpret(&self.ast, args, fuel)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_identity() {
        let f = parse("fn f(x: int) -> int { return x; }").unwrap();
        assert_eq!(f.params.len(), 1);
        assert_eq!(f.body, vec![Stmt::Return(Some(Expr::var("x")))]);
    }

    #[test]
    fn malformed_expression_points_at_semicolon() {
        let src = "fn f(x: int) -> int { return x + ; }";
        let err = parse(src).unwrap_err();
        assert_eq!((err.line, err.col), (1, 34));
        assert_eq!(&src[33..34], ";");
        match err.kind {
            ParseErrorKind::UnexpectedToken { found, expected } => {
                assert_eq!(found, "`;`");
                assert!(expected.contains(&"identifier".to_string()));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn array_store_round_trips() {
        let src = "fn f(a: int[]) -> int { a[0] = 1; return a[0]; }";
        let f = parse(src).unwrap();
        assert_eq!(
            f.body[0],
            Stmt::Store {
                array: "a".into(),
                index: Expr::int(0),
                value: Expr::int(1)
            }
        );
        let printed = print_function(&f);
        assert_eq!(parse(&printed).unwrap(), f);
    }

    #[test]
    fn single_statement_bodies() {
        let f = parse("fn f(x: int) -> int { if (x > 0) return 1; else return 0; }").unwrap();
        assert!(matches!(&f.body[0], Stmt::If { else_branch: Some(_), .. }));
        parse("fn f(n: int) -> int { i = 0; while (i < n) i = i + 1; return i; }").unwrap();
    }

    #[test]
    fn static_errors() {
        let kind = |src: &str| parse(src).unwrap_err().kind;
        assert_eq!(
            kind("fn f(x: int) -> int { return y; }"),
            ParseErrorKind::UnknownIdentifier("y".into())
        );
        assert_eq!(
            kind("fn f(x: int) -> int { return x; } fn f(x: int) -> int { return x; }"),
            ParseErrorKind::DuplicateFunction("f".into())
        );
        assert_eq!(
            kind("fn f(x: int) -> int { if (x > 0) { y = 1; } return y; }"),
            ParseErrorKind::UnknownIdentifier("y".into())
        );
        assert!(matches!(
            kind("fn f(x: int) -> int { if (x > 0) { return 1; } }"),
            ParseErrorKind::MissingReturn(_)
        ));
        assert!(matches!(
            kind("fn f(x: int) -> bool { return x; }"),
            ParseErrorKind::Type(_)
        ));
        assert_eq!(
            kind("fn f(x: int) -> bool { return 0 < x < 3; }"),
            ParseErrorKind::ChainedComparison
        );
        assert_eq!(
            kind("fn f(x: int, x: bool) -> int { return 1; }"),
            ParseErrorKind::DuplicateParam("x".into())
        );
    }

    #[test]
    fn definite_assignment_through_branches() {
        parse("fn f(x: int) -> int { if (x > 0) { y = 1; } else { y = 2; } return y; }").unwrap();
        parse("fn f(x: int) -> int { if (x < 0) { return 0; } else { y = 1; } return y; }").unwrap();
    }

    #[test]
    fn printer_parenthesizes_by_precedence() {
        let f = parse("fn f(x: int, y: int) -> bool { return (x - (y - 1)) * 2 < -(x + 1) || !(x == y); }")
            .unwrap();
        let printed = print_function(&f);
        assert!(printed.contains("(x - (y - 1)) * 2 < -(x + 1) || !(x == y)"), "{printed}");
        assert_eq!(parse(&printed).unwrap(), f);
    }
}
