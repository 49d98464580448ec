use std::fmt::Write;

use super::ast::{Expr, FunctionDef, Stmt, UnOp};

/// Canonical source rendering. Re-parsing the output yields an equal AST.
pub fn print_function(f: &FunctionDef) -> String {
    let mut out = String::new();
    let params: Vec<String> = f
        .params
        .iter()
        .map(|p| format!("{}: {}", p.name, p.ty))
        .collect();
    let _ = write!(out, "fn {}({}) -> {} ", f.name, params.join(", "), f.ret);
    print_block(&mut out, &f.body, 0);
    out.push('\n');
    out
}

fn indent(out: &mut String, depth: usize) {
    for _ in 0..depth {
        out.push_str("    ");
    }
}

fn print_block(out: &mut String, stmts: &[Stmt], depth: usize) {
    out.push_str("{\n");
    for s in stmts {
        print_stmt(out, s, depth + 1);
    }
    indent(out, depth);
    out.push('}');
}

fn print_stmt(out: &mut String, stmt: &Stmt, depth: usize) {
    indent(out, depth);
    match stmt {
        Stmt::Assign { target, value } => {
            let _ = writeln!(out, "{target} = {};", print_expr(value));
        }
        Stmt::Store {
            array,
            index,
            value,
        } => {
            let _ = writeln!(out, "{array}[{}] = {};", print_expr(index), print_expr(value));
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            print_if(out, cond, then_branch, else_branch.as_deref(), depth);
            out.push('\n');
        }
        Stmt::While { cond, body } => {
            let _ = write!(out, "while ({}) ", print_expr(cond));
            print_block(out, body, depth);
            out.push('\n');
        }
        Stmt::Return(None) => out.push_str("return;\n"),
        Stmt::Return(Some(e)) => {
            let _ = writeln!(out, "return {};", print_expr(e));
        }
        Stmt::Assert(e) => {
            let _ = writeln!(out, "assert({});", print_expr(e));
        }
    }
}

fn print_if(out: &mut String, cond: &Expr, then_b: &[Stmt], else_b: Option<&[Stmt]>, depth: usize) {
    let _ = write!(out, "if ({}) ", print_expr(cond));
    print_block(out, then_b, depth);
    match else_b {
        None => {}
        Some(
            [Stmt::If {
                cond,
                then_branch,
                else_branch,
            }],
        ) => {
            out.push_str(" else ");
            print_if(out, cond, then_branch, else_branch.as_deref(), depth);
        }
        Some(stmts) => {
            out.push_str(" else ");
            print_block(out, stmts, depth);
        }
    }
}

const UNARY_PREC: u8 = 6;

pub fn print_expr(e: &Expr) -> String {
    let mut out = String::new();
    write_expr(&mut out, e, 0);
    out
}

fn prec(e: &Expr) -> u8 {
    match e {
        Expr::Binary { op, .. } => op.precedence(),
        Expr::Unary { .. } => UNARY_PREC,
        _ => u8::MAX,
    }
}

fn write_expr(out: &mut String, e: &Expr, min_prec: u8) {
    let needs_parens = prec(e) < min_prec;
    if needs_parens {
        out.push('(');
    }
    match e {
        Expr::Int(v) => {
            let _ = write!(out, "{v}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Var(n) => out.push_str(n),
        Expr::Len(n) => {
            let _ = write!(out, "len({n})");
        }
        Expr::Index { array, index } => {
            let _ = write!(out, "{array}[");
            write_expr(out, index, 0);
            out.push(']');
        }
        Expr::Unary { op, operand } => {
            out.push(match op {
                UnOp::Neg => '-',
                UnOp::Not => '!',
            });
            write_expr(out, operand, UNARY_PREC);
        }
        Expr::Binary { op, lhs, rhs } => {
            let p = op.precedence();
            // Comparisons do not chain, so an equal-precedence operand on
            // either side needs parentheses; other operators associate left.
            let left_min = if op.is_comparison() { p + 1 } else { p };
            write_expr(out, lhs, left_min);
            let _ = write!(out, " {} ", op.symbol());
            write_expr(out, rhs, p + 1);
        }
    }
    if needs_parens {
        out.push(')');
    }
}
