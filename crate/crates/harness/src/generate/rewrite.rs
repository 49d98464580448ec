//! AST rewrites: semantics-preserving variants and breaking mutants.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use sep_core::minilang::{BinOp, Expr, FunctionDef, Stmt, UnOp};

fn walk_stmts(stmts: &mut Vec<Stmt>, f: &mut dyn FnMut(&mut Expr)) {
    for s in stmts {
        match s {
            Stmt::Assign { value, .. } | Stmt::Return(Some(value)) | Stmt::Assert(value) => {
                walk_expr(value, f)
            }
            Stmt::Store { index, value, .. } => {
                walk_expr(index, f);
                walk_expr(value, f);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                walk_expr(cond, f);
                walk_stmts(then_branch, f);
                if let Some(b) = else_branch {
                    walk_stmts(b, f);
                }
            }
            Stmt::While { cond, body } => {
                walk_expr(cond, f);
                walk_stmts(body, f);
            }
            Stmt::Return(None) => {}
        }
    }
}

/// Preorder; children of a rewritten node are visited after the rewrite.
fn walk_expr(e: &mut Expr, f: &mut dyn FnMut(&mut Expr)) {
    f(e);
    match e {
        Expr::Index { index, .. } => walk_expr(index, f),
        Expr::Unary { operand, .. } => walk_expr(operand, f),
        Expr::Binary { lhs, rhs, .. } => {
            walk_expr(lhs, f);
            walk_expr(rhs, f);
        }
        _ => {}
    }
}

fn rename_in_stmts(stmts: &mut [Stmt], map: &dyn Fn(&str) -> Option<String>) {
    for s in stmts {
        match s {
            Stmt::Assign { target, value } => {
                if let Some(n) = map(target) {
                    *target = n;
                }
                rename_in_expr(value, map);
            }
            Stmt::Store {
                array,
                index,
                value,
            } => {
                if let Some(n) = map(array) {
                    *array = n;
                }
                rename_in_expr(index, map);
                rename_in_expr(value, map);
            }
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                rename_in_expr(cond, map);
                rename_in_stmts(then_branch, map);
                if let Some(b) = else_branch {
                    rename_in_stmts(b, map);
                }
            }
            Stmt::While { cond, body } => {
                rename_in_expr(cond, map);
                rename_in_stmts(body, map);
            }
            Stmt::Return(Some(v)) | Stmt::Assert(v) => rename_in_expr(v, map),
            Stmt::Return(None) => {}
        }
    }
}

fn rename_in_expr(e: &mut Expr, map: &dyn Fn(&str) -> Option<String>) {
    match e {
        Expr::Var(n) | Expr::Len(n) => {
            if let Some(m) = map(n) {
                *n = m;
            }
        }
        Expr::Index { array, index } => {
            if let Some(m) = map(array) {
                *array = m;
            }
            rename_in_expr(index, map);
        }
        Expr::Unary { operand, .. } => rename_in_expr(operand, map),
        Expr::Binary { lhs, rhs, .. } => {
            rename_in_expr(lhs, map);
            rename_in_expr(rhs, map);
        }
        Expr::Int(_) | Expr::Bool(_) => {}
    }
}

fn names(f: &FunctionDef) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = f.params.iter().map(|p| p.name.clone()).collect();
    fn collect(stmts: &[Stmt], out: &mut BTreeSet<String>) {
        for s in stmts {
            match s {
                Stmt::Assign { target, .. } => {
                    out.insert(target.clone());
                }
                Stmt::If {
                    then_branch,
                    else_branch,
                    ..
                } => {
                    collect(then_branch, out);
                    if let Some(b) = else_branch {
                        collect(b, out);
                    }
                }
                Stmt::While { body, .. } => collect(body, out),
                _ => {}
            }
        }
    }
    collect(&f.body, &mut out);
    out
}

const FRESH_NAMES: [&str; 12] = [
    "acc", "tmp", "res", "idx", "cnt", "total", "v", "w", "u", "best", "cur", "step",
];

fn fresh_name(f: &FunctionDef, rng: &mut ChaCha8Rng) -> String {
    let taken = names(f);
    let free: Vec<&str> = FRESH_NAMES.iter().copied().filter(|n| !taken.contains(*n)).collect();
    match free.choose(rng) {
        Some(n) => n.to_string(),
        None => (0..).map(|k| format!("t{k}")).find(|n| !taken.contains(n)).expect("unbounded"),
    }
}

/// Renames every parameter and local to a fresh name.
pub fn rename_all(f: &mut FunctionDef, rng: &mut ChaCha8Rng) {
    let old: Vec<String> = names(f).into_iter().collect();
    let mut pool: Vec<&str> = FRESH_NAMES
        .iter()
        .copied()
        .filter(|n| !old.iter().any(|o| o == n))
        .collect();
    pool.shuffle(rng);
    if pool.len() < old.len() {
        return;
    }
    let pairs: Vec<(String, String)> = old
        .iter()
        .zip(pool)
        .map(|(o, n)| (o.clone(), n.to_string()))
        .collect();
    let map = |n: &str| pairs.iter().find(|(o, _)| o == n).map(|(_, m)| m.clone());
    for p in &mut f.params {
        if let Some(n) = map(&p.name) {
            p.name = n;
        }
    }
    rename_in_stmts(&mut f.body, &map);
}

fn is_two(e: &Expr) -> bool {
    matches!(e, Expr::Int(v) if *v == BigInt::from(2))
}

/// `e + e` and `2 * e` trade places; `e * 2` becomes `e + e`.
pub fn double_forms(f: &mut FunctionDef) -> bool {
    let mut changed = false;
    walk_stmts(&mut f.body, &mut |e| {
        if let Expr::Binary { op, lhs, rhs } = e {
            let replacement = match op {
                BinOp::Add if lhs == rhs => Some(Expr::binary(BinOp::Mul, Expr::int(2), (**lhs).clone())),
                BinOp::Mul if is_two(lhs) => Some(Expr::binary(BinOp::Add, (**rhs).clone(), (**rhs).clone())),
                BinOp::Mul if is_two(rhs) => Some(Expr::binary(BinOp::Add, (**lhs).clone(), (**lhs).clone())),
                _ => None,
            };
            if let Some(r) = replacement {
                *e = r;
                changed = true;
            }
        }
    });
    changed
}

fn mirrored(op: BinOp) -> Option<BinOp> {
    Some(match op {
        BinOp::Add => BinOp::Add,
        BinOp::Mul => BinOp::Mul,
        BinOp::Eq => BinOp::Eq,
        BinOp::Ne => BinOp::Ne,
        BinOp::Lt => BinOp::Gt,
        BinOp::Gt => BinOp::Lt,
        BinOp::Le => BinOp::Ge,
        BinOp::Ge => BinOp::Le,
        _ => return None,
    })
}

/// Swaps operands of commutative operators and mirrors comparisons, each
/// with probability one half. Skipped when both sides may raise, since
/// evaluation order decides which exception surfaces.
pub fn commute(f: &mut FunctionDef, rng: &mut ChaCha8Rng) -> bool {
    let mut changed = false;
    walk_stmts(&mut f.body, &mut |e| {
        if let Expr::Binary { op, lhs, rhs } = e {
            if let Some(m) = mirrored(*op) {
                if !(lhs.may_raise() && rhs.may_raise()) && rng.random_bool(0.5) {
                    std::mem::swap(lhs, rhs);
                    *op = m;
                    changed = true;
                }
            }
        }
    });
    changed
}

pub fn negate(cond: &Expr) -> Expr {
    match cond {
        Expr::Binary { op, lhs, rhs } => {
            let flipped = match op {
                BinOp::Lt => Some(BinOp::Ge),
                BinOp::Le => Some(BinOp::Gt),
                BinOp::Gt => Some(BinOp::Le),
                BinOp::Ge => Some(BinOp::Lt),
                BinOp::Eq => Some(BinOp::Ne),
                BinOp::Ne => Some(BinOp::Eq),
                _ => None,
            };
            match flipped {
                Some(op) => Expr::binary(op, (**lhs).clone(), (**rhs).clone()),
                None => Expr::unary(UnOp::Not, cond.clone()),
            }
        }
        Expr::Unary {
            op: UnOp::Not,
            operand,
        } => (**operand).clone(),
        other => Expr::unary(UnOp::Not, other.clone()),
    }
}

fn swap_ifs(stmts: &mut [Stmt], rng: &mut ChaCha8Rng, changed: &mut bool) {
    for s in stmts {
        match s {
            Stmt::If {
                cond,
                then_branch,
                else_branch,
            } => {
                swap_ifs(then_branch, rng, changed);
                if let Some(b) = else_branch {
                    swap_ifs(b, rng, changed);
                    if rng.random_bool(0.7) {
                        *cond = negate(cond);
                        std::mem::swap(then_branch, b);
                        *changed = true;
                    }
                }
            }
            Stmt::While { body, .. } => swap_ifs(body, rng, changed),
            _ => {}
        }
    }
}

/// `if (c) A else B` becomes `if (!c) B else A`.
pub fn reorder_branches(f: &mut FunctionDef, rng: &mut ChaCha8Rng) -> bool {
    let mut changed = false;
    swap_ifs(&mut f.body, rng, &mut changed);
    changed
}

fn temp_returns(stmts: &mut Vec<Stmt>, name: &str, changed: &mut bool) {
    let mut k = 0;
    while k < stmts.len() {
        match &mut stmts[k] {
            Stmt::Return(Some(v)) if !matches!(v, Expr::Var(_)) => {
                let value = v.clone();
                stmts[k] = Stmt::Assign {
                    target: name.to_string(),
                    value,
                };
                stmts.insert(k + 1, Stmt::Return(Some(Expr::var(name))));
                *changed = true;
                k += 1;
            }
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => {
                temp_returns(then_branch, name, changed);
                if let Some(b) = else_branch {
                    temp_returns(b, name, changed);
                }
            }
            Stmt::While { body, .. } => temp_returns(body, name, changed),
            _ => {}
        }
        k += 1;
    }
}

/// `return e;` becomes `r = e; return r;` for a fresh `r`. Only int
/// returns are rewritten so the temporary always has one type.
pub fn temp_return(f: &mut FunctionDef, rng: &mut ChaCha8Rng) -> bool {
    if f.ret != sep_core::minilang::Type::Int {
        return false;
    }
    let name = fresh_name(f, rng);
    let mut changed = false;
    temp_returns(&mut f.body, &name, &mut changed);
    changed
}

/// Applies a random non-empty mix of preserving rewrites.
pub fn variant(reference: &FunctionDef, rng: &mut ChaCha8Rng) -> FunctionDef {
    let mut f = reference.clone();
    let mut applied = false;
    if rng.random_bool(0.5) {
        applied |= double_forms(&mut f);
    }
    if rng.random_bool(0.6) {
        applied |= commute(&mut f, rng);
    }
    if rng.random_bool(0.6) {
        applied |= reorder_branches(&mut f, rng);
    }
    if rng.random_bool(0.4) {
        applied |= temp_return(&mut f, rng);
    }
    if !applied || rng.random_bool(0.5) {
        rename_all(&mut f, rng);
    }
    f
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MutationKind {
    ComparisonSwap,
    ArithmeticSwap,
    ConstantOffByOne,
    LogicalSwap,
    DropBranch,
}

impl MutationKind {
    pub fn name(self) -> &'static str {
        match self {
            MutationKind::ComparisonSwap => "comparison_swap",
            MutationKind::ArithmeticSwap => "arithmetic_swap",
            MutationKind::ConstantOffByOne => "constant_off_by_one",
            MutationKind::LogicalSwap => "logical_swap",
            MutationKind::DropBranch => "drop_branch",
        }
    }
}

fn expr_site_kind(e: &Expr) -> Option<MutationKind> {
    match e {
        Expr::Int(_) => Some(MutationKind::ConstantOffByOne),
        Expr::Binary { op, .. } if op.is_comparison() => Some(MutationKind::ComparisonSwap),
        Expr::Binary { op, .. } if op.is_logical() => Some(MutationKind::LogicalSwap),
        Expr::Binary {
            op: BinOp::Add | BinOp::Sub | BinOp::Mul,
            ..
        } => Some(MutationKind::ArithmeticSwap),
        _ => None,
    }
}

fn mutate_expr(e: &mut Expr, rng: &mut ChaCha8Rng) {
    match e {
        Expr::Int(v) => {
            *v += if rng.random_bool(0.5) { 1 } else { -1 };
        }
        Expr::Binary { op, .. } => {
            *op = match *op {
                BinOp::Lt => BinOp::Le,
                BinOp::Le => BinOp::Lt,
                BinOp::Gt => BinOp::Ge,
                BinOp::Ge => BinOp::Gt,
                BinOp::Eq => BinOp::Ne,
                BinOp::Ne => BinOp::Eq,
                BinOp::And => BinOp::Or,
                BinOp::Or => BinOp::And,
                BinOp::Add => BinOp::Sub,
                BinOp::Sub => BinOp::Add,
                BinOp::Mul => BinOp::Add,
                other => other,
            }
        }
        _ => unreachable!("only mutable sites are selected"),
    }
}

fn count_ifs(stmts: &[Stmt]) -> usize {
    stmts
        .iter()
        .map(|s| match s {
            Stmt::If {
                then_branch,
                else_branch,
                ..
            } => 1 + count_ifs(then_branch) + else_branch.as_deref().map_or(0, count_ifs),
            Stmt::While { body, .. } => count_ifs(body),
            _ => 0,
        })
        .sum()
}

/// Replaces the `target`-th `if` (preorder) by one of its branches.
fn drop_branch(stmts: &mut Vec<Stmt>, target: &mut usize, keep_then: bool) -> bool {
    let mut k = 0;
    while k < stmts.len() {
        if let Stmt::If {
            then_branch,
            else_branch,
            ..
        } = &mut stmts[k]
        {
            if *target == 0 {
                let kept = if keep_then {
                    std::mem::take(then_branch)
                } else {
                    else_branch.take().unwrap_or_default()
                };
                stmts.splice(k..=k, kept);
                return true;
            }
            *target -= 1;
            if drop_branch(then_branch, target, keep_then) {
                return true;
            }
            if let Some(b) = else_branch {
                if drop_branch(b, target, keep_then) {
                    return true;
                }
            }
        } else if let Stmt::While { body, .. } = &mut stmts[k] {
            if drop_branch(body, target, keep_then) {
                return true;
            }
        }
        k += 1;
    }
    false
}

/// One random mutation. May produce an ill-formed program; callers
/// re-parse the printed result.
pub fn mutant(reference: &FunctionDef, rng: &mut ChaCha8Rng) -> (FunctionDef, MutationKind) {
    let mut f = reference.clone();
    let mut sites = 0usize;
    walk_stmts(&mut f.body, &mut |e| {
        if expr_site_kind(e).is_some() {
            sites += 1;
        }
    });
    let ifs = count_ifs(&f.body);
    let pick = rng.random_range(0..sites + ifs);
    if pick >= sites {
        let mut target = pick - sites;
        let keep_then = rng.random_bool(0.5);
        drop_branch(&mut f.body, &mut target, keep_then);
        return (f, MutationKind::DropBranch);
    }
    let mut seen = 0usize;
    let mut kind = None;
    walk_stmts(&mut f.body, &mut |e| {
        if let Some(k) = expr_site_kind(e) {
            if seen == pick {
                mutate_expr(e, rng);
                kind = Some(k);
            }
            seen += 1;
        }
    });
    (f, kind.expect("site index in range"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use sep_core::minilang::{parse, print_function, Value};

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn double_forms_round_trip() {
        let mut f = parse("fn f(x: int) -> int { return x + x; }").unwrap();
        assert!(double_forms(&mut f));
        assert_eq!(f, parse("fn f(x: int) -> int { return 2 * x; }").unwrap());
    }

    #[test]
    fn branch_reordering_negates() {
        let src = "fn f(x: int) -> int { if (x < 0) { return 0 - x; } else { return x; } }";
        let mut f = parse(src).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(0);
        while !reorder_branches(&mut f, &mut r) {}
        let expected = parse("fn f(x: int) -> int { if (x >= 0) { return x; } else { return 0 - x; } }");
        assert_eq!(f, expected.unwrap());
    }

    #[test]
    fn variants_preserve_behaviour() {
        let src = "fn f(n: int) -> int { s = 0; i = 0; while (i < n) { i = i + 1; if (i % 2 == 0) { s = s + i + i; } else { s = s - 1; } } return s * 2; }";
        let reference = parse(src).unwrap();
        let mut r = rng();
        for _ in 0..20 {
            let v = variant(&reference, &mut r);
            let printed = print_function(&v);
            let reparsed = parse(&printed).unwrap_or_else(|e| panic!("{e}\n{printed}"));
            for n in -2..12 {
                let args = [Value::int(n)];
                assert_eq!(
                    sep_core::minilang::interpret(&reparsed, &args, 10_000).unwrap(),
                    sep_core::minilang::interpret(&reference, &args, 10_000).unwrap(),
                    "{printed}"
                );
            }
        }
    }

    #[test]
    fn mutants_change_the_tree() {
        let reference =
            parse("fn f(x: int, y: int) -> int { if (x > y && x > 0) { return x - 1; } else { return y; } }").unwrap();
        let mut r = rng();
        for _ in 0..30 {
            let (m, _) = mutant(&reference, &mut r);
            assert_ne!(m, reference);
        }
    }
}
