use std::collections::HashMap;
use std::hash::Hash;

use num_traits::Float;

use super::BaselineError;
use crate::minilang::lexer::{tokenize, Tok};
use crate::minilang::{Expr, Program, Stmt};

/// Square similarity matrix with entries in `[0, 1]`, unit diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix<T> {
    n: usize,
    values: Vec<T>,
}

impl<T: Float> SimilarityMatrix<T> {
    pub fn new(rows: Vec<Vec<T>>) -> Result<Self, BaselineError> {
        let n = rows.len();
        let mut values = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(BaselineError::Matrix(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            values.extend_from_slice(row);
        }
        let m = SimilarityMatrix { n, values };
        for i in 0..n {
            if m.get(i, i) != T::one() {
                return Err(BaselineError::Matrix(format!("diagonal entry {i} is not 1")));
            }
            for j in 0..n {
                let v = m.get(i, j);
                if !v.is_finite() || v < T::zero() || v > T::one() {
                    return Err(BaselineError::Matrix(format!("entry ({i}, {j}) is outside [0, 1]")));
                }
                if v != m.get(j, i) {
                    return Err(BaselineError::Matrix(format!("entry ({i}, {j}) is not symmetric")));
                }
            }
        }
        Ok(m)
    }

    /// Builds the matrix from a pairwise score on `0..n`; only `i < j` is
    /// evaluated.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut values = vec![T::one(); n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                values[i * n + j] = v;
                values[j * n + i] = v;
            }
        }
        SimilarityMatrix { n, values }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.values[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.values.chunks(self.n.max(1)).map(<[T]>::to_vec).take(self.n).collect()
    }
}

fn dice<K: Eq + Hash>(a: &HashMap<K, usize>, b: &HashMap<K, usize>) -> Option<(usize, usize)> {
    let total: usize = a.values().sum::<usize>() + b.values().sum::<usize>();
    if total == 0 {
        return None;
    }
    let shared: usize = a
        .iter()
        .map(|(k, &x)| b.get(k).map_or(0, |&y| x.min(y)))
        .sum();
    Some((2 * shared, total))
}

fn ngrams(tokens: &[Tok], n: usize) -> HashMap<Vec<String>, usize> {
    let words: Vec<String> = tokens.iter().map(Tok::to_string).collect();
    let mut bag = HashMap::new();
    for w in words.windows(n) {
        *bag.entry(w.to_vec()).or_insert(0) += 1;
    }
    bag
}

fn stmt_label(s: &Stmt, depth: usize) -> String {
    if depth == 0 {
        return "_".into();
    }
    let e = |x: &Expr| expr_label(x, depth - 1);
    let block = |b: &[Stmt]| {
        b.iter()
            .map(|s| stmt_label(s, depth - 1))
            .collect::<Vec<_>>()
            .join(",")
    };
    match s {
        Stmt::Assign { target, value } => format!("assign:{target}({})", e(value)),
        Stmt::Store {
            array,
            index,
            value,
        } => format!("store:{array}({},{})", e(index), e(value)),
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => format!(
            "if({},[{}],[{}])",
            e(cond),
            block(then_branch),
            else_branch.as_deref().map(block).unwrap_or_default()
        ),
        Stmt::While { cond, body } => format!("while({},[{}])", e(cond), block(body)),
        Stmt::Return(None) => "return".into(),
        Stmt::Return(Some(v)) => format!("return({})", e(v)),
        Stmt::Assert(v) => format!("assert({})", e(v)),
    }
}

fn expr_label(x: &Expr, depth: usize) -> String {
    if depth == 0 {
        return "_".into();
    }
    let e = |y: &Expr| expr_label(y, depth - 1);
    match x {
        Expr::Int(v) => format!("int:{v}"),
        Expr::Bool(b) => format!("bool:{b}"),
        Expr::Var(n) => format!("var:{n}"),
        Expr::Len(n) => format!("len:{n}"),
        Expr::Index { array, index } => format!("index:{array}({})", e(index)),
        Expr::Unary { op, operand } => format!("{op:?}({})", e(operand)),
        Expr::Binary { op, lhs, rhs } => format!("{}({},{})", op.symbol(), e(lhs), e(rhs)),
    }
}

const SUBTREE_DEPTH: usize = 3;

fn collect_stmt(s: &Stmt, bag: &mut HashMap<String, usize>) {
    *bag.entry(stmt_label(s, SUBTREE_DEPTH)).or_insert(0) += 1;
    match s {
        Stmt::Assign { value, .. } | Stmt::Return(Some(value)) | Stmt::Assert(value) => {
            collect_expr(value, bag)
        }
        Stmt::Store { index, value, .. } => {
            collect_expr(index, bag);
            collect_expr(value, bag);
        }
        Stmt::If {
            cond,
            then_branch,
            else_branch,
        } => {
            collect_expr(cond, bag);
            then_branch.iter().for_each(|s| collect_stmt(s, bag));
            if let Some(b) = else_branch {
                b.iter().for_each(|s| collect_stmt(s, bag));
            }
        }
        Stmt::While { cond, body } => {
            collect_expr(cond, bag);
            body.iter().for_each(|s| collect_stmt(s, bag));
        }
        Stmt::Return(None) => {}
    }
}

fn collect_expr(x: &Expr, bag: &mut HashMap<String, usize>) {
    *bag.entry(expr_label(x, SUBTREE_DEPTH)).or_insert(0) += 1;
    match x {
        Expr::Index { index, .. } => collect_expr(index, bag),
        Expr::Unary { operand, .. } => collect_expr(operand, bag),
        Expr::Binary { lhs, rhs, .. } => {
            collect_expr(lhs, bag);
            collect_expr(rhs, bag);
        }
        _ => {}
    }
}

/// Bag of every statement and expression subtree, cut at depth 3.
pub fn subtree_bag(p: &Program) -> HashMap<String, usize> {
    let mut bag = HashMap::new();
    p.ast.body.iter().for_each(|s| collect_stmt(s, &mut bag));
    bag
}

/// Bag of token 4-grams over the whole source.
pub fn token_ngrams(p: &Program) -> HashMap<Vec<String>, usize> {
    let mut tokens: Vec<Tok> = tokenize(&p.source)
        .map(|ts| ts.into_iter().map(|t| t.tok).collect())
        .unwrap_or_default();
    tokens.retain(|t| *t != Tok::Eof);
    ngrams(&tokens, 4)
}

/// Mean of the Dice overlap of token 4-grams and the Dice overlap of
/// depth-3 subtree bags. Empty bags on both sides count as full overlap.
pub fn token_similarity<T: Float>(a: &Program, b: &Program) -> T {
    let ratio = |r: Option<(usize, usize)>| match r {
        Some((num, den)) => T::from(num).unwrap() / T::from(den).unwrap(),
        None => T::one(),
    };
    let half = T::from(0.5).unwrap();
    let grams = ratio(dice(&token_ngrams(a), &token_ngrams(b)));
    let trees = ratio(dice(&subtree_bag(a), &subtree_bag(b)));
    half * grams + half * trees
}

pub fn similarity_matrix<T: Float>(pool: &[Program]) -> SimilarityMatrix<T> {
    SimilarityMatrix::from_fn(pool.len(), |i, j| token_similarity(&pool[i], &pool[j]))
}
