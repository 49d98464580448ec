//! Random well-formed programs over a fixed signature
//! `fn f(x: int, y: int, b: bool, a: int[]) -> int`.
#![allow(dead_code)]

use proptest::prelude::*;
use sep_core::minilang::{BinOp, Expr, FunctionDef, Param, Stmt, Type, UnOp};

pub const SIGNATURE: &str = "fn f(x: int, y: int, b: bool, a: int[]) -> int";

pub fn params() -> Vec<Param> {
    [("x", Type::Int), ("y", Type::Int), ("b", Type::Bool), ("a", Type::IntArray)]
        .into_iter()
        .map(|(name, ty)| Param {
            name: name.into(),
            ty,
        })
        .collect()
}

fn int_leaf() -> impl Strategy<Value = Expr> {
    prop_oneof![
        (-5i64..=5).prop_map(Expr::int),
        prop_oneof![Just("x"), Just("y"), Just("t")].prop_map(Expr::var),
        Just(Expr::Len("a".into())),
    ]
}

pub fn int_expr() -> impl Strategy<Value = Expr> {
    int_leaf().prop_recursive(3, 12, 2, |inner| {
        prop_oneof![
            3 => (
                prop_oneof![
                    Just(BinOp::Add),
                    Just(BinOp::Sub),
                    Just(BinOp::Mul),
                    Just(BinOp::Div),
                    Just(BinOp::Mod)
                ],
                inner.clone(),
                inner.clone()
            )
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            1 => inner.clone().prop_map(|e| Expr::unary(UnOp::Neg, e)),
            1 => inner.prop_map(|i| Expr::Index {
                array: "a".into(),
                index: Box::new(i),
            }),
        ]
    })
}

pub fn bool_expr() -> impl Strategy<Value = Expr> {
    let cmp = (
        prop_oneof![
            Just(BinOp::Eq),
            Just(BinOp::Ne),
            Just(BinOp::Lt),
            Just(BinOp::Le),
            Just(BinOp::Gt),
            Just(BinOp::Ge)
        ],
        int_expr(),
        int_expr(),
    )
        .prop_map(|(op, l, r)| Expr::binary(op, l, r));
    let leaf = prop_oneof![
        1 => any::<bool>().prop_map(Expr::Bool),
        1 => Just(Expr::var("b")),
        4 => cmp,
    ];
    leaf.prop_recursive(2, 6, 2, |inner| {
        prop_oneof![
            (prop_oneof![Just(BinOp::And), Just(BinOp::Or)], inner.clone(), inner.clone())
                .prop_map(|(op, l, r)| Expr::binary(op, l, r)),
            inner.prop_map(|e| Expr::unary(UnOp::Not, e)),
        ]
    })
}

fn simple_stmt() -> impl Strategy<Value = Stmt> {
    prop_oneof![
        3 => int_expr().prop_map(|value| Stmt::Assign {
            target: "t".into(),
            value,
        }),
        1 => (int_expr(), int_expr()).prop_map(|(index, value)| Stmt::Store {
            array: "a".into(),
            index,
            value,
        }),
        1 => bool_expr().prop_map(Stmt::Assert),
        1 => int_expr().prop_map(|e| Stmt::Return(Some(e))),
    ]
}

fn stmt(loops: bool) -> BoxedStrategy<Stmt> {
    simple_stmt()
        .prop_recursive(2, 10, 3, move |inner| {
            let block = prop::collection::vec(inner, 0..3);
            let branch = (bool_expr(), block.clone(), prop::option::of(block.clone())).prop_map(
                |(cond, then_branch, else_branch)| Stmt::If {
                    cond,
                    then_branch,
                    else_branch,
                },
            );
            if loops {
                prop_oneof![
                    2 => branch,
                    1 => (bool_expr(), block).prop_map(|(cond, body)| Stmt::While { cond, body }),
                ]
                .boxed()
            } else {
                branch.boxed()
            }
        })
        .boxed()
}

fn function(loops: bool) -> impl Strategy<Value = FunctionDef> {
    (int_expr(), prop::collection::vec(stmt(loops), 0..4), int_expr()).prop_map(|(init, mut body, ret)| {
        // `t` is read by the expression generator, so define it first.
        let init = strip_t(init);
        body.insert(
            0,
            Stmt::Assign {
                target: "t".into(),
                value: init,
            },
        );
        body.push(Stmt::Return(Some(ret)));
        FunctionDef {
            name: "f".into(),
            params: params(),
            ret: Type::Int,
            body,
        }
    })
}

/// Replaces reads of `t` by `x` so the expression can initialize `t`.
fn strip_t(e: Expr) -> Expr {
    match e {
        Expr::Var(n) if n == "t" => Expr::var("x"),
        Expr::Index { array, index } => Expr::Index {
            array,
            index: Box::new(strip_t(*index)),
        },
        Expr::Unary { op, operand } => Expr::unary(op, strip_t(*operand)),
        Expr::Binary { op, lhs, rhs } => Expr::binary(op, strip_t(*lhs), strip_t(*rhs)),
        other => other,
    }
}

pub fn program() -> impl Strategy<Value = FunctionDef> {
    function(true)
}

pub fn loop_free_program() -> impl Strategy<Value = FunctionDef> {
    function(false)
}
