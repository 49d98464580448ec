//! Recursive-descent parser for MiniLang.
//!
//! Static checking happens during the parse so every diagnostic carries a
//! source position: identifiers must be parameters or definitely assigned
//! earlier on every path, expressions are typed, and a function with a
//! non-`unit` return type must return on every path.

use std::collections::{BTreeMap, HashMap};

use super::ast::{BinOp, Expr, FunctionDef, Param, Stmt, Type, UnOp};
use super::lexer::{tokenize, Tok, Token};
use super::{ParseError, ParseErrorKind};

/// Parses a source file holding exactly one function.
pub fn parse_function(src: &str) -> Result<FunctionDef, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser::new(tokens, Mode::Program);
    let func = p.function()?;
    if p.peek() == &Tok::Fn {
        let (line, col) = p.pos();
        p.advance();
        let kind = match p.peek() {
            Tok::Ident(name) if *name == func.name => ParseErrorKind::DuplicateFunction(name.clone()),
            _ => ParseErrorKind::MultipleFunctions,
        };
        return Err(ParseError::new(line, col, kind));
    }
    p.expect(Tok::Eof)?;
    Ok(func)
}

/// Parses a boolean constraint over `params`. Chained comparisons such as
/// `1 <= n <= 100` are accepted and expanded into a conjunction of binary
/// comparisons; array element access is rejected.
pub fn parse_constraint_expr(src: &str, params: &[Param]) -> Result<Expr, ParseError> {
    let tokens = tokenize(src)?;
    let mut p = Parser::new(tokens, Mode::Constraint);
    for param in params {
        p.params.insert(param.name.clone(), param.ty);
    }
    let (line, col) = p.pos();
    let (expr, ty) = p.expr()?;
    if ty != Type::Bool {
        return Err(ParseError::new(line, col, type_error(Type::Bool, ty)));
    }
    p.expect(Tok::Eof)?;
    Ok(expr)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Program,
    Constraint,
}

struct Parser {
    tokens: Vec<Token>,
    at: usize,
    mode: Mode,
    params: HashMap<String, Type>,
    /// Locals definitely assigned at the current point.
    defined: BTreeMap<String, Type>,
    /// Type fixed by the first assignment of every local seen so far.
    local_types: HashMap<String, Type>,
    ret: Type,
}

fn type_error(expected: Type, found: Type) -> ParseErrorKind {
    ParseErrorKind::Type(format!("expected {expected}, found {found}"))
}

impl Parser {
    fn new(tokens: Vec<Token>, mode: Mode) -> Self {
        Parser {
            tokens,
            at: 0,
            mode,
            params: HashMap::new(),
            defined: BTreeMap::new(),
            local_types: HashMap::new(),
            ret: Type::Unit,
        }
    }

    fn peek(&self) -> &Tok {
        &self.tokens[self.at].tok
    }

    fn pos(&self) -> (usize, usize) {
        let t = &self.tokens[self.at];
        (t.line, t.col)
    }

    fn advance(&mut self) -> Tok {
        let tok = self.tokens[self.at].tok.clone();
        if self.at + 1 < self.tokens.len() {
            self.at += 1;
        }
        tok
    }

    fn unexpected(&self, expected: &[&str]) -> ParseError {
        let (line, col) = self.pos();
        ParseError::new(
            line,
            col,
            ParseErrorKind::UnexpectedToken {
                found: self.peek().describe(),
                expected: expected.iter().map(|s| s.to_string()).collect(),
            },
        )
    }

    fn error_here(&self, kind: ParseErrorKind) -> ParseError {
        let (line, col) = self.pos();
        ParseError::new(line, col, kind)
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(&[&tok.describe()]))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(name) => {
                self.advance();
                Ok(name)
            }
            _ => Err(self.unexpected(&["identifier"])),
        }
    }

    fn ty(&mut self, allow_unit: bool) -> Result<Type, ParseError> {
        match self.peek() {
            Tok::IntTy => {
                self.advance();
                if *self.peek() == Tok::LBracket {
                    self.advance();
                    self.expect(Tok::RBracket)?;
                    Ok(Type::IntArray)
                } else {
                    Ok(Type::Int)
                }
            }
            Tok::BoolTy => {
                self.advance();
                Ok(Type::Bool)
            }
            Tok::UnitTy if allow_unit => {
                self.advance();
                Ok(Type::Unit)
            }
            _ if allow_unit => Err(self.unexpected(&["`int`", "`bool`", "`int[]`", "`unit`"])),
            _ => Err(self.unexpected(&["`int`", "`bool`", "`int[]`"])),
        }
    }

    fn function(&mut self) -> Result<FunctionDef, ParseError> {
        self.expect(Tok::Fn)?;
        let name = self.ident()?;
        self.expect(Tok::LParen)?;
        let mut params: Vec<Param> = Vec::new();
        if *self.peek() != Tok::RParen {
            loop {
                let (line, col) = self.pos();
                let pname = self.ident()?;
                self.expect(Tok::Colon)?;
                let ty = self.ty(false)?;
                if params.iter().any(|p| p.name == pname) {
                    return Err(ParseError::new(line, col, ParseErrorKind::DuplicateParam(pname)));
                }
                self.params.insert(pname.clone(), ty);
                params.push(Param { name: pname, ty });
                if *self.peek() == Tok::Comma {
                    self.advance();
                } else {
                    break;
                }
            }
        }
        self.expect(Tok::RParen)?;
        self.ret = if *self.peek() == Tok::Arrow {
            self.advance();
            self.ty(true)?
        } else {
            Type::Unit
        };
        if *self.peek() != Tok::LBrace {
            return Err(self.unexpected(&["`{`"]));
        }
        let (line, col) = self.pos();
        let (body, diverges) = self.block()?;
        if !diverges && self.ret != Type::Unit {
            return Err(ParseError::new(line, col, ParseErrorKind::MissingReturn(name)));
        }
        Ok(FunctionDef {
            name,
            params,
            ret: self.ret,
            body,
        })
    }

    /// `{ stmt* }`; also reports whether every path through it returns.
    fn block(&mut self) -> Result<(Vec<Stmt>, bool), ParseError> {
        self.expect(Tok::LBrace)?;
        let mut stmts = Vec::new();
        let mut diverges = false;
        while *self.peek() != Tok::RBrace {
            if *self.peek() == Tok::Eof {
                return Err(self.unexpected(&["`}`"]));
            }
            let (stmt, d) = self.stmt()?;
            stmts.push(stmt);
            diverges |= d;
        }
        self.advance();
        Ok((stmts, diverges))
    }

    /// A braced block or a single statement.
    fn body(&mut self) -> Result<(Vec<Stmt>, bool), ParseError> {
        if *self.peek() == Tok::LBrace {
            self.block()
        } else {
            let (stmt, d) = self.stmt()?;
            Ok((vec![stmt], d))
        }
    }

    fn stmt(&mut self) -> Result<(Stmt, bool), ParseError> {
        match self.peek().clone() {
            Tok::Return => {
                self.advance();
                if *self.peek() == Tok::Semi {
                    if self.ret != Type::Unit {
                        return Err(self.error_here(type_error(self.ret, Type::Unit)));
                    }
                    self.advance();
                    return Ok((Stmt::Return(None), true));
                }
                let value = self.typed_expr(self.ret)?;
                self.expect(Tok::Semi)?;
                Ok((Stmt::Return(Some(value)), true))
            }
            Tok::Assert => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.typed_expr(Type::Bool)?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Semi)?;
                Ok((Stmt::Assert(cond), false))
            }
            Tok::If => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.typed_expr(Type::Bool)?;
                self.expect(Tok::RParen)?;
                let before = self.defined.clone();
                let (then_branch, then_div) = self.body()?;
                let after_then = std::mem::replace(&mut self.defined, before);
                let (else_branch, else_div) = if *self.peek() == Tok::Else {
                    self.advance();
                    let (b, d) = if *self.peek() == Tok::If {
                        let (s, d) = self.stmt()?;
                        (vec![s], d)
                    } else {
                        self.body()?
                    };
                    (Some(b), d)
                } else {
                    (None, false)
                };
                let after_else = std::mem::take(&mut self.defined);
                self.defined = match (then_div, else_div) {
                    (true, _) => after_else,
                    (false, true) => after_then,
                    (false, false) => after_then
                        .into_iter()
                        .filter(|(k, _)| after_else.contains_key(k))
                        .collect(),
                };
                Ok((
                    Stmt::If {
                        cond,
                        then_branch,
                        else_branch,
                    },
                    then_div && else_div,
                ))
            }
            Tok::While => {
                self.advance();
                self.expect(Tok::LParen)?;
                let cond = self.typed_expr(Type::Bool)?;
                self.expect(Tok::RParen)?;
                let before = self.defined.clone();
                let (body, _) = self.body()?;
                self.defined = before;
                Ok((Stmt::While { cond, body }, false))
            }
            Tok::Ident(name) => {
                let (line, col) = self.pos();
                self.advance();
                if *self.peek() == Tok::LBracket {
                    if self.params.get(&name) != Some(&Type::IntArray) {
                        return Err(ParseError::new(
                            line,
                            col,
                            ParseErrorKind::Type(format!("`{name}` is not an int[] parameter")),
                        ));
                    }
                    self.advance();
                    let index = self.typed_expr(Type::Int)?;
                    self.expect(Tok::RBracket)?;
                    self.expect(Tok::Assign)?;
                    let value = self.typed_expr(Type::Int)?;
                    self.expect(Tok::Semi)?;
                    return Ok((
                        Stmt::Store {
                            array: name,
                            index,
                            value,
                        },
                        false,
                    ));
                }
                self.expect(Tok::Assign)?;
                let (vline, vcol) = self.pos();
                let (value, ty) = self.expr()?;
                if ty == Type::IntArray || ty == Type::Unit {
                    return Err(ParseError::new(
                        vline,
                        vcol,
                        ParseErrorKind::Type(format!("cannot assign a value of type {ty}")),
                    ));
                }
                let declared = self
                    .params
                    .get(&name)
                    .or_else(|| self.local_types.get(&name))
                    .copied();
                match declared {
                    Some(Type::IntArray) => {
                        return Err(ParseError::new(
                            line,
                            col,
                            ParseErrorKind::Type(format!("cannot reassign array `{name}`")),
                        ))
                    }
                    Some(expected) if expected != ty => {
                        return Err(ParseError::new(vline, vcol, type_error(expected, ty)))
                    }
                    Some(_) => {}
                    None => {
                        self.local_types.insert(name.clone(), ty);
                    }
                }
                if !self.params.contains_key(&name) {
                    self.defined.insert(name.clone(), ty);
                }
                self.expect(Tok::Semi)?;
                Ok((Stmt::Assign { target: name, value }, false))
            }
            _ => Err(self.unexpected(&[
                "identifier",
                "`if`",
                "`while`",
                "`return`",
                "`assert`",
            ])),
        }
    }

    fn typed_expr(&mut self, expected: Type) -> Result<Expr, ParseError> {
        let (line, col) = self.pos();
        let (e, ty) = self.expr()?;
        if ty != expected {
            return Err(ParseError::new(line, col, type_error(expected, ty)));
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<(Expr, Type), ParseError> {
        self.or_expr()
    }

    fn logical(
        &mut self,
        tok: Tok,
        op: BinOp,
        next: fn(&mut Self) -> Result<(Expr, Type), ParseError>,
    ) -> Result<(Expr, Type), ParseError> {
        let (line, col) = self.pos();
        let (mut lhs, lty) = next(self)?;
        if *self.peek() != tok {
            return Ok((lhs, lty));
        }
        if lty != Type::Bool {
            return Err(ParseError::new(line, col, type_error(Type::Bool, lty)));
        }
        while *self.peek() == tok {
            self.advance();
            let (rline, rcol) = self.pos();
            let (rhs, rty) = next(self)?;
            if rty != Type::Bool {
                return Err(ParseError::new(rline, rcol, type_error(Type::Bool, rty)));
            }
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok((lhs, Type::Bool))
    }

    fn or_expr(&mut self) -> Result<(Expr, Type), ParseError> {
        self.logical(Tok::OrOr, BinOp::Or, Self::and_expr)
    }

    fn and_expr(&mut self) -> Result<(Expr, Type), ParseError> {
        self.logical(Tok::AndAnd, BinOp::And, Self::cmp_expr)
    }

    fn cmp_op(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            _ => return None,
        })
    }

    fn cmp_expr(&mut self) -> Result<(Expr, Type), ParseError> {
        let (line, col) = self.pos();
        let first = self.add_expr()?;
        let mut operands = vec![(first, line, col)];
        let mut ops = Vec::new();
        while let Some(op) = self.cmp_op() {
            if !ops.is_empty() && self.mode == Mode::Program {
                return Err(self.error_here(ParseErrorKind::ChainedComparison));
            }
            self.advance();
            let (line, col) = self.pos();
            operands.push((self.add_expr()?, line, col));
            ops.push(op);
        }
        if ops.is_empty() {
            let ((e, ty), _, _) = operands.pop().expect("one operand");
            return Ok((e, ty));
        }
        let mut conj: Option<Expr> = None;
        for (k, op) in ops.iter().enumerate() {
            let ((l, lty), _, _) = &operands[k];
            let ((r, rty), rline, rcol) = &operands[k + 1];
            let ok = match op {
                BinOp::Eq | BinOp::Ne => lty == rty && matches!(lty, Type::Int | Type::Bool),
                _ => *lty == Type::Int && *rty == Type::Int,
            };
            if !ok {
                return Err(ParseError::new(
                    *rline,
                    *rcol,
                    ParseErrorKind::Type(format!(
                        "cannot apply `{}` to {lty} and {rty}",
                        op.symbol()
                    )),
                ));
            }
            let cmp = Expr::binary(*op, l.clone(), r.clone());
            conj = Some(match conj {
                None => cmp,
                Some(acc) => Expr::binary(BinOp::And, acc, cmp),
            });
        }
        Ok((conj.expect("at least one comparison"), Type::Bool))
    }

    fn arith(
        &mut self,
        ops: &[(Tok, BinOp)],
        next: fn(&mut Self) -> Result<(Expr, Type), ParseError>,
    ) -> Result<(Expr, Type), ParseError> {
        let (line, col) = self.pos();
        let (mut lhs, lty) = next(self)?;
        let mut checked = false;
        loop {
            let Some(op) = ops.iter().find(|(t, _)| t == self.peek()).map(|(_, op)| *op) else {
                break;
            };
            if !checked && lty != Type::Int {
                return Err(ParseError::new(line, col, type_error(Type::Int, lty)));
            }
            checked = true;
            self.advance();
            let (rline, rcol) = self.pos();
            let (rhs, rty) = next(self)?;
            if rty != Type::Int {
                return Err(ParseError::new(rline, rcol, type_error(Type::Int, rty)));
            }
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok((lhs, if checked { Type::Int } else { lty }))
    }

    fn add_expr(&mut self) -> Result<(Expr, Type), ParseError> {
        self.arith(
            &[(Tok::Plus, BinOp::Add), (Tok::Minus, BinOp::Sub)],
            Self::mul_expr,
        )
    }

    fn mul_expr(&mut self) -> Result<(Expr, Type), ParseError> {
        self.arith(
            &[
                (Tok::Star, BinOp::Mul),
                (Tok::Slash, BinOp::Div),
                (Tok::Percent, BinOp::Mod),
            ],
            Self::unary_expr,
        )
    }

    fn unary_expr(&mut self) -> Result<(Expr, Type), ParseError> {
        let (op, want) = match self.peek() {
            Tok::Minus => (UnOp::Neg, Type::Int),
            Tok::Bang => (UnOp::Not, Type::Bool),
            _ => return self.primary(),
        };
        self.advance();
        let (line, col) = self.pos();
        let (operand, ty) = self.unary_expr()?;
        if ty != want {
            return Err(ParseError::new(line, col, type_error(want, ty)));
        }
        Ok((Expr::unary(op, operand), want))
    }

    fn lookup(&self, name: &str) -> Option<Type> {
        self.params
            .get(name)
            .or_else(|| self.defined.get(name))
            .copied()
    }

    fn primary(&mut self) -> Result<(Expr, Type), ParseError> {
        let (line, col) = self.pos();
        match self.peek().clone() {
            Tok::Int(v) => {
                self.advance();
                Ok((Expr::Int(v), Type::Int))
            }
            Tok::True => {
                self.advance();
                Ok((Expr::Bool(true), Type::Bool))
            }
            Tok::False => {
                self.advance();
                Ok((Expr::Bool(false), Type::Bool))
            }
            Tok::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Tok::Len => {
                self.advance();
                self.expect(Tok::LParen)?;
                let (aline, acol) = self.pos();
                let name = self.ident()?;
                match self.params.get(&name) {
                    Some(Type::IntArray) => {}
                    Some(_) => {
                        return Err(ParseError::new(
                            aline,
                            acol,
                            ParseErrorKind::Type(format!("`{name}` is not an int[] parameter")),
                        ))
                    }
                    None => {
                        return Err(ParseError::new(
                            aline,
                            acol,
                            ParseErrorKind::UnknownIdentifier(name),
                        ))
                    }
                }
                self.expect(Tok::RParen)?;
                Ok((Expr::Len(name), Type::Int))
            }
            Tok::Ident(name) => {
                self.advance();
                let Some(ty) = self.lookup(&name) else {
                    return Err(ParseError::new(
                        line,
                        col,
                        ParseErrorKind::UnknownIdentifier(name),
                    ));
                };
                if *self.peek() != Tok::LBracket {
                    return Ok((Expr::Var(name), ty));
                }
                if self.mode == Mode::Constraint {
                    return Err(self.error_here(ParseErrorKind::IndexInConstraint(name)));
                }
                if ty != Type::IntArray {
                    return Err(ParseError::new(
                        line,
                        col,
                        ParseErrorKind::Type(format!("`{name}` is not an int[] parameter")),
                    ));
                }
                self.advance();
                let index = self.typed_expr(Type::Int)?;
                self.expect(Tok::RBracket)?;
                Ok((
                    Expr::Index {
                        array: name,
                        index: Box::new(index),
                    },
                    Type::Int,
                ))
            }
            _ => Err(self.unexpected(&[
                "identifier",
                "integer literal",
                "`(`",
                "`true`",
                "`false`",
                "`len`",
                "`-`",
                "`!`",
            ])),
        }
    }
}
