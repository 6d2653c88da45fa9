//! Arithmetic expressions over named random variables.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , unary | power ;
//! power   = primary , [ "^" , unary ] ;
//! primary = number | ident | func , "(" , expr , ")" | "(" , expr , ")" ;
//! func    = "exp" | "log" | "abs" | "neg" | "square" ;
//! number  = digits , [ "." , [ digits ] ] , [ exponent ]
//!         | "." , digits , [ exponent ] ;
//! exponent = ( "e" | "E" ) , [ "+" | "-" ] , digits ;
//! ident   = ( letter | "_" ) , { letter | digit | "_" } ;
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-X^2`
//! is `-(X^2)`. A minus directly in front of a number literal that is not
//! raised to a power is read as a negative constant. Function names are
//! reserved and cannot be used as variables.
//!
//! Every occurrence of a variable is an independent copy: `X*X` is the
//! product of two independent draws, not the square of one.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use thiserror::Error as ThisError;

use crate::embedding::WeightedExpansion;
use crate::error::Error;
use crate::kernels::{median_heuristic, KernelSpec};
use crate::propagate::{apply_binary, apply_nary, builtins, PointFunction};
use crate::reduce::{reduce_random, Ridge};
use crate::seeding::derive_seed_path;

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum DslError {
    #[error("unexpected character `{character}` at offset {position}")]
    UnexpectedCharacter { position: usize, character: char },
    #[error("unexpected token `{lexeme}` at offset {position}")]
    UnexpectedToken { position: usize, lexeme: String },
    #[error("unbalanced parenthesis at offset {position}")]
    UnbalancedParen { position: usize },
    #[error("expression ended early")]
    UnexpectedEnd,
    #[error("empty expression")]
    EmptyExpression,
    #[error("invalid number literal `{0}`")]
    InvalidNumber(String),
    #[error("unbound variable `{0}`")]
    UnboundVariable(String),
    #[error("evaluating `{expression}` at node {path}: {source}")]
    Eval {
        path: String,
        expression: String,
        source: Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Number,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    FuncName,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub lexeme: String,
    /// Byte offset in the source text.
    pub position: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Neg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinaryOp {
    pub fn symbol(self) -> char {
        match self {
            BinaryOp::Add => '+',
            BinaryOp::Sub => '-',
            BinaryOp::Mul => '*',
            BinaryOp::Div => '/',
            BinaryOp::Pow => '^',
        }
    }

    pub fn function(self) -> PointFunction {
        match self {
            BinaryOp::Add => builtins::add(),
            BinaryOp::Sub => builtins::sub(),
            BinaryOp::Mul => builtins::mul(),
            BinaryOp::Div => builtins::div(),
            BinaryOp::Pow => builtins::pow(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Builtin {
    Exp,
    Log,
    Abs,
    Neg,
    Square,
}

impl Builtin {
    pub const ALL: [Builtin; 5] = [
        Builtin::Exp,
        Builtin::Log,
        Builtin::Abs,
        Builtin::Neg,
        Builtin::Square,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Builtin::Exp => "exp",
            Builtin::Log => "log",
            Builtin::Abs => "abs",
            Builtin::Neg => "neg",
            Builtin::Square => "square",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|b| b.name() == name)
    }

    pub fn function(self) -> PointFunction {
        match self {
            Builtin::Exp => builtins::exp(),
            Builtin::Log => builtins::log(),
            Builtin::Abs => builtins::abs(),
            Builtin::Neg => builtins::neg(),
            Builtin::Square => builtins::square(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(String),
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Call(Builtin, Box<Expr>),
}

impl Expr {
    pub fn var(name: &str) -> Self {
        Expr::Var(name.to_string())
    }

    pub fn binary(op: BinaryOp, left: Expr, right: Expr) -> Self {
        Expr::Binary(op, Box::new(left), Box::new(right))
    }

    pub fn neg(inner: Expr) -> Self {
        Expr::Unary(UnaryOp::Neg, Box::new(inner))
    }

    pub fn call(f: Builtin, inner: Expr) -> Self {
        Expr::Call(f, Box::new(inner))
    }

    /// Binding strength when printed: sums 1, products 2, negation 3,
    /// powers 4, atoms 5.
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => 1,
            Expr::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => 2,
            Expr::Unary(..) => 3,
            Expr::Const(c) if c.is_sign_negative() => 3,
            Expr::Binary(BinaryOp::Pow, ..) => 4,
            Expr::Const(_) | Expr::Var(_) | Expr::Call(..) => 5,
        }
    }

    fn write_at(&self, f: &mut fmt::Formatter<'_>, min_precedence: u8) -> fmt::Result {
        if self.precedence() < min_precedence {
            f.write_str("(")?;
            self.write_at(f, 0)?;
            return f.write_str(")");
        }
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(name) => f.write_str(name),
            Expr::Unary(UnaryOp::Neg, inner) => {
                f.write_str("-")?;
                match inner.as_ref() {
                    // `-2.0` would read back as a negative literal
                    Expr::Const(c) if !c.is_sign_negative() => write!(f, "({c:?})"),
                    other => other.write_at(f, 3),
                }
            }
            Expr::Binary(op, left, right) => {
                let (left_min, right_min) = match op {
                    BinaryOp::Add | BinaryOp::Sub => (1, 2),
                    BinaryOp::Mul | BinaryOp::Div => (2, 3),
                    BinaryOp::Pow => (5, 3),
                };
                left.write_at(f, left_min)?;
                write!(f, " {} ", op.symbol())?;
                right.write_at(f, right_min)
            }
            Expr::Call(func, inner) => {
                write!(f, "{}(", func.name())?;
                inner.write_at(f, 0)?;
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_at(f, 0)
    }
}

impl FromStr for Expr {
    type Err = DslError;

    fn from_str(text: &str) -> Result<Self, DslError> {
        parse(&tokenize(text)?)
    }
}

pub fn tokenize(text: &str) -> Result<Vec<Token>, DslError> {
    let bytes = text.as_bytes();
    let mut tokens = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let c = bytes[pos];
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        let single = match c {
            b'+' => Some(TokenKind::Plus),
            b'-' => Some(TokenKind::Minus),
            b'*' => Some(TokenKind::Star),
            b'/' => Some(TokenKind::Slash),
            b'^' => Some(TokenKind::Caret),
            b'(' => Some(TokenKind::LParen),
            b')' => Some(TokenKind::RParen),
            b',' => Some(TokenKind::Comma),
            _ => None,
        };
        let start = pos;
        let kind = if let Some(kind) = single {
            pos += 1;
            kind
        } else if c.is_ascii_digit()
            || (c == b'.' && bytes.get(pos + 1).is_some_and(u8::is_ascii_digit))
        {
            pos = scan_number(bytes, pos);
            TokenKind::Number
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            if Builtin::from_name(&text[start..pos]).is_some() {
                TokenKind::FuncName
            } else {
                TokenKind::Ident
            }
        } else {
            return Err(DslError::UnexpectedCharacter {
                position: pos,
                character: text[pos..].chars().next().expect("in bounds"),
            });
        };
        tokens.push(Token {
            kind,
            lexeme: text[start..pos].to_string(),
            position: start,
        });
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut pos: usize) -> usize {
    let digits = |mut p: usize| {
        while p < bytes.len() && bytes[p].is_ascii_digit() {
            p += 1;
        }
        p
    };
    pos = digits(pos);
    if bytes.get(pos) == Some(&b'.') {
        pos = digits(pos + 1);
    }
    if matches!(bytes.get(pos), Some(b'e' | b'E')) {
        let mut p = pos + 1;
        if matches!(bytes.get(p), Some(b'+' | b'-')) {
            p += 1;
        }
        if bytes.get(p).is_some_and(u8::is_ascii_digit) {
            pos = digits(p);
        }
    }
    pos
}

pub fn parse(tokens: &[Token]) -> Result<Expr, DslError> {
    if tokens.is_empty() {
        return Err(DslError::EmptyExpression);
    }
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    match parser.peek() {
        None => Ok(expr),
        Some(t) if t.kind == TokenKind::RParen => Err(DslError::UnbalancedParen {
            position: t.position,
        }),
        Some(t) => Err(unexpected(t)),
    }
}

fn unexpected(t: &Token) -> DslError {
    DslError::UnexpectedToken {
        position: t.position,
        lexeme: t.lexeme.clone(),
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&'a Token> {
        self.tokens.get(self.pos)
    }

    fn peek_kind(&self, offset: usize) -> Option<TokenKind> {
        self.tokens.get(self.pos + offset).map(|t| t.kind)
    }

    fn next(&mut self) -> Result<&'a Token, DslError> {
        let t = self.peek().ok_or(DslError::UnexpectedEnd)?;
        self.pos += 1;
        Ok(t)
    }

    fn expr(&mut self) -> Result<Expr, DslError> {
        let mut left = self.term()?;
        while let Some(op) = match self.peek_kind(0) {
            Some(TokenKind::Plus) => Some(BinaryOp::Add),
            Some(TokenKind::Minus) => Some(BinaryOp::Sub),
            _ => None,
        } {
            self.pos += 1;
            left = Expr::binary(op, left, self.term()?);
        }
        Ok(left)
    }

    fn term(&mut self) -> Result<Expr, DslError> {
        let mut left = self.unary()?;
        while let Some(op) = match self.peek_kind(0) {
            Some(TokenKind::Star) => Some(BinaryOp::Mul),
            Some(TokenKind::Slash) => Some(BinaryOp::Div),
            _ => None,
        } {
            self.pos += 1;
            left = Expr::binary(op, left, self.unary()?);
        }
        Ok(left)
    }

    fn unary(&mut self) -> Result<Expr, DslError> {
        if self.peek_kind(0) != Some(TokenKind::Minus) {
            return self.power();
        }
        self.pos += 1;
        if self.peek_kind(0) == Some(TokenKind::Number)
            && self.peek_kind(1) != Some(TokenKind::Caret)
        {
            let value = number_value(self.next()?)?;
            return Ok(Expr::Const(-value));
        }
        Ok(Expr::neg(self.unary()?))
    }

    fn power(&mut self) -> Result<Expr, DslError> {
        let base = self.primary()?;
        if self.peek_kind(0) == Some(TokenKind::Caret) {
            self.pos += 1;
            return Ok(Expr::binary(BinaryOp::Pow, base, self.unary()?));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, DslError> {
        let t = self.next()?;
        match t.kind {
            TokenKind::Number => Ok(Expr::Const(number_value(t)?)),
            TokenKind::Ident => Ok(Expr::Var(t.lexeme.clone())),
            TokenKind::FuncName => {
                let func = Builtin::from_name(&t.lexeme).expect("lexer only emits known names");
                let open = self.next()?;
                if open.kind != TokenKind::LParen {
                    return Err(unexpected(open));
                }
                let inner = self.parenthesized(open)?;
                Ok(Expr::call(func, inner))
            }
            TokenKind::LParen => self.parenthesized(t),
            TokenKind::RParen => Err(DslError::UnbalancedParen {
                position: t.position,
            }),
            _ => Err(unexpected(t)),
        }
    }

    fn parenthesized(&mut self, open: &Token) -> Result<Expr, DslError> {
        let inner = self.expr()?;
        match self.peek() {
            Some(t) if t.kind == TokenKind::RParen => {
                self.pos += 1;
                Ok(inner)
            }
            Some(t) => Err(unexpected(t)),
            None => Err(DslError::UnbalancedParen {
                position: open.position,
            }),
        }
    }
}

fn number_value(t: &Token) -> Result<f64, DslError> {
    t.lexeme
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| DslError::InvalidNumber(t.lexeme.clone()))
}

/// Output kernel of every intermediate result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OutputKernel {
    Fixed(KernelSpec),
    /// Gaussian with median-heuristic bandwidth on the intermediate's own
    /// points; bandwidth 1 when the points admit no distinct pair.
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPolicy {
    /// Largest expansion a binary node may return; `None` disables compression.
    pub budget: Option<usize>,
    pub output_kernel: OutputKernel,
    pub ridge: Ridge,
    pub seed: u64,
}

impl Default for EvalPolicy {
    fn default() -> Self {
        Self {
            budget: Some(100),
            output_kernel: OutputKernel::Median,
            ridge: Ridge::Default,
            seed: 0,
        }
    }
}

pub type Environment = BTreeMap<String, WeightedExpansion>;

/// Evaluate bottom-up by propagating expansions through each node.
pub fn evaluate(
    expr: &Expr,
    env: &Environment,
    policy: &EvalPolicy,
) -> Result<WeightedExpansion, DslError> {
    let mut path = Vec::new();
    eval_node(expr, env, policy, &mut path)
}

fn eval_node(
    expr: &Expr,
    env: &Environment,
    policy: &EvalPolicy,
    path: &mut Vec<usize>,
) -> Result<WeightedExpansion, DslError> {
    let fail = |path: &[usize], source: Error| DslError::Eval {
        path: path_label(path),
        expression: expr.to_string(),
        source,
    };
    match expr {
        Expr::Var(name) => env
            .get(name)
            .cloned()
            .ok_or_else(|| DslError::UnboundVariable(name.clone())),
        Expr::Const(c) => {
            let spec = match policy.output_kernel {
                OutputKernel::Fixed(spec) => spec,
                OutputKernel::Median => KernelSpec::Gaussian { sigma: 1.0 },
            };
            WeightedExpansion::point_mass(&[*c], spec).map_err(|e| fail(path, e))
        }
        Expr::Unary(UnaryOp::Neg, inner) => {
            let value = eval_child(inner, env, policy, path, 0)?;
            apply_unary(&value, &builtins::neg(), policy).map_err(|e| fail(path, e))
        }
        Expr::Call(func, inner) => {
            let value = eval_child(inner, env, policy, path, 0)?;
            apply_unary(&value, &func.function(), policy).map_err(|e| fail(path, e))
        }
        Expr::Binary(op, left, right) => {
            let a = eval_child(left, env, policy, path, 0)?;
            let b = eval_child(right, env, policy, path, 1)?;
            let seed = derive_seed_path(policy.seed, path);
            combine(&a, &b, &op.function(), policy, seed).map_err(|e| fail(path, e))
        }
    }
}

fn eval_child(
    expr: &Expr,
    env: &Environment,
    policy: &EvalPolicy,
    path: &mut Vec<usize>,
    index: usize,
) -> Result<WeightedExpansion, DslError> {
    path.push(index);
    let out = eval_node(expr, env, policy, path);
    path.pop();
    out
}

fn path_label(path: &[usize]) -> String {
    if path.is_empty() {
        return "root".to_string();
    }
    let steps: Vec<String> = path.iter().map(|s| s.to_string()).collect();
    format!("root.{}", steps.join("."))
}

fn output_spec(value: &WeightedExpansion, policy: &EvalPolicy) -> crate::Result<KernelSpec> {
    match policy.output_kernel {
        OutputKernel::Fixed(spec) => Ok(spec),
        OutputKernel::Median => match median_heuristic(value.points()) {
            Ok(sigma) => KernelSpec::gaussian(sigma),
            Err(Error::NoDistinctPairs) => KernelSpec::gaussian(1.0),
            Err(e) => Err(e),
        },
    }
}

fn apply_unary(
    value: &WeightedExpansion,
    f: &PointFunction,
    policy: &EvalPolicy,
) -> crate::Result<WeightedExpansion> {
    let out = apply_nary(&[value], f, *value.spec())?;
    let spec = output_spec(&out, policy)?;
    out.with_spec(spec)
}

fn combine(
    a: &WeightedExpansion,
    b: &WeightedExpansion,
    f: &PointFunction,
    policy: &EvalPolicy,
    seed: u64,
) -> crate::Result<WeightedExpansion> {
    let grid = apply_binary(a, b, f, *a.spec())?;
    let spec = output_spec(&grid, policy)?;
    let grid = grid.with_spec(spec)?;
    match policy.budget {
        Some(budget) if grid.len() > budget => {
            Ok(reduce_random(&grid, budget, policy.ridge, seed)?.reduced)
        }
        _ => Ok(grid),
    }
}
