//! Scalar expression language used by problem files and the built-in catalog.
//!
//! The grammar is conventional infix:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | name '(' expr ')' | '(' expr ')'
//! ```
//!
//! so `^` binds tighter than unary minus (`-x^2` is `-(x^2)`) and associates
//! to the right. There is no implicit multiplication. Variables are resolved
//! against a caller-supplied list at parse time and stored by slot, which lets
//! hot loops evaluate without building a name map.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Largest integer exponent literal evaluated by repeated multiplication.
const MAX_INT_EXPONENT: f64 = 16.0;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    /// Byte offset into the source text.
    pub offset: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown function `{0}`")]
    UnknownFunction(String),
    #[error("function `{name}` takes 1 argument, got {got}")]
    Arity { name: String, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no binding for variable `{0}`")]
    MissingBinding(String),
    #[error("{message} in `{subexpr}`")]
    Domain { message: String, subexpr: String },
}

impl EvalError {
    fn domain(message: &str, at: &Expr) -> Self {
        EvalError::Domain {
            message: message.to_string(),
            subexpr: at.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
            BinOp::Pow => '^',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Tan,
    Sinh,
    Cosh,
    Tanh,
    Exp,
    Ln,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 10] = [
        Func::Sin,
        Func::Cos,
        Func::Tan,
        Func::Sinh,
        Func::Cosh,
        Func::Tanh,
        Func::Exp,
        Func::Ln,
        Func::Sqrt,
        Func::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Tan => "tan",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Tanh => "tanh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// Parsed expression tree. Immutable once built; evaluation is pure.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    /// `slot` indexes the variable list the expression was parsed against.
    Var {
        name: String,
        slot: usize,
    },
    Neg(Box<Expr>),
    Binary {
        op: BinOp,
        lhs: Box<Expr>,
        rhs: Box<Expr>,
    },
    Call {
        func: Func,
        arg: Box<Expr>,
    },
}

/// Parses `source`, resolving variables against `allowed_vars`.
pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    Expr::parse(source, allowed_vars)
}

impl Expr {
    pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            vars: allowed_vars,
        };
        if parser.peek().tok == Tok::End {
            return Err(ParseError {
                offset: 0,
                kind: ParseErrorKind::Syntax("empty expression".into()),
            });
        }
        let expr = parser.expr()?;
        let next = parser.peek();
        if next.tok != Tok::End {
            return Err(parser.unexpected(next));
        }
        Ok(expr)
    }

    /// Evaluates with a name-keyed binding map.
    pub fn eval(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        self.eval_in(&|name: &str, _slot: usize| {
            bindings
                .get(name)
                .copied()
                .ok_or_else(|| EvalError::MissingBinding(name.to_string()))
        })
    }

    /// Evaluates with values indexed by slot (the order of `allowed_vars` at
    /// parse time).
    pub fn eval_slots(&self, values: &[f64]) -> Result<f64, EvalError> {
        self.eval_in(&|name: &str, slot: usize| {
            values
                .get(slot)
                .copied()
                .ok_or_else(|| EvalError::MissingBinding(name.to_string()))
        })
    }

    pub fn eval_in<F>(&self, lookup: &F) -> Result<f64, EvalError>
    where
        F: Fn(&str, usize) -> Result<f64, EvalError>,
    {
        match self {
            Expr::Num(v) => Ok(*v),
            Expr::Var { name, slot } => lookup(name, *slot),
            Expr::Neg(inner) => Ok(-inner.eval_in(lookup)?),
            Expr::Binary { op, lhs, rhs } => {
                let a = lhs.eval_in(lookup)?;
                match op {
                    BinOp::Add => Ok(a + rhs.eval_in(lookup)?),
                    BinOp::Sub => Ok(a - rhs.eval_in(lookup)?),
                    BinOp::Mul => Ok(a * rhs.eval_in(lookup)?),
                    BinOp::Div => {
                        let b = rhs.eval_in(lookup)?;
                        if b == 0.0 {
                            return Err(EvalError::domain("division by zero", self));
                        }
                        Ok(a / b)
                    }
                    BinOp::Pow => {
                        if let Some(n) = rhs.small_integer() {
                            if n < 0 && a == 0.0 {
                                return Err(EvalError::domain("division by zero", self));
                            }
                            return Ok(powi(a, n));
                        }
                        let b = rhs.eval_in(lookup)?;
                        if a < 0.0 && b.fract() != 0.0 {
                            return Err(EvalError::domain(
                                "negative base with non-integer exponent",
                                self,
                            ));
                        }
                        if a == 0.0 && b < 0.0 {
                            return Err(EvalError::domain("division by zero", self));
                        }
                        Ok(a.powf(b))
                    }
                }
            }
            Expr::Call { func, arg } => {
                let v = arg.eval_in(lookup)?;
                Ok(match func {
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Tan => v.tan(),
                    Func::Sinh => v.sinh(),
                    Func::Cosh => v.cosh(),
                    Func::Tanh => v.tanh(),
                    Func::Exp => v.exp(),
                    Func::Ln => {
                        if v <= 0.0 {
                            return Err(EvalError::domain("logarithm of non-positive value", self));
                        }
                        v.ln()
                    }
                    Func::Sqrt => {
                        if v < 0.0 {
                            return Err(EvalError::domain("square root of negative value", self));
                        }
                        v.sqrt()
                    }
                    Func::Abs => v.abs(),
                })
            }
        }
    }

    /// Slots referenced anywhere in the tree, sorted and deduplicated.
    pub fn slots(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_slots(&mut out);
        out.sort_unstable();
        out.dedup();
        out
    }

    fn collect_slots(&self, out: &mut Vec<usize>) {
        match self {
            Expr::Num(_) => {}
            Expr::Var { slot, .. } => out.push(*slot),
            Expr::Neg(e) => e.collect_slots(out),
            Expr::Binary { lhs, rhs, .. } => {
                lhs.collect_slots(out);
                rhs.collect_slots(out);
            }
            Expr::Call { arg, .. } => arg.collect_slots(out),
        }
    }

    /// Exponent literal eligible for repeated multiplication.
    fn small_integer(&self) -> Option<i32> {
        let v = match self {
            Expr::Num(v) => *v,
            Expr::Neg(inner) => match **inner {
                Expr::Num(v) => -v,
                _ => return None,
            },
            _ => return None,
        };
        (v.fract() == 0.0 && v.abs() <= MAX_INT_EXPONENT).then_some(v as i32)
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary { op, .. } => op.precedence(),
            Expr::Neg(_) => 3,
            Expr::Num(v) if *v < 0.0 => 3,
            _ => 5,
        }
    }
}

fn powi(base: f64, exp: i32) -> f64 {
    let mut n = exp.unsigned_abs();
    let mut acc = 1.0;
    let mut sq = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= sq;
        }
        n >>= 1;
        if n > 0 {
            sq *= sq;
        }
    }
    if exp < 0 {
        1.0 / acc
    } else {
        acc
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, child: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({child})")
    } else {
        write!(f, "{child}")
    }
}

/// Prints with the minimum parentheses needed for `parse` to rebuild the
/// identical tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var { name, .. } => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, inner.precedence() < 3)
            }
            Expr::Binary { op, lhs, rhs } => {
                let p = op.precedence();
                let (left_parens, right_parens) = match op {
                    BinOp::Pow => (lhs.precedence() <= p, rhs.precedence() < 3),
                    _ => (lhs.precedence() < p, rhs.precedence() <= p),
                };
                write_child(f, lhs, left_parens)?;
                match op {
                    BinOp::Pow => write!(f, "{}", op.symbol())?,
                    _ => write!(f, " {} ", op.symbol())?,
                }
                write_child(f, rhs, right_parens)
            }
            Expr::Call { func, arg } => write!(f, "{}({arg})", func.name()),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    Comma,
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    offset: usize,
}

fn lex(src: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        let start = i;
        match c {
            b' ' | b'\t' | b'\r' | b'\n' => {
                i += 1;
                continue;
            }
            b'+' | b'-' | b'*' | b'/' | b'^' => {
                out.push(Token {
                    tok: Tok::Op(c as char),
                    offset: start,
                });
                i += 1;
            }
            b'(' => {
                out.push(Token {
                    tok: Tok::LParen,
                    offset: start,
                });
                i += 1;
            }
            b')' => {
                out.push(Token {
                    tok: Tok::RParen,
                    offset: start,
                });
                i += 1;
            }
            b',' => {
                out.push(Token {
                    tok: Tok::Comma,
                    offset: start,
                });
                i += 1;
            }
            b'0'..=b'9' | b'.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                let text = &src[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::Syntax(format!("malformed number `{text}`")),
                })?;
                out.push(Token {
                    tok: Tok::Num(value),
                    offset: start,
                });
            }
            c if c.is_ascii_alphabetic() || c == b'_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Token {
                    tok: Tok::Ident(src[start..i].to_string()),
                    offset: start,
                });
            }
            _ => {
                let ch = src[start..].chars().next().unwrap_or('?');
                return Err(ParseError {
                    offset: start,
                    kind: ParseErrorKind::Syntax(format!("unexpected character `{ch}`")),
                });
            }
        }
    }
    out.push(Token {
        tok: Tok::End,
        offset: src.len(),
    });
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a [&'a str],
}

impl Parser<'_> {
    fn peek(&self) -> Token {
        self.tokens[self.pos].clone()
    }

    fn bump(&mut self) -> Token {
        let t = self.peek();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, t: Token) -> ParseError {
        let what = match &t.tok {
            Tok::Num(v) => format!("unexpected number `{v}`"),
            Tok::Ident(s) => format!("unexpected name `{s}`"),
            Tok::Op(c) => format!("unexpected operator `{c}`"),
            Tok::LParen => "unexpected `(`".into(),
            Tok::RParen => "unexpected `)`".into(),
            Tok::Comma => "unexpected `,`".into(),
            Tok::End => "unexpected end of input".into(),
        };
        ParseError {
            offset: t.offset,
            kind: ParseErrorKind::Syntax(what),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Binary {
                op,
                lhs: Box::new(lhs),
                rhs: Box::new(rhs),
            };
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek().tok == Tok::Op('-') {
            self.bump();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek().tok == Tok::Op('^') {
            self.bump();
            let exponent = self.unary()?;
            return Ok(Expr::Binary {
                op: BinOp::Pow,
                lhs: Box::new(base),
                rhs: Box::new(exponent),
            });
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::LParen => {
                let inner = self.expr()?;
                let close = self.bump();
                if close.tok != Tok::RParen {
                    return Err(ParseError {
                        offset: close.offset,
                        kind: ParseErrorKind::Syntax("expected `)`".into()),
                    });
                }
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek().tok == Tok::LParen {
                    self.call(name, t.offset)
                } else {
                    match self.vars.iter().position(|v| *v == name) {
                        Some(slot) => Ok(Expr::Var { name, slot }),
                        None => Err(ParseError {
                            offset: t.offset,
                            kind: ParseErrorKind::UnknownVariable(name),
                        }),
                    }
                }
            }
            _ => Err(self.unexpected(t)),
        }
    }

    fn call(&mut self, name: String, offset: usize) -> Result<Expr, ParseError> {
        self.bump(); // `(`
        let mut args = Vec::new();
        if self.peek().tok != Tok::RParen {
            args.push(self.expr()?);
            while self.peek().tok == Tok::Comma {
                self.bump();
                args.push(self.expr()?);
            }
        }
        let close = self.bump();
        if close.tok != Tok::RParen {
            return Err(ParseError {
                offset: close.offset,
                kind: ParseErrorKind::Syntax("expected `)` after function argument".into()),
            });
        }
        let func = Func::from_name(&name).ok_or_else(|| ParseError {
            offset,
            kind: ParseErrorKind::UnknownFunction(name.clone()),
        })?;
        if args.len() != 1 {
            return Err(ParseError {
                offset,
                kind: ParseErrorKind::Arity {
                    name,
                    got: args.len(),
                },
            });
        }
        Ok(Expr::Call {
            func,
            arg: Box::new(args.pop().expect("one argument")),
        })
    }
}
