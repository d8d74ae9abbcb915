//! Expression trees for surface immersions, with a parser and printer.
//!
//! Grammar (whitespace between tokens is ignored):
//!
//! ```text
//! immersion := '(' expr ',' expr ',' expr ')'
//! expr      := term  (('+' | '-') term)*
//! term      := power (('*' | '/') power)*
//! power     := unary ('^' ['-'] integer)?
//! unary     := '-' unary | primary
//! primary   := number | 's' | 't' | 'pi' | ident
//!            | func '(' expr ')' | '(' expr ')'
//! func      := 'sin' | 'cos' | 'sinh' | 'cosh' | 'exp' | 'ln' | 'sqrt'
//! number    := digits ['.' digits] [('e' | 'E') ['+' | '-'] digits]
//! ident     := [A-Za-z_][A-Za-z0-9_]*        (a named parameter)
//! ```
//!
//! Unary minus binds tighter than `^`, so `-x^2` is `(-x)^2`. Exponents are
//! integer literals; use `exp(y*ln(x))` for anything else.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Var {
    S,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Sinh,
    Cosh,
    Exp,
    Ln,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    Var(Var),
    Param(String),
    Neg(Arc<Expr>),
    Binary(BinOp, Arc<Expr>, Arc<Expr>),
    Pow(Arc<Expr>, i32),
    Call(Func, Arc<Expr>),
}

impl Expr {
    fn collect_params<'a>(&'a self, out: &mut BTreeSet<&'a str>) {
        match self {
            Expr::Const(_) | Expr::Var(_) => {}
            Expr::Param(p) => {
                out.insert(p);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Binary(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
        }
    }

    fn collect_vars(&self, out: &mut BTreeSet<Var>) {
        match self {
            Expr::Const(_) | Expr::Param(_) => {}
            Expr::Var(v) => {
                out.insert(*v);
            }
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call(_, a) => a.collect_vars(out),
            Expr::Binary(_, a, b) => {
                a.collect_vars(out);
                b.collect_vars(out);
            }
        }
    }
}

impl fmt::Display for Expr {
    /// Fully parenthesized output; re-parsing yields the identical tree.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c:?}"),
            Expr::Var(Var::S) => f.write_str("s"),
            Expr::Var(Var::T) => f.write_str("t"),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Pow(a, n) => write!(f, "({a}^{n})"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

/// Three component expressions of an immersion `(s, t) ↦ x(s, t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImmersionExpr {
    pub components: [Arc<Expr>; 3],
}

impl ImmersionExpr {
    pub fn parameters(&self) -> BTreeSet<&str> {
        let mut out = BTreeSet::new();
        for c in &self.components {
            c.collect_params(&mut out);
        }
        out
    }

    pub fn variables(&self) -> BTreeSet<Var> {
        let mut out = BTreeSet::new();
        for c in &self.components {
            c.collect_vars(&mut out);
        }
        out
    }

    /// Fails with `UnboundName` for the first parameter missing from `params`.
    pub fn check_bound(&self, params: &BTreeMap<String, f64>) -> Result<(), ExprError> {
        match self
            .parameters()
            .into_iter()
            .find(|p| !params.contains_key(*p))
        {
            Some(name) => Err(ExprError::UnboundName {
                name: name.to_string(),
            }),
            None => Ok(()),
        }
    }
}

impl fmt::Display for ImmersionExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [a, b, c] = &self.components;
        write!(f, "({a}, {b}, {c})")
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("parse error at byte {offset}: expected {}, found {found}", .expected.join(" or "))]
    Parse {
        offset: usize,
        expected: Vec<String>,
        found: String,
    },
    #[error("UnboundName: '{name}' has no value")]
    UnboundName { name: String },
}

pub fn parse_immersion(text: &str) -> Result<ImmersionExpr, ExprError> {
    let mut p = Parser::new(text);
    p.expect(Tok::LParen, &["'('"])?;
    let mut comps = Vec::with_capacity(3);
    loop {
        comps.push(p.expr()?);
        match p.peek()?.1 {
            Tok::Comma if comps.len() < 3 => {
                p.bump()?;
            }
            Tok::RParen if comps.len() == 3 => {
                p.bump()?;
                break;
            }
            _ => {
                let want: &[&str] = if comps.len() < 3 { &["','"] } else { &["')'"] };
                // the tuple-level view: another component or the closing paren
                let want: &[&str] = if comps.len() == 2 {
                    &["','", "')'"]
                } else {
                    want
                };
                return Err(p.error(want));
            }
        }
    }
    p.expect(Tok::Eof, &["end of input"])?;
    let [a, b, c]: [Arc<Expr>; 3] = comps.try_into().expect("three components");
    Ok(ImmersionExpr {
        components: [a, b, c],
    })
}

/// Parse a single scalar expression (used by tests and the config loader).
pub fn parse_expr(text: &str) -> Result<Arc<Expr>, ExprError> {
    let mut p = Parser::new(text);
    let e = p.expr()?;
    p.expect(Tok::Eof, &["end of input"])?;
    Ok(e)
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Plus => "'+'".into(),
            Tok::Minus => "'-'".into(),
            Tok::Star => "'*'".into(),
            Tok::Slash => "'/'".into(),
            Tok::Caret => "'^'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::Comma => "','".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
    peeked: Option<(usize, Tok)>,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Self {
            src,
            pos: 0,
            peeked: None,
        }
    }

    fn lex(&mut self) -> Result<(usize, Tok), ExprError> {
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        let start = self.pos;
        let Some(&b) = bytes.get(start) else {
            return Ok((start, Tok::Eof));
        };
        let single = match b {
            b'+' => Some(Tok::Plus),
            b'-' => Some(Tok::Minus),
            b'*' => Some(Tok::Star),
            b'/' => Some(Tok::Slash),
            b'^' => Some(Tok::Caret),
            b'(' => Some(Tok::LParen),
            b')' => Some(Tok::RParen),
            b',' => Some(Tok::Comma),
            _ => None,
        };
        if let Some(tok) = single {
            self.pos += 1;
            return Ok((start, tok));
        }
        if b.is_ascii_digit() || b == b'.' {
            let mut end = start;
            let digits = |end: &mut usize| {
                while *end < bytes.len() && bytes[*end].is_ascii_digit() {
                    *end += 1;
                }
            };
            digits(&mut end);
            if end < bytes.len() && bytes[end] == b'.' {
                end += 1;
                digits(&mut end);
            }
            if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
                let mut k = end + 1;
                if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                    k += 1;
                }
                if k < bytes.len() && bytes[k].is_ascii_digit() {
                    end = k;
                    digits(&mut end);
                }
            }
            let text = &self.src[start..end];
            return match text.parse::<f64>() {
                Ok(v) => {
                    self.pos = end;
                    Ok((start, Tok::Num(v)))
                }
                Err(_) => Err(ExprError::Parse {
                    offset: start,
                    expected: vec!["number".into()],
                    found: format!("'{text}'"),
                }),
            };
        }
        if b.is_ascii_alphabetic() || b == b'_' {
            let mut end = start;
            while end < bytes.len() && (bytes[end].is_ascii_alphanumeric() || bytes[end] == b'_') {
                end += 1;
            }
            self.pos = end;
            return Ok((start, Tok::Ident(self.src[start..end].to_string())));
        }
        let ch = self.src[start..].chars().next().unwrap_or('?');
        Err(ExprError::Parse {
            offset: start,
            expected: vec!["expression".into()],
            found: format!("'{ch}'"),
        })
    }

    fn peek(&mut self) -> Result<&(usize, Tok), ExprError> {
        if self.peeked.is_none() {
            let t = self.lex()?;
            self.peeked = Some(t);
        }
        Ok(self.peeked.as_ref().unwrap())
    }

    fn bump(&mut self) -> Result<(usize, Tok), ExprError> {
        self.peek()?;
        Ok(self.peeked.take().unwrap())
    }

    fn error(&mut self, expected: &[&str]) -> ExprError {
        match self.peek() {
            Ok((offset, tok)) => ExprError::Parse {
                offset: *offset,
                expected: expected.iter().map(|s| s.to_string()).collect(),
                found: tok.describe(),
            },
            Err(e) => e,
        }
    }

    fn expect(&mut self, tok: Tok, expected: &[&str]) -> Result<(), ExprError> {
        if self.peek()?.1 == tok {
            self.bump()?;
            Ok(())
        } else {
            Err(self.error(expected))
        }
    }

    fn expr(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek()?.1 {
                Tok::Plus => BinOp::Add,
                Tok::Minus => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.term()?;
            lhs = Arc::new(Expr::Binary(op, lhs, rhs));
        }
    }

    fn term(&mut self) -> Result<Arc<Expr>, ExprError> {
        let mut lhs = self.power()?;
        loop {
            let op = match self.peek()?.1 {
                Tok::Star => BinOp::Mul,
                Tok::Slash => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump()?;
            let rhs = self.power()?;
            lhs = Arc::new(Expr::Binary(op, lhs, rhs));
        }
    }

    fn power(&mut self) -> Result<Arc<Expr>, ExprError> {
        let base = self.unary()?;
        if self.peek()?.1 != Tok::Caret {
            return Ok(base);
        }
        self.bump()?;
        let negative = if self.peek()?.1 == Tok::Minus {
            self.bump()?;
            true
        } else {
            false
        };
        let (offset, tok) = self.bump()?;
        let n = match tok {
            Tok::Num(v) if v.fract() == 0.0 && v <= i32::MAX as f64 => v as i32,
            other => {
                return Err(ExprError::Parse {
                    offset,
                    expected: vec!["integer exponent".into()],
                    found: other.describe(),
                })
            }
        };
        Ok(Arc::new(Expr::Pow(base, if negative { -n } else { n })))
    }

    fn unary(&mut self) -> Result<Arc<Expr>, ExprError> {
        if self.peek()?.1 == Tok::Minus {
            self.bump()?;
            let inner = self.unary()?;
            return Ok(Arc::new(Expr::Neg(inner)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Arc<Expr>, ExprError> {
        const START: &[&str] = &["number", "identifier", "'('", "'-'"];
        let (offset, tok) = self.peek()?.clone();
        match tok {
            Tok::Num(v) => {
                self.bump()?;
                Ok(Arc::new(Expr::Const(v)))
            }
            Tok::LParen => {
                self.bump()?;
                let e = self.expr()?;
                self.expect(Tok::RParen, &["')'"])?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.bump()?;
                if let Some(func) = Func::from_name(&name) {
                    if self.peek()?.1 != Tok::LParen {
                        return Err(self.error(&["'('"]));
                    }
                    self.bump()?;
                    let arg = self.expr()?;
                    self.expect(Tok::RParen, &["')'"])?;
                    return Ok(Arc::new(Expr::Call(func, arg)));
                }
                Ok(Arc::new(match name.as_str() {
                    "s" => Expr::Var(Var::S),
                    "t" => Expr::Var(Var::T),
                    "pi" => Expr::Const(std::f64::consts::PI),
                    _ => Expr::Param(name),
                }))
            }
            other => Err(ExprError::Parse {
                offset,
                expected: START.iter().map(|s| s.to_string()).collect(),
                found: other.describe(),
            }),
        }
    }
}
