//! A small arithmetic language for coefficient, boundary and direction fields.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?
//! atom   := number | name | name '(' expr (',' expr)* ')' | '(' expr ')' | '|x|'
//! ```
//!
//! Names: coordinates `x1 … xd` (also `x_1`), the constants `pi`, `e`,
//! `alpha`, `d`, `R`, and any user parameter. Functions: `sqrt`, `exp`, `ln`,
//! `abs`, `pos` (positive part), `pow`, `min`, `max`, and the benchmark
//! profiles `phi(k)` and `psi(k)`, whose argument must be a constant.

use std::collections::BTreeMap;
use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{norm_sq, ScalarField};

use super::benchmarks::{phi_from_norm_sq, PsiProfile};

/// Values available to expressions besides the coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ExprContext {
    pub dim: usize,
    pub alpha: f64,
    pub radius: f64,
    pub params: BTreeMap<String, f64>,
}

impl ExprContext {
    pub fn new(dim: usize, alpha: f64, radius: f64) -> Self {
        Self { dim, alpha, radius, params: BTreeMap::new() }
    }

    pub fn with_params(mut self, params: BTreeMap<String, f64>) -> Self {
        self.params = params;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Unary {
    Neg,
    Sqrt,
    Exp,
    Ln,
    Abs,
    Pos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Binary {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
    Min,
    Max,
}

#[derive(Clone)]
enum Node {
    Const(f64),
    Coord(usize),
    Norm,
    Unary(Unary, Box<Node>),
    Binary(Binary, Box<Node>, Box<Node>),
    Phi { exponent: f64 },
    Psi(Arc<PsiProfile>),
}

impl Node {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Node::Const(c) => *c,
            Node::Coord(i) => x[*i],
            Node::Norm => norm_sq(x).sqrt(),
            Node::Unary(op, a) => {
                let v = a.eval(x);
                match op {
                    Unary::Neg => -v,
                    Unary::Sqrt => v.sqrt(),
                    Unary::Exp => v.exp(),
                    Unary::Ln => v.ln(),
                    Unary::Abs => v.abs(),
                    Unary::Pos => v.max(0.0),
                }
            }
            Node::Binary(op, a, b) => {
                let (u, v) = (a.eval(x), b.eval(x));
                match op {
                    Binary::Add => u + v,
                    Binary::Sub => u - v,
                    Binary::Mul => u * v,
                    Binary::Div => u / v,
                    Binary::Pow => u.powf(v),
                    Binary::Min => u.min(v),
                    Binary::Max => u.max(v),
                }
            }
            Node::Phi { exponent } => phi_from_norm_sq(norm_sq(x), *exponent),
            Node::Psi(profile) => profile.value_at_norm_sq(norm_sq(x)),
        }
    }

    fn as_const(&self) -> Option<f64> {
        match self {
            Node::Const(c) => Some(*c),
            _ => None,
        }
    }
}

/// A compiled expression; evaluates as a scalar field.
#[derive(Clone)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(source: &str, ctx: &ExprContext) -> Result<Self> {
        let tokens = tokenize(source)?;
        let mut p = Parser { tokens: &tokens, pos: 0, ctx, source };
        let root = p.expr()?;
        if p.pos != tokens.len() {
            return Err(p.error(format!("unexpected {}", tokens[p.pos])));
        }
        Ok(Self { source: source.to_string(), root })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.root.eval(x)
    }

    /// Value of an expression that does not depend on the point.
    pub fn constant_value(&self) -> Option<f64> {
        self.root.as_const()
    }
}

impl ScalarField for Expr {
    fn value(&self, x: &[f64]) -> f64 {
        self.eval(x)
    }
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
    NormBar,
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Num(v) => write!(f, "number {v}"),
            Token::Ident(s) => write!(f, "name '{s}'"),
            Token::Op(c) => write!(f, "'{c}'"),
            Token::NormBar => f.write_str("'|x|'"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let mut j = i + 1;
                if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
                    j += 1;
                }
                if j < chars.len() && chars[j].is_ascii_digit() {
                    i = j;
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text
                .parse::<f64>()
                .map_err(|_| Error::Expression(format!("bad number '{text}' in '{src}'")))?;
            out.push(Token::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Token::Ident(chars[start..i].iter().collect()));
        } else if c == '|' {
            let rest: String = chars[i..].iter().filter(|c| !c.is_whitespace()).take(3).collect();
            if rest != "|x|" {
                return Err(Error::Expression(format!("only '|x|' may appear between bars in '{src}'")));
            }
            // Skip to the closing bar.
            i += 1;
            while chars[i] != '|' {
                i += 1;
            }
            i += 1;
            out.push(Token::NormBar);
        } else if "+-*/^(),".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::Expression(format!("unexpected character '{c}' in '{src}'")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    ctx: &'a ExprContext,
    source: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: String) -> Error {
        Error::Expression(format!("{msg} in '{}'", self.source))
    }

    fn peek_op(&self, c: char) -> bool {
        matches!(self.tokens.get(self.pos), Some(Token::Op(o)) if *o == c)
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if self.peek_op(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.peek_op('+') {
                Binary::Add
            } else if self.peek_op('-') {
                Binary::Sub
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = fold(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.peek_op('*') {
                Binary::Mul
            } else if self.peek_op('/') {
                Binary::Div
            } else {
                return Ok(lhs);
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = fold(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek_op('-') {
            self.pos += 1;
            let inner = self.unary()?;
            return Ok(fold_unary(Unary::Neg, inner));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek_op('^') {
            self.pos += 1;
            let exponent = self.unary()?;
            return Ok(fold(Binary::Pow, base, exponent));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        let token = self.tokens.get(self.pos).cloned().ok_or_else(|| self.error("unexpected end".into()))?;
        self.pos += 1;
        match token {
            Token::Num(v) => Ok(Node::Const(v)),
            Token::NormBar => Ok(Node::Norm),
            Token::Op('(') => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Token::Op(c) => Err(self.error(format!("unexpected '{c}'"))),
            Token::Ident(name) => {
                if self.peek_op('(') {
                    self.pos += 1;
                    let mut args = vec![self.expr()?];
                    while self.peek_op(',') {
                        self.pos += 1;
                        args.push(self.expr()?);
                    }
                    self.expect_op(')')?;
                    self.call(&name, args)
                } else {
                    self.name(&name)
                }
            }
        }
    }

    fn name(&self, name: &str) -> Result<Node> {
        if let Some(v) = self.ctx.params.get(name) {
            return Ok(Node::Const(*v));
        }
        match name {
            "pi" => return Ok(Node::Const(PI)),
            "e" => return Ok(Node::Const(E)),
            "alpha" => return Ok(Node::Const(self.ctx.alpha)),
            "d" => return Ok(Node::Const(self.ctx.dim as f64)),
            "R" => return Ok(Node::Const(self.ctx.radius)),
            _ => {}
        }
        let index = name.strip_prefix("x_").or_else(|| name.strip_prefix('x'));
        if let Some(i) = index.and_then(|s| s.parse::<usize>().ok()) {
            if i >= 1 && i <= self.ctx.dim {
                return Ok(Node::Coord(i - 1));
            }
            return Err(self.error(format!("coordinate {name} outside 1..={}", self.ctx.dim)));
        }
        Err(self.error(format!("unknown name '{name}'")))
    }

    fn call(&self, name: &str, mut args: Vec<Node>) -> Result<Node> {
        let arity = |n: usize| -> Result<()> {
            if args.len() == n {
                Ok(())
            } else {
                Err(self.error(format!("{name} takes {n} argument(s), got {}", args.len())))
            }
        };
        let unary = match name {
            "sqrt" => Some(Unary::Sqrt),
            "exp" => Some(Unary::Exp),
            "ln" => Some(Unary::Ln),
            "abs" => Some(Unary::Abs),
            "pos" => Some(Unary::Pos),
            _ => None,
        };
        if let Some(op) = unary {
            arity(1)?;
            return Ok(fold_unary(op, args.pop().unwrap()));
        }
        let binary = match name {
            "pow" => Some(Binary::Pow),
            "min" => Some(Binary::Min),
            "max" => Some(Binary::Max),
            _ => None,
        };
        if let Some(op) = binary {
            arity(2)?;
            let b = args.pop().unwrap();
            let a = args.pop().unwrap();
            return Ok(fold(op, a, b));
        }
        if name == "phi" || name == "psi" {
            arity(1)?;
            let k = args[0]
                .as_const()
                .filter(|k| *k >= 0.0 && k.fract() == 0.0)
                .ok_or_else(|| self.error(format!("{name} needs a constant nonnegative integer argument")))?;
            return Ok(if name == "phi" {
                Node::Phi { exponent: k + self.ctx.alpha / 2.0 }
            } else {
                Node::Psi(Arc::new(PsiProfile::new(k as u32, self.ctx.alpha, self.ctx.dim)?))
            });
        }
        Err(self.error(format!("unknown function '{name}'")))
    }
}

fn fold_unary(op: Unary, a: Node) -> Node {
    match a.as_const() {
        Some(c) => Node::Const(Node::Unary(op, Box::new(Node::Const(c))).eval(&[])),
        None => Node::Unary(op, Box::new(a)),
    }
}

fn fold(op: Binary, a: Node, b: Node) -> Node {
    match (a.as_const(), b.as_const()) {
        (Some(_), Some(_)) => Node::Const(Node::Binary(op, Box::new(a), Box::new(b)).eval(&[])),
        _ => Node::Binary(op, Box::new(a), Box::new(b)),
    }
}
