//! Arithmetic expressions in the variables `x`, `t`, `u`, `p`.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | variable | function '(' expr ')' | '(' expr ')'
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-2^2 = -4` and `2^3^2 = 2^9`.

use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{message}")]
pub struct EvalError {
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Var {
    X,
    T,
    U,
    P,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::T => "t",
            Var::U => "u",
            Var::P => "p",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Abs,
    Sqrt,
}

impl Func {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "tanh" => Func::Tanh,
            "abs" => Func::Abs,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Abs => "abs",
            Func::Sqrt => "sqrt",
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

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Num(f64),
    Var(Var),
    Neg(Box<Node>),
    Call(Func, Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
}

/// Values of the four variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Env {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    pub p: f64,
}

/// A parsed expression with its source text.
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    source: String,
    root: Node,
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expression {
    pub fn parse(source: &str) -> Result<Self, ParseError> {
        let tokens = lex(source)?;
        let mut parser = Parser {
            tokens,
            pos: 0,
            source,
        };
        let root = parser.expr()?;
        if let Some(tok) = parser.peek() {
            return Err(parser.error_at(tok, format!("unexpected {}", tok.kind.describe())));
        }
        Ok(Self {
            source: source.trim().to_string(),
            root,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    /// Variables that occur in the expression.
    pub fn variables(&self) -> BTreeSet<Var> {
        fn walk(n: &Node, out: &mut BTreeSet<Var>) {
            match n {
                Node::Num(_) => {}
                Node::Var(v) => {
                    out.insert(*v);
                }
                Node::Neg(a) | Node::Call(_, a) => walk(a, out),
                Node::Bin(_, a, b) => {
                    walk(a, out);
                    walk(b, out);
                }
            }
        }
        let mut out = BTreeSet::new();
        walk(&self.root, &mut out);
        out
    }

    pub fn eval(&self, env: &Env) -> Result<f64, EvalError> {
        eval(&self.root, env)
    }
}

fn fail(message: String) -> EvalError {
    EvalError { message }
}

fn eval(n: &Node, env: &Env) -> Result<f64, EvalError> {
    let v = match n {
        Node::Num(v) => *v,
        Node::Var(Var::X) => env.x,
        Node::Var(Var::T) => env.t,
        Node::Var(Var::U) => env.u,
        Node::Var(Var::P) => env.p,
        Node::Neg(a) => -eval(a, env)?,
        Node::Call(f, a) => {
            let v = eval(a, env)?;
            match f {
                Func::Sin => v.sin(),
                Func::Cos => v.cos(),
                Func::Exp => v.exp(),
                Func::Tanh => v.tanh(),
                Func::Abs => v.abs(),
                Func::Sqrt => {
                    if v < 0.0 {
                        return Err(fail(format!("sqrt of negative value {v}")));
                    }
                    v.sqrt()
                }
            }
        }
        Node::Bin(op, a, b) => {
            let (l, r) = (eval(a, env)?, eval(b, env)?);
            match op {
                BinOp::Add => l + r,
                BinOp::Sub => l - r,
                BinOp::Mul => l * r,
                BinOp::Div => {
                    if r == 0.0 {
                        return Err(fail(format!("division of {l} by zero")));
                    }
                    l / r
                }
                BinOp::Pow => {
                    if l < 0.0 && r.fract() != 0.0 {
                        return Err(fail(format!("{l} raised to non-integer power {r}")));
                    }
                    if l == 0.0 && r < 0.0 {
                        return Err(fail(format!("zero raised to negative power {r}")));
                    }
                    l.powf(r)
                }
            }
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(fail("result overflows double precision".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Kind {
    Num(f64),
    Ident(String),
    Op(char),
    Open,
    Close,
}

impl Kind {
    fn describe(&self) -> String {
        match self {
            Kind::Num(v) => format!("number {v}"),
            Kind::Ident(s) => format!("identifier '{s}'"),
            Kind::Op(c) => format!("'{c}'"),
            Kind::Open => "'('".into(),
            Kind::Close => "')'".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Token {
    kind: Kind,
    line: usize,
    column: usize,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let chars: Vec<char> = source.chars().collect();
    let mut out = Vec::new();
    let (mut line, mut col) = (1, 1);
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let (tl, tc) = (line, col);
        if c == '\n' {
            line += 1;
            col = 1;
            i += 1;
            continue;
        }
        if c.is_whitespace() {
            i += 1;
            col += 1;
            continue;
        }
        let start = i;
        let kind = if c.is_ascii_digit() || c == '.' {
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
            let v = text.parse::<f64>().map_err(|_| ParseError {
                line: tl,
                column: tc,
                message: format!("malformed number '{text}'"),
            })?;
            Kind::Num(v)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            Kind::Ident(chars[start..i].iter().collect())
        } else {
            i += 1;
            match c {
                '+' | '-' | '*' | '/' | '^' => Kind::Op(c),
                '(' => Kind::Open,
                ')' => Kind::Close,
                _ => {
                    return Err(ParseError {
                        line: tl,
                        column: tc,
                        message: format!("unexpected character '{c}'"),
                    })
                }
            }
        };
        col += i - start;
        out.push(Token {
            kind,
            line: tl,
            column: tc,
        });
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    source: &'a str,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn error_at(&self, tok: &Token, message: String) -> ParseError {
        ParseError {
            line: tok.line,
            column: tok.column,
            message,
        }
    }

    fn end_error(&self, message: &str) -> ParseError {
        let line = self.source.lines().count().max(1);
        let column = self.source.lines().last().map_or(0, |l| l.chars().count()) + 1;
        ParseError {
            line,
            column,
            message: format!("{message} at end of input"),
        }
    }

    fn eat_op(&mut self, ops: &[char]) -> Option<char> {
        match self.peek() {
            Some(Token {
                kind: Kind::Op(c), ..
            }) if ops.contains(c) => {
                let c = *c;
                self.pos += 1;
                Some(c)
            }
            _ => None,
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c) = self.eat_op(&['+', '-']) {
            let rhs = self.term()?;
            let op = if c == '+' { BinOp::Add } else { BinOp::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut lhs = self.unary()?;
        while let Some(c) = self.eat_op(&['*', '/']) {
            let rhs = self.unary()?;
            let op = if c == '*' { BinOp::Mul } else { BinOp::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ParseError> {
        if self.eat_op(&['-']).is_some() {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if self.eat_op(&['^']).is_some() {
            let exp = self.unary()?;
            return Ok(Node::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn expect_close(&mut self, open: &Token) -> Result<(), ParseError> {
        match self.peek() {
            Some(Token {
                kind: Kind::Close, ..
            }) => {
                self.pos += 1;
                Ok(())
            }
            Some(tok) => Err(self.error_at(
                tok,
                format!("expected ')' but found {}", tok.kind.describe()),
            )),
            None => Err(self.end_error(&format!(
                "unclosed '(' from line {}, column {}",
                open.line, open.column
            ))),
        }
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.end_error("expected a value")),
        };
        self.pos += 1;
        match &tok.kind {
            Kind::Num(v) => Ok(Node::Num(*v)),
            Kind::Open => {
                let inner = self.expr()?;
                self.expect_close(&tok)?;
                Ok(inner)
            }
            Kind::Ident(name) => {
                let var = match name.as_str() {
                    "x" => Some(Var::X),
                    "t" => Some(Var::T),
                    "u" => Some(Var::U),
                    "p" => Some(Var::P),
                    _ => None,
                };
                if let Some(v) = var {
                    return Ok(Node::Var(v));
                }
                let Some(func) = Func::from_name(name) else {
                    return Err(self.error_at(&tok, format!("unknown identifier '{name}'")));
                };
                match self.peek() {
                    Some(Token {
                        kind: Kind::Open, ..
                    }) => {
                        let open = self.tokens[self.pos].clone();
                        self.pos += 1;
                        let arg = self.expr()?;
                        self.expect_close(&open)?;
                        Ok(Node::Call(func, Box::new(arg)))
                    }
                    _ => Err(self.error_at(
                        &tok,
                        format!("function '{name}' needs a parenthesised argument"),
                    )),
                }
            }
            other => Err(self.error_at(
                &tok,
                format!("expected a value but found {}", other.describe()),
            )),
        }
    }
}
