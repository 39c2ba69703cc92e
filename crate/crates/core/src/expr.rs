//! Arithmetic expressions in the mixing parameter, used by scenario files to
//! write kernel parameters, premium rates and `rho` as functions of theta.
//!
//! Syntax: numbers, `theta` (alias of `theta1`), `theta1`, `theta2`, the
//! operators `+ - * / ^`, parentheses and the functions `exp`, `ln`/`log`,
//! `sqrt`. Examples: `"theta"`, `"2*theta"`, `"1/theta"`, `"exp(theta)"`,
//! `"theta1/(theta1+theta2)"`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{CmrpError, Result};

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Exp,
    Ln,
    Sqrt,
}

/// A parsed expression together with its source text.
#[derive(Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Expr({:?})", self.source)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let tokens = tokenize(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if p.pos != p.tokens.len() {
            return Err(CmrpError::Expr(format!(
                "unexpected trailing input in `{src}`"
            )));
        }
        Ok(Expr {
            source: src.trim().to_string(),
            root,
        })
    }

    pub fn constant(c: f64) -> Expr {
        Expr {
            source: format!("{c}"),
            root: Node::Num(c),
        }
    }

    pub fn theta() -> Expr {
        Expr {
            source: "theta".into(),
            root: Node::Var(0),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match self.root {
            Node::Num(c) => Some(c),
            _ => None,
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// Highest theta coordinate referenced plus one (0 for constants).
    pub fn arity(&self) -> usize {
        fn walk(n: &Node) -> usize {
            match n {
                Node::Num(_) => 0,
                Node::Var(i) => i + 1,
                Node::Neg(a) | Node::Call(_, a) => walk(a),
                Node::Bin(_, a, b) => walk(a).max(walk(b)),
            }
        }
        walk(&self.root)
    }

    /// Evaluate at the point `theta`.
    pub fn eval(&self, theta: &[f64]) -> f64 {
        fn ev(n: &Node, th: &[f64]) -> f64 {
            match n {
                Node::Num(c) => *c,
                Node::Var(i) => th.get(*i).copied().unwrap_or(f64::NAN),
                Node::Neg(a) => -ev(a, th),
                Node::Bin(op, a, b) => {
                    let (x, y) = (ev(a, th), ev(b, th));
                    match op {
                        Op::Add => x + y,
                        Op::Sub => x - y,
                        Op::Mul => x * y,
                        Op::Div => x / y,
                        Op::Pow => x.powf(y),
                    }
                }
                Node::Call(f, a) => {
                    let x = ev(a, th);
                    match f {
                        Func::Exp => x.exp(),
                        Func::Ln => x.ln(),
                        Func::Sqrt => x.sqrt(),
                    }
                }
            }
        }
        ev(&self.root, theta)
    }
}

impl Serialize for Expr {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.as_constant() {
            Some(c) => s.serialize_f64(c),
            None => s.serialize_str(&self.source),
        }
    }
}

impl<'de> Deserialize<'de> for Expr {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(c) => Ok(Expr::constant(c)),
            Raw::Text(s) => Expr::parse(&s).map_err(serde::de::Error::custom),
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
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
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
                .map_err(|_| CmrpError::Expr(format!("bad number `{text}` in `{src}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else if c == '(' {
            out.push(Tok::LParen);
            i += 1;
        } else if c == ')' {
            out.push(Tok::RParen);
            i += 1;
        } else {
            return Err(CmrpError::Expr(format!("unexpected `{c}` in `{src}`")));
        }
    }
    if out.is_empty() {
        return Err(CmrpError::Expr("empty expression".into()));
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<Tok>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        while let Some(Tok::Op(c @ ('+' | '-'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.term()?;
            let op = if c == '+' { Op::Add } else { Op::Sub };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while let Some(Tok::Op(c @ ('*' | '/'))) = self.peek().cloned() {
            self.pos += 1;
            let rhs = self.unary()?;
            let op = if c == '*' { Op::Mul } else { Op::Div };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Op('-')) = self.peek() {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if let Some(Tok::Op('+')) = self.peek() {
            self.pos += 1;
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Op('^')) = self.peek() {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(inner),
                    _ => Err(CmrpError::Expr("missing `)`".into())),
                }
            }
            Some(Tok::Ident(name)) => match name.as_str() {
                "theta" | "theta1" => Ok(Node::Var(0)),
                "theta2" => Ok(Node::Var(1)),
                "exp" | "ln" | "log" | "sqrt" => {
                    let func = match name.as_str() {
                        "exp" => Func::Exp,
                        "sqrt" => Func::Sqrt,
                        _ => Func::Ln,
                    };
                    if self.next() != Some(Tok::LParen) {
                        return Err(CmrpError::Expr(format!("`{name}` must be followed by `(`")));
                    }
                    let arg = self.expr()?;
                    if self.next() != Some(Tok::RParen) {
                        return Err(CmrpError::Expr("missing `)`".into()));
                    }
                    Ok(Node::Call(func, Box::new(arg)))
                }
                other => Err(CmrpError::Expr(format!("unknown identifier `{other}`"))),
            },
            Some(t) => Err(CmrpError::Expr(format!("unexpected token {t:?}"))),
            None => Err(CmrpError::Expr("unexpected end of expression".into())),
        }
    }
}
