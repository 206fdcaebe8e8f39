//! Arithmetic expressions in `x, y, z, t`.
//!
//! Grammar: `+ - * / ^`, unary minus, parentheses, numbers, the constant
//! `pi`, and the functions `sin cos exp`. `^` is right-associative and
//! binds tighter than unary minus, so `-x^2 = -(x^2)`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("expression error at column {column}: {message}")]
pub struct ExprError {
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(char, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Func {
    Sin,
    Cos,
    Exp,
}

/// A parsed expression, evaluated with `eval(&[x, y, z], t)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, ExprError> {
        let tokens = lex(src)?;
        let mut p = Parser { tokens, pos: 0 };
        let root = p.expr()?;
        if let Some(t) = p.tokens.get(p.pos) {
            return Err(ExprError {
                column: t.1,
                message: format!("unexpected `{}`", t.0),
            });
        }
        Ok(Self {
            source: src.to_string(),
            root,
        })
    }

    pub fn constant(v: f64) -> Self {
        Self {
            source: format!("{v:?}"),
            root: Node::Num(v),
        }
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn is_zero(&self) -> bool {
        self.root == Node::Num(0.0)
    }

    pub fn eval(&self, x: &[f64; 3], t: f64) -> f64 {
        eval(&self.root, x, t)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(n: &Node, x: &[f64; 3], t: f64) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::Var(3) => t,
        Node::Var(i) => x[*i],
        Node::Neg(a) => -eval(a, x, t),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x, t), eval(b, x, t));
            match op {
                '+' => a + b,
                '-' => a - b,
                '*' => a * b,
                '/' => a / b,
                _ => pow(a, b),
            }
        }
        Node::Call(f, a) => {
            let a = eval(a, x, t);
            match f {
                Func::Sin => a.sin(),
                Func::Cos => a.cos(),
                Func::Exp => a.exp(),
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b.fract() == 0.0 && b.abs() <= 64.0 {
        a.powi(b as i32)
    } else {
        a.powf(b)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "{v}"),
            Tok::Ident(s) => f.write_str(s),
            Tok::Op(c) => write!(f, "{c}"),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ExprError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
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
            let s: String = chars[start..i].iter().collect();
            let v = s.parse::<f64>().map_err(|_| ExprError {
                column: col,
                message: format!("bad number `{s}`"),
            })?;
            out.push((Tok::Num(v), col));
        } else if c.is_ascii_alphabetic() {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push((Tok::Ident(chars[start..i].iter().collect()), col));
        } else if "+-*/^()".contains(c) {
            out.push((Tok::Op(c), col));
            i += 1;
        } else {
            return Err(ExprError {
                column: col,
                message: format!("unexpected character `{c}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some((Tok::Op(c), _)) => Some(*c),
            _ => None,
        }
    }

    fn column(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map(|t| t.1)
            .unwrap_or_else(|| self.tokens.last().map(|t| t.1 + 1).unwrap_or(1))
    }

    fn err(&self, message: impl Into<String>) -> ExprError {
        ExprError {
            column: self.column(),
            message: message.into(),
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Node::Bin('^', Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ExprError> {
        let Some((tok, _)) = self.tokens.get(self.pos).cloned() else {
            return Err(self.err("unexpected end of expression"));
        };
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Node::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect_close()?;
                Ok(e)
            }
            Tok::Ident(name) => match name.as_str() {
                "x" => Ok(Node::Var(0)),
                "y" => Ok(Node::Var(1)),
                "z" => Ok(Node::Var(2)),
                "t" => Ok(Node::Var(3)),
                "pi" => Ok(Node::Num(std::f64::consts::PI)),
                "sin" | "cos" | "exp" => {
                    let f = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        _ => Func::Exp,
                    };
                    if self.peek_op() != Some('(') {
                        return Err(self.err(format!("`{name}` needs parentheses")));
                    }
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_close()?;
                    Ok(Node::Call(f, Box::new(arg)))
                }
                _ => {
                    self.pos -= 1;
                    Err(self.err(format!("unknown name `{name}`")))
                }
            },
            Tok::Op(c) => {
                self.pos -= 1;
                Err(self.err(format!("unexpected `{c}`")))
            }
        }
    }

    fn expect_close(&mut self) -> Result<(), ExprError> {
        if self.peek_op() == Some(')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err("missing `)`"))
        }
    }
}

/// A config value that is either a number or an expression string.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ExprValue {
    Number(f64),
    Text(String),
}

impl Default for ExprValue {
    fn default() -> Self {
        ExprValue::Number(0.0)
    }
}

impl ExprValue {
    pub fn compile(&self) -> Result<Expr, ExprError> {
        match self {
            ExprValue::Number(v) => Ok(Expr::constant(*v)),
            ExprValue::Text(s) => Expr::parse(s),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ev(s: &str, x: [f64; 3], t: f64) -> f64 {
        Expr::parse(s).unwrap().eval(&x, t)
    }

    #[test]
    fn precedence() {
        assert_eq!(ev("1 + 2 * 3", [0.0; 3], 0.0), 7.0);
        assert_eq!(ev("-2^2", [0.0; 3], 0.0), -4.0);
        assert_eq!(ev("2^3^2", [0.0; 3], 0.0), 512.0);
        assert_eq!(ev("(1 - y^2) * (1 + t)", [0.0, 0.5, 0.0], 1.0), 1.5);
        assert_eq!(ev("8 / 2 / 2", [0.0; 3], 0.0), 2.0);
        assert_eq!(ev("2 * -x", [3.0, 0.0, 0.0], 0.0), -6.0);
        assert_eq!(ev("1.5e-1 + z", [0.0, 0.0, 1.0], 0.0), 1.15);
    }

    #[test]
    fn functions() {
        let v = ev("sin(pi * x) + cos(0) + exp(t)", [0.5, 0.0, 0.0], 0.0);
        assert!((v - 3.0).abs() < 1e-15);
    }

    #[test]
    fn errors_report_columns() {
        assert_eq!(Expr::parse("1 + q").unwrap_err().column, 5);
        assert_eq!(Expr::parse("(1 + 2").unwrap_err().column, 7);
        assert!(Expr::parse("sin x").is_err());
        assert!(Expr::parse("1 $ 2").is_err());
        assert!(Expr::parse("").is_err());
        assert!(Expr::parse("1 2").is_err());
    }
}
