//! A small expression language for right-hand sides `f(t, u)` and test
//! functions `f(x)`.
//!
//! ```text
//! expr    = term { ("+" | "-") term } ;
//! term    = unary { ("*" | "/") unary } ;
//! unary   = "-" unary | power ;
//! power   = primary [ "^" unary ] ;
//! primary = number | ident | ident "(" expr ")" | "(" expr ")" ;
//! number  = digits [ "." digits ] [ ("e" | "E") [ "+" | "-" ] digits ] ;
//! ident   = letter { letter } ;
//! ```
//!
//! Functions: `exp log sin cos sqrt abs`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
    Abs,
}

impl Func {
    pub const ALL: [Func; 6] = [Func::Exp, Func::Log, Func::Sin, Func::Cos, Func::Sqrt, Func::Abs];

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
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

/// Parsed expression. Number literals produced by the parser are never negative.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(String),
    /// Named constant fixed when the parse environment was created.
    Const(String, f64),
    Neg(Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const UNARY_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

impl Expr {
    fn precedence(&self) -> u8 {
        match self {
            Expr::Binary(op, ..) => op.precedence(),
            Expr::Neg(_) => UNARY_PREC,
            _ => ATOM_PREC,
        }
    }

    /// Identifiers of all free variables, sorted and deduplicated.
    pub fn variables(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e {
                Expr::Var(name) => out.push(name.clone()),
                Expr::Num(_) | Expr::Const(..) => {}
                Expr::Neg(inner) | Expr::Call(_, inner) => walk(inner, out),
                Expr::Binary(_, l, r) => {
                    walk(l, out);
                    walk(r, out);
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out.dedup();
        out
    }

    pub fn evaluate(&self, bindings: &[(&str, f64)]) -> Result<f64, EvalError> {
        match self {
            Expr::Num(v) | Expr::Const(_, v) => Ok(*v),
            Expr::Var(name) => bindings
                .iter()
                .find(|(n, _)| n == name)
                .map(|&(_, v)| v)
                .ok_or_else(|| EvalError::new(self, format!("unbound variable '{name}'"))),
            Expr::Neg(inner) => Ok(-inner.evaluate(bindings)?),
            Expr::Call(func, arg) => {
                let x = arg.evaluate(bindings)?;
                match func {
                    Func::Exp => Ok(x.exp()),
                    Func::Log if x > 0.0 => Ok(x.ln()),
                    Func::Log => Err(EvalError::new(self, format!("log of nonpositive value {x}"))),
                    Func::Sin => Ok(x.sin()),
                    Func::Cos => Ok(x.cos()),
                    Func::Sqrt if x >= 0.0 => Ok(x.sqrt()),
                    Func::Sqrt => Err(EvalError::new(self, format!("sqrt of negative value {x}"))),
                    Func::Abs => Ok(x.abs()),
                }
            }
            Expr::Binary(op, l, r) => {
                let x = l.evaluate(bindings)?;
                let y = r.evaluate(bindings)?;
                match op {
                    BinOp::Add => Ok(x + y),
                    BinOp::Sub => Ok(x - y),
                    BinOp::Mul => Ok(x * y),
                    BinOp::Div if y == 0.0 => Err(EvalError::new(self, "division by zero")),
                    BinOp::Div => Ok(x / y),
                    BinOp::Pow => power(x, y).map_err(|m| EvalError::new(self, m)),
                }
            }
        }
    }
}

fn power(x: f64, y: f64) -> Result<f64, String> {
    if x >= 0.0 || x.is_nan() {
        if x == 0.0 && y < 0.0 {
            return Err("division by zero in power".into());
        }
        return Ok(x.powf(y));
    }
    let n = y.round();
    if (y - n).abs() > 1e-9 {
        return Err(format!("negative base {x} with non-integer exponent {y}"));
    }
    if n.abs() <= i32::MAX as f64 {
        Ok(x.powi(n as i32))
    } else {
        Ok(x.powf(n))
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
            if parens {
                write!(f, "({e})")
            } else {
                write!(f, "{e}")
            }
        }
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var(name) | Expr::Const(name, _) => f.write_str(name),
            Expr::Neg(inner) => {
                f.write_str("-")?;
                child(f, inner, inner.precedence() < UNARY_PREC)
            }
            Expr::Call(func, arg) => write!(f, "{}({arg})", func.name()),
            Expr::Binary(BinOp::Pow, l, r) => {
                child(f, l, l.precedence() <= BinOp::Pow.precedence())?;
                f.write_str("^")?;
                child(f, r, r.precedence() < UNARY_PREC)
            }
            Expr::Binary(op, l, r) => {
                let prec = op.precedence();
                child(f, l, l.precedence() < prec)?;
                write!(f, " {} ", op.symbol())?;
                child(f, r, r.precedence() <= prec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("{node}: {message}")]
pub struct EvalError {
    /// The offending subexpression, pretty-printed.
    pub node: String,
    pub message: String,
}

impl EvalError {
    fn new(node: &Expr, message: impl Into<String>) -> Self {
        Self {
            node: node.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax { expected: String },
    UnknownIdentifier { name: String, allowed: Vec<String> },
}

/// Parse failure located by byte offset; displayed as `line:col: message`.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{line}:{col}: {}", self.message())]
pub struct ParseError {
    pub offset: usize,
    pub line: usize,
    pub col: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn new(source: &str, offset: usize, kind: ParseErrorKind) -> Self {
        let before = &source[..offset.min(source.len())];
        let line = before.matches('\n').count() + 1;
        let col = before.rsplit('\n').next().map_or(0, |s| s.chars().count()) + 1;
        Self { offset, line, col, kind }
    }

    pub fn message(&self) -> String {
        match &self.kind {
            ParseErrorKind::Syntax { expected } => format!("expected {expected}"),
            ParseErrorKind::UnknownIdentifier { name, allowed } => {
                format!("unknown identifier '{name}', allowed: {{{}}}", allowed.join(", "))
            }
        }
    }
}

/// Variables and named constants an expression may refer to.
#[derive(Debug, Clone, Default)]
pub struct ParseEnv {
    vars: Vec<String>,
    constants: Vec<(String, f64)>,
}

impl ParseEnv {
    pub fn new(vars: &[&str]) -> Self {
        Self {
            vars: vars.iter().map(|s| s.to_string()).collect(),
            constants: Vec::new(),
        }
    }

    pub fn with_constant(mut self, name: &str, value: f64) -> Self {
        self.constants.retain(|(n, _)| n != name);
        self.constants.push((name.to_string(), value));
        self
    }

    fn allowed(&self) -> Vec<String> {
        let mut all: Vec<String> = self
            .vars
            .iter()
            .cloned()
            .chain(self.constants.iter().map(|(n, _)| n.clone()))
            .collect();
        all.sort();
        all
    }

    pub fn parse(&self, source: &str) -> Result<Expr, ParseError> {
        let mut parser = Parser { src: source, pos: 0, env: self };
        parser.skip_ws();
        if parser.pos == source.len() {
            return Err(parser.expected("expression"));
        }
        let expr = parser.expr()?;
        parser.skip_ws();
        if parser.pos < source.len() {
            return Err(parser.expected("operator or end of input"));
        }
        Ok(expr)
    }
}

pub fn parse(source: &str, allowed_vars: &[&str]) -> Result<Expr, ParseError> {
    ParseEnv::new(allowed_vars).parse(source)
}

struct Parser<'s> {
    src: &'s str,
    pos: usize,
    env: &'s ParseEnv,
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.src.as_bytes().get(self.pos).copied()
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(|c| c.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expected(&self, what: &str) -> ParseError {
        ParseError::new(self.src, self.pos, ParseErrorKind::Syntax { expected: what.into() })
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat(b'+') {
                BinOp::Add
            } else if self.eat(b'-') {
                BinOp::Sub
            } else {
                return Ok(lhs);
            };
            let rhs = self.term()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat(b'*') {
                BinOp::Mul
            } else if self.eat(b'/') {
                BinOp::Div
            } else {
                return Ok(lhs);
            };
            let rhs = self.unary()?;
            lhs = Expr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Expr::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.expected("')'"));
                }
                Ok(inner)
            }
            _ => Err(self.expected("expression")),
        }
    }

    fn digits(&mut self) -> usize {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        self.pos - start
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let mut count = self.digits();
        if self.peek() == Some(b'.') {
            self.pos += 1;
            count += self.digits();
        }
        if count == 0 {
            return Err(self.expected("digit"));
        }
        if matches!(self.peek(), Some(b'e' | b'E')) {
            self.pos += 1;
            if matches!(self.peek(), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.digits() == 0 {
                return Err(self.expected("exponent digits"));
            }
        }
        let text = &self.src[start..self.pos];
        let value: f64 = text
            .parse()
            .map_err(|_| ParseError::new(self.src, start, ParseErrorKind::Syntax { expected: "number".into() }))?;
        if !value.is_finite() {
            return Err(ParseError::new(self.src, start, ParseErrorKind::Syntax {
                expected: "finite number".into(),
            }));
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic() || c == b'(') {
            return Err(self.expected("operator"));
        }
        Ok(Expr::Num(value))
    }

    fn identifier(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        if self.peek().is_some_and(|c| c.is_ascii_digit()) {
            return Err(self.expected("operator"));
        }
        if let Some(func) = Func::from_name(name) {
            if !self.eat(b'(') {
                return Err(self.expected(&format!("'(' after {name}")));
            }
            let arg = self.expr()?;
            if !self.eat(b')') {
                return Err(self.expected("')'"));
            }
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        if self.env.vars.iter().any(|v| v == name) {
            return Ok(Expr::Var(name.to_string()));
        }
        if let Some((n, v)) = self.env.constants.iter().find(|(n, _)| n == name) {
            return Ok(Expr::Const(n.clone(), *v));
        }
        Err(ParseError::new(
            self.src,
            start,
            ParseErrorKind::UnknownIdentifier {
                name: name.to_string(),
                allowed: self.env.allowed(),
            },
        ))
    }
}
