//! A small expression language for scalar functions of named real variables.
//!
//! Sources like `"exp(x1) + x2^2"` are parsed by recursive descent into an
//! immutable [`Expression`] that can be evaluated at arbitrary bindings.
//! Evaluation is pure, so one parsed expression may be shared freely across
//! worker threads.
//!
//! Grammar (whitespace insignificant):
//!
//! ```text
//! expr   := term (("+"|"-") term)*
//! term   := factor (("*"|"/") factor)*
//! factor := "-" factor | power
//! power  := atom ("^" factor)?
//! atom   := NUMBER | IDENT | IDENT "(" expr ("," expr)* ")" | "(" expr ")"
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so `-x^2`
//! means `-(x^2)` while `2^-3` is still accepted as `2^(-3)`.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Built-in functions callable from expression sources.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Abs,
    Pow,
    Min,
    Max,
}

impl Func {
    fn lookup(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            "pow" => Func::Pow,
            "min" => Func::Min,
            "max" => Func::Max,
            _ => return None,
        })
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
            Func::Pow => "pow",
            Func::Min => "min",
            Func::Max => "max",
        }
    }

    fn arity(self) -> usize {
        match self {
            Func::Pow | Func::Min | Func::Max => 2,
            _ => 1,
        }
    }
}

/// One node of a parsed expression tree.
///
/// Variables are stored as indices into the owning [`Expression`]'s variable
/// list, so trees stay cheap to clone and evaluate.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Number(f64),
    Var(usize),
    Neg(Box<Node>),
    Bin(BinOp, Box<Node>, Box<Node>),
    Call(Func, Vec<Node>),
}

// Constructor names mirror the node tags; they build trees rather than
// evaluate, so the operator traits do not apply.
#[allow(clippy::should_implement_trait)]
impl Node {
    pub fn number(v: f64) -> Node {
        Node::Number(v)
    }

    pub fn var(index: usize) -> Node {
        Node::Var(index)
    }

    pub fn neg(inner: Node) -> Node {
        Node::Neg(Box::new(inner))
    }

    pub fn bin(op: BinOp, lhs: Node, rhs: Node) -> Node {
        Node::Bin(op, Box::new(lhs), Box::new(rhs))
    }

    pub fn add(lhs: Node, rhs: Node) -> Node {
        Node::bin(BinOp::Add, lhs, rhs)
    }

    pub fn sub(lhs: Node, rhs: Node) -> Node {
        Node::bin(BinOp::Sub, lhs, rhs)
    }

    pub fn mul(lhs: Node, rhs: Node) -> Node {
        Node::bin(BinOp::Mul, lhs, rhs)
    }

    pub fn pow(lhs: Node, rhs: Node) -> Node {
        Node::bin(BinOp::Pow, lhs, rhs)
    }

    pub fn call(func: Func, args: Vec<Node>) -> Node {
        Node::Call(func, args)
    }

    fn max_var_index(&self) -> Option<usize> {
        match self {
            Node::Number(_) => None,
            Node::Var(i) => Some(*i),
            Node::Neg(n) => n.max_var_index(),
            Node::Bin(_, l, r) => match (l.max_var_index(), r.max_var_index()) {
                (Some(a), Some(b)) => Some(a.max(b)),
                (a, b) => a.or(b),
            },
            Node::Call(_, args) => args.iter().filter_map(|a| a.max_var_index()).max(),
        }
    }

    fn mark_used(&self, used: &mut [bool]) {
        match self {
            Node::Number(_) => {}
            Node::Var(i) => used[*i] = true,
            Node::Neg(n) => n.mark_used(used),
            Node::Bin(_, l, r) => {
                l.mark_used(used);
                r.mark_used(used);
            }
            Node::Call(_, args) => {
                for a in args {
                    a.mark_used(used);
                }
            }
        }
    }
}

/// A parsed, immutable expression together with its declared variable list.
///
/// The variable list fixes both the names visible to [`Expression::evaluate`]
/// and the positional order expected by [`Expression::eval_values`].
#[derive(Debug, Clone, PartialEq)]
pub struct Expression {
    root: Node,
    variables: Vec<String>,
    used: Vec<bool>,
}

/// Why a source string failed to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptySource,
    UnexpectedChar(char),
    InvalidNumber(String),
    UnexpectedToken { found: String, expected: &'static str },
    UnexpectedEnd { expected: &'static str },
    UnknownVariable(String),
    UnknownFunction(String),
    ArityMismatch { function: String, expected: usize, got: usize },
    DuplicateVariable(String),
}

/// A parse failure with the byte offset it was detected at.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("syntax error at offset {offset}: {}", self.describe())]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl ParseError {
    fn describe(&self) -> String {
        match &self.kind {
            ParseErrorKind::EmptySource => "empty expression source".into(),
            ParseErrorKind::UnexpectedChar(c) => format!("unexpected character '{c}'"),
            ParseErrorKind::InvalidNumber(s) => format!("invalid number literal '{s}'"),
            ParseErrorKind::UnexpectedToken { found, expected } => {
                format!("unexpected '{found}', expected {expected}")
            }
            ParseErrorKind::UnexpectedEnd { expected } => {
                format!("unexpected end of input, expected {expected}")
            }
            ParseErrorKind::UnknownVariable(name) => format!("unknown variable '{name}'"),
            ParseErrorKind::UnknownFunction(name) => format!("unknown function '{name}'"),
            ParseErrorKind::ArityMismatch { function, expected, got } => {
                format!("function '{function}' takes {expected} argument(s), got {got}")
            }
            ParseErrorKind::DuplicateVariable(name) => {
                format!("variable '{name}' declared more than once")
            }
        }
    }
}

/// An evaluation failure.
///
/// Domain faults carry the offending sub-expression rendered back to source
/// form, so reports can say exactly which term misbehaved.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("no binding supplied for variable '{0}'")]
    MissingBinding(String),
    #[error("expected {expected} value(s), got {got}")]
    WrongValueCount { expected: usize, got: usize },
    #[error("domain fault in '{expr}': {message}")]
    DomainFault { expr: String, message: String },
    #[error("non-finite result in '{expr}'")]
    NonFinite { expr: String },
}

/// Parses `source` against a fixed list of allowed variable names.
///
/// When the single variable `x1` is declared, the name `x` is accepted as an
/// alias for it, which keeps one-dimensional inputs short.
pub fn parse(source: &str, allowed_variables: &[&str]) -> Result<Expression, ParseError> {
    for (i, name) in allowed_variables.iter().enumerate() {
        if allowed_variables[..i].contains(name) {
            return Err(ParseError {
                offset: 0,
                kind: ParseErrorKind::DuplicateVariable((*name).to_string()),
            });
        }
    }
    let tokens = lex(source)?;
    if tokens.is_empty() {
        return Err(ParseError { offset: 0, kind: ParseErrorKind::EmptySource });
    }
    let mut parser = Parser { tokens: &tokens, pos: 0, vars: allowed_variables, end: source.len() };
    let root = parser.expr()?;
    if let Some(tok) = parser.peek() {
        return Err(ParseError {
            offset: tok.offset,
            kind: ParseErrorKind::UnexpectedToken {
                found: tok.text.clone(),
                expected: "an operator or end of input",
            },
        });
    }
    let variables: Vec<String> = allowed_variables.iter().map(|s| s.to_string()).collect();
    let mut used = vec![false; variables.len()];
    root.mark_used(&mut used);
    Ok(Expression { root, variables, used })
}

impl Expression {
    /// Builds an expression directly from a tree, validating variable indices.
    pub fn from_parts(root: Node, variables: Vec<String>) -> Result<Expression, ParseError> {
        if let Some(max) = root.max_var_index() {
            if max >= variables.len() {
                return Err(ParseError {
                    offset: 0,
                    kind: ParseErrorKind::UnknownVariable(format!("#{max}")),
                });
            }
        }
        let mut used = vec![false; variables.len()];
        root.mark_used(&mut used);
        Ok(Expression { root, variables, used })
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn variables(&self) -> &[String] {
        &self.variables
    }

    /// Names of variables that actually occur in the tree.
    pub fn free_variables(&self) -> Vec<&str> {
        self.variables
            .iter()
            .zip(&self.used)
            .filter(|(_, used)| **used)
            .map(|(name, _)| name.as_str())
            .collect()
    }

    /// Evaluates with one value per declared variable, in declaration order.
    pub fn eval_values(&self, values: &[f64]) -> Result<f64, EvalError> {
        if values.len() != self.variables.len() {
            return Err(EvalError::WrongValueCount {
                expected: self.variables.len(),
                got: values.len(),
            });
        }
        self.eval_node(&self.root, values)
    }

    /// Evaluates with named bindings; every free variable must be bound.
    pub fn evaluate(&self, bindings: &HashMap<String, f64>) -> Result<f64, EvalError> {
        let mut values = vec![0.0; self.variables.len()];
        for (i, name) in self.variables.iter().enumerate() {
            match bindings.get(name) {
                Some(v) => values[i] = *v,
                None if self.used[i] => {
                    return Err(EvalError::MissingBinding(name.clone()));
                }
                None => {}
            }
        }
        self.eval_node(&self.root, &values)
    }

    fn eval_node(&self, node: &Node, values: &[f64]) -> Result<f64, EvalError> {
        let v = match node {
            Node::Number(v) => *v,
            Node::Var(i) => values[*i],
            Node::Neg(inner) => -self.eval_node(inner, values)?,
            Node::Bin(op, l, r) => {
                let a = self.eval_node(l, values)?;
                let b = self.eval_node(r, values)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b == 0.0 {
                            return Err(self.fault(node, "division by zero"));
                        }
                        a / b
                    }
                    BinOp::Pow => self.checked_pow(node, a, b)?,
                }
            }
            Node::Call(func, args) => {
                let a = self.eval_node(&args[0], values)?;
                match func {
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Exp => a.exp(),
                    Func::Log => {
                        if a <= 0.0 {
                            return Err(self.fault(node, "log of a non-positive value"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if a < 0.0 {
                            return Err(self.fault(node, "sqrt of a negative value"));
                        }
                        a.sqrt()
                    }
                    Func::Abs => a.abs(),
                    Func::Pow => {
                        let b = self.eval_node(&args[1], values)?;
                        self.checked_pow(node, a, b)?
                    }
                    Func::Min => a.min(self.eval_node(&args[1], values)?),
                    Func::Max => a.max(self.eval_node(&args[1], values)?),
                }
            }
        };
        if !v.is_finite() {
            return Err(EvalError::NonFinite { expr: self.render(node) });
        }
        Ok(v)
    }

    // Real-valued exponentiation only: a negative base demands an integer
    // exponent, and a zero base a non-negative one.
    fn checked_pow(&self, node: &Node, base: f64, exp: f64) -> Result<f64, EvalError> {
        if base < 0.0 && exp.fract() != 0.0 {
            return Err(self.fault(node, "negative base raised to a non-integer exponent"));
        }
        if base == 0.0 && exp < 0.0 {
            return Err(self.fault(node, "zero base raised to a negative exponent"));
        }
        Ok(base.powf(exp))
    }

    fn fault(&self, node: &Node, message: &str) -> EvalError {
        EvalError::DomainFault { expr: self.render(node), message: message.to_string() }
    }

    fn render(&self, node: &Node) -> String {
        let mut out = String::new();
        self.fmt_node(node, 0, &mut out);
        out
    }

    // Precedence levels: +,- are 1; *,/ are 2; unary minus is 3; ^ is 4;
    // atoms are 5. A node is parenthesized when its level is below the
    // minimum its context requires, which keeps printing round-trip stable.
    fn fmt_node(&self, node: &Node, min_prec: u8, out: &mut String) {
        match node {
            Node::Number(v) => {
                out.push_str(&format!("{v}"));
            }
            Node::Var(i) => out.push_str(&self.variables[*i]),
            Node::Neg(inner) => {
                let wrap = min_prec > 3;
                if wrap {
                    out.push('(');
                }
                out.push('-');
                self.fmt_node(inner, 3, out);
                if wrap {
                    out.push(')');
                }
            }
            Node::Bin(op, l, r) => {
                let (sym, prec) = match op {
                    BinOp::Add => ("+", 1),
                    BinOp::Sub => ("-", 1),
                    BinOp::Mul => ("*", 2),
                    BinOp::Div => ("/", 2),
                    BinOp::Pow => ("^", 4),
                };
                let wrap = min_prec > prec;
                if wrap {
                    out.push('(');
                }
                if *op == BinOp::Pow {
                    // Right-associative: the base must be an atom, the
                    // exponent may carry a sign or another power.
                    self.fmt_node(l, 5, out);
                    out.push('^');
                    self.fmt_node(r, 3, out);
                } else {
                    self.fmt_node(l, prec, out);
                    out.push_str(sym);
                    self.fmt_node(r, prec + 1, out);
                }
                if wrap {
                    out.push(')');
                }
            }
            Node::Call(func, args) => {
                out.push_str(func.name());
                out.push('(');
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.fmt_node(a, 0, out);
                }
                out.push(')');
            }
        }
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render(&self.root))
    }
}

struct Token {
    text: String,
    offset: usize,
    kind: TokenKind,
}

#[derive(Clone, Copy, PartialEq)]
enum TokenKind {
    Number(f64),
    Ident,
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(source: &str) -> Result<Vec<Token>, ParseError> {
    let bytes = source.as_bytes();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind = match c {
            '+' => TokenKind::Plus,
            '-' => TokenKind::Minus,
            '*' => TokenKind::Star,
            '/' => TokenKind::Slash,
            '^' => TokenKind::Caret,
            '(' => TokenKind::LParen,
            ')' => TokenKind::RParen,
            ',' => TokenKind::Comma,
            _ if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) => {
                i = scan_number(bytes, i);
                let text = &source[start..i];
                let value: f64 = text.parse().map_err(|_| ParseError {
                    offset: start,
                    kind: ParseErrorKind::InvalidNumber(text.to_string()),
                })?;
                if !value.is_finite() {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::InvalidNumber(text.to_string()),
                    });
                }
                tokens.push(Token {
                    text: text.to_string(),
                    offset: start,
                    kind: TokenKind::Number(value),
                });
                continue;
            }
            _ if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len()
                    && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                {
                    i += 1;
                }
                tokens.push(Token {
                    text: source[start..i].to_string(),
                    offset: start,
                    kind: TokenKind::Ident,
                });
                continue;
            }
            _ => {
                return Err(ParseError { offset: i, kind: ParseErrorKind::UnexpectedChar(c) });
            }
        };
        i += 1;
        tokens.push(Token { text: c.to_string(), offset: start, kind });
    }
    Ok(tokens)
}

fn scan_number(bytes: &[u8], mut i: usize) -> usize {
    while i < bytes.len() && bytes[i].is_ascii_digit() {
        i += 1;
    }
    if i < bytes.len() && bytes[i] == b'.' {
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_digit() {
            i += 1;
        }
    }
    // Exponent marker counts only when digits actually follow it.
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
    i
}

struct Parser<'a> {
    tokens: &'a [Token],
    pos: usize,
    vars: &'a [&'a str],
    end: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn advance(&mut self) -> Option<&Token> {
        let t = self.tokens.get(self.pos);
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn unexpected(&self, expected: &'static str) -> ParseError {
        match self.peek() {
            Some(tok) => ParseError {
                offset: tok.offset,
                kind: ParseErrorKind::UnexpectedToken { found: tok.text.clone(), expected },
            },
            None => ParseError {
                offset: self.end,
                kind: ParseErrorKind::UnexpectedEnd { expected },
            },
        }
    }

    fn expr(&mut self) -> Result<Node, ParseError> {
        let mut node = self.term()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Plus => BinOp::Add,
                TokenKind::Minus => BinOp::Sub,
                _ => break,
            };
            self.advance();
            let rhs = self.term()?;
            node = Node::bin(op, node, rhs);
        }
        Ok(node)
    }

    fn term(&mut self) -> Result<Node, ParseError> {
        let mut node = self.factor()?;
        while let Some(tok) = self.peek() {
            let op = match tok.kind {
                TokenKind::Star => BinOp::Mul,
                TokenKind::Slash => BinOp::Div,
                _ => break,
            };
            self.advance();
            let rhs = self.factor()?;
            node = Node::bin(op, node, rhs);
        }
        Ok(node)
    }

    fn factor(&mut self) -> Result<Node, ParseError> {
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Minus {
                self.advance();
                let inner = self.factor()?;
                return Ok(Node::neg(inner));
            }
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, ParseError> {
        let base = self.atom()?;
        if let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Caret {
                self.advance();
                let exponent = self.factor()?;
                return Ok(Node::bin(BinOp::Pow, base, exponent));
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, ParseError> {
        let expected = "a number, variable, function call, or '('";
        let Some(tok) = self.peek() else {
            return Err(self.unexpected(expected));
        };
        match tok.kind {
            TokenKind::Number(v) => {
                self.advance();
                Ok(Node::Number(v))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect_rparen()?;
                Ok(inner)
            }
            TokenKind::Ident => {
                let name = tok.text.clone();
                let offset = tok.offset;
                self.advance();
                if matches!(self.peek(), Some(t) if t.kind == TokenKind::LParen) {
                    self.call(&name, offset)
                } else {
                    self.variable(&name, offset)
                }
            }
            _ => Err(self.unexpected(expected)),
        }
    }

    fn call(&mut self, name: &str, offset: usize) -> Result<Node, ParseError> {
        let Some(func) = Func::lookup(name) else {
            return Err(ParseError {
                offset,
                kind: ParseErrorKind::UnknownFunction(name.to_string()),
            });
        };
        self.advance(); // consume '('
        let mut args = vec![self.expr()?];
        while matches!(self.peek(), Some(t) if t.kind == TokenKind::Comma) {
            self.advance();
            args.push(self.expr()?);
        }
        self.expect_rparen()?;
        if args.len() != func.arity() {
            return Err(ParseError {
                offset,
                kind: ParseErrorKind::ArityMismatch {
                    function: name.to_string(),
                    expected: func.arity(),
                    got: args.len(),
                },
            });
        }
        Ok(Node::Call(func, args))
    }

    fn variable(&mut self, name: &str, offset: usize) -> Result<Node, ParseError> {
        if let Some(i) = self.vars.iter().position(|v| *v == name) {
            return Ok(Node::Var(i));
        }
        // 1-D convenience: "x" refers to a sole declared variable "x1".
        if name == "x" && self.vars.len() == 1 && self.vars[0] == "x1" {
            return Ok(Node::Var(0));
        }
        Err(ParseError { offset, kind: ParseErrorKind::UnknownVariable(name.to_string()) })
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Some(t) if t.kind == TokenKind::RParen => {
                self.advance();
                Ok(())
            }
            _ => Err(self.unexpected("')'")),
        }
    }
}
