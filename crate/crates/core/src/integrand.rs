//! Integrand expressions `F(x, y, dy)`.
//!
//! Grammar (whitespace insensitive):
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' unary)?            right associative
//! atom   := number | var | 'pi' | func '(' expr ')' | '(' expr ')'
//! var    := 'x' | 'y' | 'dy'
//! func   := 'sqrt' | 'sin' | 'cos' | 'exp'
//! ```
//!
//! `dy` denotes the first derivative `y'`. Evaluation returns the value together
//! with the exact partials `dF/dy` and `dF/d(dy)`, propagated forward through the
//! tree.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Smallest divisor magnitude accepted by `/`.
pub const DIVISION_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Var {
    X,
    Y,
    Dy,
}

impl Var {
    fn name(self) -> &'static str {
        match self {
            Var::X => "x",
            Var::Y => "y",
            Var::Dy => "dy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
}

impl Func {
    fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
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
}

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Const(f64),
    Pi,
    Var(Var),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

/// Parsed integrand. Immutable; cheap to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegrandExpr {
    root: Node,
}

/// Value and first partials of an integrand at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrandEval<T> {
    pub value: T,
    pub df_dy: T,
    pub df_ddy: T,
}

impl IntegrandExpr {
    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn from_node(root: Node) -> Self {
        Self { root }
    }

    /// Evaluates `F` and its partials with respect to `y` and `dy`.
    pub fn eval<T: Scalar>(&self, x: T, y: T, dy: T) -> Result<IntegrandEval<T>> {
        let env = Env { x, y, dy };
        let d = eval_node(&self.root, &env)?;
        if !(d.v.is_finite() && d.dy.is_finite() && d.ddy.is_finite()) {
            return Err(Error::overflow("integrand"));
        }
        Ok(IntegrandEval {
            value: d.v,
            df_dy: d.dy,
            df_ddy: d.ddy,
        })
    }
}

/// Parses an integrand expression.
pub fn parse_integrand(text: &str) -> Result<IntegrandExpr> {
    let mut p = Parser {
        src: text,
        bytes: text.as_bytes(),
        pos: 0,
    };
    let root = p.expr()?;
    p.skip_ws();
    if p.pos != p.bytes.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(IntegrandExpr { root })
}

impl FromStr for IntegrandExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_integrand(s)
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> Error {
        Error::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if self.eat(b'-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let exponent = self.unary()?;
            return Ok(Node::Binary(BinOp::Pow, Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.identifier(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Node> {
        let start = self.pos;
        let b = self.bytes;
        let digits = |p: &mut usize| {
            let s = *p;
            while *p < b.len() && b[*p].is_ascii_digit() {
                *p += 1;
            }
            *p - s
        };
        let mut p = self.pos;
        let mut n = digits(&mut p);
        if p < b.len() && b[p] == b'.' {
            p += 1;
            n += digits(&mut p);
        }
        if n == 0 {
            return Err(self.syntax("malformed number"));
        }
        if p < b.len() && (b[p] == b'e' || b[p] == b'E') {
            let mut q = p + 1;
            if q < b.len() && (b[q] == b'+' || b[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) > 0 {
                p = q;
            }
        }
        let value: f64 = self.src[start..p]
            .parse()
            .map_err(|_| self.syntax("malformed number"))?;
        if !value.is_finite() {
            return Err(self.syntax("number out of range"));
        }
        self.pos = p;
        Ok(Node::Const(value))
    }

    fn identifier(&mut self) -> Result<Node> {
        let start = self.pos;
        while self.pos < self.bytes.len()
            && (self.bytes[self.pos].is_ascii_alphanumeric() || self.bytes[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];
        let node = match name {
            "x" => Node::Var(Var::X),
            "y" => Node::Var(Var::Y),
            "dy" => Node::Var(Var::Dy),
            "pi" => Node::Pi,
            _ => match Func::from_name(name) {
                Some(func) => {
                    if !self.eat(b'(') {
                        return Err(self.syntax("expected `(` after function name"));
                    }
                    let arg = self.expr()?;
                    if !self.eat(b')') {
                        return Err(self.syntax("expected `)`"));
                    }
                    Node::Call(func, Box::new(arg))
                }
                None => {
                    return Err(Error::UnknownIdentifier {
                        name: name.to_string(),
                        offset: start,
                    })
                }
            },
        };
        Ok(node)
    }
}

impl fmt::Display for Node {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Const(c) => write!(f, "{c}"),
            Node::Pi => f.write_str("pi"),
            Node::Var(v) => f.write_str(v.name()),
            Node::Neg(a) => write!(f, "(-{a})"),
            Node::Binary(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

impl fmt::Display for IntegrandExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.fmt(f)
    }
}

struct Env<T> {
    x: T,
    y: T,
    dy: T,
}

/// Value with tangents along `y` and `dy`.
#[derive(Clone, Copy)]
struct Dual<T> {
    v: T,
    dy: T,
    ddy: T,
}

impl<T: Scalar> Dual<T> {
    fn constant(v: T) -> Self {
        Self {
            v,
            dy: T::zero(),
            ddy: T::zero(),
        }
    }

    fn has_tangent(&self) -> bool {
        !(self.dy.is_zero() && self.ddy.is_zero())
    }

    /// Chain rule for a unary map with derivative `d` at `self.v`.
    fn chain(self, v: T, d: T) -> Self {
        if !self.has_tangent() {
            return Self::constant(v);
        }
        Self {
            v,
            dy: d * self.dy,
            ddy: d * self.ddy,
        }
    }
}

fn eval_node<T: Scalar>(node: &Node, env: &Env<T>) -> Result<Dual<T>> {
    let zero = T::zero();
    Ok(match node {
        Node::Const(c) => Dual::constant(T::lit(*c)),
        Node::Pi => Dual::constant(T::PI()),
        Node::Var(Var::X) => Dual::constant(env.x),
        Node::Var(Var::Y) => Dual {
            v: env.y,
            dy: T::one(),
            ddy: zero,
        },
        Node::Var(Var::Dy) => Dual {
            v: env.dy,
            dy: zero,
            ddy: T::one(),
        },
        Node::Neg(a) => {
            let a = eval_node(a, env)?;
            Dual {
                v: -a.v,
                dy: -a.dy,
                ddy: -a.ddy,
            }
        }
        Node::Binary(op, a, b) => {
            let a = eval_node(a, env)?;
            let b = eval_node(b, env)?;
            binary(*op, a, b)?
        }
        Node::Call(func, a) => {
            let a = eval_node(a, env)?;
            call(*func, a)?
        }
    })
}

fn binary<T: Scalar>(op: BinOp, a: Dual<T>, b: Dual<T>) -> Result<Dual<T>> {
    Ok(match op {
        BinOp::Add => Dual {
            v: a.v + b.v,
            dy: a.dy + b.dy,
            ddy: a.ddy + b.ddy,
        },
        BinOp::Sub => Dual {
            v: a.v - b.v,
            dy: a.dy - b.dy,
            ddy: a.ddy - b.ddy,
        },
        BinOp::Mul => Dual {
            v: a.v * b.v,
            dy: a.dy * b.v + a.v * b.dy,
            ddy: a.ddy * b.v + a.v * b.ddy,
        },
        BinOp::Div => {
            if b.v.abs() < T::lit(DIVISION_FLOOR) {
                return Err(Error::domain(format!(
                    "division by {} (magnitude below {DIVISION_FLOOR:e})",
                    b.v
                )));
            }
            let q = a.v / b.v;
            Dual {
                v: q,
                dy: (a.dy - q * b.dy) / b.v,
                ddy: (a.ddy - q * b.ddy) / b.v,
            }
        }
        BinOp::Pow => power(a, b)?,
    })
}

fn power<T: Scalar>(base: Dual<T>, exponent: Dual<T>) -> Result<Dual<T>> {
    let zero = T::zero();
    if exponent.has_tangent() {
        // a^b = exp(b ln a), defined for a > 0 only.
        if base.v <= zero {
            return Err(Error::domain(format!(
                "power with variable exponent needs a positive base, got {}",
                base.v
            )));
        }
        let v = base.v.powf(exponent.v);
        let ln = base.v.ln();
        let ratio = exponent.v / base.v;
        return Ok(Dual {
            v,
            dy: v * (exponent.dy * ln + ratio * base.dy),
            ddy: v * (exponent.ddy * ln + ratio * base.ddy),
        });
    }

    let e = exponent.v;
    let integral = e == e.round() && e.abs() <= T::lit(i32::MAX as f64);
    if integral {
        let n = e.to_i32().expect("checked range");
        if n == 0 {
            return Ok(Dual::constant(T::one()));
        }
        if n < 0 && base.v.abs() < T::lit(DIVISION_FLOOR) {
            return Err(Error::domain(format!(
                "zero base {} raised to negative power {n}",
                base.v
            )));
        }
        let v = base.v.powi(n);
        let d = T::lit(n as f64) * base.v.powi(n - 1);
        return Ok(base.chain(v, d));
    }

    if base.v < zero {
        return Err(Error::domain(format!(
            "negative base {} raised to non-integer power {e}",
            base.v
        )));
    }
    if base.v == zero {
        if e < zero {
            return Err(Error::domain(format!("zero base raised to negative power {e}")));
        }
        if e < T::one() && base.has_tangent() {
            return Err(Error::domain(format!(
                "derivative of power {e} diverges at zero base"
            )));
        }
        // 0^e with e > 1 has zero derivative; with e < 1 only reached without tangent.
        return Ok(Dual::constant(zero));
    }
    let v = base.v.powf(e);
    let d = e * base.v.powf(e - T::one());
    Ok(base.chain(v, d))
}

fn call<T: Scalar>(func: Func, a: Dual<T>) -> Result<Dual<T>> {
    let zero = T::zero();
    Ok(match func {
        Func::Sqrt => {
            if a.v < zero {
                return Err(Error::domain(format!("sqrt of negative value {}", a.v)));
            }
            let s = a.v.sqrt();
            if s == zero {
                if a.has_tangent() {
                    return Err(Error::domain("derivative of sqrt diverges at zero"));
                }
                Dual::constant(zero)
            } else {
                a.chain(s, T::lit(0.5) / s)
            }
        }
        Func::Sin => a.chain(a.v.sin(), a.v.cos()),
        Func::Cos => a.chain(a.v.cos(), -a.v.sin()),
        Func::Exp => {
            let e = a.v.exp();
            if !e.is_finite() {
                return Err(Error::overflow("exp"));
            }
            a.chain(e, e)
        }
    })
}
