//! Analytic scalar functions of the coordinates `x0..x3`.
//!
//! Expressions are immutable, cheaply clonable trees. They evaluate to
//! `f64`, differentiate exactly, and print in a form that parses back to
//! the same tree.

mod parse;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

pub use parse::{parse, parse_with_params, ParseError};

/// Functions admitted by the grammar.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
    Sqrt,
    Tanh,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sqrt => "sqrt",
            Func::Tanh => "tanh",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            "sqrt" => Func::Sqrt,
            "tanh" => Func::Tanh,
            _ => return None,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

#[derive(Debug, PartialEq)]
pub enum Node {
    Const(f64),
    Coord(usize),
    Param(String),
    Neg(Expr),
    Bin(BinOp, Expr, Expr),
    Call(Func, Expr),
}

/// Shared handle to an expression tree.
#[derive(Clone, Debug, PartialEq)]
pub struct Expr(Arc<Node>);

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("unbound parameter `{0}`")]
    UnboundParameter(String),
    #[error("domain error: {what} at argument {arg}")]
    Domain { what: &'static str, arg: f64 },
}

/// Parameter bindings used during evaluation.
pub type Params = BTreeMap<String, f64>;

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    fn wrap(n: Node) -> Expr {
        Expr(Arc::new(n))
    }

    pub fn constant(v: f64) -> Expr {
        Expr::wrap(Node::Const(v))
    }

    pub fn zero() -> Expr {
        Expr::constant(0.0)
    }

    pub fn one() -> Expr {
        Expr::constant(1.0)
    }

    pub fn coord(i: usize) -> Expr {
        assert!(i < 4, "coordinate index {i} out of range");
        Expr::wrap(Node::Coord(i))
    }

    pub fn param(name: &str) -> Expr {
        Expr::wrap(Node::Param(name.to_string()))
    }

    pub fn as_const(&self) -> Option<f64> {
        match self.node() {
            Node::Const(v) => Some(*v),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.as_const() == Some(0.0)
    }

    pub fn neg(&self) -> Expr {
        match self.node() {
            Node::Const(v) => Expr::constant(-v),
            Node::Neg(inner) => inner.clone(),
            _ => Expr::wrap(Node::Neg(self.clone())),
        }
    }

    pub fn add(&self, rhs: &Expr) -> Expr {
        if self.is_zero() {
            return rhs.clone();
        }
        if rhs.is_zero() {
            return self.clone();
        }
        Expr::fold(BinOp::Add, self, rhs)
    }

    pub fn sub(&self, rhs: &Expr) -> Expr {
        if rhs.is_zero() {
            return self.clone();
        }
        if self.is_zero() {
            return rhs.neg();
        }
        Expr::fold(BinOp::Sub, self, rhs)
    }

    pub fn mul(&self, rhs: &Expr) -> Expr {
        if self.is_zero() || rhs.is_zero() {
            return Expr::zero();
        }
        if self.as_const() == Some(1.0) {
            return rhs.clone();
        }
        if rhs.as_const() == Some(1.0) {
            return self.clone();
        }
        Expr::fold(BinOp::Mul, self, rhs)
    }

    pub fn div(&self, rhs: &Expr) -> Expr {
        if rhs.as_const() == Some(1.0) {
            return self.clone();
        }
        if self.is_zero() && rhs.as_const().map_or(true, |v| v != 0.0) {
            return Expr::zero();
        }
        Expr::fold(BinOp::Div, self, rhs)
    }

    pub fn pow(&self, rhs: &Expr) -> Expr {
        match rhs.as_const() {
            Some(v) if v == 1.0 => return self.clone(),
            Some(v) if v == 0.0 => return Expr::one(),
            _ => {}
        }
        Expr::fold(BinOp::Pow, self, rhs)
    }

    pub fn call(f: Func, arg: &Expr) -> Expr {
        if let Some(v) = arg.as_const() {
            if let Ok(r) = apply(f, v) {
                return Expr::constant(r);
            }
        }
        Expr::wrap(Node::Call(f, arg.clone()))
    }

    fn fold(op: BinOp, a: &Expr, b: &Expr) -> Expr {
        if let (Some(x), Some(y)) = (a.as_const(), b.as_const()) {
            if let Ok(v) = binary(op, x, y) {
                return Expr::constant(v);
            }
        }
        Expr::wrap(Node::Bin(op, a.clone(), b.clone()))
    }

    /// Evaluates at `x` with no parameters bound.
    pub fn eval_at(&self, x: &[f64; 4]) -> Result<f64, EvalError> {
        self.eval(x, &Params::new())
    }

    pub fn eval(&self, x: &[f64; 4], params: &Params) -> Result<f64, EvalError> {
        match self.node() {
            Node::Const(v) => Ok(*v),
            Node::Coord(i) => Ok(x[*i]),
            Node::Param(name) => params
                .get(name)
                .copied()
                .ok_or_else(|| EvalError::UnboundParameter(name.clone())),
            Node::Neg(a) => Ok(-a.eval(x, params)?),
            Node::Bin(op, a, b) => binary(*op, a.eval(x, params)?, b.eval(x, params)?),
            Node::Call(f, a) => apply(*f, a.eval(x, params)?),
        }
    }

    /// Exact partial derivative with respect to `x^idx`.
    pub fn diff(&self, idx: usize) -> Expr {
        assert!(idx < 4, "coordinate index {idx} out of range");
        match self.node() {
            Node::Const(_) | Node::Param(_) => Expr::zero(),
            Node::Coord(i) => Expr::constant(if *i == idx { 1.0 } else { 0.0 }),
            Node::Neg(a) => a.diff(idx).neg(),
            Node::Bin(op, a, b) => {
                let da = a.diff(idx);
                let db = b.diff(idx);
                match op {
                    BinOp::Add => da.add(&db),
                    BinOp::Sub => da.sub(&db),
                    BinOp::Mul => da.mul(b).add(&a.mul(&db)),
                    BinOp::Div => da.mul(b).sub(&a.mul(&db)).div(&b.pow(&Expr::constant(2.0))),
                    BinOp::Pow => {
                        if db.is_zero() {
                            // d(a^n) = n a^(n-1) a'
                            let n_minus_1 = b.sub(&Expr::one());
                            b.mul(&a.pow(&n_minus_1)).mul(&da)
                        } else {
                            // d(a^b) = a^b (b' log a + b a'/a)
                            let log_a = Expr::call(Func::Log, a);
                            self.mul(&db.mul(&log_a).add(&b.mul(&da).div(a)))
                        }
                    }
                }
            }
            Node::Call(f, a) => {
                let da = a.diff(idx);
                if da.is_zero() {
                    return Expr::zero();
                }
                let outer = match f {
                    Func::Sin => Expr::call(Func::Cos, a),
                    Func::Cos => Expr::call(Func::Sin, a).neg(),
                    Func::Exp => self.clone(),
                    Func::Log => Expr::one().div(a),
                    Func::Sqrt => Expr::constant(0.5).div(self),
                    Func::Tanh => Expr::one().sub(&self.pow(&Expr::constant(2.0))),
                };
                outer.mul(&da)
            }
        }
    }

    /// Replaces bound parameters by constants and folds the result.
    pub fn bind(&self, params: &Params) -> Expr {
        match self.node() {
            Node::Const(_) | Node::Coord(_) => self.clone(),
            Node::Param(name) => match params.get(name) {
                Some(v) => Expr::constant(*v),
                None => self.clone(),
            },
            Node::Neg(a) => a.bind(params).neg(),
            Node::Bin(op, a, b) => {
                let (a, b) = (a.bind(params), b.bind(params));
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b),
                    BinOp::Pow => a.pow(&b),
                }
            }
            Node::Call(f, a) => Expr::call(*f, &a.bind(params)),
        }
    }

    /// Names of all parameters referenced by the expression.
    pub fn parameters(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self.node() {
            Node::Param(name) => out.push(name.clone()),
            Node::Neg(a) | Node::Call(_, a) => a.collect_params(out),
            Node::Bin(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Node::Const(_) | Node::Coord(_) => {}
        }
    }

    fn precedence(&self) -> u8 {
        match self.node() {
            Node::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Node::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Node::Neg(_) => 3,
            Node::Const(v) if v.is_sign_negative() => 3,
            Node::Bin(BinOp::Pow, ..) => 4,
            _ => 5,
        }
    }
}

fn binary(op: BinOp, a: f64, b: f64) -> Result<f64, EvalError> {
    let v = match op {
        BinOp::Add => a + b,
        BinOp::Sub => a - b,
        BinOp::Mul => a * b,
        BinOp::Div => {
            if b == 0.0 {
                return Err(EvalError::Domain { what: "division by zero", arg: a });
            }
            a / b
        }
        BinOp::Pow => {
            if a < 0.0 && b.fract() != 0.0 {
                return Err(EvalError::Domain { what: "non-integer power of negative base", arg: a });
            }
            if a == 0.0 && b < 0.0 {
                return Err(EvalError::Domain { what: "negative power of zero", arg: a });
            }
            a.powf(b)
        }
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain { what: "overflow", arg: v })
    }
}

fn apply(f: Func, a: f64) -> Result<f64, EvalError> {
    let v = match f {
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Exp => a.exp(),
        Func::Log => {
            if a <= 0.0 {
                return Err(EvalError::Domain { what: "log of nonpositive value", arg: a });
            }
            a.ln()
        }
        Func::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::Domain { what: "sqrt of negative value", arg: a });
            }
            a.sqrt()
        }
        Func::Tanh => a.tanh(),
    };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::Domain { what: "overflow", arg: a })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.node() {
            Node::Const(v) => write!(f, "{v}"),
            Node::Coord(i) => write!(f, "x{i}"),
            Node::Param(name) => f.write_str(name),
            Node::Neg(a) => {
                f.write_str("-")?;
                write_operand(f, a, 3)
            }
            Node::Bin(op, a, b) => {
                let (sym, lhs_min, rhs_min) = match op {
                    BinOp::Add => ("+", 1, 2),
                    BinOp::Sub => ("-", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                    BinOp::Pow => ("^", 5, 3),
                };
                write_operand(f, a, lhs_min)?;
                write!(f, " {sym} ")?;
                write_operand(f, b, rhs_min)
            }
            Node::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

fn write_operand(f: &mut fmt::Formatter<'_>, e: &Expr, min: u8) -> fmt::Result {
    if e.precedence() < min {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse(s)
    }
}

/// Evaluates a 4-vector of expressions.
pub fn eval4(es: &[Expr; 4], x: &[f64; 4]) -> Result<[f64; 4], EvalError> {
    Ok([es[0].eval_at(x)?, es[1].eval_at(x)?, es[2].eval_at(x)?, es[3].eval_at(x)?])
}
