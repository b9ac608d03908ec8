//! Expression tree and canonical printer.

use std::fmt;

/// Coordinate variable of the plane.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    X1,
    X2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

/// One-argument functions. `Sign` and `Step` appear mostly in derivatives of
/// `abs`, `min` and `max`, but they are part of the surface language so that
/// every derived field prints to a parseable string.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func1 {
    Abs,
    Sqrt,
    Sin,
    Cos,
    Exp,
    /// -1, 0, 1 with `sign(0) = 0`.
    Sign,
    /// Heaviside with `step(0) = 1`.
    Step,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Func2 {
    Min,
    Max,
}

impl Func1 {
    pub fn name(self) -> &'static str {
        match self {
            Func1::Abs => "abs",
            Func1::Sqrt => "sqrt",
            Func1::Sin => "sin",
            Func1::Cos => "cos",
            Func1::Exp => "exp",
            Func1::Sign => "sign",
            Func1::Step => "step",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "abs" => Func1::Abs,
            "sqrt" => Func1::Sqrt,
            "sin" => Func1::Sin,
            "cos" => Func1::Cos,
            "exp" => Func1::Exp,
            "sign" => Func1::Sign,
            "step" => Func1::Step,
            _ => return None,
        })
    }

    /// True for the piecewise-constant kink indicators.
    pub fn is_kink_indicator(self) -> bool {
        matches!(self, Func1::Sign | Func1::Step)
    }
}

impl Func2 {
    pub fn name(self) -> &'static str {
        match self {
            Func2::Min => "min",
            Func2::Max => "max",
        }
    }

    pub(crate) fn from_name(name: &str) -> Option<Self> {
        match name {
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            _ => None,
        }
    }
}

/// Expression over `x1`, `x2`. Numeric literals are finite and non-negative;
/// negation is always an explicit [`Expr::Neg`] node.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Pi,
    Var(Var),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    /// Integer power.
    Pow(Box<Expr>, i32),
    Call1(Func1, Box<Expr>),
    Call2(Func2, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn num(v: f64) -> Expr {
        if v < 0.0 {
            Expr::Neg(Box::new(Expr::Num(-v)))
        } else {
            // normalizes -0.0 as well
            Expr::Num(v.abs())
        }
    }

    pub fn var(v: Var) -> Expr {
        Expr::Var(v)
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 0.0)
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Num(v) if *v == 1.0)
    }

    /// Numeric value when the node is a literal, or a negated literal.
    pub fn as_literal(&self) -> Option<f64> {
        match self {
            Expr::Num(v) => Some(*v),
            Expr::Neg(inner) => match inner.as_ref() {
                Expr::Num(v) => Some(-*v),
                _ => None,
            },
            _ => None,
        }
    }

    pub fn contains_var(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::Pi => false,
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call1(_, a) => a.contains_var(),
            Expr::Bin(_, a, b) | Expr::Call2(_, a, b) => a.contains_var() || b.contains_var(),
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expr::Num(_) | Expr::Pi | Expr::Var(_) => 1,
            Expr::Neg(a) | Expr::Pow(a, _) | Expr::Call1(_, a) => 1 + a.node_count(),
            Expr::Bin(_, a, b) | Expr::Call2(_, a, b) => 1 + a.node_count() + b.node_count(),
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 1,
            Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 2,
            Expr::Neg(_) => 3,
            Expr::Pow(..) => 4,
            _ => 5,
        }
    }

    fn write_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let paren = self.precedence() < min_prec;
        if paren {
            f.write_str("(")?;
        }
        match self {
            Expr::Num(v) => write!(f, "{v:?}")?,
            Expr::Pi => f.write_str("pi")?,
            Expr::Var(Var::X1) => f.write_str("x1")?,
            Expr::Var(Var::X2) => f.write_str("x2")?,
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_prec(f, 3)?;
            }
            Expr::Bin(op, a, b) => {
                let (sym, lp, rp) = match op {
                    BinOp::Add => (" + ", 1, 2),
                    BinOp::Sub => (" - ", 1, 2),
                    BinOp::Mul => ("*", 2, 3),
                    BinOp::Div => ("/", 2, 3),
                };
                a.write_prec(f, lp)?;
                f.write_str(sym)?;
                b.write_prec(f, rp)?;
            }
            Expr::Pow(a, n) => {
                a.write_prec(f, 5)?;
                if *n < 0 {
                    write!(f, "^({n})")?;
                } else {
                    write!(f, "^{n}")?;
                }
            }
            Expr::Call1(func, a) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                f.write_str(")")?;
            }
            Expr::Call2(func, a, b) => {
                write!(f, "{}(", func.name())?;
                a.write_prec(f, 0)?;
                f.write_str(", ")?;
                b.write_prec(f, 0)?;
                f.write_str(")")?;
            }
        }
        if paren {
            f.write_str(")")?;
        }
        Ok(())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.write_prec(f, 0)
    }
}

// Smart constructors used by differentiation. They fold the trivial
// identities so that derivatives of constants come out as literal zero.

pub(crate) fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(v) if v == 0.0 => Expr::Num(0.0),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

pub(crate) fn add(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return b;
    }
    if b.is_zero() {
        return a;
    }
    if let (Some(x), Some(y)) = (a.as_literal(), b.as_literal()) {
        return Expr::num(x + y);
    }
    Expr::Bin(BinOp::Add, Box::new(a), Box::new(b))
}

pub(crate) fn sub(a: Expr, b: Expr) -> Expr {
    if b.is_zero() {
        return a;
    }
    if a.is_zero() {
        return neg(b);
    }
    if let (Some(x), Some(y)) = (a.as_literal(), b.as_literal()) {
        return Expr::num(x - y);
    }
    Expr::Bin(BinOp::Sub, Box::new(a), Box::new(b))
}

pub(crate) fn mul(a: Expr, b: Expr) -> Expr {
    if a.is_zero() || b.is_zero() {
        return Expr::Num(0.0);
    }
    if a.is_one() {
        return b;
    }
    if b.is_one() {
        return a;
    }
    if let (Some(x), Some(y)) = (a.as_literal(), b.as_literal()) {
        return Expr::num(x * y);
    }
    Expr::Bin(BinOp::Mul, Box::new(a), Box::new(b))
}

pub(crate) fn div(a: Expr, b: Expr) -> Expr {
    if a.is_zero() {
        return Expr::Num(0.0);
    }
    if b.is_one() {
        return a;
    }
    Expr::Bin(BinOp::Div, Box::new(a), Box::new(b))
}

pub(crate) fn powi(a: Expr, n: i32) -> Expr {
    match n {
        0 => Expr::Num(1.0),
        1 => a,
        _ => Expr::Pow(Box::new(a), n),
    }
}

pub(crate) fn call1(func: Func1, a: Expr) -> Expr {
    Expr::Call1(func, Box::new(a))
}
