//! Symbolic partial derivatives.
//!
//! Kink convention: `abs'(0) = 0` through `sign(0) = 0`; `min`/`max`
//! differentiate through the attained branch, ties going to the first
//! argument through `step(0) = 1`. The indicators themselves have derivative
//! zero.

use super::ast::{add, call1, div, mul, neg, powi, sub, BinOp, Expr, Func1, Func2, Var};

pub fn derivative(e: &Expr, v: Var) -> Expr {
    match e {
        Expr::Num(_) | Expr::Pi => Expr::Num(0.0),
        Expr::Var(w) => Expr::Num(if *w == v { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(derivative(a, v)),
        Expr::Bin(op, a, b) => {
            let da = derivative(a, v);
            let db = derivative(b, v);
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, (**b).clone()), mul((**a).clone(), db)),
                BinOp::Div => {
                    let left = div(da, (**b).clone());
                    let right = if db.is_zero() {
                        Expr::Num(0.0)
                    } else {
                        div(mul((**a).clone(), db), powi((**b).clone(), 2))
                    };
                    sub(left, right)
                }
            }
        }
        Expr::Pow(a, n) => {
            let da = derivative(a, v);
            if da.is_zero() {
                return Expr::Num(0.0);
            }
            let coeff = Expr::num(*n as f64);
            mul(mul(coeff, powi((**a).clone(), n - 1)), da)
        }
        Expr::Call1(f, a) => {
            let da = derivative(a, v);
            if da.is_zero() {
                return Expr::Num(0.0);
            }
            let a = (**a).clone();
            let outer = match f {
                Func1::Abs => call1(Func1::Sign, a),
                Func1::Sqrt => return div(da, mul(Expr::Num(2.0), call1(Func1::Sqrt, a))),
                Func1::Sin => call1(Func1::Cos, a),
                Func1::Cos => neg(call1(Func1::Sin, a)),
                Func1::Exp => call1(Func1::Exp, a),
                Func1::Sign | Func1::Step => return Expr::Num(0.0),
            };
            mul(outer, da)
        }
        Expr::Call2(f, a, b) => {
            let da = derivative(a, v);
            let db = derivative(b, v);
            if da.is_zero() && db.is_zero() {
                return Expr::Num(0.0);
            }
            // indicator of "first argument attained"
            let gap = match f {
                Func2::Min => sub((**b).clone(), (**a).clone()),
                Func2::Max => sub((**a).clone(), (**b).clone()),
            };
            let first = call1(Func1::Step, gap);
            let second = sub(Expr::Num(1.0), first.clone());
            add(mul(first, da), mul(second, db))
        }
    }
}

/// Gradient as two expressions.
pub fn gradient(e: &Expr) -> [Expr; 2] {
    [derivative(e, Var::X1), derivative(e, Var::X2)]
}

/// Hessian with the off-diagonal entry computed once and mirrored, so the
/// result is symmetric by construction.
pub fn hessian(e: &Expr) -> [[Expr; 2]; 2] {
    let [g1, g2] = gradient(e);
    let h11 = derivative(&g1, Var::X1);
    let h12 = derivative(&g1, Var::X2);
    let h22 = derivative(&g2, Var::X2);
    [[h11, h12.clone()], [h12, h22]]
}
