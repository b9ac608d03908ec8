//! Postfix evaluation tape compiled from an [`Expr`].

use super::ast::{BinOp, Expr, Func1, Func2, Var};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("square root of a negative number")]
    SqrtOfNegative,
    #[error("non-finite intermediate value")]
    NonFinite,
    /// A kink indicator (`sign`/`step`) was evaluated exactly at zero in
    /// strict mode.
    #[error("evaluation landed exactly on a kink")]
    Kink,
}

impl EvalError {
    pub fn is_domain(self) -> bool {
        !matches!(self, EvalError::Kink)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Op {
    Const(f64),
    X1,
    X2,
    Neg,
    Add,
    Sub,
    Mul,
    Div,
    Pow(i32),
    F1(Func1),
    F2(Func2),
}

const INLINE_STACK: usize = 32;

#[derive(Clone, Debug)]
pub(crate) struct Tape {
    ops: Vec<Op>,
    depth: usize,
}

impl Tape {
    pub(crate) fn compile(e: &Expr) -> Tape {
        let mut ops = Vec::with_capacity(e.node_count());
        let mut depth = 0;
        emit(e, &mut ops, 0, &mut depth);
        Tape { ops, depth }
    }

    pub(crate) fn eval(&self, x1: f64, x2: f64, strict: bool) -> Result<f64, EvalError> {
        if self.depth <= INLINE_STACK {
            let mut stack = [0.0f64; INLINE_STACK];
            self.run(&mut stack, x1, x2, strict)
        } else {
            let mut stack = vec![0.0f64; self.depth];
            self.run(&mut stack, x1, x2, strict)
        }
    }

    #[inline]
    fn run(&self, st: &mut [f64], x1: f64, x2: f64, strict: bool) -> Result<f64, EvalError> {
        let mut sp = 0usize;
        for op in &self.ops {
            match *op {
                Op::Const(c) => {
                    st[sp] = c;
                    sp += 1;
                }
                Op::X1 => {
                    st[sp] = x1;
                    sp += 1;
                }
                Op::X2 => {
                    st[sp] = x2;
                    sp += 1;
                }
                Op::Neg => st[sp - 1] = -st[sp - 1],
                Op::Pow(n) => {
                    let a = st[sp - 1];
                    if n < 0 && a == 0.0 {
                        return Err(EvalError::DivisionByZero);
                    }
                    st[sp - 1] = check(a.powi(n))?;
                }
                Op::F1(f) => {
                    let a = st[sp - 1];
                    st[sp - 1] = check(apply1(f, a, strict)?)?;
                }
                Op::Add | Op::Sub | Op::Mul | Op::Div | Op::F2(_) => {
                    sp -= 1;
                    let b = st[sp];
                    let a = st[sp - 1];
                    let r = match *op {
                        Op::Add => a + b,
                        Op::Sub => a - b,
                        Op::Mul => a * b,
                        Op::Div => {
                            if b == 0.0 {
                                return Err(EvalError::DivisionByZero);
                            }
                            a / b
                        }
                        Op::F2(Func2::Min) => a.min(b),
                        Op::F2(Func2::Max) => a.max(b),
                        _ => unreachable!(),
                    };
                    st[sp - 1] = check(r)?;
                }
            }
        }
        debug_assert_eq!(sp, 1);
        Ok(st[0])
    }
}

#[inline]
fn check(v: f64) -> Result<f64, EvalError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(EvalError::NonFinite)
    }
}

#[inline]
fn apply1(f: Func1, a: f64, strict: bool) -> Result<f64, EvalError> {
    Ok(match f {
        Func1::Abs => a.abs(),
        Func1::Sqrt => {
            if a < 0.0 {
                return Err(EvalError::SqrtOfNegative);
            }
            a.sqrt()
        }
        Func1::Sin => a.sin(),
        Func1::Cos => a.cos(),
        Func1::Exp => a.exp(),
        Func1::Sign | Func1::Step if strict && a == 0.0 => return Err(EvalError::Kink),
        Func1::Sign => {
            if a > 0.0 {
                1.0
            } else if a < 0.0 {
                -1.0
            } else {
                0.0
            }
        }
        Func1::Step => {
            if a >= 0.0 {
                1.0
            } else {
                0.0
            }
        }
    })
}

fn emit(e: &Expr, ops: &mut Vec<Op>, base: usize, depth: &mut usize) {
    *depth = (*depth).max(base + 1);
    match e {
        Expr::Num(v) => ops.push(Op::Const(*v)),
        Expr::Pi => ops.push(Op::Const(std::f64::consts::PI)),
        Expr::Var(Var::X1) => ops.push(Op::X1),
        Expr::Var(Var::X2) => ops.push(Op::X2),
        Expr::Neg(a) => {
            emit(a, ops, base, depth);
            ops.push(Op::Neg);
        }
        Expr::Pow(a, n) => {
            emit(a, ops, base, depth);
            ops.push(Op::Pow(*n));
        }
        Expr::Call1(f, a) => {
            emit(a, ops, base, depth);
            ops.push(Op::F1(*f));
        }
        Expr::Bin(op, a, b) => {
            emit(a, ops, base, depth);
            emit(b, ops, base + 1, depth);
            ops.push(match op {
                BinOp::Add => Op::Add,
                BinOp::Sub => Op::Sub,
                BinOp::Mul => Op::Mul,
                BinOp::Div => Op::Div,
            });
        }
        Expr::Call2(f, a, b) => {
            emit(a, ops, base, depth);
            emit(b, ops, base + 1, depth);
            ops.push(Op::F2(*f));
        }
    }
}
