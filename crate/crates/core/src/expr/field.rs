use std::fmt;
use std::sync::Arc;

use nalgebra::{Matrix2, Vector2};

use super::ast::Expr;
use super::diff;
use super::parse::{parse_expr, ParseError};
use super::tape::{EvalError, Tape};

/// Immutable, shareable scalar field `R^2 -> R`.
#[derive(Clone)]
pub struct ScalarField {
    inner: Arc<Inner>,
}

struct Inner {
    expr: Expr,
    tape: Tape,
    constant: Option<f64>,
}

impl ScalarField {
    pub fn parse(text: &str) -> Result<Self, ParseError> {
        Ok(Self::from_expr(parse_expr(text)?))
    }

    pub fn from_expr(expr: Expr) -> Self {
        let tape = Tape::compile(&expr);
        let constant = if expr.contains_var() { None } else { tape.eval(0.0, 0.0, false).ok() };
        ScalarField { inner: Arc::new(Inner { expr, tape, constant }) }
    }

    pub fn constant(c: f64) -> Self {
        Self::from_expr(Expr::num(c))
    }

    pub fn expr(&self) -> &Expr {
        &self.inner.expr
    }

    /// Value if the field does not depend on `x1`, `x2`.
    pub fn constant_value(&self) -> Option<f64> {
        self.inner.constant
    }

    /// Evaluate with the lenient kink convention.
    #[inline]
    pub fn eval(&self, x: Vector2<f64>) -> Result<f64, EvalError> {
        match self.inner.constant {
            Some(c) => Ok(c),
            None => self.inner.tape.eval(x.x, x.y, false),
        }
    }

    /// Evaluate, failing with [`EvalError::Kink`] if a kink indicator is hit
    /// exactly.
    pub fn eval_strict(&self, x: Vector2<f64>) -> Result<f64, EvalError> {
        match self.inner.constant {
            Some(c) => Ok(c),
            None => self.inner.tape.eval(x.x, x.y, true),
        }
    }

    pub fn gradient(&self) -> VectorField {
        let [a, b] = diff::gradient(self.expr());
        VectorField::new(Self::from_expr(a), Self::from_expr(b))
    }

    pub fn hessian(&self) -> MatrixField {
        let [[a, b], [c, d]] = diff::hessian(self.expr());
        MatrixField::new([
            [Self::from_expr(a), Self::from_expr(b)],
            [Self::from_expr(c), Self::from_expr(d)],
        ])
    }
}

impl fmt::Display for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.inner.expr.fmt(f)
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.inner.expr)
    }
}

impl PartialEq for ScalarField {
    fn eq(&self, other: &Self) -> bool {
        self.inner.expr == other.inner.expr
    }
}

/// Pair of scalar fields. Never normalized implicitly; see
/// [`VectorField::eval_unit`].
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Self {
        VectorField { u1, u2 }
    }

    pub fn parse(u1: &str, u2: &str) -> Result<Self, ParseError> {
        Ok(Self::new(ScalarField::parse(u1)?, ScalarField::parse(u2)?))
    }

    pub fn constant(v: Vector2<f64>) -> Self {
        Self::new(ScalarField::constant(v.x), ScalarField::constant(v.y))
    }

    pub fn constant_value(&self) -> Option<Vector2<f64>> {
        Some(Vector2::new(self.u1.constant_value()?, self.u2.constant_value()?))
    }

    #[inline]
    pub fn eval(&self, x: Vector2<f64>) -> Result<Vector2<f64>, EvalError> {
        Ok(Vector2::new(self.u1.eval(x)?, self.u2.eval(x)?))
    }

    pub fn eval_strict(&self, x: Vector2<f64>) -> Result<Vector2<f64>, EvalError> {
        Ok(Vector2::new(self.u1.eval_strict(x)?, self.u2.eval_strict(x)?))
    }

    /// Evaluate and normalize; `None` for a zero vector.
    pub fn eval_unit(&self, x: Vector2<f64>) -> Result<Option<Vector2<f64>>, EvalError> {
        let v = self.eval(x)?;
        let n = v.norm();
        Ok(if n > 0.0 { Some(v / n) } else { None })
    }
}

/// 2x2 grid of scalar fields, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub m: [[ScalarField; 2]; 2],
}

impl MatrixField {
    pub fn new(m: [[ScalarField; 2]; 2]) -> Self {
        MatrixField { m }
    }

    pub fn parse(rows: [[&str; 2]; 2]) -> Result<Self, ParseError> {
        Ok(Self::new([
            [ScalarField::parse(rows[0][0])?, ScalarField::parse(rows[0][1])?],
            [ScalarField::parse(rows[1][0])?, ScalarField::parse(rows[1][1])?],
        ]))
    }

    pub fn identity() -> Self {
        Self::constant(Matrix2::identity())
    }

    pub fn constant(a: Matrix2<f64>) -> Self {
        let c = |i, j| ScalarField::constant(a[(i, j)]);
        Self::new([[c(0, 0), c(0, 1)], [c(1, 0), c(1, 1)]])
    }

    pub fn constant_value(&self) -> Option<Matrix2<f64>> {
        let c = |i: usize, j: usize| self.m[i][j].constant_value();
        Some(Matrix2::new(c(0, 0)?, c(0, 1)?, c(1, 0)?, c(1, 1)?))
    }

    #[inline]
    pub fn eval(&self, x: Vector2<f64>) -> Result<Matrix2<f64>, EvalError> {
        let e = |i: usize, j: usize| self.m[i][j].eval(x);
        Ok(Matrix2::new(e(0, 0)?, e(0, 1)?, e(1, 0)?, e(1, 1)?))
    }

    pub fn eval_strict(&self, x: Vector2<f64>) -> Result<Matrix2<f64>, EvalError> {
        let e = |i: usize, j: usize| self.m[i][j].eval_strict(x);
        Ok(Matrix2::new(e(0, 0)?, e(0, 1)?, e(1, 0)?, e(1, 1)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(x: f64, y: f64) -> Vector2<f64> {
        Vector2::new(x, y)
    }

    #[test]
    fn parabola_value_and_gradient() {
        let f = ScalarField::parse("x2 - x1^2").unwrap();
        assert_eq!(f.eval(p(2.0, 5.0)).unwrap(), 1.0);
        assert_eq!(f.gradient().eval(p(1.0, 1.0)).unwrap(), p(-2.0, 1.0));
    }

    #[test]
    fn domain_errors_are_raised() {
        let f = ScalarField::parse("1/x1").unwrap();
        assert_eq!(f.eval(p(0.0, 0.0)), Err(EvalError::DivisionByZero));
        let f = ScalarField::parse("sqrt(x1)").unwrap();
        assert_eq!(f.eval(p(-1.0, 0.0)), Err(EvalError::SqrtOfNegative));
        let f = ScalarField::parse("x1^(-1)").unwrap();
        assert_eq!(f.eval(p(0.0, 0.0)), Err(EvalError::DivisionByZero));
        let f = ScalarField::parse("exp(x1)").unwrap();
        assert_eq!(f.eval(p(1000.0, 0.0)), Err(EvalError::NonFinite));
        // a constant with a domain error still fails at every point
        let f = ScalarField::parse("1/0").unwrap();
        assert!(f.constant_value().is_none());
        assert!(f.eval(p(1.0, 1.0)).is_err());
    }

    #[test]
    fn kinks_only_fail_in_strict_mode() {
        let g = ScalarField::parse("abs(x1)").unwrap().gradient();
        assert_eq!(g.eval(p(0.0, 0.0)).unwrap(), p(0.0, 0.0));
        assert_eq!(g.eval_strict(p(0.0, 0.0)), Err(EvalError::Kink));
        assert_eq!(g.eval_strict(p(0.5, 0.0)).unwrap(), p(1.0, 0.0));
    }

    #[test]
    fn min_max_ties_take_first_branch() {
        let f = ScalarField::parse("min(x1, 2*x1)").unwrap();
        assert_eq!(f.gradient().eval(p(0.0, 0.0)).unwrap().x, 1.0);
        let f = ScalarField::parse("max(2*x1, x1)").unwrap();
        assert_eq!(f.gradient().eval(p(0.0, 0.0)).unwrap().x, 2.0);
        let f = ScalarField::parse("max(x1, x2)").unwrap();
        assert_eq!(f.gradient().eval(p(0.0, 1.0)).unwrap(), p(0.0, 1.0));
    }

    #[test]
    fn affine_hessian_is_zero() {
        let h = ScalarField::parse("3*x1 - 2*x2 + 7").unwrap().hessian();
        assert_eq!(h.eval(p(0.3, -4.0)).unwrap(), Matrix2::zeros());
    }

    #[test]
    fn vector_normalization_is_explicit() {
        let v = VectorField::parse("3", "4").unwrap();
        assert_eq!(v.eval(p(0.0, 0.0)).unwrap(), p(3.0, 4.0));
        assert_eq!(v.eval_unit(p(0.0, 0.0)).unwrap(), Some(p(0.6, 0.8)));
        assert_eq!(VectorField::parse("0", "0").unwrap().eval_unit(p(0.0, 0.0)).unwrap(), None);
    }

    #[test]
    fn deep_expression_uses_heap_stack() {
        let mut s = String::from("x1");
        for _ in 0..40 {
            s = format!("x2 + ({s})");
        }
        // right-nested sums need a deep stack
        let mut r = String::from("x1");
        for _ in 0..40 {
            r = format!("(x2 - {r})");
        }
        let f = ScalarField::parse(&s).unwrap();
        assert_eq!(f.eval(p(1.0, 1.0)).unwrap(), 41.0);
        let g = ScalarField::parse(&r).unwrap();
        assert_eq!(g.eval(p(1.0, 1.0)).unwrap(), 1.0);
    }
}
