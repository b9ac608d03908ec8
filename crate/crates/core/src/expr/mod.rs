//! Field expression language over the plane.
//!
//! ```text
//! expr    = term , { ( "+" | "-" ) , term } ;
//! term    = unary , { ( "*" | "/" ) , unary } ;
//! unary   = "-" , unary | power ;
//! power   = atom , [ "^" , ( int | "(" , int , ")" ) ] ;
//! int     = [ "-" ] , digit , { digit } ;
//! atom    = number | "pi" | "x1" | "x2" | call | "(" , expr , ")" ;
//! call    = func1 , "(" , expr , ")" | func2 , "(" , expr , "," , expr , ")" ;
//! func1   = "abs" | "sqrt" | "sin" | "cos" | "exp" | "sign" | "step" ;
//! func2   = "min" | "max" ;
//! ```
//!
//! Fields are parsed once, compiled to a postfix tape and differentiated
//! symbolically.

mod ast;
mod diff;
mod field;
mod parse;
mod tape;

pub use ast::{BinOp, Expr, Func1, Func2, Var};
pub use field::{MatrixField, ScalarField, VectorField};
pub use parse::{parse_expr, ParseError};
pub use tape::EvalError;

/// Symbolic partial derivative of an expression.
pub fn derivative(e: &Expr, v: Var) -> Expr {
    diff::derivative(e, v)
}
