//! Recursive-descent parser for the field language.

use super::ast::{BinOp, Expr, Func1, Func2, Var};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },
}

impl ParseError {
    pub fn offset(&self) -> usize {
        match self {
            ParseError::Syntax { offset, .. } | ParseError::UnknownIdentifier { offset, .. } => *offset,
        }
    }
}

/// Parse an expression over `x1`, `x2`.
pub fn parse_expr(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.src.len() {
        return Err(p.syntax("unexpected trailing input"));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax { offset: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.syntax(&format!("expected `{}`", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            let inner = self.unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let n = if self.eat(b'(') {
            let n = self.signed_int()?;
            self.expect(b')')?;
            n
        } else {
            self.signed_int()?
        };
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn signed_int(&mut self) -> Result<i32, ParseError> {
        let neg = self.eat(b'-');
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.syntax("integer exponent expected"));
        }
        if matches!(self.src.get(self.pos), Some(b'.' | b'e' | b'E')) {
            return Err(self.syntax("exponent must be an integer; use sqrt for half powers"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let v: i32 = digits.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "exponent out of range".into(),
        })?;
        Ok(if neg { -v } else { v })
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.syntax("unexpected end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.ident(),
            Some(_) => Err(self.syntax("unexpected character")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return Err(self.syntax("malformed number"));
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return Err(self.syntax("malformed exponent in number"));
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
            offset: start,
            message: "malformed number".into(),
        })?;
        if !v.is_finite() {
            return Err(ParseError::Syntax { offset: start, message: "number out of range".into() });
        }
        Ok(Expr::Num(v))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii ident");
        if self.peek() == Some(b'(') {
            if let Some(f) = Func1::from_name(name) {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(b')')?;
                return Ok(Expr::Call1(f, Box::new(a)));
            }
            if let Some(f) = Func2::from_name(name) {
                self.pos += 1;
                let a = self.expr()?;
                self.expect(b',')?;
                let b = self.expr()?;
                self.expect(b')')?;
                return Ok(Expr::Call2(f, Box::new(a), Box::new(b)));
            }
            return Err(ParseError::UnknownIdentifier { name: name.to_string(), offset: start });
        }
        match name {
            "x1" => Ok(Expr::Var(Var::X1)),
            "x2" => Ok(Expr::Var(Var::X2)),
            "pi" => Ok(Expr::Pi),
            _ => Err(ParseError::UnknownIdentifier { name: name.to_string(), offset: start }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_parabola() {
        let e = parse_expr("x2 - x1^2").unwrap();
        let want = Expr::Bin(
            BinOp::Sub,
            Box::new(Expr::Var(Var::X2)),
            Box::new(Expr::Pow(Box::new(Expr::Var(Var::X1)), 2)),
        );
        assert_eq!(e, want);
    }

    #[test]
    fn incomplete_sum_reports_end_offset() {
        let err = parse_expr("1 +").unwrap_err();
        assert!(matches!(err, ParseError::Syntax { offset: 3, .. }), "{err:?}");
    }

    #[test]
    fn unknown_variable() {
        let err = parse_expr("x1 + y").unwrap_err();
        assert_eq!(err, ParseError::UnknownIdentifier { name: "y".into(), offset: 5 });
        let err = parse_expr("tan(x1)").unwrap_err();
        assert!(matches!(err, ParseError::UnknownIdentifier { offset: 0, .. }));
    }

    #[test]
    fn rejects_fractional_exponent() {
        assert!(parse_expr("abs(x1)^(3/2)").is_err());
        assert!(parse_expr("x1^1.5").is_err());
    }

    #[test]
    fn negative_exponents_and_unary() {
        assert_eq!(parse_expr("x1^-2").unwrap(), parse_expr("x1^(-2)").unwrap());
        let e = parse_expr("-x1^2").unwrap();
        assert!(matches!(e, Expr::Neg(ref inner) if matches!(**inner, Expr::Pow(..))));
        assert!(parse_expr("2*-3").is_ok());
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_expr("1e-3").unwrap(), Expr::Num(1e-3));
        assert_eq!(parse_expr(".5").unwrap(), Expr::Num(0.5));
        assert!(parse_expr("1e").is_err());
        assert!(parse_expr("1e999").is_err());
        assert!(parse_expr(".").is_err());
    }

    #[test]
    fn trailing_garbage() {
        let err = parse_expr("x1 x2").unwrap_err();
        assert_eq!(err.offset(), 3);
        assert!(parse_expr("min(x1)").is_err());
        assert!(parse_expr("").is_err());
    }
}
