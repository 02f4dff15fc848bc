//! Expression language for user-supplied component functions.
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! Identifiers are `x1..xm` and `y1..ym`; functions are `sqrt`, `sin`,
//! `cos`, `exp` and `log`. There is no unary minus, write `0-a`.

use std::fmt;

use crate::jet::{JetError, Scalar};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier '{name}' at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("{func} takes one argument, got {found} at offset {offset}")]
    Arity {
        func: String,
        found: usize,
        offset: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Sin,
    Cos,
    Exp,
    Log,
}

impl Func {
    fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "log" => Func::Log,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Log => "log",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    /// Chart coordinate `x^(i+1)`.
    X(usize),
    /// Fiber coordinate `y^(i+1)`.
    Y(usize),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn parse(src: &str, m: usize) -> Result<Expr, ParseError> {
        let mut p = Parser { src: src.as_bytes(), pos: 0, m };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(p.syntax("unexpected trailing input"));
        }
        Ok(e)
    }

    pub fn eval<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<S, JetError> {
        Ok(match self {
            Expr::Num(c) => x[0].lift(*c),
            Expr::X(i) => x[*i].clone(),
            Expr::Y(i) => y[*i].clone(),
            Expr::Add(a, b) => a.eval(x, y)? + b.eval(x, y)?,
            Expr::Sub(a, b) => a.eval(x, y)? - b.eval(x, y)?,
            Expr::Mul(a, b) => a.eval(x, y)? * b.eval(x, y)?,
            Expr::Div(a, b) => a.eval(x, y)?.checked_div(&b.eval(x, y)?)?,
            Expr::Pow(a, n) => a.eval(x, y)?.powi(*n),
            Expr::Call(f, a) => {
                let v = a.eval(x, y)?;
                match f {
                    Func::Sqrt => v.checked_sqrt()?,
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                    Func::Exp => v.exp(),
                    Func::Log => v.checked_ln()?,
                }
            }
        })
    }

    /// True when the expression mentions no fiber coordinate.
    pub fn is_y_free(&self) -> bool {
        match self {
            Expr::Num(_) | Expr::X(_) => true,
            Expr::Y(_) => false,
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
                a.is_y_free() && b.is_y_free()
            }
            Expr::Pow(a, _) | Expr::Call(_, a) => a.is_y_free(),
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) => write!(f, "{c}"),
            Expr::X(i) => write!(f, "x{}", i + 1),
            Expr::Y(i) => write!(f, "y{}", i + 1),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, n) => write!(f, "({a})^{n}"),
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    m: usize,
}

impl Parser<'_> {
    fn syntax(&self, message: &str) -> ParseError {
        ParseError::Syntax {
            offset: self.pos,
            message: message.to_string(),
        }
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

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.syntax(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some(c @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            lhs = if c == b'+' {
                Expr::Add(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Sub(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        while let Some(c @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.factor()?;
            lhs = if c == b'*' {
                Expr::Mul(Box::new(lhs), Box::new(rhs))
            } else {
                Expr::Div(Box::new(lhs), Box::new(rhs))
            };
        }
        Ok(lhs)
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            self.skip_ws();
            let start = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if start == self.pos {
                return Err(self.syntax("expected integer exponent"));
            }
            let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
            let n: u32 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                message: "exponent out of range".into(),
            })?;
            return Ok(Expr::Pow(Box::new(base), n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
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
        let mut count = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            count += digits(self);
        }
        if count == 0 {
            return Err(ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            });
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Num)
            .map_err(|_| ParseError::Syntax {
                offset: start,
                message: "malformed number".into(),
            })
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        if let Some(func) = Func::from_name(name) {
            self.expect(b'(')?;
            let arg = self.expr()?;
            if self.peek() == Some(b',') {
                let mut found = 1;
                while self.peek() == Some(b',') {
                    self.pos += 1;
                    self.expr()?;
                    found += 1;
                }
                return Err(ParseError::Arity {
                    func: name.to_string(),
                    found,
                    offset: start,
                });
            }
            self.expect(b')')?;
            return Ok(Expr::Call(func, Box::new(arg)));
        }
        let unknown = || ParseError::UnknownIdentifier {
            name: name.to_string(),
            offset: start,
        };
        let (kind, index) = name.split_at(1);
        let k: usize = match index.parse() {
            Ok(k) if index.bytes().all(|b| b.is_ascii_digit()) => k,
            _ => return Err(unknown()),
        };
        if k == 0 || k > self.m {
            return Err(unknown());
        }
        match kind {
            "x" => Ok(Expr::X(k - 1)),
            "y" => Ok(Expr::Y(k - 1)),
            _ => Err(unknown()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn precedence_and_power() {
        let e = Expr::parse("1 + 2*y1^2", 3).unwrap();
        assert_eq!(e.eval(&[0.0; 3], &[3.0, 0.0, 0.0]).unwrap(), 19.0);
        let e = Expr::parse("(1 + 2)*3 - 4/2", 3).unwrap();
        assert_eq!(e.eval(&[0.0; 3], &[1.0; 3]).unwrap(), 7.0);
        let e = Expr::parse("2^3^", 3);
        assert!(e.is_err());
    }

    #[test]
    fn truncated_input_reports_end_offset() {
        // the input is 11 bytes long; the missing term starts at its end
        match Expr::parse("sqrt(y1^2 +", 3) {
            Err(ParseError::Syntax { offset, .. }) => assert_eq!(offset, 11),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn identifier_and_arity_errors() {
        assert!(matches!(
            Expr::parse("y4 + 1", 3),
            Err(ParseError::UnknownIdentifier { offset: 0, .. })
        ));
        assert!(matches!(
            Expr::parse("1 + z1", 3),
            Err(ParseError::UnknownIdentifier { offset: 4, .. })
        ));
        assert!(matches!(
            Expr::parse("sqrt(y1, y2)", 3),
            Err(ParseError::Arity { found: 2, .. })
        ));
    }

    #[test]
    fn functions_and_domain() {
        let e = Expr::parse("log(exp(x1)) + sin(0)*cos(0)", 3).unwrap();
        assert!((e.eval(&[0.7, 0.0, 0.0], &[1.0; 3]).unwrap() - 0.7).abs() < 1e-15);
        let e = Expr::parse("sqrt(0 - y1)", 3).unwrap();
        assert!(e.eval(&[0.0; 3], &[1.0; 3]).is_err());
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000).prop_map(|n| Expr::Num(f64::from(n) / 8.0)),
            (0usize..3).prop_map(Expr::X),
            (0usize..3).prop_map(Expr::Y),
        ];
        leaf.prop_recursive(4, 24, 2, |inner| {
            prop_oneof![
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Add(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Sub(a.into(), b.into())),
                (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::Mul(a.into(), b.into())),
                (inner.clone(), 0u32..4).prop_map(|(a, n)| Expr::Pow(a.into(), n)),
                inner.clone().prop_map(|a| Expr::Call(Func::Sin, a.into())),
                inner.prop_map(|a| Expr::Call(Func::Exp, a.into())),
            ]
        })
    }

    proptest! {
        #[test]
        fn display_round_trips(e in arb_expr()) {
            let text = e.to_string();
            prop_assert_eq!(Expr::parse(&text, 3).unwrap(), e);
        }
    }
}
