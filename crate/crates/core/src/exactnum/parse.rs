//! Literal grammar:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | '+' unary | primary
//! primary := number | 'sqrt' '(' expr ')' | '(' expr ')' | 'golden' | 'phi'
//! number  := digits ('.' digits)? (('e' | 'E') ('+' | '-')? digits)?
//! ```
//!
//! Decimals are read as exact rationals, so `0.1` is `1/10`.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;

use super::{ExactReal, NumError};

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, reason: impl Into<String>) -> NumError {
        NumError::Parse {
            input: self.src.to_string(),
            pos: self.pos,
            reason: reason.into(),
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

    fn expect(&mut self, c: u8) -> Result<(), NumError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", c as char)))
        }
    }

    fn lift(&self, r: Result<ExactReal, NumError>) -> Result<ExactReal, NumError> {
        r.map_err(|e| match e {
            NumError::Parse { .. } => e,
            other => self.err(other.to_string()),
        })
    }

    fn expr(&mut self) -> Result<ExactReal, NumError> {
        let mut acc = self.term()?;
        loop {
            if self.eat(b'+') {
                let rhs = self.term()?;
                acc = self.lift(acc.try_add(&rhs))?;
            } else if self.eat(b'-') {
                let rhs = self.term()?;
                acc = self.lift(acc.try_sub(&rhs))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<ExactReal, NumError> {
        let mut acc = self.unary()?;
        loop {
            if self.eat(b'*') {
                let rhs = self.unary()?;
                acc = self.lift(acc.try_mul(&rhs))?;
            } else if self.eat(b'/') {
                let rhs = self.unary()?;
                acc = self.lift(acc.try_div(&rhs))?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<ExactReal, NumError> {
        if self.eat(b'-') {
            Ok(-self.unary()?)
        } else if self.eat(b'+') {
            self.unary()
        } else {
            self.primary()
        }
    }

    fn primary(&mut self) -> Result<ExactReal, NumError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                self.expect(b')')?;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_alphanumeric() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    "golden" | "phi" => Ok(ExactReal::golden()),
                    "sqrt" => {
                        self.expect(b'(')?;
                        let arg = self.expr()?;
                        self.expect(b')')?;
                        let q = arg
                            .as_rational()
                            .ok_or_else(|| self.err("sqrt argument must be rational"))?;
                        self.lift(ExactReal::sqrt_rational(q))
                    }
                    other => {
                        self.pos = start;
                        Err(self.err(format!("unknown identifier {other:?}")))
                    }
                }
            }
            Some(_) => Err(self.err("unexpected character")),
            None => Err(self.err("unexpected end of input")),
        }
    }

    fn digits(&mut self) -> &'a str {
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn number(&mut self) -> Result<ExactReal, NumError> {
        let int_part = self.digits();
        let mut frac_part = "";
        if self.pos < self.bytes.len() && self.bytes[self.pos] == b'.' {
            self.pos += 1;
            frac_part = self.digits();
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(self.err("expected digits"));
        }
        let mantissa: BigInt = format!("0{int_part}{frac_part}").parse().unwrap();
        let mut exp = -(frac_part.len() as i64);
        if self.pos < self.bytes.len() && matches!(self.bytes[self.pos], b'e' | b'E') {
            self.pos += 1;
            let neg = match self.bytes.get(self.pos) {
                Some(b'-') => {
                    self.pos += 1;
                    true
                }
                Some(b'+') => {
                    self.pos += 1;
                    false
                }
                _ => false,
            };
            let e = self.digits();
            let e: i64 = e.parse().map_err(|_| self.err("bad exponent"))?;
            if e > 10_000 {
                return Err(self.err("exponent too large"));
            }
            exp += if neg { -e } else { e };
        }
        let ten = BigInt::from(10u32);
        let scale = num_traits::pow(ten, exp.unsigned_abs() as usize);
        let q = if exp >= 0 {
            BigRational::from_integer(mantissa * scale)
        } else {
            BigRational::new(mantissa, scale)
        };
        Ok(ExactReal::Rational(q))
    }
}

/// Parses a number literal.
pub fn parse_exact(src: &str) -> Result<ExactReal, NumError> {
    let mut p = Parser {
        src,
        bytes: src.as_bytes(),
        pos: 0,
    };
    let v = p.expr()?;
    if p.peek().is_some() {
        return Err(p.err("trailing input"));
    }
    Ok(v)
}

impl FromStr for ExactReal {
    type Err = NumError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_exact(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ExactReal {
        s.parse().unwrap()
    }

    #[test]
    fn decimals_are_exact() {
        assert_eq!(p("0.1"), ExactReal::ratio(1, 10));
        assert_eq!(p("1e6"), ExactReal::from_int(1_000_000));
        assert_eq!(p("2.5e-1"), ExactReal::ratio(1, 4));
        assert_eq!(p(".5"), ExactReal::ratio(1, 2));
    }

    #[test]
    fn quadratic_forms() {
        assert_eq!(p("sqrt(5)/2-1/2"), ExactReal::golden());
        assert_eq!(p("golden"), p("(sqrt(5)-1)/2"));
        assert_eq!(p("sqrt(8)"), p("2*sqrt(2)"));
        assert_eq!(p("sqrt(1/2)"), p("sqrt(2)/2"));
        assert_eq!(p("1/(sqrt(2)+1)"), p("sqrt(2)-1"));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/", "sqrt(2", "foo", "1 2", "sqrt(2)+sqrt(3)", "1/0", "sqrt(-1)"] {
            assert!(bad.parse::<ExactReal>().is_err(), "{bad}");
        }
    }
}
