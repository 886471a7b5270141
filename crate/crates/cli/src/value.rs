//! Text and number forms of scalar coefficients.
//!
//! Exact values are written as expressions over rationals and `tau` (= 2π),
//! for example `"1/3"`, `"-4*tau^4"` or `"(tau^2 + 1)/(tau)"`.

use ellipsis_core::{Exact, Scalar};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// A coefficient as it appears in JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CoeffValue {
    Number(f64),
    Text(String),
}

/// Scalars that can be read from and written to JSON coefficients.
pub trait Codec: Scalar {
    const MODE: crate::schema::Mode;

    /// Lossy conversions push a message onto `warnings`.
    fn decode(v: &CoeffValue, warnings: &mut Vec<String>) -> Result<Self, CliError>;

    fn encode(&self) -> CoeffValue;
}

impl Codec for f64 {
    const MODE: crate::schema::Mode = crate::schema::Mode::Float;

    fn decode(v: &CoeffValue, warnings: &mut Vec<String>) -> Result<Self, CliError> {
        match v {
            CoeffValue::Number(x) => Ok(*x),
            CoeffValue::Text(s) => {
                let e = parse_exact(s)?;
                let x = e.to_f64();
                if Exact::from_f64(x).as_ref() != Some(&e) {
                    warnings.push(format!("coefficient \"{}\" rounded to {}", s, x));
                }
                Ok(x)
            }
        }
    }

    fn encode(&self) -> CoeffValue {
        CoeffValue::Number(*self)
    }
}

impl Codec for Exact {
    const MODE: crate::schema::Mode = crate::schema::Mode::Exact;

    fn decode(v: &CoeffValue, warnings: &mut Vec<String>) -> Result<Self, CliError> {
        match v {
            CoeffValue::Text(s) => parse_exact(s),
            CoeffValue::Number(x) => {
                if x.fract() != 0.0 {
                    warnings.push(format!("coefficient {} taken as its binary value", x));
                }
                Exact::from_f64(*x).ok_or_else(|| CliError::invalid(format!("coefficient {} is not finite", x)))
            }
        }
    }

    fn encode(&self) -> CoeffValue {
        CoeffValue::Text(self.to_string())
    }
}

/// Parses `+ - * / ^`, parentheses, decimal numbers, `tau` and `pi`.
pub fn parse_exact(text: &str) -> Result<Exact, CliError> {
    let mut p = Parser {
        src: text.as_bytes(),
        pos: 0,
    };
    let v = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.fail("unexpected character"));
    }
    Ok(v)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn fail(&self, what: &str) -> CliError {
        CliError::invalid(format!(
            "{} at offset {} in \"{}\"",
            what,
            self.pos,
            String::from_utf8_lossy(self.src)
        ))
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

    fn expr(&mut self) -> Result<Exact, CliError> {
        let mut acc = self.term()?;
        while let Some(op @ (b'+' | b'-')) = self.peek() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == b'+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Exact, CliError> {
        let mut acc = self.unary()?;
        while let Some(op @ (b'*' | b'/')) = self.peek() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == b'*' {
                &acc * &rhs
            } else {
                if rhs.is_zero() {
                    return Err(self.fail("division by zero"));
                }
                &acc / &rhs
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Exact, CliError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Exact, CliError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let n: u32 = std::str::from_utf8(&self.src[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| self.fail("expected exponent"))?;
        let mut out = Exact::one();
        for _ in 0..n {
            out = &out * &base;
        }
        Ok(out)
    }

    fn atom(&mut self) -> Result<Exact, CliError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.fail("expected ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
                    self.pos += 1;
                }
                match &self.src[start..self.pos] {
                    b"tau" => Ok(Exact::tau()),
                    b"pi" => Ok(&Exact::tau() / &Exact::from_integer(2)),
                    _ => {
                        self.pos = start;
                        Err(self.fail("unknown name"))
                    }
                }
            }
            _ => Err(self.fail("expected a value")),
        }
    }

    fn number(&mut self) -> Result<Exact, CliError> {
        let start = self.pos;
        let mut num = BigInt::zero();
        let mut den = BigInt::one();
        let mut seen_point = false;
        let mut digits = 0;
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_digit() {
                num = num * 10 + BigInt::from(c - b'0');
                if seen_point {
                    den *= 10;
                }
                digits += 1;
            } else if c == b'.' && !seen_point {
                seen_point = true;
            } else {
                break;
            }
            self.pos += 1;
        }
        if digits == 0 {
            self.pos = start;
            return Err(self.fail("expected digits"));
        }
        Ok(Exact::from_rational(BigRational::new(num, den)))
    }
}
