//! Arithmetic expressions over state variables, parsed into polynomials.
//!
//! Supports `+ - * / ^`, parentheses, numeric literals, named constants,
//! `pi`, and `sin(...)`, which is replaced by its cubic Taylor polynomial
//! `u - u^3/6`. Division is only allowed by constant subexpressions.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::poly::{Polynomial, VariableSpace};

/// Parse `src` into a polynomial over `space`, resolving identifiers that
/// are not variables through `constants`.
pub fn parse_polynomial(src: &str, space: &VariableSpace, constants: &BTreeMap<String, f64>) -> Result<Polynomial> {
    let tokens = tokenize(src)?;
    let mut p = Parser { tokens, pos: 0, space, constants, src };
    let out = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(out)
}

/// Cubic Taylor approximation of `sin(u)` about 0.
pub fn taylor_sin(u: &Polynomial) -> Polynomial {
    u - &u.pow(3).scale(1.0 / 6.0)
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
                let save = i;
                i += 1;
                if i < chars.len() && (chars[i] == '+' || chars[i] == '-') {
                    i += 1;
                }
                if i < chars.len() && chars[i].is_ascii_digit() {
                    while i < chars.len() && chars[i].is_ascii_digit() {
                        i += 1;
                    }
                } else {
                    i = save;
                }
            }
            let text: String = chars[start..i].iter().collect();
            let v = text.parse::<f64>().map_err(|_| Error::parse(0, format!("bad number `{text}` in `{src}`")))?;
            out.push(Tok::Num(v));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            out.push(Tok::Ident(chars[start..i].iter().collect()));
        } else if "+-*/^()".contains(c) {
            out.push(Tok::Op(c));
            i += 1;
        } else {
            return Err(Error::parse(0, format!("unexpected character `{c}` in `{src}`")));
        }
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Tok>,
    pos: usize,
    space: &'a VariableSpace,
    constants: &'a BTreeMap<String, f64>,
    src: &'a str,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::parse(0, format!("{msg} in expression `{}`", self.src))
    }

    fn peek_op(&self) -> Option<char> {
        match self.tokens.get(self.pos) {
            Some(Tok::Op(c)) => Some(*c),
            _ => None,
        }
    }

    fn expect_op(&mut self, c: char) -> Result<()> {
        if self.peek_op() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Polynomial> {
        let mut acc = self.term()?;
        while let Some(op @ ('+' | '-')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.term()?;
            acc = if op == '+' { &acc + &rhs } else { &acc - &rhs };
        }
        Ok(acc)
    }

    fn term(&mut self) -> Result<Polynomial> {
        let mut acc = self.unary()?;
        while let Some(op @ ('*' | '/')) = self.peek_op() {
            self.pos += 1;
            let rhs = self.unary()?;
            acc = if op == '*' {
                &acc * &rhs
            } else {
                let d = constant_value(&rhs).ok_or_else(|| self.error("division by a non-constant"))?;
                if d == 0.0 {
                    return Err(self.error("division by zero"));
                }
                acc.scale(1.0 / d)
            };
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<Polynomial> {
        match self.peek_op() {
            Some('-') => {
                self.pos += 1;
                Ok(-&self.unary()?)
            }
            Some('+') => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Polynomial> {
        let base = self.atom()?;
        if self.peek_op() == Some('^') {
            self.pos += 1;
            let e = match self.tokens.get(self.pos) {
                Some(Tok::Num(v)) if v.fract() == 0.0 && *v >= 0.0 && *v <= 64.0 => *v as u32,
                _ => return Err(self.error("exponent must be a small nonnegative integer")),
            };
            self.pos += 1;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Polynomial> {
        let tok = self.tokens.get(self.pos).cloned().ok_or_else(|| self.error("unexpected end"))?;
        self.pos += 1;
        match tok {
            Tok::Num(v) => Ok(Polynomial::constant(self.space, v)),
            Tok::Op('(') => {
                let inner = self.expr()?;
                self.expect_op(')')?;
                Ok(inner)
            }
            Tok::Ident(name) => {
                if self.peek_op() == Some('(') {
                    self.pos += 1;
                    let arg = self.expr()?;
                    self.expect_op(')')?;
                    return match name.as_str() {
                        "sin" => Ok(taylor_sin(&arg)),
                        _ => Err(self.error(&format!("unknown function `{name}`"))),
                    };
                }
                if let Some(i) = self.space.index_of(&name) {
                    Ok(Polynomial::var(self.space, i))
                } else if let Some(v) = self.constants.get(&name) {
                    Ok(Polynomial::constant(self.space, *v))
                } else if name == "pi" {
                    Ok(Polynomial::constant(self.space, std::f64::consts::PI))
                } else {
                    Err(self.error(&format!("unknown identifier `{name}`")))
                }
            }
            Tok::Op(c) => Err(self.error(&format!("unexpected `{c}`"))),
        }
    }
}

fn constant_value(p: &Polynomial) -> Option<f64> {
    match p.degree() {
        0 => Some(p.terms().values().next().copied().unwrap_or(0.0)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_van_der_pol_update() {
        let s = VariableSpace::indexed("x", 2);
        let consts = BTreeMap::from([("T".to_string(), 0.1), ("u".to_string(), 0.4)]);
        let p = parse_polynomial("x2 + T*(-x1 + u*x2*(1 - x1^2))", &s, &consts).unwrap();
        let want = Polynomial::parse(&s, "x2 - 0.1*x1 + 0.04*x2 - 0.04*x1^2*x2").unwrap();
        assert!((&p - &want).max_abs_coeff() < 1e-15);
    }

    #[test]
    fn sine_is_taylor_replaced() {
        let s = VariableSpace::indexed("x", 2);
        let p = parse_polynomial("sin(x2 - x1)", &s, &BTreeMap::new()).unwrap();
        for pt in [[0.3, -0.2], [1.0, 0.5]] {
            let u: f64 = pt[1] - pt[0];
            assert!((p.eval(&pt).unwrap() - (u - u.powi(3) / 6.0)).abs() < 1e-14);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let s = VariableSpace::indexed("x", 1);
        let c = BTreeMap::new();
        assert!(parse_polynomial("x1 / x1", &s, &c).is_err());
        assert!(parse_polynomial("cos(x1)", &s, &c).is_err());
        assert!(parse_polynomial("x1 +", &s, &c).is_err());
        assert!(parse_polynomial("z", &s, &c).is_err());
        assert!(parse_polynomial("2*pi/15", &s, &c).is_ok());
        assert!(parse_polynomial("1.5e-3*x1", &s, &c).is_ok());
    }
}
