//! Recursive-descent parser for the polynomial text format.
//!
//! Grammar (whitespace-insensitive):
//!
//! ```text
//! expr   := ['+'|'-'] term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := atom ('^' integer)?
//! atom   := number | variable | 'sqrt(' integer ')' | '(' expr ')' | '-' factor
//! ```
//!
//! Variables are `x1..xn`, `y1..ym`, `zJI` or `zJ_I` (1-based, `J` indexes
//! `y`, `I` indexes `x`). When `n = 1` the name `x` is accepted, when `m = 1`
//! the name `y` is accepted, and when both are 1 also `z`. Division is only
//! allowed by constants.

use super::{Polynomial, PolyVector, Var, VarLayout};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn parse_polynomial<S: Scalar>(text: &str, layout: VarLayout) -> Result<Polynomial<S>> {
    let mut parser = Parser {
        chars: text.chars().filter(|c| !c.is_whitespace()).collect(),
        pos: 0,
        layout,
        radicand: None,
    };
    if parser.chars.is_empty() {
        return Err(Error::Parse(format!("empty polynomial {text:?}")));
    }
    let p = parser.expr()?;
    if parser.pos != parser.chars.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    Ok(p)
}

pub fn parse_polyvector<S: Scalar>(texts: &[String], layout: VarLayout) -> Result<PolyVector<S>> {
    let entries = texts.iter().map(|t| parse_polynomial(t, layout)).collect::<Result<Vec<_>>>()?;
    PolyVector::new(entries)
}

struct Parser {
    chars: Vec<char>,
    pos: usize,
    layout: VarLayout,
    radicand: Option<u64>,
}

impl Parser {
    fn error(&self, what: &str) -> Error {
        let text: String = self.chars.iter().collect();
        Error::Parse(format!("{what} at position {} in {text:?}", self.pos))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr<S: Scalar>(&mut self) -> Result<Polynomial<S>> {
        let mut acc = Polynomial::zero(self.layout);
        let mut first = true;
        loop {
            let sign = if self.eat('+') {
                S::one()
            } else if self.eat('-') {
                -S::one()
            } else if first {
                S::one()
            } else {
                break;
            };
            first = false;
            let t = self.term()?;
            acc.add_scaled(&t, &sign);
        }
        Ok(acc)
    }

    fn term<S: Scalar>(&mut self) -> Result<Polynomial<S>> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                let rhs = self.factor()?;
                acc = &acc * &rhs;
            } else if self.eat('/') {
                let rhs: Polynomial<S> = self.factor()?;
                let constant = rhs.terms().all(|(m, _)| m.is_constant());
                if !constant || rhs.is_zero() {
                    return Err(self.error("division by a non-constant or zero polynomial"));
                }
                let c = rhs.constant_term();
                acc = acc.scale(&(S::one() / c));
            } else {
                break;
            }
        }
        Ok(acc)
    }

    fn factor<S: Scalar>(&mut self) -> Result<Polynomial<S>> {
        let base = self.atom()?;
        if self.eat('^') {
            let e = self.integer()?;
            let e = u32::try_from(e).map_err(|_| self.error("exponent too large"))?;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn integer(&mut self) -> Result<u64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.error("expected an integer"));
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.error("integer out of range"))
    }

    fn atom<S: Scalar>(&mut self) -> Result<Polynomial<S>> {
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(inner)
            }
            Some('-') => {
                self.pos += 1;
                Ok(-self.factor::<S>()?)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.identifier(),
            Some(_) => Err(self.error("unexpected character")),
        }
    }

    fn number<S: Scalar>(&mut self) -> Result<Polynomial<S>> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e') | Some('E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+') | Some('-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = save;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        let v = S::parse_decimal(&s).ok_or_else(|| self.error("malformed number"))?;
        Ok(Polynomial::constant(self.layout, v))
    }

    fn identifier<S: Scalar>(&mut self) -> Result<Polynomial<S>> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        if name == "sqrt" {
            if !self.eat('(') {
                return Err(self.error("expected '(' after sqrt"));
            }
            let k = self.integer()?;
            if !self.eat(')') {
                return Err(self.error("expected ')' after sqrt argument"));
            }
            let value = S::sqrt_int(k);
            let r = value.radicand();
            if r != 1 {
                if self.radicand.is_some_and(|prev| prev != r) {
                    return Err(self.error("surds over different radicands cannot be mixed"));
                }
                self.radicand = Some(r);
            }
            return Ok(Polynomial::constant(self.layout, value));
        }
        let var = resolve_variable(&name, self.layout)
            .ok_or_else(|| Error::Parse(format!("unknown variable {name:?} for (n, m) = ({}, {})", self.layout.n, self.layout.m)))?;
        Ok(Polynomial::var(self.layout, var))
    }
}

fn resolve_variable(name: &str, layout: VarLayout) -> Option<Var> {
    let (head, rest) = name.split_at(1);
    let one_based = |s: &str| -> Option<usize> { s.parse::<usize>().ok().filter(|&k| k >= 1).map(|k| k - 1) };
    let var = match head {
        "x" if rest.is_empty() && layout.n == 1 => Var::X(0),
        "y" if rest.is_empty() && layout.m == 1 => Var::Y(0),
        "z" if rest.is_empty() && layout.n == 1 && layout.m == 1 => Var::Z(0, 0),
        "x" => Var::X(one_based(rest)?),
        "y" => Var::Y(one_based(rest)?),
        "z" => {
            if let Some((j, i)) = rest.split_once('_') {
                Var::Z(one_based(j)?, one_based(i)?)
            } else if rest.len() == 2 {
                Var::Z(one_based(&rest[..1])?, one_based(&rest[1..])?)
            } else if rest.len() == 1 && layout.n == 1 {
                Var::Z(one_based(rest)?, 0)
            } else {
                return None;
            }
        }
        _ => return None,
    };
    layout.is_valid(var).then_some(var)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::format_polynomial;
    use crate::scalar::Exact;

    #[test]
    fn parses_vector_names() {
        let l = VarLayout::new(2, 2);
        let p = parse_polynomial::<Exact>("z12 - z1_2 + x2*y1", l).unwrap();
        assert_eq!(p, parse_polynomial("x2*y1", l).unwrap());
        assert!(parse_polynomial::<f64>("x", l).is_err());
        assert!(parse_polynomial::<f64>("z31", l).is_err());
        assert!(parse_polynomial::<f64>("x0", l).is_err());
    }

    #[test]
    fn parses_exact_surds_and_fractions() {
        let l = VarLayout::new(1, 1);
        let p = parse_polynomial::<Exact>("(y - sqrt(2)/2)*(y + sqrt(2)/2)", l).unwrap();
        assert_eq!(p, parse_polynomial("y^2 - 1/2", l).unwrap());
        let q = parse_polynomial::<Exact>("0.25*x", l).unwrap();
        assert_eq!(q, parse_polynomial("x/4", l).unwrap());
    }

    #[test]
    fn unary_minus_and_powers() {
        let l = VarLayout::new(1, 1);
        let p = parse_polynomial::<Exact>("-x^2", l).unwrap();
        assert_eq!(p.eval(&[Exact::from_i64(3), Exact::zero(), Exact::zero()]).unwrap(), Exact::from_i64(-9));
        let q = parse_polynomial::<Exact>("2*-y", l).unwrap();
        assert_eq!(q, parse_polynomial("-2*y", l).unwrap());
        let r = parse_polynomial::<f64>("1e-3*z + 2.5E1", l).unwrap();
        assert_eq!(r.constant_term(), 25.0);
    }

    #[test]
    fn rejects_malformed_input() {
        let l = VarLayout::new(1, 1);
        for bad in ["", "x +", "x / y", "(x", "x^", "3 $ x", "x/0", "w"] {
            assert!(parse_polynomial::<f64>(bad, l).is_err(), "accepted {bad:?}");
        }
        assert!(parse_polynomial::<Exact>("sqrt(2) + sqrt(3)", l).is_err());
        assert!(parse_polynomial::<Exact>("sqrt(2) + sqrt(8)", l).is_ok());
    }

    #[test]
    fn round_trips_through_text() {
        let l = VarLayout::new(2, 2);
        let p = parse_polynomial::<Exact>("3/7*x1^2*z21 - y2^3 + sqrt(2)*z12 - 5", l).unwrap();
        let again = parse_polynomial::<Exact>(&format_polynomial(&p), l).unwrap();
        assert_eq!(p, again);
        let f = parse_polynomial::<f64>("0.1*x1 - 1e-17*y1*z11 + 3", l).unwrap();
        let again = parse_polynomial::<f64>(&format_polynomial(&f), l).unwrap();
        assert_eq!(f, again);
    }
}
