//! A small text syntax for differential polynomials.
//!
//! ```text
//! k0*(1/2*w_x + v + w*v - v*alpha*beta + alpha_x*beta - alpha*beta_x)
//! (w*v)_x - 2*phi1[1]*psi2[1] + <L^2 Psi1,Phi1> - phiN*psiN
//! ```
//!
//! Identifiers are field names (`v`, `w`, `alpha`, `beta`, `phi1`..`psi3`,
//! `phiN`, `psiN`, `k0`, `lambda`) with an optional `[j]` index and an
//! optional `_x…` suffix counting derivatives. A `_x…` suffix after a closing
//! parenthesis differentiates the group. Juxtaposition multiplies, products
//! keep the written order. `<L^k Psi2,Phi1>` is the weighted inner product
//! `sum_j lambda_j^k psi2[j] phi1[j]`, which needs a [`ParseContext`].

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Field, JetVar, Rational, SPoly};
use crate::error::{Error, Result};

/// Number of eigenvalues and their values, needed for inner products.
#[derive(Clone, Debug, Default)]
pub struct ParseContext {
    pub lambdas: Vec<SPoly>,
}

impl ParseContext {
    pub fn new(lambdas: Vec<SPoly>) -> Self {
        ParseContext { lambdas }
    }
}

pub fn parse(src: &str) -> Result<SPoly> {
    parse_with(src, &ParseContext::default())
}

pub fn parse_with(src: &str, ctx: &ParseContext) -> Result<SPoly> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
        ctx,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

/// Parse a variable token such as `alpha_xx` or `phi3[2]`.
pub(crate) fn parse_var(token: &str) -> Result<(JetVar, u32)> {
    let (name, exp) = match token.split_once('^') {
        Some((n, e)) => (
            n,
            e.parse::<u32>().map_err(|_| Error::Parse {
                pos: 0,
                msg: format!("bad exponent in {token}"),
            })?,
        ),
        None => (token, 1),
    };
    let ctx = ParseContext::default();
    let mut p = Parser {
        src: name.as_bytes(),
        pos: 0,
        ctx: &ctx,
    };
    let v = p.jet_var()?;
    if p.pos != name.len() {
        return Err(p.err("trailing characters in variable token"));
    }
    Ok((v, exp))
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    ctx: &'a ParseContext,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: &str) -> Error {
        Error::Parse {
            pos: self.pos,
            msg: msg.to_string(),
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

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.err(&format!("expected '{}'", c as char)))
        }
    }

    fn expr(&mut self) -> Result<SPoly> {
        let mut acc = if self.eat(b'-') {
            -self.term()?
        } else {
            self.eat(b'+');
            self.term()?
        };
        loop {
            if self.eat(b'+') {
                acc += &self.term()?;
            } else if self.eat(b'-') {
                acc -= &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SPoly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = &acc * &self.power()?;
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.power()?;
                    let d = d
                        .as_constant()
                        .filter(|c| !c.is_zero())
                        .ok_or_else(|| self.err("division by a non-constant or zero"))?;
                    acc = acc.scale(&(Rational::from_integer(1.into()) / d));
                }
                Some(c) if c == b'(' || c == b'<' || c.is_ascii_alphanumeric() => {
                    acc = &acc * &self.power()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<SPoly> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let e = self.integer()?;
            let e: u32 = e.try_into().map_err(|_| self.err("exponent too large"))?;
            Ok(base.pow(e))
        } else {
            Ok(base)
        }
    }

    fn integer(&mut self) -> Result<BigInt> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(self.err("expected integer"));
        }
        let s = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        Ok(s.parse().unwrap())
    }

    fn derivative_suffix(&mut self) -> usize {
        if self.src.get(self.pos) == Some(&b'_') && self.src.get(self.pos + 1) == Some(&b'x') {
            self.pos += 1;
            let mut n = 0;
            while self.src.get(self.pos) == Some(&b'x') {
                self.pos += 1;
                n += 1;
            }
            n
        } else {
            0
        }
    }

    fn atom(&mut self) -> Result<SPoly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                let n = self.derivative_suffix();
                Ok(e.d_x_n(n))
            }
            Some(b'<') => self.inner_product(),
            Some(c) if c.is_ascii_digit() => {
                let n = self.integer()?;
                Ok(SPoly::constant(Rational::from_integer(n)))
            }
            Some(c) if c.is_ascii_alphabetic() => Ok(SPoly::var(self.jet_var()?)),
            _ => Err(self.err("expected an operand")),
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.src[start..self.pos]).into_owned()
    }

    fn jet_var(&mut self) -> Result<JetVar> {
        let start = self.pos;
        let name = self.ident();
        let field = Field::from_name(&name).ok_or_else(|| Error::Parse {
            pos: start,
            msg: format!("unknown variable '{name}'"),
        })?;
        let index = if self.src.get(self.pos) == Some(&b'[') {
            self.pos += 1;
            let i = self.integer()?;
            if self.src.get(self.pos) != Some(&b']') {
                return Err(self.err("expected ']'"));
            }
            self.pos += 1;
            u16::try_from(i).map_err(|_| self.err("index too large"))?
        } else {
            0
        };
        if field.is_indexed() != (index > 0) {
            return Err(Error::Parse {
                pos: start,
                msg: format!("'{name}' index must be given exactly for indexed families"),
            });
        }
        let order = self.derivative_suffix();
        if order > 0 && field.is_constant() {
            return Err(self.err("constants have no derivatives"));
        }
        Ok(JetVar {
            field,
            order: order as u16,
            index,
        })
    }

    fn vector_name(&mut self) -> Result<Field> {
        let name = self.ident();
        let (kind, comp) = name.split_at(name.len().saturating_sub(1));
        let comp: usize = comp.parse().map_err(|_| self.err("expected Phi1..Psi3"))?;
        if !(1..=3).contains(&comp) {
            return Err(self.err("component must be 1, 2 or 3"));
        }
        match kind {
            "Phi" => Ok(Field::phi(comp)),
            "Psi" => Ok(Field::psi(comp)),
            _ => Err(self.err("expected Phi or Psi vector")),
        }
    }

    fn inner_product(&mut self) -> Result<SPoly> {
        self.expect(b'<')?;
        self.skip_ws();
        let mut weight = 0u32;
        if self.src.get(self.pos) == Some(&b'L') && self.src.get(self.pos + 1) != Some(&b'a') {
            self.pos += 1;
            weight = 1;
            if self.eat(b'^') {
                weight = self.integer()?.try_into().map_err(|_| self.err("bad power"))?;
            }
        }
        let left = self.vector_name()?;
        self.expect(b',')?;
        let right = self.vector_name()?;
        self.expect(b'>')?;
        let mut acc = SPoly::zero();
        for (j, lam) in self.ctx.lambdas.iter().enumerate() {
            let j = j + 1;
            let x = SPoly::var(JetVar::indexed(left, j as u16));
            let y = SPoly::var(JetVar::indexed(right, j as u16));
            acc += &(&(&lam.pow(weight) * &x) * &y);
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::{rat, Monomial};

    #[test]
    fn parses_rationals_and_products() {
        let e = parse("1/2*v - 3 w").unwrap();
        let v = JetVar::new(Field::V);
        assert_eq!(e.coefficient(&Monomial::var(v)), rat(1, 2));
        assert_eq!(parse("beta*alpha").unwrap(), -parse("alpha beta").unwrap());
        assert_eq!(parse("(w*v)_x").unwrap(), parse("w_x*v + w*v_x").unwrap());
        assert_eq!(parse("v/4").unwrap(), parse("1/4*v").unwrap());
    }

    #[test]
    fn parses_inner_products() {
        let ctx = ParseContext::new(vec![SPoly::int(1), SPoly::int(2)]);
        let e = parse_with("<L Psi2,Phi1>", &ctx).unwrap();
        assert_eq!(
            e,
            parse("psi2[1]*phi1[1] + 2*psi2[2]*phi1[2]").unwrap()
        );
        let sym = ParseContext::new(vec![parse("lambda[1]").unwrap()]);
        assert_eq!(
            parse_with("<L^2 Psi3,Phi1>", &sym).unwrap(),
            parse("lambda[1]^2*psi3[1]*phi1[1]").unwrap()
        );
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("v +").is_err());
        assert!(parse("foo").is_err());
        assert!(parse("phi1").is_err());
        assert!(parse("v/w").is_err());
        assert!(parse("k0_x").is_err());
    }

    #[test]
    fn variable_tokens() {
        let (v, e) = parse_var("alpha_xx^1").unwrap();
        assert_eq!(v, JetVar::new(Field::Alpha).with_order(2));
        assert_eq!(e, 1);
        let (v, e) = parse_var("psi3[2]").unwrap();
        assert_eq!(v, JetVar::psi(3, 2));
        assert_eq!(e, 1);
    }
}
