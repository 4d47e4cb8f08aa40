//! Text, LaTeX and JSON forms of [`SPoly`]. All three list terms in the same
//! deterministic order (degree first, then canonical monomial order).

use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::parse::parse_var;
use super::{Field, JetVar, Monomial, Rational, SPoly};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TermJson {
    pub coeff: String,
    pub vars: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SPolyJson {
    pub terms: Vec<TermJson>,
}

fn ordered_terms(p: &SPoly) -> Vec<(&Monomial, &Rational)> {
    let mut ts: Vec<_> = p.terms().collect();
    ts.sort_by(|a, b| (a.0.degree(), a.0).cmp(&(b.0.degree(), b.0)));
    ts
}

pub(crate) fn var_token(v: JetVar) -> String {
    let mut s = v.field.name().to_string();
    if v.field.is_indexed() {
        s.push_str(&format!("[{}]", v.index));
    }
    if v.order > 0 {
        s.push('_');
        s.push_str(&"x".repeat(v.order as usize));
    }
    s
}

fn var_latex(v: JetVar) -> String {
    let x = "x".repeat(v.order as usize);
    let sep = |base: &str, sub: String| {
        if x.is_empty() {
            format!("{base}_{{{sub}}}")
        } else {
            format!("{base}_{{{sub},{x}}}")
        }
    };
    match v.field {
        Field::V | Field::W | Field::Alpha | Field::Beta => {
            let base = match v.field {
                Field::V => "v",
                Field::W => "w",
                Field::Alpha => "\\alpha",
                _ => "\\beta",
            };
            if x.is_empty() {
                base.to_string()
            } else {
                format!("{base}_{{{x}}}")
            }
        }
        Field::Phi1 | Field::Phi2 | Field::Phi3 => {
            let c = v.field as u8 - Field::Phi1 as u8 + 1;
            sep("\\phi", format!("{c}{}", v.index))
        }
        Field::Psi1 | Field::Psi2 | Field::Psi3 => {
            let c = v.field as u8 - Field::Psi1 as u8 + 1;
            sep("\\psi", format!("{c}{}", v.index))
        }
        Field::PhiExt => sep("\\phi", "N+1".into()),
        Field::PsiExt => sep("\\psi", "N+1".into()),
        Field::K0 => "k_0".into(),
        Field::Lambda => format!("\\lambda_{{{}}}", v.index),
    }
}

fn coeff_text(c: &Rational) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

impl fmt::Display for SPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return f.write_str("0");
        }
        for (i, (m, c)) in ordered_terms(self).into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    f.write_str("-")?;
                }
            } else {
                f.write_str(if neg { " - " } else { " + " })?;
            }
            let vars: Vec<String> = m
                .factors()
                .iter()
                .map(|(v, e)| {
                    if *e == 1 {
                        var_token(*v)
                    } else {
                        format!("{}^{e}", var_token(*v))
                    }
                })
                .collect();
            if vars.is_empty() {
                f.write_str(&coeff_text(&abs))?;
            } else if abs.is_one() {
                f.write_str(&vars.join("*"))?;
            } else {
                write!(f, "{}*{}", coeff_text(&abs), vars.join("*"))?;
            }
        }
        Ok(())
    }
}

impl SPoly {
    pub fn to_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut out = String::new();
        for (i, (m, c)) in ordered_terms(self).into_iter().enumerate() {
            let neg = c.is_negative();
            let abs = c.abs();
            if i == 0 {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let coeff = if abs.denom().is_one() {
                abs.numer().to_string()
            } else {
                format!("\\frac{{{}}}{{{}}}", abs.numer(), abs.denom())
            };
            let vars: Vec<String> = m
                .factors()
                .iter()
                .map(|(v, e)| {
                    if *e == 1 {
                        var_latex(*v)
                    } else {
                        format!("{}^{{{e}}}", var_latex(*v))
                    }
                })
                .collect();
            if vars.is_empty() {
                out.push_str(&coeff);
            } else {
                if !abs.is_one() {
                    out.push_str(&coeff);
                    out.push(' ');
                }
                out.push_str(&vars.join(" "));
            }
        }
        out
    }

    pub fn to_json(&self) -> SPolyJson {
        SPolyJson {
            terms: ordered_terms(self)
                .into_iter()
                .map(|(m, c)| TermJson {
                    coeff: coeff_text(c),
                    vars: m
                        .factors()
                        .iter()
                        .map(|(v, e)| {
                            if *e == 1 {
                                var_token(*v)
                            } else {
                                format!("{}^{e}", var_token(*v))
                            }
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    /// Inverse of [`SPoly::to_json`]. Variables may be listed in any order;
    /// the product is taken in the listed order.
    pub fn from_json(j: &SPolyJson) -> Result<SPoly> {
        let mut out = SPoly::zero();
        for t in &j.terms {
            let c = parse_rational(&t.coeff)?;
            let mut factors = Vec::with_capacity(t.vars.len());
            for tok in &t.vars {
                factors.push(parse_var(tok)?);
            }
            if let Some((m, neg)) = Monomial::from_ordered(&factors) {
                out.add_term(m, if neg { -c } else { c });
            }
        }
        Ok(out)
    }
}

pub(crate) fn parse_rational(s: &str) -> Result<Rational> {
    let bad = || Error::Parse {
        pos: 0,
        msg: format!("bad rational '{s}'"),
    };
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n: BigInt = n.parse().map_err(|_| bad())?;
    let d: BigInt = d.parse().map_err(|_| bad())?;
    if d.is_zero() {
        return Err(bad());
    }
    Ok(Rational::new(n, d))
}

impl Serialize for SPoly {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_json().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SPoly {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = SPolyJson::deserialize(d)?;
        SPoly::from_json(&j).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::parse;

    #[test]
    fn display_round_trips_through_parser() {
        let p = parse("-1/2*v*w_x + alpha*beta_xx - 3 + phi3[2]*psiN*k0").unwrap();
        let text = p.to_string();
        assert_eq!(parse(&text).unwrap(), p);
    }

    #[test]
    fn json_is_stable() {
        let p = parse("alpha*beta + 1/2*v^2").unwrap();
        let j = serde_json::to_string(&p).unwrap();
        assert_eq!(
            j,
            r#"{"terms":[{"coeff":"1/2","vars":["v^2"]},{"coeff":"1","vars":["alpha","beta"]}]}"#
        );
        let back: SPoly = serde_json::from_str(&j).unwrap();
        assert_eq!(back, p);
    }

    #[test]
    fn json_accepts_unsorted_factors() {
        let j = SPolyJson {
            terms: vec![TermJson {
                coeff: "2".into(),
                vars: vec!["beta".into(), "alpha".into()],
            }],
        };
        assert_eq!(SPoly::from_json(&j).unwrap(), parse("-2*alpha*beta").unwrap());
    }

    #[test]
    fn latex_output() {
        let p = parse("-1/2*v*w_x + alpha_x*phi1[2]").unwrap();
        assert_eq!(p.to_latex(), "-\\frac{1}{2} v w_{x} + \\alpha_{x} \\phi_{12}");
    }
}
