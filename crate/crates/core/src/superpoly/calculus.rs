//! Derivations, partial derivatives, the Euler operator, exact anti-derivatives
//! and substitution homomorphisms on [`SPoly`].

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::One;

use super::{int, Grading, JetVar, Parity, Rational, SPoly};
use crate::error::{Error, Result};

/// Which end an odd variable is moved to before it is stripped off.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    Left,
    Right,
}

/// An even derivation of the polynomial ring, determined by its action on
/// single variables and extended by the Leibniz rule.
pub trait Derivation {
    fn derive_var(&self, v: JetVar) -> SPoly;

    fn apply(&self, p: &SPoly) -> SPoly {
        let mut cache: HashMap<JetVar, SPoly> = HashMap::new();
        let mut out = SPoly::zero();
        for (m, c) in p.terms() {
            for &(x, e) in m.factors() {
                let dx = cache.entry(x).or_insert_with(|| self.derive_var(x));
                if dx.is_zero() {
                    continue;
                }
                let (rest, _, neg) = m.remove_one(x, true).expect("factor present");
                let mut k = c * int(e as i64);
                if neg {
                    k = -k;
                }
                for (dm, dc) in dx.terms() {
                    if let Some((prod, sneg)) = dm.mul(&rest) {
                        let kk = &k * dc;
                        out.add_term(prod, if sneg { -kk } else { kk });
                    }
                }
            }
        }
        out
    }

    fn apply_n(&self, p: &SPoly, n: usize) -> SPoly {
        let mut q = p.clone();
        for _ in 0..n {
            q = self.apply(&q);
        }
        q
    }
}

/// The total x-derivative on jet variables: raises the derivative order of
/// every non-constant variable by one.
#[derive(Clone, Copy, Debug, Default)]
pub struct JetDerivation;

impl Derivation for JetDerivation {
    fn derive_var(&self, v: JetVar) -> SPoly {
        if v.is_constant() {
            SPoly::zero()
        } else {
            SPoly::var(v.derivative())
        }
    }
}

impl<F> Derivation for F
where
    F: Fn(JetVar) -> SPoly,
{
    fn derive_var(&self, v: JetVar) -> SPoly {
        self(v)
    }
}

impl SPoly {
    /// Total x-derivative.
    pub fn d_x(&self) -> SPoly {
        JetDerivation.apply(self)
    }

    pub fn d_x_n(&self, n: usize) -> SPoly {
        JetDerivation.apply_n(self, n)
    }

    pub fn partial_left(&self, x: JetVar) -> SPoly {
        partial(self, x, Side::Left)
    }

    pub fn partial_right(&self, x: JetVar) -> SPoly {
        partial(self, x, Side::Right)
    }

    /// Homomorphic image under `image`, which returns `None` for variables
    /// that are left alone. Factors are multiplied in canonical order so odd
    /// replacements pick up the right signs.
    pub fn map_vars(&self, image: impl Fn(JetVar) -> Option<SPoly>) -> SPoly {
        let mut cache: HashMap<JetVar, Option<SPoly>> = HashMap::new();
        let mut out = SPoly::zero();
        for (m, c) in self.terms() {
            let mut acc = SPoly::constant(c.clone());
            for &(x, e) in m.factors() {
                let img = cache.entry(x).or_insert_with(|| image(x));
                let factor = match img {
                    Some(p) => p.clone(),
                    None => SPoly::var(x),
                };
                for _ in 0..e {
                    acc = &acc * &factor;
                    if acc.is_zero() {
                        break;
                    }
                }
                if acc.is_zero() {
                    break;
                }
            }
            out += &acc;
        }
        out
    }
}

/// Partial derivative with respect to a single jet variable. For odd `x`
/// the variable is first moved to the requested end of each monomial.
pub fn partial(p: &SPoly, x: JetVar, side: Side) -> SPoly {
    let mut out = SPoly::zero();
    for (m, c) in p.terms() {
        if let Some((rest, e, neg)) = m.remove_one(x, side == Side::Left) {
            let k = c * int(e as i64);
            out.add_term(rest, if neg { -k } else { k });
        }
    }
    out
}

pub fn partial_left(p: &SPoly, x: JetVar) -> SPoly {
    partial(p, x, Side::Left)
}

/// Variational derivative `sum_k (-D)^k dp/d(u^(k))` with respect to the
/// family of `field` (any derivative order; only field and index are used).
pub fn euler_variational(p: &SPoly, field: JetVar, side: Side) -> SPoly {
    let max = p
        .variables()
        .iter()
        .filter(|v| v.same_family(field))
        .map(|v| v.order)
        .max();
    let Some(max) = max else {
        return SPoly::zero();
    };
    let mut out = SPoly::zero();
    for k in 0..=max {
        let mut term = partial(p, field.with_order(k), side);
        for _ in 0..k {
            term = -&term.d_x();
        }
        out += &term;
    }
    out
}

/// Exact anti-derivative with zero constant part.
///
/// Uses the homotopy operator on each degree-homogeneous component and then
/// checks `d_x(q) == p`, so a returned value is always a true primitive.
pub fn integrate_x(p: &SPoly) -> Result<SPoly> {
    if p.is_zero() {
        return Ok(SPoly::zero());
    }
    let mut by_degree: BTreeMap<u32, SPoly> = BTreeMap::new();
    for (m, c) in p.terms() {
        by_degree
            .entry(m.degree())
            .or_default()
            .add_term(m.clone(), c.clone());
    }
    if by_degree.contains_key(&0) {
        return Err(Error::NotExact(format!(
            "{p} has a term free of jet variables"
        )));
    }
    let mut q = SPoly::zero();
    for (deg, part) in &by_degree {
        let families: BTreeSet<JetVar> = part
            .variables()
            .into_iter()
            .filter(|v| !v.is_constant())
            .map(|v| v.base())
            .collect();
        let mut h = SPoly::zero();
        for fam in families {
            let max = part
                .variables()
                .iter()
                .filter(|v| v.same_family(fam))
                .map(|v| v.order)
                .max()
                .unwrap_or(0);
            for i in 1..=max {
                let dp = partial(part, fam.with_order(i), Side::Left);
                if dp.is_zero() {
                    continue;
                }
                // (-D)^{i-k-1} dp for k = i-1 down to 0
                let mut inner = dp;
                for k in (0..i).rev() {
                    h += &(&SPoly::var(fam.with_order(k)) * &inner);
                    inner = -&inner.d_x();
                }
            }
        }
        q += &h.scale(&Rational::new(One::one(), (*deg as i64).into()));
    }
    if q.d_x() != *p {
        return Err(Error::NotExact(format!("{p}")));
    }
    Ok(q)
}

/// Substitute variable families by polynomials.
///
/// Rule keys are jet variables; a rule for `u^(k)` also determines every
/// higher derivative `u^(k+r) -> D^r(rule)` through `target`, the derivation
/// of the ring the images live in. Images must have the parity of the
/// variable they replace.
pub fn substitute(
    p: &SPoly,
    rules: &BTreeMap<JetVar, SPoly>,
    target: &dyn Derivation,
) -> Result<SPoly> {
    for (var, img) in rules {
        let ok = match img.parity() {
            Grading::Even => var.parity() == Parity::Even || img.is_zero(),
            Grading::Odd => var.parity() == Parity::Odd,
            Grading::Mixed => false,
        };
        if !ok {
            return Err(Error::ParityMismatch {
                var: format!("{}", SPoly::var(*var)),
                expected: var.parity().to_string(),
                found: img.parity().to_string(),
            });
        }
    }
    Ok(p.map_vars(|x| image_of(x, rules, target)))
}

fn image_of(x: JetVar, rules: &BTreeMap<JetVar, SPoly>, target: &dyn Derivation) -> Option<SPoly> {
    if let Some(img) = rules.get(&x) {
        return Some(img.clone());
    }
    let below = (0..x.order).rev().find_map(|k| {
        let key = x.with_order(k);
        rules.get(&key).map(|r| (k, r))
    })?;
    let (k, rule) = below;
    Some(target.apply_n(rule, (x.order - k) as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::{parse, rat, Field};

    fn p(s: &str) -> SPoly {
        parse(s).unwrap()
    }

    #[test]
    fn leibniz_examples() {
        assert_eq!(p("v*w").d_x(), p("v_x*w + v*w_x"));
        assert_eq!(p("alpha*beta").d_x(), p("alpha_x*beta + alpha*beta_x"));
        assert_eq!(p("1 + w").d_x(), p("w_x"));
        assert!(p("k0*lambda[2]").d_x().is_zero());
    }

    #[test]
    fn left_partials() {
        let a = JetVar::new(Field::Alpha);
        let b = JetVar::new(Field::Beta);
        let v = JetVar::new(Field::V);
        assert_eq!(partial_left(&p("alpha*beta"), a), p("beta"));
        assert_eq!(partial_left(&p("alpha*beta"), b), p("-alpha"));
        assert_eq!(partial_left(&p("v^2*w"), v), p("2*v*w"));
        assert_eq!(partial(&p("alpha*beta"), a, Side::Right), p("-beta"));
        assert_eq!(partial(&p("alpha*beta"), b, Side::Right), p("alpha"));
    }

    #[test]
    fn euler_examples() {
        let w = JetVar::new(Field::W);
        let v = JetVar::new(Field::V);
        assert_eq!(euler_variational(&p("v*w_x"), w, Side::Left), p("-v_x"));
        assert_eq!(euler_variational(&p("1/2*v^2"), v, Side::Left), p("v"));
    }

    #[test]
    fn integrate_examples() {
        assert_eq!(integrate_x(&p("w_x")).unwrap(), p("w"));
        assert!(matches!(integrate_x(&p("v")), Err(Error::NotExact(_))));
        assert!(matches!(integrate_x(&p("3")), Err(Error::NotExact(_))));
        let q = p("alpha*beta*v + k0*w^2");
        assert_eq!(integrate_x(&q.d_x()).unwrap(), q);
        let odd = p("alpha_x*beta_xx*w + alpha*v_x");
        assert_eq!(integrate_x(&odd.d_x()).unwrap(), odd);
    }

    #[test]
    fn substitution_examples() {
        let mut rules = BTreeMap::new();
        rules.insert(JetVar::new(Field::Alpha), SPoly::zero());
        rules.insert(JetVar::new(Field::Beta), SPoly::zero());
        assert!(substitute(&p("alpha*beta"), &rules, &JetDerivation)
            .unwrap()
            .is_zero());
        let mut rules = BTreeMap::new();
        rules.insert(JetVar::new(Field::W), SPoly::zero());
        assert_eq!(
            substitute(&p("1 + w"), &rules, &JetDerivation).unwrap(),
            SPoly::one()
        );
        let mut rules = BTreeMap::new();
        rules.insert(JetVar::new(Field::V), p("w^2"));
        assert_eq!(
            substitute(&p("v_x"), &rules, &JetDerivation).unwrap(),
            p("2*w*w_x")
        );
        let mut bad = BTreeMap::new();
        bad.insert(JetVar::new(Field::V), p("alpha"));
        assert!(matches!(
            substitute(&p("v"), &bad, &JetDerivation),
            Err(Error::ParityMismatch { .. })
        ));
        let _ = rat(1, 2);
    }
}
