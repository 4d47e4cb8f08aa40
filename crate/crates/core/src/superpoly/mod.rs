//! Exact supercommutative differential polynomials over the rationals.
//!
//! An [`SPoly`] is a finite linear combination of [`Monomial`]s with
//! [`Rational`] coefficients. Monomials are products of [`JetVar`]s (a field
//! together with a number of x-derivatives). Even variables commute with
//! everything, odd variables anticommute among themselves and square to zero.
//!
//! Every monomial keeps its variables sorted by the global order on
//! `JetVar` (field, derivative order, eigenfunction index). Reordering odd
//! factors into that order is paid for with the permutation sign, so two
//! equal polynomials always have identical term maps.

mod calculus;
mod format;
mod parse;

pub use calculus::{
    euler_variational, integrate_x, partial, partial_left, substitute, Derivation,
    JetDerivation, Side,
};
pub use format::{SPolyJson, TermJson};
pub use parse::{parse, parse_with, ParseContext};

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub, SubAssign};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Z/2 grading of a variable or homogeneous expression.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn is_odd(self) -> bool {
        self == Parity::Odd
    }

    pub fn from_odd(odd: bool) -> Self {
        if odd {
            Parity::Odd
        } else {
            Parity::Even
        }
    }
}

impl std::ops::BitXor for Parity {
    type Output = Parity;
    fn bitxor(self, rhs: Parity) -> Parity {
        Parity::from_odd(self.is_odd() ^ rhs.is_odd())
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Parity::Even => f.write_str("even"),
            Parity::Odd => f.write_str("odd"),
        }
    }
}

/// Result of [`SPoly::parity`]: homogeneous polynomials report their grade.
/// The zero polynomial counts as even.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Grading {
    Even,
    Odd,
    Mixed,
}

impl fmt::Display for Grading {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Grading::Even => f.write_str("even"),
            Grading::Odd => f.write_str("odd"),
            Grading::Mixed => f.write_str("mixed"),
        }
    }
}

/// Generator families. The declaration order is the canonical order used
/// for odd factors, so it must not be rearranged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Field {
    V,
    W,
    Alpha,
    Beta,
    Phi1,
    Phi2,
    Phi3,
    Psi1,
    Psi2,
    Psi3,
    /// The extra odd variable standing in for the potential alpha.
    PhiExt,
    /// The extra odd variable standing in for twice the potential beta.
    PsiExt,
    /// Seed constant of the hierarchy kept as a symbol.
    K0,
    /// Symbolic eigenvalue lambda_j.
    Lambda,
}

impl Field {
    pub const POTENTIALS: [Field; 4] = [Field::V, Field::W, Field::Alpha, Field::Beta];

    pub fn parity(self) -> Parity {
        match self {
            Field::Alpha
            | Field::Beta
            | Field::Phi3
            | Field::Psi3
            | Field::PhiExt
            | Field::PsiExt => Parity::Odd,
            _ => Parity::Even,
        }
    }

    /// Constants are annihilated by every derivation and are not counted in
    /// the polynomial degree.
    pub fn is_constant(self) -> bool {
        matches!(self, Field::K0 | Field::Lambda)
    }

    pub fn is_indexed(self) -> bool {
        matches!(
            self,
            Field::Phi1
                | Field::Phi2
                | Field::Phi3
                | Field::Psi1
                | Field::Psi2
                | Field::Psi3
                | Field::Lambda
        )
    }

    pub fn phi(component: usize) -> Field {
        match component {
            1 => Field::Phi1,
            2 => Field::Phi2,
            3 => Field::Phi3,
            _ => panic!("eigenfunction component {component} out of range 1..=3"),
        }
    }

    pub fn psi(component: usize) -> Field {
        match component {
            1 => Field::Psi1,
            2 => Field::Psi2,
            3 => Field::Psi3,
            _ => panic!("eigenfunction component {component} out of range 1..=3"),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::V => "v",
            Field::W => "w",
            Field::Alpha => "alpha",
            Field::Beta => "beta",
            Field::Phi1 => "phi1",
            Field::Phi2 => "phi2",
            Field::Phi3 => "phi3",
            Field::Psi1 => "psi1",
            Field::Psi2 => "psi2",
            Field::Psi3 => "psi3",
            Field::PhiExt => "phiN",
            Field::PsiExt => "psiN",
            Field::K0 => "k0",
            Field::Lambda => "lambda",
        }
    }

    pub fn from_name(name: &str) -> Option<Field> {
        Some(match name {
            "v" => Field::V,
            "w" => Field::W,
            "alpha" => Field::Alpha,
            "beta" => Field::Beta,
            "phi1" => Field::Phi1,
            "phi2" => Field::Phi2,
            "phi3" => Field::Phi3,
            "psi1" => Field::Psi1,
            "psi2" => Field::Psi2,
            "psi3" => Field::Psi3,
            "phiN" => Field::PhiExt,
            "psiN" => Field::PsiExt,
            "k0" => Field::K0,
            "lambda" => Field::Lambda,
            _ => return None,
        })
    }
}

/// A field (or eigenfunction component) with `order` x-derivatives applied.
/// `index` is the eigenvalue index j for indexed families and 0 otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JetVar {
    pub field: Field,
    pub order: u16,
    pub index: u16,
}

impl JetVar {
    pub const fn new(field: Field) -> Self {
        JetVar {
            field,
            order: 0,
            index: 0,
        }
    }

    pub const fn indexed(field: Field, index: u16) -> Self {
        JetVar {
            field,
            order: 0,
            index,
        }
    }

    pub fn phi(component: usize, j: usize) -> Self {
        JetVar::indexed(Field::phi(component), j as u16)
    }

    pub fn psi(component: usize, j: usize) -> Self {
        JetVar::indexed(Field::psi(component), j as u16)
    }

    pub fn lambda(j: usize) -> Self {
        JetVar::indexed(Field::Lambda, j as u16)
    }

    pub fn with_order(self, order: u16) -> Self {
        JetVar { order, ..self }
    }

    pub fn derivative(self) -> Self {
        self.with_order(self.order + 1)
    }

    /// The underived member of the same family.
    pub fn base(self) -> Self {
        self.with_order(0)
    }

    pub fn parity(self) -> Parity {
        self.field.parity()
    }

    pub fn is_odd(self) -> bool {
        self.parity().is_odd()
    }

    pub fn is_constant(self) -> bool {
        self.field.is_constant()
    }

    pub fn same_family(self, other: JetVar) -> bool {
        self.field == other.field && self.index == other.index
    }
}

/// Sorted product of variables with positive exponents. Odd variables have
/// exponent exactly one.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Monomial(Vec<(JetVar, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(v: JetVar) -> Self {
        Monomial(vec![(v, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn factors(&self) -> &[(JetVar, u32)] {
        &self.0
    }

    pub fn parity(&self) -> Parity {
        Parity::from_odd(self.0.iter().filter(|(v, _)| v.is_odd()).count() % 2 == 1)
    }

    /// Degree in the non-constant variables.
    pub fn degree(&self) -> u32 {
        self.0
            .iter()
            .filter(|(v, _)| !v.is_constant())
            .map(|(_, e)| *e)
            .sum()
    }

    pub fn exponent(&self, v: JetVar) -> u32 {
        self.0
            .binary_search_by(|(x, _)| x.cmp(&v))
            .map(|i| self.0[i].1)
            .unwrap_or(0)
    }

    pub fn vars(&self) -> impl Iterator<Item = JetVar> + '_ {
        self.0.iter().map(|(v, _)| *v)
    }

    /// Constant (parameter-only) part and jet part of the monomial.
    pub fn split_constants(&self) -> (Monomial, Monomial) {
        let (c, j): (Vec<_>, Vec<_>) = self.0.iter().partition(|(v, _)| v.is_constant());
        (Monomial(c), Monomial(j))
    }

    /// Product `self * other` in canonical order. Returns `None` when an odd
    /// variable would be squared, and the sign flag otherwise.
    pub fn mul(&self, other: &Monomial) -> Option<(Monomial, bool)> {
        let (a, b) = (&self.0, &other.0);
        let mut out = Vec::with_capacity(a.len() + b.len());
        let mut negate = false;
        let mut odd_a_left = a.iter().filter(|(v, _)| v.is_odd()).count();
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            let (va, ea) = a[i];
            let (vb, eb) = b[j];
            match va.cmp(&vb) {
                std::cmp::Ordering::Less => {
                    if va.is_odd() {
                        odd_a_left -= 1;
                    }
                    out.push((va, ea));
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    if vb.is_odd() && odd_a_left % 2 == 1 {
                        negate = !negate;
                    }
                    out.push((vb, eb));
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if va.is_odd() {
                        return None;
                    }
                    out.push((va, ea + eb));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&a[i..]);
        out.extend_from_slice(&b[j..]);
        Some((Monomial(out), negate))
    }

    /// Build a monomial from an arbitrary ordered list of factors, applying
    /// the Koszul sign of sorting. Returns `None` if the product vanishes.
    pub fn from_ordered(factors: &[(JetVar, u32)]) -> Option<(Monomial, bool)> {
        let mut acc = Monomial::one();
        let mut negate = false;
        for &(v, e) in factors {
            if e == 0 {
                continue;
            }
            if v.is_odd() && e > 1 {
                return None;
            }
            let (m, s) = acc.mul(&Monomial(vec![(v, e)]))?;
            acc = m;
            negate ^= s;
        }
        Some((acc, negate))
    }

    /// Remove one power of `v`. For odd `v` also report the sign picked up by
    /// moving it to the front (`left`) or to the back (right) first.
    fn remove_one(&self, v: JetVar, left: bool) -> Option<(Monomial, u32, bool)> {
        let pos = self.0.iter().position(|(x, _)| *x == v)?;
        let e = self.0[pos].1;
        let mut rest = self.0.clone();
        let negate = if v.is_odd() {
            let range = if left { 0..pos } else { pos + 1..self.0.len() };
            self.0[range].iter().filter(|(x, _)| x.is_odd()).count() % 2 == 1
        } else {
            false
        };
        if e == 1 {
            rest.remove(pos);
        } else {
            rest[pos].1 -= 1;
        }
        Some((Monomial(rest), e, negate))
    }
}

/// Supercommutative differential polynomial with exact coefficients.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct SPoly {
    terms: BTreeMap<Monomial, Rational>,
}

impl SPoly {
    pub fn zero() -> Self {
        SPoly::default()
    }

    pub fn one() -> Self {
        SPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        SPoly::term(Monomial::one(), c)
    }

    pub fn int(n: i64) -> Self {
        SPoly::constant(int(n))
    }

    pub fn rat(n: i64, d: i64) -> Self {
        SPoly::constant(rat(n, d))
    }

    pub fn var(v: JetVar) -> Self {
        SPoly::term(Monomial::var(v), Rational::one())
    }

    pub fn field(f: Field) -> Self {
        SPoly::var(JetVar::new(f))
    }

    pub fn term(m: Monomial, c: Rational) -> Self {
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(m, c);
        }
        SPoly { terms }
    }

    /// Product of variables given in the written (not canonical) order.
    pub fn product(vars: &[JetVar], c: Rational) -> Self {
        let factors: Vec<_> = vars.iter().map(|v| (*v, 1)).collect();
        let mut acc = SPoly::constant(c);
        for f in factors {
            acc = &acc * &SPoly::var(f.0);
        }
        acc
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, &Rational)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> Rational {
        self.terms.get(m).cloned().unwrap_or_else(Rational::zero)
    }

    /// Coefficient of the empty monomial.
    pub fn constant_term(&self) -> Rational {
        self.coefficient(&Monomial::one())
    }

    /// Returns `Some(c)` if the polynomial is the rational constant `c`.
    pub fn as_constant(&self) -> Option<Rational> {
        match self.terms.len() {
            0 => Some(Rational::zero()),
            1 => self
                .terms
                .iter()
                .next()
                .filter(|(m, _)| m.is_one())
                .map(|(_, c)| c.clone()),
            _ => None,
        }
    }

    pub fn add_term(&mut self, m: Monomial, c: Rational) {
        if c.is_zero() {
            return;
        }
        use std::collections::btree_map::Entry;
        match self.terms.entry(m) {
            Entry::Vacant(e) => {
                e.insert(c);
            }
            Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> SPoly {
        if c.is_zero() {
            return SPoly::zero();
        }
        SPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, k)| (m.clone(), k * c))
                .collect(),
        }
    }

    pub fn scale_int(&self, n: i64) -> SPoly {
        self.scale(&int(n))
    }

    pub fn pow(&self, e: u32) -> SPoly {
        let mut acc = SPoly::one();
        for _ in 0..e {
            acc = &acc * self;
        }
        acc
    }

    pub fn parity(&self) -> Grading {
        let mut seen = (false, false);
        for m in self.terms.keys() {
            match m.parity() {
                Parity::Even => seen.0 = true,
                Parity::Odd => seen.1 = true,
            }
        }
        match seen {
            (_, false) => Grading::Even,
            (false, true) => Grading::Odd,
            (true, true) => Grading::Mixed,
        }
    }

    /// All variables occurring in the polynomial, in canonical order.
    pub fn variables(&self) -> Vec<JetVar> {
        let mut vs: Vec<JetVar> = self.terms.keys().flat_map(|m| m.vars()).collect();
        vs.sort();
        vs.dedup();
        vs
    }

    pub fn max_order(&self) -> u16 {
        self.variables().iter().map(|v| v.order).max().unwrap_or(0)
    }

    /// Keep only the terms for which `keep` holds.
    pub fn filter_terms(&self, keep: impl Fn(&Monomial) -> bool) -> SPoly {
        SPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| keep(m))
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// Part of the polynomial of the given parity.
    pub fn graded_part(&self, p: Parity) -> SPoly {
        self.filter_terms(|m| m.parity() == p)
    }

    /// Set every variable of the listed families to zero.
    pub fn kill_fields(&self, fields: &[Field]) -> SPoly {
        self.filter_terms(|m| m.vars().all(|v| !fields.contains(&v.field)))
    }

    /// Rebuild the term map from scratch; used to check canonical form.
    pub fn recanonicalize(&self) -> SPoly {
        let mut out = SPoly::zero();
        for (m, c) in &self.terms {
            if let Some((mm, neg)) = Monomial::from_ordered(m.factors()) {
                out.add_term(mm, if neg { -c.clone() } else { c.clone() });
            }
        }
        out
    }

    /// Anticommutator-aware swap: `p*q - (-1)^{|p||q|} q*p` for homogeneous
    /// arguments, which vanishes identically.
    pub fn graded_commutator(&self, other: &SPoly) -> SPoly {
        let sign = match (self.parity(), other.parity()) {
            (Grading::Odd, Grading::Odd) => -1,
            _ => 1,
        };
        &(self * other) - &(other * self).scale_int(sign)
    }
}

impl From<JetVar> for SPoly {
    fn from(v: JetVar) -> Self {
        SPoly::var(v)
    }
}

impl From<Rational> for SPoly {
    fn from(c: Rational) -> Self {
        SPoly::constant(c)
    }
}

impl From<i64> for SPoly {
    fn from(n: i64) -> Self {
        SPoly::int(n)
    }
}

impl AddAssign<&SPoly> for SPoly {
    fn add_assign(&mut self, rhs: &SPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), c.clone());
        }
    }
}

impl SubAssign<&SPoly> for SPoly {
    fn sub_assign(&mut self, rhs: &SPoly) {
        for (m, c) in &rhs.terms {
            self.add_term(m.clone(), -c.clone());
        }
    }
}

impl Add for &SPoly {
    type Output = SPoly;
    fn add(self, rhs: &SPoly) -> SPoly {
        let mut out = self.clone();
        out += rhs;
        out
    }
}

impl Sub for &SPoly {
    type Output = SPoly;
    fn sub(self, rhs: &SPoly) -> SPoly {
        let mut out = self.clone();
        out -= rhs;
        out
    }
}

impl Add for SPoly {
    type Output = SPoly;
    fn add(mut self, rhs: SPoly) -> SPoly {
        self += &rhs;
        self
    }
}

impl Sub for SPoly {
    type Output = SPoly;
    fn sub(mut self, rhs: SPoly) -> SPoly {
        self -= &rhs;
        self
    }
}

impl Neg for &SPoly {
    type Output = SPoly;
    fn neg(self) -> SPoly {
        SPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }
}

impl Neg for SPoly {
    type Output = SPoly;
    fn neg(self) -> SPoly {
        -&self
    }
}

impl Mul for &SPoly {
    type Output = SPoly;
    fn mul(self, rhs: &SPoly) -> SPoly {
        let mut out = SPoly::zero();
        for (ma, ca) in &self.terms {
            for (mb, cb) in &rhs.terms {
                if let Some((m, neg)) = ma.mul(mb) {
                    let c = ca * cb;
                    out.add_term(m, if neg { -c } else { c });
                }
            }
        }
        out
    }
}

impl Mul for SPoly {
    type Output = SPoly;
    fn mul(self, rhs: SPoly) -> SPoly {
        &self * &rhs
    }
}

impl Mul<&Rational> for &SPoly {
    type Output = SPoly;
    fn mul(self, rhs: &Rational) -> SPoly {
        self.scale(rhs)
    }
}

impl std::iter::Sum for SPoly {
    fn sum<I: Iterator<Item = SPoly>>(iter: I) -> SPoly {
        let mut acc = SPoly::zero();
        for p in iter {
            acc += &p;
        }
        acc
    }
}

impl<'a> std::iter::Sum<&'a SPoly> for SPoly {
    fn sum<I: Iterator<Item = &'a SPoly>>(iter: I) -> SPoly {
        let mut acc = SPoly::zero();
        for p in iter {
            acc += p;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v() -> SPoly {
        SPoly::field(Field::V)
    }
    fn w() -> SPoly {
        SPoly::field(Field::W)
    }
    fn a() -> SPoly {
        SPoly::field(Field::Alpha)
    }
    fn b() -> SPoly {
        SPoly::field(Field::Beta)
    }

    #[test]
    fn add_identities() {
        assert_eq!(&v() + &SPoly::zero(), v());
        assert!((&(&a() * &b()) + &(&b() * &a())).is_zero());
        let lhs = &(&w() + &SPoly::one()) + &(&w() - &SPoly::one());
        assert_eq!(lhs, w().scale_int(2));
    }

    #[test]
    fn odd_products() {
        assert!((&a() * &a()).is_zero());
        let ab = &a() * &b();
        let ba = &b() * &a();
        assert_eq!(ba, -&ab);
        let lhs = &(&v() + &a()) * &(&w() + &b());
        let rhs = &(&(&(&v() * &w()) + &(&v() * &b())) + &(&w() * &a())) + &ab;
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn parity_of_sums() {
        assert_eq!((&a() * &b()).parity(), Grading::Even);
        assert_eq!((&a() + &v()).parity(), Grading::Mixed);
        assert_eq!(a().parity(), Grading::Odd);
        assert_eq!(SPoly::zero().parity(), Grading::Even);
    }

    #[test]
    fn monomial_sort_sign() {
        let al = JetVar::new(Field::Alpha);
        let be = JetVar::new(Field::Beta);
        let bx = be.derivative();
        // beta_x * beta * alpha -> alpha beta beta_x with sign of reversing three odd factors
        let (m, neg) = Monomial::from_ordered(&[(bx, 1), (be, 1), (al, 1)]).unwrap();
        assert_eq!(m.factors().len(), 3);
        assert!(neg);
        assert!(Monomial::from_ordered(&[(al, 1), (be, 1), (al, 1)]).is_none());
    }

    #[test]
    fn scalar_helpers() {
        assert_eq!(SPoly::rat(1, 2).as_constant(), Some(rat(1, 2)));
        assert_eq!(v().as_constant(), None);
        assert_eq!(SPoly::zero().as_constant(), Some(int(0)));
        assert_eq!(v().pow(3).len(), 1);
    }
}
