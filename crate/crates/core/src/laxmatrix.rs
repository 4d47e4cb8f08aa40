//! Supermatrices with entries in `SPoly[lambda, 1/lambda]`.
//!
//! The grading signature is `(even|odd)`; for the spectral problem it is
//! `(2|1)`. Rows and columns `0..even` are the even block.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::superpoly::{Derivation, Field, Grading, JetDerivation, JetVar, Parity, SPoly, Side};

/// Laurent polynomial in the spectral parameter with `SPoly` coefficients.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct LaurentPoly {
    coeffs: BTreeMap<i32, SPoly>,
}

impl LaurentPoly {
    pub fn zero() -> Self {
        LaurentPoly::default()
    }

    pub fn constant(p: SPoly) -> Self {
        LaurentPoly::monomial(0, p)
    }

    pub fn monomial(power: i32, p: SPoly) -> Self {
        let mut coeffs = BTreeMap::new();
        if !p.is_zero() {
            coeffs.insert(power, p);
        }
        LaurentPoly { coeffs }
    }

    /// The spectral parameter itself.
    pub fn lambda() -> Self {
        LaurentPoly::monomial(1, SPoly::one())
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, power: i32) -> SPoly {
        self.coeffs.get(&power).cloned().unwrap_or_default()
    }

    pub fn powers(&self) -> impl Iterator<Item = (i32, &SPoly)> {
        self.coeffs.iter().map(|(k, p)| (*k, p))
    }

    pub fn max_power(&self) -> Option<i32> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn min_power(&self) -> Option<i32> {
        self.coeffs.keys().next().copied()
    }

    fn add_at(&mut self, power: i32, p: &SPoly) {
        let e = self.coeffs.entry(power).or_default();
        *e += p;
        if e.is_zero() {
            self.coeffs.remove(&power);
        }
    }

    pub fn map(&self, f: impl Fn(&SPoly) -> SPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (k, p) in &self.coeffs {
            out.add_at(*k, &f(p));
        }
        out
    }

    pub fn scale(&self, p: &SPoly) -> LaurentPoly {
        self.map(|c| p * c)
    }

    pub fn d_lambda(&self) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (k, p) in &self.coeffs {
            if *k != 0 {
                out.add_at(k - 1, &p.scale_int(*k as i64));
            }
        }
        out
    }

    /// Substitute a value for the spectral parameter. Negative powers are
    /// rejected because the value is a polynomial.
    pub fn at(&self, value: &SPoly) -> Result<SPoly> {
        let mut out = SPoly::zero();
        for (k, p) in &self.coeffs {
            if *k < 0 {
                return Err(Error::InvalidConfig(
                    "cannot evaluate a negative power of lambda at a polynomial value".into(),
                ));
            }
            out += &(p * &value.pow(*k as u32));
        }
        Ok(out)
    }

    pub fn parity(&self) -> Grading {
        let mut g: Option<Grading> = None;
        for p in self.coeffs.values() {
            let pg = p.parity();
            g = Some(match (g, pg) {
                (None, x) => x,
                (Some(a), b) if a == b => a,
                _ => Grading::Mixed,
            });
        }
        g.unwrap_or(Grading::Even)
    }

    pub fn to_latex(&self) -> String {
        if self.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (k, p) in self.coeffs.iter().rev() {
            let lam = match k {
                0 => String::new(),
                1 => "\\lambda".into(),
                _ => format!("\\lambda^{{{k}}}"),
            };
            if lam.is_empty() {
                parts.push(p.to_latex());
            } else if *p == SPoly::one() {
                parts.push(lam);
            } else if p.len() == 1 && p.as_constant().is_some() {
                parts.push(format!("{}{lam}", p.to_latex()));
            } else {
                parts.push(format!("({}){lam}", p.to_latex()));
            }
        }
        parts.join(" + ").replace("+ -", "- ")
    }
}

impl From<SPoly> for LaurentPoly {
    fn from(p: SPoly) -> Self {
        LaurentPoly::constant(p)
    }
}

impl std::ops::Add for &LaurentPoly {
    type Output = LaurentPoly;
    fn add(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (k, p) in &rhs.coeffs {
            out.add_at(*k, p);
        }
        out
    }
}

impl std::ops::Sub for &LaurentPoly {
    type Output = LaurentPoly;
    fn sub(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = self.clone();
        for (k, p) in &rhs.coeffs {
            out.add_at(*k, &-p);
        }
        out
    }
}

impl std::ops::Neg for &LaurentPoly {
    type Output = LaurentPoly;
    fn neg(self) -> LaurentPoly {
        self.map(|p| -p)
    }
}

impl std::ops::Mul for &LaurentPoly {
    type Output = LaurentPoly;
    fn mul(self, rhs: &LaurentPoly) -> LaurentPoly {
        let mut out = LaurentPoly::zero();
        for (i, p) in &self.coeffs {
            for (j, q) in &rhs.coeffs {
                out.add_at(i + j, &(p * q));
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct LaurentTermJson {
    power: i32,
    coeff: SPoly,
}

impl Serialize for LaurentPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let v: Vec<LaurentTermJson> = self
            .coeffs
            .iter()
            .rev()
            .map(|(k, p)| LaurentTermJson {
                power: *k,
                coeff: p.clone(),
            })
            .collect();
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for LaurentPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = Vec::<LaurentTermJson>::deserialize(d)?;
        let mut out = LaurentPoly::zero();
        for t in v {
            out.add_at(t.power, &t.coeff);
        }
        Ok(out)
    }
}

/// Square supermatrix with grading signature `(even|odd)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuperMatrix {
    even: usize,
    odd: usize,
    entries: Vec<LaurentPoly>,
}

impl SuperMatrix {
    pub fn zero(even: usize, odd: usize) -> Self {
        let n = even + odd;
        SuperMatrix {
            even,
            odd,
            entries: vec![LaurentPoly::zero(); n * n],
        }
    }

    pub fn identity(even: usize, odd: usize) -> Self {
        let mut m = SuperMatrix::zero(even, odd);
        for i in 0..even + odd {
            m.set(i, i, LaurentPoly::constant(SPoly::one()));
        }
        m
    }

    /// Build from rows of entries; panics on a ragged or non-square input.
    pub fn from_rows(even: usize, odd: usize, rows: Vec<Vec<LaurentPoly>>) -> Self {
        let n = even + odd;
        assert_eq!(rows.len(), n, "row count must equal even + odd");
        let mut entries = Vec::with_capacity(n * n);
        for r in rows {
            assert_eq!(r.len(), n, "every row needs even + odd entries");
            entries.extend(r);
        }
        SuperMatrix { even, odd, entries }
    }

    /// `(2|1)` matrix with polynomial (lambda-free) entries.
    pub fn from_spoly_rows(rows: [[SPoly; 3]; 3]) -> Self {
        SuperMatrix::from_rows(
            2,
            1,
            rows.into_iter()
                .map(|r| r.into_iter().map(LaurentPoly::constant).collect())
                .collect(),
        )
    }

    /// Build an even supermatrix, rejecting entries of the wrong parity.
    pub fn even_checked(even: usize, odd: usize, rows: Vec<Vec<LaurentPoly>>) -> Result<Self> {
        let m = SuperMatrix::from_rows(even, odd, rows);
        if let Some((i, j)) = m.parity_violation() {
            return Err(Error::DimensionMismatch(format!(
                "entry ({i},{j}) has the wrong parity for an even supermatrix"
            )));
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.even + self.odd
    }

    pub fn signature(&self) -> (usize, usize) {
        (self.even, self.odd)
    }

    pub fn get(&self, i: usize, j: usize) -> &LaurentPoly {
        &self.entries[i * self.dim() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, p: LaurentPoly) {
        let n = self.dim();
        self.entries[i * n + j] = p;
    }

    fn block_parity(&self, i: usize, j: usize) -> Parity {
        Parity::from_odd((i < self.even) != (j < self.even))
    }

    /// First entry whose parity disagrees with its block in an even supermatrix.
    pub fn parity_violation(&self) -> Option<(usize, usize)> {
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                let expected = match self.block_parity(i, j) {
                    Parity::Even => Grading::Even,
                    Parity::Odd => Grading::Odd,
                };
                let e = self.get(i, j);
                if !e.is_zero() && e.parity() != expected {
                    return Some((i, j));
                }
            }
        }
        None
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(LaurentPoly::is_zero)
    }

    fn check_same(&self, other: &SuperMatrix) -> Result<()> {
        if self.signature() != other.signature() {
            return Err(Error::DimensionMismatch(format!(
                "{:?} vs {:?}",
                self.signature(),
                other.signature()
            )));
        }
        Ok(())
    }

    pub fn map(&self, f: impl Fn(&LaurentPoly) -> LaurentPoly) -> SuperMatrix {
        SuperMatrix {
            even: self.even,
            odd: self.odd,
            entries: self.entries.iter().map(f).collect(),
        }
    }

    pub fn map_coeffs(&self, f: impl Fn(&SPoly) -> SPoly) -> SuperMatrix {
        self.map(|e| e.map(&f))
    }

    pub fn add(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        self.check_same(other)?;
        Ok(SuperMatrix {
            even: self.even,
            odd: self.odd,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        self.check_same(other)?;
        Ok(SuperMatrix {
            even: self.even,
            odd: self.odd,
            entries: self
                .entries
                .iter()
                .zip(&other.entries)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    pub fn neg(&self) -> SuperMatrix {
        self.map(|e| -e)
    }

    pub fn scale(&self, p: &LaurentPoly) -> SuperMatrix {
        self.map(|e| p * e)
    }

    /// Row-by-column product; entries multiply in the supercommutative ring.
    pub fn mat_mul(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        self.check_same(other)?;
        let n = self.dim();
        let mut out = SuperMatrix::zero(self.even, self.odd);
        for i in 0..n {
            for j in 0..n {
                let mut acc = LaurentPoly::zero();
                for k in 0..n {
                    let (a, b) = (self.get(i, k), other.get(k, j));
                    if !a.is_zero() && !b.is_zero() {
                        acc = &acc + &(a * b);
                    }
                }
                out.set(i, j, acc);
            }
        }
        Ok(out)
    }

    pub fn commutator(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        self.mat_mul(other)?.sub(&other.mat_mul(self)?)
    }

    pub fn anticommutator(&self, other: &SuperMatrix) -> Result<SuperMatrix> {
        self.mat_mul(other)?.add(&other.mat_mul(self)?)
    }

    /// Even-block diagonal minus odd-block diagonal.
    pub fn supertrace(&self) -> LaurentPoly {
        let mut acc = LaurentPoly::zero();
        for i in 0..self.dim() {
            if i < self.even {
                acc = &acc + self.get(i, i);
            } else {
                acc = &acc - self.get(i, i);
            }
        }
        acc
    }

    /// Block rule `[[A, B], [C, D]] -> [[A^T, -C^T], [B^T, D^T]]`.
    pub fn supertranspose(&self) -> SuperMatrix {
        let n = self.dim();
        let mut out = SuperMatrix::zero(self.even, self.odd);
        for i in 0..n {
            for j in 0..n {
                let src = self.get(j, i);
                // entry (i, j) of the result comes from (j, i); the upper-right
                // block of the result is built from C = lower-left of self
                let flip = i < self.even && j >= self.even;
                out.set(i, j, if flip { -src } else { src.clone() });
            }
        }
        out
    }

    /// Apply a derivation entrywise (lambda is constant).
    pub fn derive(&self, d: &dyn Derivation) -> SuperMatrix {
        self.map_coeffs(|p| d.apply(p))
    }

    pub fn d_x(&self) -> SuperMatrix {
        self.derive(&JetDerivation)
    }

    pub fn d_lambda(&self) -> SuperMatrix {
        self.map(LaurentPoly::d_lambda)
    }

    /// Entrywise left partial derivative with respect to a field.
    pub fn partial(&self, x: JetVar) -> SuperMatrix {
        self.map_coeffs(|p| crate::superpoly::partial(p, x, Side::Left))
    }

    /// Coefficient matrix of `lambda^power`.
    pub fn coeff(&self, power: i32) -> SuperMatrix {
        self.map(|e| LaurentPoly::constant(e.coeff(power)))
    }

    /// Evaluate at a polynomial value of lambda (nonnegative powers only).
    pub fn at(&self, value: &SPoly) -> Result<SuperMatrix> {
        let mut out = SuperMatrix::zero(self.even, self.odd);
        let n = self.dim();
        for i in 0..n {
            for j in 0..n {
                out.set(i, j, LaurentPoly::constant(self.get(i, j).at(value)?));
            }
        }
        Ok(out)
    }

    /// Apply to a column vector of polynomials (only for lambda-free matrices
    /// or after evaluation with [`SuperMatrix::at`]).
    pub fn apply(&self, vec: &[SPoly]) -> Result<Vec<SPoly>> {
        let n = self.dim();
        if vec.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for a {n}x{n} matrix",
                vec.len()
            )));
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let mut acc = SPoly::zero();
            for (j, x) in vec.iter().enumerate() {
                let e = self.get(i, j);
                if e.min_power().is_some_and(|p| p != 0) || e.max_power().is_some_and(|p| p != 0)
                {
                    return Err(Error::InvalidConfig(
                        "matrix still depends on lambda".into(),
                    ));
                }
                acc += &(&e.coeff(0) * x);
            }
            out.push(acc);
        }
        Ok(out)
    }

    pub fn to_latex(&self) -> String {
        let n = self.dim();
        let rows: Vec<String> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| self.get(i, j).to_latex())
                    .collect::<Vec<_>>()
                    .join(" & ")
            })
            .collect();
        format!(
            "\\left(\\begin{{array}}{{{}}}\n{}\n\\end{{array}}\\right)",
            "c".repeat(n),
            rows.join(" \\\\\n")
        )
    }
}

impl fmt::Display for SuperMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        for i in 0..n {
            let row: Vec<String> = (0..n)
                .map(|j| {
                    let e = self.get(i, j);
                    let parts: Vec<String> = e
                        .powers()
                        .map(|(k, p)| format!("[{p}]*lambda^{k}"))
                        .collect();
                    if parts.is_empty() {
                        "0".into()
                    } else {
                        parts.join(" + ")
                    }
                })
                .collect();
            writeln!(f, "| {} |", row.join(" ; "))?;
        }
        Ok(())
    }
}

/// The basis `e1..e5` of sl(2|1) (three even, two odd elements).
pub fn sl21_basis() -> [SuperMatrix; 5] {
    let unit = |entries: &[(usize, usize, i64)]| {
        let mut m = SuperMatrix::zero(2, 1);
        for &(i, j, c) in entries {
            m.set(i, j, LaurentPoly::constant(SPoly::int(c)));
        }
        m
    };
    [
        unit(&[(0, 0, 1), (1, 1, -1)]),
        unit(&[(1, 0, 1)]),
        unit(&[(0, 1, 1)]),
        unit(&[(0, 2, 1), (2, 1, -1)]),
        unit(&[(1, 2, 1), (2, 0, 1)]),
    ]
}

/// The spatial spectral matrix `M(u, lambda)`.
pub fn spectral_matrix() -> SuperMatrix {
    let v = SPoly::field(Field::V);
    let w = SPoly::field(Field::W);
    let a = SPoly::field(Field::Alpha);
    let b = SPoly::field(Field::Beta);
    let half_v = v.scale(&crate::superpoly::rat(1, 2));
    let lam = LaurentPoly::lambda();
    let c = LaurentPoly::constant;
    SuperMatrix::from_rows(
        2,
        1,
        vec![
            vec![&c(half_v.clone()) - &lam, c(SPoly::one()), c(a.clone())],
            vec![c(&w.scale_int(-2) - &SPoly::int(2)), &lam - &c(half_v), c(b.clone())],
            vec![c(b), c(-a), LaurentPoly::zero()],
        ],
    )
}

/// Time derivative through a flow: `D_t u^(k) = D_x^k(flow[u])`. Variables
/// without a flow entry are treated as time independent.
pub struct FlowDerivation<'a> {
    flow: &'a BTreeMap<Field, SPoly>,
}

impl<'a> FlowDerivation<'a> {
    pub fn new(flow: &'a BTreeMap<Field, SPoly>) -> Self {
        FlowDerivation { flow }
    }
}

impl Derivation for FlowDerivation<'_> {
    fn derive_var(&self, v: JetVar) -> SPoly {
        match self.flow.get(&v.field) {
            Some(rhs) if v.index == 0 => rhs.d_x_n(v.order as usize),
            _ => SPoly::zero(),
        }
    }
}

/// `U_t - (N_n)_x + [U, N_n]` with `U_t` obtained by the chain rule through
/// `flow`. Vanishes exactly when the flow is the compatibility condition.
pub fn zero_curvature_residual(
    u: &SuperMatrix,
    n_mat: &SuperMatrix,
    flow: &BTreeMap<Field, SPoly>,
) -> Result<SuperMatrix> {
    let u_t = u.derive(&FlowDerivation::new(flow));
    u_t.sub(&n_mat.d_x())?.add(&u.commutator(n_mat)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::parse;

    fn c(s: &str) -> LaurentPoly {
        LaurentPoly::constant(parse(s).unwrap())
    }

    #[test]
    fn basis_relations() {
        let [e1, e2, e3, e4, e5] = sl21_basis();
        let id = SuperMatrix::identity(2, 1);
        assert_eq!(e1.mat_mul(&id).unwrap(), e1);
        assert_eq!(e4.mat_mul(&e4).unwrap(), e3.neg());
        assert_eq!(e2.commutator(&e3).unwrap(), e1.neg());
        assert_eq!(e1.commutator(&e2).unwrap(), e2.scale(&c("-2")));
        assert_eq!(e1.commutator(&e3).unwrap(), e3.scale(&c("2")));
        assert_eq!(e4.anticommutator(&e4).unwrap(), e3.scale(&c("-2")));
        assert_eq!(e5.anticommutator(&e5).unwrap(), e2.scale(&c("2")));
        assert_eq!(e4.anticommutator(&e5).unwrap(), e1);
        assert_eq!(e5.commutator(&e1).unwrap(), e5);
        assert_eq!(e2.commutator(&e4).unwrap(), e5);
        assert!(e3.commutator(&e4).unwrap().is_zero());
        assert!(e2.commutator(&e5).unwrap().is_zero());
        assert_eq!(e3.commutator(&e5).unwrap(), e4);
        assert_eq!(e1.commutator(&e4).unwrap(), e4);
        assert!(e1.commutator(&e1).unwrap().is_zero());
    }

    #[test]
    fn adjoint_spectral_matrix() {
        let m = spectral_matrix();
        let lam = LaurentPoly::lambda();
        let expected = SuperMatrix::from_rows(
            2,
            1,
            vec![
                vec![&lam - &c("1/2*v"), c("2*w + 2"), c("beta")],
                vec![c("-1"), &c("1/2*v") - &lam, c("-alpha")],
                vec![c("-alpha"), c("-beta"), LaurentPoly::zero()],
            ],
        );
        assert_eq!(m.supertranspose().neg(), expected);
        assert!(m.parity_violation().is_none());
    }

    #[test]
    fn double_supertranspose_flips_odd_blocks() {
        let m = spectral_matrix();
        let twice = m.supertranspose().supertranspose();
        let sign = SuperMatrix::from_spoly_rows([
            [SPoly::int(1), SPoly::zero(), SPoly::zero()],
            [SPoly::zero(), SPoly::int(1), SPoly::zero()],
            [SPoly::zero(), SPoly::zero(), SPoly::int(-1)],
        ]);
        let conj = sign.mat_mul(&m).unwrap().mat_mul(&sign).unwrap();
        assert_eq!(twice, conj);
        assert_ne!(twice, m);
        let diag = SuperMatrix::from_spoly_rows([
            [parse("v").unwrap(), SPoly::zero(), SPoly::zero()],
            [SPoly::zero(), parse("w").unwrap(), SPoly::zero()],
            [SPoly::zero(), SPoly::zero(), parse("alpha*beta").unwrap()],
        ]);
        assert_eq!(diag.supertranspose(), diag);
    }

    #[test]
    fn dimension_mismatch() {
        let a = SuperMatrix::identity(2, 1);
        let b = SuperMatrix::identity(1, 1);
        assert!(matches!(a.mat_mul(&b), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn parity_check_on_construction() {
        let rows = vec![
            vec![c("v"), c("alpha"), c("0")],
            vec![c("0"), c("v"), c("0")],
            vec![c("0"), c("0"), c("0")],
        ];
        assert!(SuperMatrix::even_checked(2, 1, rows).is_err());
    }

    #[test]
    fn laurent_arithmetic() {
        let lam = LaurentPoly::lambda();
        let inv = LaurentPoly::monomial(-1, SPoly::int(2));
        let prod = &lam * &inv;
        assert_eq!(prod, c("2"));
        assert_eq!((&lam * &lam).d_lambda(), lam.scale(&SPoly::int(2)));
        let val = (&(&lam * &lam) + &c("v")).at(&parse("lambda[1]").unwrap()).unwrap();
        assert_eq!(val, parse("lambda[1]^2 + v").unwrap());
        assert!(inv.at(&SPoly::one()).is_err());
    }

    #[test]
    fn json_round_trip() {
        let m = spectral_matrix();
        let s = serde_json::to_string(&m).unwrap();
        let back: SuperMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, m);
    }
}
