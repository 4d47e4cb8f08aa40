//! Grassmann-valued numerics for the nonlinearized systems: dense
//! finite Grassmann algebras, polynomial evaluation, fixed-step RK4 and
//! conservation monitoring.

use std::collections::BTreeMap;
use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::constraint::{ConstrainedSystem, EigenSystem};
use crate::error::{Error, Result};
use crate::superpoly::{partial, Grading, JetVar, Rational, SPoly, Side};

/// Hard limit on the number of odd generators regardless of the env cap.
pub const HARD_MAX_K: usize = 16;

/// Cap on the number of odd generators, from `SGBK_MAX_K` (default 10).
pub fn max_k() -> usize {
    std::env::var("SGBK_MAX_K")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(10)
        .min(HARD_MAX_K)
}

/// Coefficient ring of a Grassmann number.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
}

/// Products of basis monomials `theta_A theta_B` with `A`, `B` disjoint,
/// as `(A, B, negative)`.
fn product_table(k: usize) -> &'static [(u32, u32, bool)] {
    static TABLES: [OnceLock<Vec<(u32, u32, bool)>>; HARD_MAX_K + 1] =
        [const { OnceLock::new() }; HARD_MAX_K + 1];
    TABLES[k].get_or_init(|| {
        let full = (1u32 << k) - 1;
        let mut out = Vec::new();
        for a in 0..=full {
            let free = full & !a;
            let mut b = free;
            loop {
                out.push((a, b, subset_sign(a, b)));
                if b == 0 {
                    break;
                }
                b = (b - 1) & free;
            }
        }
        out
    })
}

/// Sign of sorting `theta_A theta_B` into increasing generator order.
fn subset_sign(a: u32, b: u32) -> bool {
    let mut swaps = 0;
    let mut rest = b;
    while rest != 0 {
        let i = rest.trailing_zeros();
        swaps += (a >> (i + 1)).count_ones();
        rest &= rest - 1;
    }
    swaps % 2 == 1
}

/// Element of the Grassmann algebra on `k` generators, stored densely:
/// bit `i` of a coefficient index marks the generator `theta_{i+1}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrassmannNumber<T = f64> {
    k: usize,
    coeffs: Vec<T>,
}

impl<T: Scalar> GrassmannNumber<T> {
    pub fn zero(k: usize) -> Self {
        assert!(k <= HARD_MAX_K, "too many generators");
        GrassmannNumber {
            k,
            coeffs: vec![T::zero(); 1 << k],
        }
    }

    pub fn scalar(k: usize, c: T) -> Self {
        let mut g = Self::zero(k);
        g.coeffs[0] = c;
        g
    }

    /// `c * theta_i`, generators numbered from 1.
    pub fn generator(k: usize, i: usize, c: T) -> Self {
        assert!((1..=k).contains(&i), "generator index out of range");
        let mut g = Self::zero(k);
        g.coeffs[1 << (i - 1)] = c;
        g
    }

    pub fn from_coeffs(k: usize, coeffs: Vec<T>) -> Result<Self> {
        if coeffs.len() != 1 << k {
            return Err(Error::DimensionMismatch(format!(
                "{} coefficients for {k} generators",
                coeffs.len()
            )));
        }
        Ok(GrassmannNumber { k, coeffs })
    }

    pub fn generators(&self) -> usize {
        self.k
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    /// Coefficient of the monomial over the generator subset `mask`.
    pub fn coeff(&self, mask: usize) -> &T {
        &self.coeffs[mask]
    }

    pub fn body(&self) -> &T {
        &self.coeffs[0]
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Parity from the support: exact zeros only.
    pub fn parity(&self) -> Grading {
        let mut even = false;
        let mut odd = false;
        for (m, c) in self.coeffs.iter().enumerate() {
            if !c.is_zero() {
                if m.count_ones() % 2 == 0 {
                    even = true;
                } else {
                    odd = true;
                }
            }
        }
        match (even, odd) {
            (_, false) => Grading::Even,
            (false, true) => Grading::Odd,
            (true, true) => Grading::Mixed,
        }
    }

    pub fn scale(&self, c: &T) -> Self {
        GrassmannNumber {
            k: self.k,
            coeffs: self.coeffs.iter().map(|x| c.clone() * x.clone()).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_algebra(self, other)?;
        Ok(self.zip(other, |a, b| a.clone() + b.clone()))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        same_algebra(self, other)?;
        Ok(self.zip(other, |a, b| a.clone() - b.clone()))
    }

    /// `self += c * other`; algebras must agree.
    fn axpy(&mut self, c: &T, other: &Self) {
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x = x.clone() + c.clone() * y.clone();
        }
    }

    fn zip(&self, other: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        GrassmannNumber {
            k: self.k,
            coeffs: self.coeffs.iter().zip(&other.coeffs).map(|(a, b)| f(a, b)).collect(),
        }
    }

    pub fn to_f64(&self) -> GrassmannNumber<f64> {
        GrassmannNumber {
            k: self.k,
            coeffs: self.coeffs.iter().map(Scalar::to_f64).collect(),
        }
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let mut out = vec![T::zero(); self.coeffs.len()];
        let mut skip = u32::MAX;
        for &(a, b, neg) in product_table(self.k) {
            if a == skip {
                continue;
            }
            let x = &self.coeffs[a as usize];
            if x.is_zero() {
                skip = a;
                continue;
            }
            let y = &other.coeffs[b as usize];
            if y.is_zero() {
                continue;
            }
            let p = x.clone() * y.clone();
            let slot = &mut out[(a | b) as usize];
            *slot = if neg { slot.clone() - p } else { slot.clone() + p };
        }
        GrassmannNumber {
            k: self.k,
            coeffs: out,
        }
    }
}

impl GrassmannNumber<f64> {
    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_finite())
    }
}

fn same_algebra<T>(a: &GrassmannNumber<T>, b: &GrassmannNumber<T>) -> Result<()> {
    if a.k != b.k {
        return Err(Error::AlgebraMismatch(a.k, b.k));
    }
    Ok(())
}

/// Product in the Grassmann algebra.
pub fn g_mul<T: Scalar>(a: &GrassmannNumber<T>, b: &GrassmannNumber<T>) -> Result<GrassmannNumber<T>> {
    same_algebra(a, b)?;
    Ok(a.mul_unchecked(b))
}

/// Values of phase-space generators in a common Grassmann algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<T = f64> {
    k: usize,
    values: BTreeMap<JetVar, GrassmannNumber<T>>,
}

impl<T: Scalar> PhasePoint<T> {
    pub fn new(k: usize) -> Result<Self> {
        if k > max_k() {
            return Err(Error::InvalidConfig(format!(
                "{k} Grassmann generators exceed the cap of {}",
                max_k()
            )));
        }
        Ok(PhasePoint {
            k,
            values: BTreeMap::new(),
        })
    }

    /// Assign a value; its parity must match the generator.
    pub fn set(&mut self, var: JetVar, value: GrassmannNumber<T>) -> Result<()> {
        if value.k != self.k {
            return Err(Error::AlgebraMismatch(self.k, value.k));
        }
        let ok = match value.parity() {
            Grading::Even => !var.is_odd() || value.is_zero(),
            Grading::Odd => var.is_odd(),
            Grading::Mixed => false,
        };
        if !ok {
            return Err(Error::ParityMismatch {
                var: SPoly::var(var).to_string(),
                expected: var.parity().to_string(),
                found: value.parity().to_string(),
            });
        }
        self.values.insert(var, value);
        Ok(())
    }

    pub fn get(&self, var: JetVar) -> Option<&GrassmannNumber<T>> {
        self.values.get(&var)
    }

    pub fn generators(&self) -> usize {
        self.k
    }

    pub fn variables(&self) -> impl Iterator<Item = JetVar> + '_ {
        self.values.keys().copied()
    }

    pub fn to_f64(&self) -> PhasePoint<f64> {
        PhasePoint {
            k: self.k,
            values: self.values.iter().map(|(v, g)| (*v, g.to_f64())).collect(),
        }
    }
}

impl PhasePoint<Rational> {
    /// Seeded point for the generators of `sys`: even coordinates are
    /// rationals in `[-1, 1]` with denominator 8, odd coordinates random
    /// combinations of the `k` generators whose leading generator is
    /// distinct per coordinate where `k` allows.
    pub fn random(sys: &EigenSystem, k: usize, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pt = PhasePoint::new(k)?;
        let small = |rng: &mut ChaCha8Rng| Rational::new(rng.gen_range(-8i64..=8).into(), 8.into());
        let mut next_odd = 0;
        for var in sys.generators() {
            let value = if var.is_odd() {
                if k == 0 {
                    GrassmannNumber::zero(0)
                } else {
                    let lead = next_odd % k;
                    next_odd += 1;
                    let mut g = GrassmannNumber::generator(k, lead + 1, Rational::from_integer(1.into()));
                    for i in 0..k {
                        if i != lead {
                            g.coeffs[1 << i] = small(&mut rng).scale_half();
                        }
                    }
                    g
                }
            } else {
                let mut c = small(&mut rng);
                if c.is_zero() {
                    c = Rational::new(1.into(), 8.into());
                }
                GrassmannNumber::scalar(k, c)
            };
            pt.set(var, value)?;
        }
        Ok(pt)
    }
}

trait Half {
    fn scale_half(self) -> Self;
}

impl Half for Rational {
    fn scale_half(self) -> Self {
        self / Rational::from_integer(2.into())
    }
}

/// A polynomial flattened to `(coefficient, factor slots)` for repeated
/// numeric evaluation. Factors keep their canonical order.
#[derive(Clone, Debug)]
pub struct CompiledPoly<T> {
    terms: Vec<(T, Vec<usize>)>,
}

impl<T: Scalar> CompiledPoly<T> {
    /// `slots` gives the position of every variable in the value array.
    pub fn new(p: &SPoly, slots: &BTreeMap<JetVar, usize>) -> Result<Self> {
        let mut terms = Vec::new();
        for (m, c) in p.terms() {
            let mut idx = Vec::new();
            for &(v, e) in m.factors() {
                let s = *slots
                    .get(&v)
                    .ok_or_else(|| Error::UnassignedGenerator(SPoly::var(v).to_string()))?;
                idx.extend(std::iter::repeat_n(s, e as usize));
            }
            terms.push((T::from_rational(c), idx));
        }
        Ok(CompiledPoly { terms })
    }

    pub fn eval(&self, k: usize, values: &[GrassmannNumber<T>]) -> GrassmannNumber<T> {
        let mut out = GrassmannNumber::<T>::zero(k);
        for (c, idx) in &self.terms {
            match idx.split_first() {
                None => out.coeffs[0] = out.coeffs[0].clone() + c.clone(),
                Some((&first, rest)) => {
                    let mut acc = values[first].clone();
                    for &i in rest {
                        acc = acc.mul_unchecked(&values[i]);
                    }
                    out.axpy(c, &acc);
                }
            }
        }
        out
    }
}

/// Value of `p` at `pt`.
pub fn evaluate<T: Scalar>(p: &SPoly, pt: &PhasePoint<T>) -> Result<GrassmannNumber<T>> {
    let vars: Vec<JetVar> = pt.values.keys().copied().collect();
    let slots: BTreeMap<JetVar, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let values: Vec<GrassmannNumber<T>> = pt.values.values().cloned().collect();
    Ok(CompiledPoly::new(p, &slots)?.eval(pt.k, &values))
}

/// Which flow of the nonlinearized system to integrate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Part {
    X,
    /// The `t_n` flow.
    T(usize),
}

impl std::str::FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "x" => Ok(Part::X),
            _ => s
                .strip_prefix('t')
                .and_then(|n| n.parse().ok())
                .filter(|n| *n >= 1)
                .map(Part::T)
                .ok_or_else(|| Error::InvalidConfig(format!("unknown flow {s:?}"))),
        }
    }
}

impl std::fmt::Display for Part {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Part::X => write!(f, "x"),
            Part::T(n) => write!(f, "t{n}"),
        }
    }
}

pub fn flow_rhs(cs: &ConstrainedSystem, part: Part) -> Result<BTreeMap<JetVar, SPoly>> {
    match part {
        Part::X => Ok(cs.rhs_x.clone()),
        Part::T(n) => cs.rhs_t(n),
    }
}

/// Sampled solution; `states[i][v]` is the value of `vars[v]` at `times[i]`.
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub k: usize,
    pub vars: Vec<JetVar>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<GrassmannNumber<f64>>>,
}

impl Trajectory {
    pub fn point(&self, i: usize) -> PhasePoint<f64> {
        PhasePoint {
            k: self.k,
            values: self.vars.iter().copied().zip(self.states[i].iter().cloned()).collect(),
        }
    }
}

/// Fixed-step RK4 over `span`. The step is `dt` shrunk so that a whole
/// number of steps covers the span.
pub fn integrate_ode(
    cs: &ConstrainedSystem,
    part: Part,
    pt0: &PhasePoint<f64>,
    span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    integrate_rhs(&flow_rhs(cs, part)?, pt0, span, dt)
}

pub fn integrate_rhs(
    rhs: &BTreeMap<JetVar, SPoly>,
    pt0: &PhasePoint<f64>,
    span: (f64, f64),
    dt: f64,
) -> Result<Trajectory> {
    if dt.is_nan() || dt <= 0.0 || !span.0.is_finite() || !span.1.is_finite() || span.1 < span.0 {
        return Err(Error::InvalidConfig(format!(
            "need dt > 0 and a finite span, got dt = {dt}, span = {span:?}"
        )));
    }
    let vars: Vec<JetVar> = rhs.keys().copied().collect();
    let slots: BTreeMap<JetVar, usize> = vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    let field: Vec<CompiledPoly<f64>> = rhs
        .values()
        .map(|p| CompiledPoly::new(p, &slots))
        .collect::<Result<_>>()?;
    let k = pt0.k;
    let mut y: Vec<GrassmannNumber<f64>> = vars
        .iter()
        .map(|v| {
            pt0.get(*v)
                .cloned()
                .ok_or_else(|| Error::UnassignedGenerator(SPoly::var(*v).to_string()))
        })
        .collect::<Result<_>>()?;

    let steps = (((span.1 - span.0) / dt).round() as usize).max(1);
    let h = (span.1 - span.0) / steps as f64;
    let f = |y: &[GrassmannNumber<f64>]| -> Vec<GrassmannNumber<f64>> {
        field.iter().map(|p| p.eval(k, y)).collect()
    };
    let shifted = |y: &[GrassmannNumber<f64>], d: &[GrassmannNumber<f64>], c: f64| {
        y.iter()
            .zip(d)
            .map(|(a, b)| {
                let mut s = a.clone();
                s.axpy(&c, b);
                s
            })
            .collect::<Vec<_>>()
    };

    let mut times = vec![span.0];
    let mut states = vec![y.clone()];
    for s in 1..=steps {
        let k1 = f(&y);
        let k2 = f(&shifted(&y, &k1, h / 2.0));
        let k3 = f(&shifted(&y, &k2, h / 2.0));
        let k4 = f(&shifted(&y, &k3, h));
        for (i, yi) in y.iter_mut().enumerate() {
            yi.axpy(&(h / 6.0), &k1[i]);
            yi.axpy(&(h / 3.0), &k2[i]);
            yi.axpy(&(h / 3.0), &k3[i]);
            yi.axpy(&(h / 6.0), &k4[i]);
        }
        let t = span.0 + s as f64 * h;
        if !y.iter().all(GrassmannNumber::is_finite) {
            return Err(Error::NonFiniteState(t));
        }
        times.push(t);
        states.push(y.clone());
    }
    Ok(Trajectory {
        k,
        vars,
        times,
        states,
    })
}

/// Largest deviation of a monitored quantity from its initial value.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Drift {
    pub name: String,
    /// Per coefficient, max over the trajectory of `|value(t) - value(0)|`.
    pub per_coeff: Vec<f64>,
    pub max: f64,
}

pub fn monitor(traj: &Trajectory, integrals: &[(String, SPoly)]) -> Result<Vec<Drift>> {
    let slots: BTreeMap<JetVar, usize> = traj.vars.iter().enumerate().map(|(i, v)| (*v, i)).collect();
    integrals
        .iter()
        .map(|(name, p)| {
            let c = CompiledPoly::<f64>::new(p, &slots)?;
            let v0 = c.eval(traj.k, &traj.states[0]);
            let mut per_coeff = vec![0.0; v0.coeffs.len()];
            for state in &traj.states[1..] {
                let v = c.eval(traj.k, state);
                for (d, (a, b)) in per_coeff.iter_mut().zip(v.coeffs.iter().zip(&v0.coeffs)) {
                    *d = f64::max(*d, (a - b).abs());
                }
            }
            let max = per_coeff.iter().fold(0.0, |m: f64, x| m.max(*x));
            Ok(Drift {
                name: name.clone(),
                per_coeff,
                max,
            })
        })
        .collect()
}

/// Least-squares slope of `log drift` against `log dt`.
pub fn fitted_order(dts: &[f64], drifts: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = dts
        .iter()
        .zip(drifts)
        .filter(|(_, d)| **d > 0.0)
        .map(|(h, d)| (h.ln(), d.ln()))
        .collect();
    if pts.len() < 2 {
        return f64::NAN;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Drift of each integral for `dt0, dt0/2, ...` and the fitted order per
/// integral.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OrderStudy {
    pub dts: Vec<f64>,
    /// `drifts[i][j]`: integral `i` at step `dts[j]`.
    pub drifts: Vec<Vec<f64>>,
    pub names: Vec<String>,
    pub orders: Vec<f64>,
}

pub fn order_study(
    cs: &ConstrainedSystem,
    part: Part,
    pt0: &PhasePoint<f64>,
    span: (f64, f64),
    dt0: f64,
    halvings: usize,
    integrals: &[(String, SPoly)],
) -> Result<OrderStudy> {
    let rhs = flow_rhs(cs, part)?;
    let dts: Vec<f64> = (0..=halvings).map(|i| dt0 / f64::from(1u32 << i)).collect();
    let mut drifts = vec![Vec::new(); integrals.len()];
    for &dt in &dts {
        let traj = integrate_rhs(&rhs, pt0, span, dt)?;
        for (i, d) in monitor(&traj, integrals)?.into_iter().enumerate() {
            drifts[i].push(d.max);
        }
    }
    let orders = drifts.iter().map(|d| fitted_order(&dts, d)).collect();
    Ok(OrderStudy {
        dts,
        drifts,
        names: integrals.iter().map(|(n, _)| n.clone()).collect(),
        orders,
    })
}

/// Numerical rank of the differentials of `fs` at `pt`. Each differential
/// is the concatenation over generators of the Grassmann coefficients of
/// the left partial derivative; rows are normalized to unit length before
/// the singular values are taken.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    pub rows: usize,
    pub singular_values: Vec<f64>,
    pub tolerance: f64,
}

pub fn differential_rank(fs: &[SPoly], pt: &PhasePoint<f64>, tolerance: f64) -> Result<RankReport> {
    let vars: Vec<JetVar> = pt.values.keys().copied().collect();
    let width = vars.len() << pt.k;
    let mut m = DMatrix::<f64>::zeros(fs.len(), width);
    for (r, f) in fs.iter().enumerate() {
        let mut row = Vec::with_capacity(width);
        for v in &vars {
            row.extend_from_slice(evaluate(&partial(f, *v, Side::Left), pt)?.coeffs());
        }
        let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
        for (c, x) in row.into_iter().enumerate() {
            m[(r, c)] = if norm > 0.0 { x / norm } else { 0.0 };
        }
    }
    let mut singular_values: Vec<f64> = m.singular_values().iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    singular_values.resize(fs.len(), 0.0);
    let rank = singular_values.iter().filter(|s| **s > tolerance).count();
    Ok(RankReport {
        rank,
        rows: fs.len(),
        singular_values,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constraint::printed_spatial;
    use crate::superpoly::{int, parse, rat, Field};

    type G = GrassmannNumber<Rational>;

    fn theta(k: usize, i: usize) -> G {
        G::generator(k, i, int(1))
    }

    /// Product of basis monomials by explicit reordering of generator lists.
    fn naive_basis_product(a: usize, b: usize) -> Option<(usize, i64)> {
        if a & b != 0 {
            return None;
        }
        let mut gens: Vec<u32> = (0..16).filter(|i| a >> i & 1 == 1).collect();
        gens.extend((0..16).filter(|i| b >> i & 1 == 1));
        let mut sign = 1;
        for i in 0..gens.len() {
            for j in 0..gens.len() - 1 - i {
                if gens[j] > gens[j + 1] {
                    gens.swap(j, j + 1);
                    sign = -sign;
                }
            }
        }
        Some((a | b, sign))
    }

    #[test]
    fn generators_anticommute() {
        let (t1, t2) = (theta(3, 1), theta(3, 2));
        let a = g_mul(&t1, &t2).unwrap();
        let b = g_mul(&t2, &t1).unwrap();
        assert_eq!(a, b.scale(&int(-1)));
        assert_eq!(*a.coeff(0b011), int(1));
        assert!(g_mul(&t1, &t1).unwrap().is_zero());
        let r = g_mul(&G::scalar(0, rat(3, 2)), &G::scalar(0, int(4))).unwrap();
        assert_eq!(*r.body(), int(6));
        assert_eq!(
            g_mul(&theta(2, 1), &theta(3, 1)),
            Err(Error::AlgebraMismatch(2, 3))
        );
    }

    #[test]
    fn product_table_matches_reordering() {
        for k in 0..=5 {
            let mut seen = 0;
            for &(a, b, neg) in product_table(k) {
                let (c, s) = naive_basis_product(a as usize, b as usize).unwrap();
                assert_eq!(c, (a | b) as usize);
                assert_eq!(neg, s < 0);
                seen += 1;
            }
            assert_eq!(seen, 3usize.pow(k as u32));
        }
    }

    fn point(sys: &EigenSystem, k: usize) -> PhasePoint<Rational> {
        PhasePoint::random(sys, k, 7).unwrap()
    }

    #[test]
    fn random_point_respects_parity() {
        let sys = EigenSystem::numeric(2);
        let pt = point(&sys, 6);
        for v in pt.variables() {
            let want = if v.is_odd() { Grading::Odd } else { Grading::Even };
            assert_eq!(pt.get(v).unwrap().parity(), want);
        }
        assert_eq!(pt, PhasePoint::random(&sys, 6, 7).unwrap());
        assert_ne!(pt, PhasePoint::random(&sys, 6, 8).unwrap());
    }

    #[test]
    fn set_checks_parity_and_algebra() {
        let mut pt = PhasePoint::<Rational>::new(2).unwrap();
        let a = JetVar::new(Field::Alpha);
        assert!(pt.set(a, G::scalar(2, int(1))).is_err());
        assert!(pt.set(a, theta(3, 1)).is_err());
        assert!(pt.set(a, theta(2, 1)).is_ok());
        assert!(PhasePoint::<f64>::new(HARD_MAX_K + 1).is_err());
    }

    #[test]
    fn evaluate_examples() {
        let mut pt = PhasePoint::new(2).unwrap();
        pt.set(JetVar::new(Field::Alpha), theta(2, 1)).unwrap();
        pt.set(JetVar::new(Field::Beta), theta(2, 2)).unwrap();
        let ab = evaluate(&parse("alpha*beta").unwrap(), &pt).unwrap();
        assert_eq!(ab, g_mul(&theta(2, 1), &theta(2, 2)).unwrap());
        assert!(matches!(
            evaluate(&parse("v").unwrap(), &pt),
            Err(Error::UnassignedGenerator(_))
        ));

        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let f = cs.generating_integrals(3).unwrap();
        let pt = point(&sys, 4);
        assert_eq!(evaluate(&f[2], &pt).unwrap(), G::scalar(4, int(-2)));
    }

    #[test]
    fn f3_matches_rowwise_evaluation() {
        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let pt = point(&sys, 4);
        let rows = cs.tilde_rows(3).unwrap();
        let ev = |p: &SPoly| evaluate(p, &pt).unwrap();
        let mul = |a: &G, b: &G| g_mul(a, b).unwrap();
        let mut sum = G::zero(4);
        for i in 0..=3 {
            let (p, q) = (&rows[i], &rows[3 - i]);
            sum = sum.add(&mul(&ev(&p.a), &ev(&q.a))).unwrap();
            sum = sum.sub(&mul(&ev(&p.b), &ev(&q.b)).scale(&int(2))).unwrap();
            sum = sum.add(&mul(&ev(&p.b), &ev(&q.c)).scale(&int(2))).unwrap();
            sum = sum.add(&mul(&ev(&p.rho), &ev(&q.delta)).scale(&int(2))).unwrap();
        }
        let f3 = &cs.generating_integrals(3).unwrap()[3];
        assert_eq!(evaluate(f3, &pt).unwrap(), sum);
    }

    #[test]
    fn spatial_rhs_agrees_with_printed_system() {
        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let printed = printed_spatial(&cs).unwrap();
        let pt = point(&sys, 6);
        for (v, rhs) in &cs.rhs_x {
            assert_eq!(
                evaluate(rhs, &pt).unwrap(),
                evaluate(&printed[v], &pt).unwrap()
            );
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let mut pt = PhasePoint::<f64>::new(2).unwrap();
        for v in sys.generators() {
            pt.set(v, GrassmannNumber::zero(2)).unwrap();
        }
        for part in [Part::X, Part::T(2)] {
            let tr = integrate_ode(&cs, part, &pt, (0.0, 0.1), 0.01).unwrap();
            assert!(tr.states.last().unwrap().iter().all(GrassmannNumber::is_zero));
        }
    }

    #[test]
    fn flows_preserve_parity_exactly() {
        let sys = EigenSystem::numeric(1);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let pt = point(&sys, 3).to_f64();
        let tr = integrate_ode(&cs, Part::X, &pt, (0.0, 0.2), 0.01).unwrap();
        assert_eq!(tr.times.len(), 21);
        for (i, v) in tr.vars.iter().enumerate() {
            let want = if v.is_odd() { Grading::Odd } else { Grading::Even };
            assert_eq!(tr.states.last().unwrap()[i].parity(), want);
        }

        // bosonic data: odd coordinates stay exactly zero
        let mut bos = PhasePoint::<f64>::new(3).unwrap();
        for v in pt.variables() {
            let val = if v.is_odd() { GrassmannNumber::zero(3) } else { pt.get(v).unwrap().clone() };
            bos.set(v, val).unwrap();
        }
        let tr = integrate_ode(&cs, Part::T(2), &bos, (0.0, 0.2), 0.01).unwrap();
        for (i, v) in tr.vars.iter().enumerate() {
            if v.is_odd() {
                assert!(tr.states.iter().all(|s| s[i].is_zero()));
            }
        }
    }

    #[test]
    fn monitor_constant_and_conserved() {
        let sys = EigenSystem::numeric(1);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let f = cs.generating_integrals(3).unwrap();
        let pt = point(&sys, 3).to_f64();
        let tr = integrate_ode(&cs, Part::X, &pt, (0.0, 0.5), 1e-3).unwrap();
        let ints = vec![("F2".to_string(), f[2].clone()), ("F3".to_string(), f[3].clone())];
        let d = monitor(&tr, &ints).unwrap();
        assert_eq!(d[0].max, 0.0);
        assert!(d[1].max < 1e-9, "{}", d[1].max);
        assert_eq!(d[1].per_coeff.len(), 8);
    }

    #[test]
    fn blow_up_is_reported() {
        let y = JetVar::phi(1, 1);
        let mut rhs = BTreeMap::new();
        rhs.insert(y, parse("phi1[1]^2").unwrap());
        let mut pt = PhasePoint::<f64>::new(0).unwrap();
        pt.set(y, GrassmannNumber::scalar(0, 1.0)).unwrap();
        assert!(matches!(
            integrate_rhs(&rhs, &pt, (0.0, 3.0), 0.01),
            Err(Error::NonFiniteState(_))
        ));
        assert!(integrate_rhs(&rhs, &pt, (0.0, 1.0), 0.0).is_err());
    }

    #[test]
    fn order_fit() {
        let dts = [0.1, 0.05, 0.025];
        let drifts: Vec<f64> = dts.iter().map(|h: &f64| 3.0 * h.powi(4)).collect();
        assert!((fitted_order(&dts, &drifts) - 4.0).abs() < 1e-12);
        assert!(fitted_order(&dts, &[0.0, 0.0, 0.0]).is_nan());
    }

    #[test]
    fn rank_examples() {
        let sys = EigenSystem::numeric(1);
        let pt = point(&sys, 2).to_f64();
        let p = parse("phi1[1]*psi1[1]").unwrap();
        let fs = [p.clone(), p.pow(2), parse("phi2[1]*psi2[1]").unwrap(), SPoly::int(-2)];
        let r = differential_rank(&fs, &pt, 1e-8).unwrap();
        assert_eq!(r.rank, 2);
        assert_eq!(r.singular_values.len(), 4);
    }

    #[test]
    fn part_parsing() {
        assert_eq!("x".parse::<Part>().unwrap(), Part::X);
        assert_eq!("t2".parse::<Part>().unwrap(), Part::T(2));
        assert!("t0".parse::<Part>().is_err());
        assert_eq!(Part::T(3).to_string(), "t3");
    }
}
