//! Conservation laws from the Riccati variables `F = phi2/phi1` and
//! `G = phi3/phi1` expanded in powers of `1/lambda`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::hierarchy::{recurse, HierarchyConfig, HierarchyTable};
use crate::laxmatrix::{FlowDerivation, LaurentPoly};
use crate::report::Check;
use crate::superpoly::{integrate_x, rat, Derivation, Field, Grading, SPoly};

const ODD: [Field; 2] = [Field::Alpha, Field::Beta];

/// Rows `j = 1..=order` of `(f_j, g_j)`; index 0 holds the zero seed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RiccatiTable {
    pub f: Vec<SPoly>,
    pub g: Vec<SPoly>,
}

impl RiccatiTable {
    pub fn order(&self) -> usize {
        self.f.len() - 1
    }

    /// `sum_j f_j lambda^{-j}`.
    pub fn f_series(&self) -> LaurentPoly {
        series(&self.f)
    }

    pub fn g_series(&self) -> LaurentPoly {
        series(&self.g)
    }

    /// Set the odd fields to zero in every entry.
    pub fn bosonic(&self) -> RiccatiTable {
        RiccatiTable {
            f: self.f.iter().map(|p| p.kill_fields(&ODD)).collect(),
            g: self.g.iter().map(|p| p.kill_fields(&ODD)).collect(),
        }
    }
}

fn series(c: &[SPoly]) -> LaurentPoly {
    let mut out = LaurentPoly::zero();
    for (j, p) in c.iter().enumerate().skip(1) {
        out = &out + &LaurentPoly::monomial(-(j as i32), p.clone());
    }
    out
}

/// Solve the Riccati equations order by order.
pub fn riccati(order: usize) -> RiccatiTable {
    let v = SPoly::field(Field::V);
    let w = SPoly::field(Field::W);
    let al = SPoly::field(Field::Alpha);
    let be = SPoly::field(Field::Beta);
    let h = rat(1, 2);
    let mut f = vec![SPoly::zero()];
    let mut g = vec![SPoly::zero()];
    for n in 0..order {
        let mut ff = SPoly::zero();
        let mut fg = SPoly::zero();
        let mut gf = SPoly::zero();
        for l in 1..n {
            ff += &(&f[l] * &f[n - l]);
            fg += &(&f[l] * &g[n - l]);
            gf += &(&g[l] * &f[n - l]);
        }
        let mut fn1 = &(&f[n].d_x() + &(&v * &f[n])) - &(&be * &g[n]);
        fn1 += &ff;
        fn1 += &(&al * &fg);
        if n == 0 {
            fn1 += &(&w.scale_int(2) + &SPoly::int(2));
        }
        let mut gn1 = &(&g[n].d_x() + &(&al * &f[n])) + &(&v * &g[n]).scale(&h);
        gn1 += &gf;
        if n == 0 {
            gn1 -= &be;
        }
        f.push(fn1.scale(&h));
        g.push(gn1);
    }
    RiccatiTable { f, g }
}

/// Residuals of both Riccati equations after inserting the truncated
/// series. Returns `(F residual, G residual)` coefficients for the powers
/// `lambda^0 .. lambda^{-(order-1)}`, the ones fixed by the truncation.
pub fn substituted_riccati_residual(table: &RiccatiTable) -> (Vec<SPoly>, Vec<SPoly>) {
    let c = |p: SPoly| LaurentPoly::constant(p);
    let v = SPoly::field(Field::V);
    let w = SPoly::field(Field::W);
    let al = c(SPoly::field(Field::Alpha));
    let be = c(SPoly::field(Field::Beta));
    let lam = LaurentPoly::lambda();
    let f = table.f_series();
    let g = table.g_series();
    let fx = f.map(SPoly::d_x);
    let gx = g.map(SPoly::d_x);
    let two_lam_minus_v = &lam.scale(&SPoly::int(2)) - &c(v.clone());
    let rhs_f = {
        let mut r = c(&w.scale_int(-2) - &SPoly::int(2));
        r = &r + &(&two_lam_minus_v * &f);
        r = &r + &(&be * &g);
        r = &r - &(&f * &f);
        &r - &(&al * &(&f * &g))
    };
    let rhs_g = {
        let lam_minus = &lam - &c(v.scale(&rat(1, 2)));
        let mut r = be.clone();
        r = &r - &(&al * &f);
        r = &r + &(&lam_minus * &g);
        r = &r - &(&g * &f);
        &r - &(&al * &(&g * &g))
    };
    let rf = &fx - &rhs_f;
    let rg = &gx - &rhs_g;
    let n = table.order();
    (
        (0..n).map(|k| rf.coeff(-(k as i32))).collect(),
        (0..n).map(|k| rg.coeff(-(k as i32))).collect(),
    )
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservedPair {
    pub n: usize,
    pub sigma: SPoly,
    pub theta: SPoly,
}

/// `sigma_n = f_n + alpha g_n` and the flux of the `t_flow` flow, read off
/// from `A + B F + rho G` with `A, B, rho` the first row of the positive part
/// of `lambda^{t_flow} N` (no modification term).
pub fn conserved_pair_for(
    riccati: &RiccatiTable,
    table: &HierarchyTable,
    n: usize,
    t_flow: usize,
) -> ConservedPair {
    let al = SPoly::field(Field::Alpha);
    let sigma = &riccati.f[n] + &(&al * &riccati.g[n]);
    let mut a = LaurentPoly::zero();
    let mut b = LaurentPoly::zero();
    let mut rho = LaurentPoly::zero();
    for m in 0..=t_flow {
        let p = (t_flow - m) as i32;
        let r = table.row(m);
        a = &a + &LaurentPoly::monomial(p, r.a.clone());
        b = &b + &LaurentPoly::monomial(p, r.b.clone());
        rho = &rho + &LaurentPoly::monomial(p, r.rho.clone());
    }
    let theta_series = &(&a + &(&b * &riccati.f_series())) + &(&rho * &riccati.g_series());
    ConservedPair {
        n,
        sigma,
        theta: theta_series.coeff(-(n as i32)),
    }
}

/// The closed form for the second flow:
/// `k0 [-f_{n+1} - v f_n / 2 - alpha g_{n+1} + (alpha_x - v alpha / 2) g_n]`.
pub fn conserved_pair(riccati: &RiccatiTable, n: usize, k0: &SPoly) -> ConservedPair {
    let v = SPoly::field(Field::V);
    let al = SPoly::field(Field::Alpha);
    let h = rat(1, 2);
    let sigma = &riccati.f[n] + &(&al * &riccati.g[n]);
    let mut inner = -&riccati.f[n + 1];
    inner -= &(&v * &riccati.f[n]).scale(&h);
    inner -= &(&al * &riccati.g[n + 1]);
    inner += &(&(&al.d_x() - &(&v * &al).scale(&h)) * &riccati.g[n]);
    ConservedPair {
        n,
        sigma,
        theta: k0 * &inner,
    }
}

/// How the conservation law held.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Holds {
    Exactly,
    UpToTotalDerivative,
    No,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConservationResult {
    pub n: usize,
    pub sigma: SPoly,
    pub theta: SPoly,
    pub residual: SPoly,
    pub holds: Holds,
}

/// `D_t sigma_n - D_x theta_n` along flow `t_flow` with seed `k0`.
pub fn verify_conservation(
    n: usize,
    t_flow: usize,
    k0: &SPoly,
    bosonic: bool,
) -> Result<ConservationResult> {
    let config = HierarchyConfig::with_seed(k0.clone(), t_flow.max(n))?;
    let table = recurse(&config)?;
    let mut flow = table.flow(t_flow)?;
    let mut ric = riccati(n + 1);
    if bosonic {
        ric = ric.bosonic();
        for p in flow.values_mut() {
            *p = p.kill_fields(&ODD);
        }
    }
    let mut pair = conserved_pair_for(&ric, &table, n, t_flow);
    if bosonic {
        pair.sigma = pair.sigma.kill_fields(&ODD);
        pair.theta = pair.theta.kill_fields(&ODD);
    }
    let dt = FlowDerivation::new(&flow);
    let mut residual = &dt.apply(&pair.sigma) - &pair.theta.d_x();
    if bosonic {
        residual = residual.kill_fields(&ODD);
    }
    let holds = if residual.is_zero() {
        Holds::Exactly
    } else if integrate_x(&residual).is_ok() {
        Holds::UpToTotalDerivative
    } else {
        Holds::No
    };
    Ok(ConservationResult {
        n,
        sigma: pair.sigma,
        theta: pair.theta,
        residual,
        holds,
    })
}

/// Published forms, `k0` symbolic.
pub mod published {
    pub const F: [(usize, &str); 3] = [
        (1, "1 + w"),
        (2, "1/2*w_x + 1/2*v*(1 + w)"),
        (
            3,
            "1/4*w_xx + 1/8*w_x^2 + 1/2*v*w_x + 1/4*(1 + w)*(w_x*v + v_x) \
             + 1/8*v^2*(1 + w)*(3 + w) + 1/2*beta*beta_x",
        ),
    ];

    pub const G: [(usize, &str); 3] = [
        (1, "-beta"),
        (2, "-beta_x + alpha*(1 + w) - 1/2*v*beta"),
        (
            3,
            "-beta_xx - v*alpha_x + (alpha_x + alpha*v - beta)*(1 + w) + 3/2*alpha*w_x \
             - 1/2*v_x*beta - 1/4*v^2*beta",
        ),
    ];

    pub const SIGMA1: &str = "w + 1 - alpha*beta";
    pub const THETA1: &str = "k0*(-1/2*w_x - v*(1 + w) + alpha*beta_x - alpha_x*beta + v*alpha*beta)";
}

/// Reproduce the published `f_j`, `g_j`, `sigma_1`, `theta_1`.
pub fn check_published() -> Vec<Check> {
    let ric = riccati(4);
    let mut out = Vec::new();
    for (j, src) in published::F {
        out.push(Check::against_printed_src(format!("f{j}"), src, &ric.f[j]));
    }
    for (j, src) in published::G {
        out.push(Check::against_printed_src(format!("g{j}"), src, &ric.g[j]));
    }
    let pair = conserved_pair(&ric, 1, &SPoly::field(Field::K0));
    out.push(Check::against_printed_src("sigma1", published::SIGMA1, &pair.sigma));
    out.push(Check::against_printed_src("theta1", published::THETA1, &pair.theta));
    out
}

/// Parities of `sigma_n` and `theta_n` (both must be even).
pub fn pair_is_even(pair: &ConservedPair) -> bool {
    [&pair.sigma, &pair.theta]
        .iter()
        .all(|p| p.is_zero() || p.parity() == Grading::Even)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::parse;

    fn p(s: &str) -> SPoly {
        parse(s).unwrap()
    }

    #[test]
    fn seeds() {
        let r = riccati(2);
        assert_eq!(r.f[1], p("1 + w"));
        assert_eq!(r.g[1], p("-beta"));
        assert_eq!(r.f[2], p("1/2*w_x + 1/2*v*(1 + w)"));
        assert_eq!(r.g[2], p("-beta_x + alpha*(1 + w) - 1/2*v*beta"));
    }

    #[test]
    fn third_row_by_hand() {
        let r = riccati(3);
        assert_eq!(
            r.f[3],
            p("1/4*w_xx + 1/4*(1 + w)*v_x + 1/2*v*w_x + 1/4*v^2*(1 + w) \
               + 1/2*beta*beta_x + 1/2*(1 + w)^2")
        );
    }

    #[test]
    fn series_satisfies_riccati() {
        let r = riccati(6);
        let (rf, rg) = substituted_riccati_residual(&r);
        assert_eq!(rf.len(), 6);
        for x in rf.iter().chain(rg.iter()) {
            assert!(x.is_zero(), "{x}");
        }
        let b = r.bosonic();
        assert!(b.g.iter().all(SPoly::is_zero));
    }

    #[test]
    fn closed_form_flux_matches_series() {
        let ric = riccati(5);
        let t = recurse(&HierarchyConfig::symbolic(3)).unwrap();
        for n in 1..=4 {
            let a = conserved_pair(&ric, n, &p("k0"));
            let b = conserved_pair_for(&ric, &t, n, 2);
            assert_eq!(a, b, "n = {n}");
            assert!(pair_is_even(&a));
        }
    }

    #[test]
    fn first_pair() {
        let ric = riccati(2);
        let pair = conserved_pair(&ric, 1, &p("k0"));
        assert_eq!(pair.sigma, p("w + 1 - alpha*beta"));
        assert_eq!(
            pair.theta,
            p("k0*(-1/2*w_x - v*(1 + w) + alpha*beta_x - alpha_x*beta + v*alpha*beta)")
        );
    }

    #[test]
    fn conservation_on_shell() {
        for n in 1..=2 {
            let r = verify_conservation(n, 2, &SPoly::int(2), false).unwrap();
            assert_eq!(r.holds, Holds::Exactly, "n = {n}: {}", r.residual);
            let b = verify_conservation(n, 2, &SPoly::int(2), true).unwrap();
            assert_eq!(b.holds, Holds::Exactly);
        }
    }
}
