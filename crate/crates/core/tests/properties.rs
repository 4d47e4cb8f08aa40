use proptest::prelude::*;

use sgbk_core::constraint::{BracketSigns, ConstrainedSystem, EigenSystem};
use sgbk_core::dynamics::{g_mul, GrassmannNumber};
use sgbk_core::laxmatrix::SuperMatrix;
use sgbk_core::superpoly::{
    euler_variational, int, integrate_x, Field, Grading, JetVar, Parity, SPoly, Side,
};

const VARS: [Field; 4] = [Field::V, Field::W, Field::Alpha, Field::Beta];

fn jet() -> impl Strategy<Value = JetVar> {
    (0..VARS.len(), 0u16..3).prop_map(|(f, k)| JetVar::new(VARS[f]).with_order(k))
}

/// Sums of up to four products of up to three jet variables.
fn poly() -> impl Strategy<Value = SPoly> {
    prop::collection::vec((-4i64..=4, prop::collection::vec(jet(), 0..=3)), 0..=4).prop_map(|terms| {
        terms
            .into_iter()
            .map(|(c, vars)| SPoly::product(&vars, int(c)))
            .sum()
    })
}

fn homogeneous() -> impl Strategy<Value = (SPoly, Parity)> {
    (poly(), any::<bool>()).prop_map(|(p, odd)| {
        let parity = Parity::from_odd(odd);
        (p.graded_part(parity), parity)
    })
}

fn sign(a: Parity, b: Parity) -> i64 {
    if a.is_odd() && b.is_odd() {
        -1
    } else {
        1
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn supercommutative((p, a) in homogeneous(), (q, b) in homogeneous()) {
        prop_assert_eq!(&p * &q, (&q * &p).scale_int(sign(a, b)));
    }

    #[test]
    fn associative(p in poly(), q in poly(), r in poly()) {
        prop_assert_eq!(&(&p * &q) * &r, &p * &(&q * &r));
    }

    #[test]
    fn leibniz(p in poly(), q in poly()) {
        prop_assert_eq!((&p * &q).d_x(), &(&p.d_x() * &q) + &(&p * &q.d_x()));
    }

    #[test]
    fn integrate_inverts_d_x(p in poly()) {
        let q = &p - &SPoly::constant(p.constant_term());
        prop_assert_eq!(integrate_x(&q.d_x()).unwrap(), q);
    }

    #[test]
    fn euler_kills_total_derivatives(p in poly()) {
        let dp = p.d_x();
        for f in VARS {
            for side in [Side::Left, Side::Right] {
                prop_assert!(euler_variational(&dp, JetVar::new(f), side).is_zero());
            }
        }
    }

    #[test]
    fn recanonicalize_is_identity(p in poly()) {
        prop_assert_eq!(p.recanonicalize(), p);
    }

    #[test]
    fn supertrace_is_cyclic(a in prop::collection::vec(poly(), 18)) {
        let mat = |e: &[SPoly]| {
            let even = |i: usize| e[i].graded_part(Parity::Even);
            let odd = |i: usize| e[i].graded_part(Parity::Odd);
            SuperMatrix::from_spoly_rows([
                [even(0), even(1), odd(2)],
                [even(3), even(4), odd(5)],
                [odd(6), odd(7), even(8)],
            ])
        };
        let (x, y) = (mat(&a[..9]), mat(&a[9..]));
        prop_assert_eq!(
            x.mat_mul(&y).unwrap().supertrace(),
            y.mat_mul(&x).unwrap().supertrace()
        );
    }
}

fn grassmann(k: usize, parity: Parity) -> impl Strategy<Value = GrassmannNumber<f64>> {
    prop::collection::vec(-4i32..=4, 1 << k).prop_map(move |c| {
        let coeffs = c
            .into_iter()
            .enumerate()
            .map(|(m, x)| if (m.count_ones() % 2 == 1) == parity.is_odd() { f64::from(x) } else { 0.0 })
            .collect();
        GrassmannNumber::from_coeffs(k, coeffs).unwrap()
    })
}

fn grassmann_any(k: usize) -> impl Strategy<Value = (GrassmannNumber<f64>, Parity)> {
    any::<bool>().prop_flat_map(move |odd| {
        let p = Parity::from_odd(odd);
        grassmann(k, p).prop_map(move |g| (g, p))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn g_mul_associative(a in grassmann(4, Parity::Even), b in grassmann(4, Parity::Odd), c in grassmann(4, Parity::Odd)) {
        let left = g_mul(&g_mul(&a, &b).unwrap(), &c).unwrap();
        let right = g_mul(&a, &g_mul(&b, &c).unwrap()).unwrap();
        prop_assert_eq!(left, right);
    }

    #[test]
    fn g_mul_supercommutative((a, p) in grassmann_any(5), (b, q) in grassmann_any(5)) {
        let ab = g_mul(&a, &b).unwrap();
        let ba = g_mul(&b, &a).unwrap();
        prop_assert_eq!(ab, ba.scale(&(sign(p, q) as f64)));
    }

    #[test]
    fn g_mul_parity((a, p) in grassmann_any(4), (b, q) in grassmann_any(4)) {
        let ab = g_mul(&a, &b).unwrap();
        let want = if p.is_odd() != q.is_odd() { Grading::Odd } else { Grading::Even };
        prop_assert!(ab.is_zero() || ab.parity() == want);
    }
}

fn phase_jet() -> impl Strategy<Value = JetVar> {
    let sys = EigenSystem::numeric(1);
    let gens = sys.generators();
    (0..gens.len()).prop_map(move |i| gens[i])
}

fn phase_poly() -> impl Strategy<Value = SPoly> {
    prop::collection::vec((-3i64..=3, prop::collection::vec(phase_jet(), 1..=3)), 1..=3).prop_map(|terms| {
        terms
            .into_iter()
            .map(|(c, vars)| SPoly::product(&vars, int(c)))
            .sum()
    })
}

fn phase_homogeneous() -> impl Strategy<Value = (SPoly, Parity)> {
    (phase_poly(), any::<bool>()).prop_map(|(p, odd)| {
        let parity = Parity::from_odd(odd);
        (p.graded_part(parity), parity)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// With left partials in both slots, even pairs enter antisymmetrically
    /// and odd pairs symmetrically, so same-parity arguments give
    /// `{f, g} = -(-1)^{|f||g|} {g, f}` for either sign choice.
    #[test]
    fn bracket_symmetry((f, p) in phase_homogeneous(), (g, q) in phase_homogeneous()) {
        prop_assume!(p == q);
        let cs = ConstrainedSystem::new(&EigenSystem::numeric(1)).unwrap();
        for signs in [BracketSigns::PRINTED, BracketSigns::FLOW] {
            let fg = cs.poisson_with(&f, &g, signs);
            let gf = cs.poisson_with(&g, &f, signs);
            prop_assert_eq!(&fg, &-&gf.scale_int(sign(p, q)));
        }
    }

    /// The bracket is bilinear: summing it over all pairs of terms gives
    /// the bracket of the sums.
    #[test]
    fn bracket_by_monomial_pairs(f in phase_poly(), g in phase_poly()) {
        let cs = ConstrainedSystem::new(&EigenSystem::numeric(1)).unwrap();
        for signs in [BracketSigns::PRINTED, BracketSigns::FLOW] {
            let mut brute = SPoly::zero();
            for (m1, c1) in f.terms() {
                for (m2, c2) in g.terms() {
                    let a = SPoly::term(m1.clone(), c1.clone());
                    let b = SPoly::term(m2.clone(), c2.clone());
                    brute += &cs.poisson_with(&a, &b, signs);
                }
            }
            prop_assert_eq!(cs.poisson_with(&f, &g, signs), brute);
        }
    }
}
