//! Eigenfunction side of the hierarchy: sourced flows, the variational
//! derivative of an eigenvalue, the symmetry constraint, the nonlinearized
//! finite-dimensional systems, their integrals and the Poisson bracket.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hierarchy::{
    apply_j, lifted_l_row1_with, l_local_rows_with, recurse, HierarchyConfig, HierarchyTable, Row,
    Vec4, FIELDS,
};
use crate::laxmatrix::{spectral_matrix, SuperMatrix};
use crate::report::{Check, Status};
use crate::superpoly::{
    int, parse, parse_with, partial, rat, substitute, Derivation, Field, JetDerivation, JetVar,
    ParseContext, Rational, SPoly, Side,
};

/// `N` eigenvalues with their eigenfunctions `phi_ij`, adjoint
/// eigenfunctions `psi_ij`, and the two extra odd variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenSystem {
    pub lambdas: Vec<SPoly>,
}

impl EigenSystem {
    /// `lambda_j = j`.
    pub fn numeric(n: usize) -> Self {
        EigenSystem {
            lambdas: (1..=n as i64).map(SPoly::int).collect(),
        }
    }

    /// `lambda_j` kept as commuting symbols.
    pub fn symbolic(n: usize) -> Self {
        EigenSystem {
            lambdas: (1..=n).map(|j| SPoly::var(JetVar::lambda(j))).collect(),
        }
    }

    pub fn with_values(values: &[Rational]) -> Result<Self> {
        for (i, a) in values.iter().enumerate() {
            if values[..i].contains(a) {
                return Err(Error::InvalidConfig(format!("eigenvalue {a} repeated")));
            }
        }
        Ok(EigenSystem {
            lambdas: values.iter().cloned().map(SPoly::constant).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.lambdas.len()
    }

    /// `lambda_j`, 1-based.
    pub fn lambda(&self, j: usize) -> &SPoly {
        &self.lambdas[j - 1]
    }

    pub fn context(&self) -> ParseContext {
        ParseContext::new(self.lambdas.clone())
    }

    /// Parse with inner products `<L^k Psi_a,Phi_b>` over this system.
    pub fn parse(&self, src: &str) -> Result<SPoly> {
        parse_with(src, &self.context())
    }

    /// Parse a row template: `{j}` is the index and `LAM` is `lambda_j`.
    pub fn parse_at(&self, template: &str, j: usize) -> Result<SPoly> {
        let mut src = template.replace("{j}", &j.to_string());
        if src.contains("LAM") {
            src = src.replace("LAM", &format!("({})", self.lambda(j)));
        }
        self.parse(&src)
    }

    pub fn phi(i: usize, j: usize) -> SPoly {
        SPoly::var(JetVar::phi(i, j))
    }

    pub fn psi(i: usize, j: usize) -> SPoly {
        SPoly::var(JetVar::psi(i, j))
    }

    pub fn phi_ext() -> SPoly {
        SPoly::field(Field::PhiExt)
    }

    pub fn psi_ext() -> SPoly {
        SPoly::field(Field::PsiExt)
    }

    /// Conjugate pairs `(phi, psi)`: the eigenfunction components, then the
    /// extra pair.
    pub fn pairs(&self) -> Vec<(JetVar, JetVar)> {
        let mut out = Vec::new();
        for i in 1..=3 {
            for j in 1..=self.n() {
                out.push((JetVar::phi(i, j), JetVar::psi(i, j)));
            }
        }
        out.push((JetVar::new(Field::PhiExt), JetVar::new(Field::PsiExt)));
        out
    }

    /// Every phase-space coordinate, `phi`s before `psi`s.
    pub fn generators(&self) -> Vec<JetVar> {
        let pairs = self.pairs();
        pairs.iter().map(|p| p.0).chain(pairs.iter().map(|p| p.1)).collect()
    }

    fn phi_vec(j: usize) -> [SPoly; 3] {
        [1, 2, 3].map(|i| Self::phi(i, j))
    }

    fn psi_vec(j: usize) -> [SPoly; 3] {
        [1, 2, 3].map(|i| Self::psi(i, j))
    }
}

/// A derivation given by its values on underived variables. Variables
/// without a rule take the jet derivative.
#[derive(Clone, Debug, Default)]
pub struct MapDerivation {
    pub rules: BTreeMap<JetVar, SPoly>,
}

impl MapDerivation {
    pub fn new(rules: BTreeMap<JetVar, SPoly>) -> Self {
        MapDerivation { rules }
    }
}

impl Derivation for MapDerivation {
    fn derive_var(&self, v: JetVar) -> SPoly {
        match self.rules.get(&v.base()) {
            Some(rule) => self.apply_n(rule, v.order as usize),
            None => JetDerivation.derive_var(v),
        }
    }
}

/// `phi_j,x = M(lambda_j) phi_j` and `psi_j,x = -M^St(lambda_j) psi_j`, with
/// the potentials left free.
pub fn spectral_derivation(sys: &EigenSystem) -> Result<MapDerivation> {
    let mut rules = BTreeMap::new();
    for j in 1..=sys.n() {
        let m = spectral_matrix().at(sys.lambda(j))?;
        insert_vec(&mut rules, j, &m)?;
    }
    Ok(MapDerivation::new(rules))
}

fn insert_vec(rules: &mut BTreeMap<JetVar, SPoly>, j: usize, m: &SuperMatrix) -> Result<()> {
    let phi = m.apply(&EigenSystem::phi_vec(j))?;
    let psi = m.supertranspose().neg().apply(&EigenSystem::psi_vec(j))?;
    for i in 0..3 {
        rules.insert(JetVar::phi(i + 1, j), phi[i].clone());
        rules.insert(JetVar::psi(i + 1, j), psi[i].clone());
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Sources

/// `sum_j delta lambda_j / delta u` in the normalization used for sources:
/// `(<Phi1,Phi2>, 2<Phi1,Phi1>, -2<Phi2,Phi3>, 2<Phi1,Phi3>)`.
pub fn source_vector(sys: &EigenSystem) -> Result<Vec4> {
    Ok([
        sys.parse("<Phi1,Phi2>")?,
        sys.parse("2<Phi1,Phi1>")?,
        sys.parse("-2<Phi2,Phi3>")?,
        sys.parse("2<Phi1,Phi3>")?,
    ])
}

/// The `n`-th flow with self-consistent sources. Derivatives of the
/// eigenfunctions are left as jet variables.
pub fn source_flow(
    table: &HierarchyTable,
    n: usize,
    sys: &EigenSystem,
) -> Result<BTreeMap<Field, SPoly>> {
    let mut flow = table.flow(n)?;
    let src = apply_j(&source_vector(sys)?);
    for (k, f) in FIELDS.iter().enumerate() {
        *flow.get_mut(f).expect("all four fields") += &src[k];
    }
    Ok(flow)
}

pub mod published {
    /// Source terms of the sourced `n = 2` system, per field.
    pub const SOURCE_TERMS: [(&str, &str); 4] = [
        ("v", "-2*(<Phi1,Phi1>)_x"),
        ("w", "-(<Phi1,Phi2>)_x + alpha*<Phi2,Phi3> + beta*<Phi1,Phi3>"),
        ("alpha", "-alpha*<Phi1,Phi1> - <Phi1,Phi3>"),
        ("beta", "beta*<Phi1,Phi1> + <Phi2,Phi3>"),
    ];

    /// Spectral problem as displayed next to the sourced hierarchy, rows of
    /// `phi_j,x` with `LAM = lambda_j`.
    pub const SOURCE_SPECTRAL: [&str; 3] = [
        "LAM*phi1[{j}] + (w - 1/2*v)*phi2[{j}] + alpha*phi3[{j}]",
        "2*v*phi1[{j}] - LAM*phi2[{j}] + beta*phi3[{j}]",
        "beta*phi1[{j}] - alpha*phi2[{j}]",
    ];

    /// The symmetry constraint, lines 1 to 4, as `lhs - rhs`.
    pub const CONSTRAINT: [&str; 4] = [
        "w - alpha*beta - 1/2*(<Psi1,Phi1> - <Psi2,Phi2>)",
        "v + 2*<Psi2,Phi1>",
        "-2*beta_x - v*beta - (<Psi3,Phi2> + <Psi1,Phi3>)",
        "-2*alpha_x + v*alpha - (<Psi2,Phi3> - <Psi3,Phi1>)",
    ];

    /// Nonlinearized spatial system: `(variable, rhs)` with `LAM = lambda_j`.
    pub const SPATIAL: [(&str, &str); 8] = [
        ("phi1[{j}]", "(-LAM - <Psi2,Phi1>)*phi1[{j}] + phi2[{j}] + phiN*phi3[{j}]"),
        (
            "phi2[{j}]",
            "-(<Psi1,Phi1> - <Psi2,Phi2> + phiN*psiN + 2)*phi1[{j}] \
             + (LAM + <Psi2,Phi1>)*phi2[{j}] + 1/2*psiN*phi3[{j}]",
        ),
        ("phi3[{j}]", "1/2*psiN*phi1[{j}] - phiN*phi2[{j}]"),
        ("phiN", "-1/2*(<Psi2,Phi3> - <Psi3,Phi1>) - <Psi2,Phi1>*phiN"),
        (
            "psi1[{j}]",
            "(LAM + <Psi2,Phi1>)*psi1[{j}] + (<Psi1,Phi1> - <Psi2,Phi2> + phiN*psiN + 2)*psi2[{j}] \
             + 1/2*psiN*psi3[{j}]",
        ),
        ("psi2[{j}]", "-psi1[{j}] + (-LAM - <Psi2,Phi1>)*psi2[{j}] - phiN*psi3[{j}]"),
        ("psi3[{j}]", "-phiN*psi1[{j}] - 1/2*psiN*psi2[{j}]"),
        ("psiN", "-(<Psi3,Phi2> + <Psi1,Phi3>) + <Psi2,Phi1>*psiN"),
    ];

    pub const H1: &str = "-<L Psi1,Phi1> + <L Psi2,Phi2> - 2*<Psi2,Phi1> + <Psi1,Phi2> \
        - <Psi2,Phi1>*(<Psi1,Phi1> - <Psi2,Phi2>) - phiN*psiN*<Psi2,Phi1> \
        + phiN*(<Psi3,Phi2> + <Psi1,Phi3>) + 1/2*psiN*(<Psi2,Phi3> - <Psi3,Phi1>)";

    /// The `t_2` system before the constraint is inserted, in the potentials.
    pub const TEMPORAL_UNCONSTRAINED: [(&str, &str); 6] = [
        (
            "phi1[{j}]",
            "(LAM^2 + 1/4*(v_x - v^2) - alpha*alpha_x)*phi1[{j}] + (-LAM - 1/2*v)*phi2[{j}] \
             + (-alpha*LAM + alpha_x - 1/2*v*alpha)*phi3[{j}]",
        ),
        (
            "phi2[{j}]",
            "(2*(1 + w)*LAM + w_x + v*(1 + w))*phi1[{j}] \
             + (-LAM^2 - 1/4*(v_x - v^2) + alpha*alpha_x)*phi2[{j}] \
             + (-beta*LAM - beta_x - 1/2*v*beta)*phi3[{j}]",
        ),
        (
            "phi3[{j}]",
            "(-beta*LAM - beta_x - 1/2*v*beta)*phi1[{j}] + (alpha*LAM - alpha_x + 1/2*v*alpha)*phi2[{j}]",
        ),
        (
            "psi1[{j}]",
            "(-LAM^2 - 1/4*(v_x - v^2) + alpha*alpha_x)*psi1[{j}] \
             + (-2*(1 + w)*LAM - w_x - v*(1 + w))*psi2[{j}] \
             + (-beta*LAM - beta_x - 1/2*v*beta)*psi3[{j}]",
        ),
        (
            "psi2[{j}]",
            "(LAM + 1/2*v)*psi1[{j}] + (LAM^2 + 1/4*(v_x - v^2) - alpha*alpha_x)*psi2[{j}] \
             + (alpha*LAM - alpha_x + 1/2*v*alpha)*psi3[{j}]",
        ),
        (
            "psi3[{j}]",
            "(alpha*LAM - alpha_x - 1/2*v*alpha)*psi1[{j}] + (beta*LAM + beta_x + 1/2*v*beta)*psi2[{j}]",
        ),
    ];

    /// Derivatives of the constrained potentials.
    pub const TILDE_DERIVATIVES: [(&str, &str); 4] = [
        (
            "v",
            "4*<L Psi2,Phi1> + 4*<Psi2,Phi1>^2 + 2*(<Psi1,Phi1> - <Psi2,Phi2>) \
             - 2*phiN*(<Psi2,Phi3> - <Psi3,Phi1>)",
        ),
        (
            "w",
            "<Psi1,Phi2> + (<Psi1,Phi1> - <Psi2,Phi2> + phiN*psiN + 2)*<Psi2,Phi1>",
        ),
        ("alpha", "-1/2*(<Psi2,Phi3> - <Psi3,Phi1>) - <Psi2,Phi1>*phiN"),
        ("beta", "-1/2*(<Psi3,Phi2> + <Psi1,Phi3>) + 1/2*<Psi2,Phi1>*psiN"),
    ];

    /// The nonlinearized `t_2` system.
    pub const TEMPORAL: [(&str, &str); 8] = [
        (
            "phi1[{j}]",
            "(LAM^2 + <L Psi2,Phi1> + 1/2*(<Psi1,Phi1> - <Psi2,Phi2>))*phi1[{j}] \
             + (-LAM + <Psi2,Phi1>)*phi2[{j}] \
             + (-phiN*LAM - 1/2*(<Psi2,Phi3> - <Psi3,Phi1>))*phi3[{j}]",
        ),
        (
            "phi2[{j}]",
            "((2 + (<Psi1,Phi1> - <Psi2,Phi2>) + phiN*psiN)*LAM + <Psi1,Phi2>)*phi1[{j}] \
             + (-LAM^2 - <L Psi2,Phi1> - 1/2*(<Psi1,Phi1> - <Psi2,Phi2>))*phi2[{j}] \
             + (-1/2*psiN*LAM + 1/2*(<Psi3,Phi2> + <Psi1,Phi3>))*phi3[{j}]",
        ),
        (
            "phi3[{j}]",
            "(-1/2*psiN*LAM + 1/2*(<Psi3,Phi2> + <Psi1,Phi3>))*phi1[{j}] \
             + (phiN*LAM + 1/2*(<Psi2,Phi3> - <Psi3,Phi1>))*phi2[{j}]",
        ),
        ("phiN", "-1/2*(<L Psi2,Phi3> - <L Psi3,Phi1>) - phiN*<L Psi2,Phi1>"),
        (
            "psi1[{j}]",
            "(-LAM^2 - <L Psi2,Phi1> - 1/2*(<Psi1,Phi1> - <Psi2,Phi2>))*psi1[{j}] \
             + ((-2 - (<Psi1,Phi1> + <Psi2,Phi2>) + phiN*psiN)*LAM - <Psi1,Phi2>)*psi2[{j}] \
             + (-1/2*psiN*LAM + 1/2*(<Psi3,Phi2> + <Psi1,Phi3>))*psi3[{j}]",
        ),
        (
            "psi2[{j}]",
            "(LAM - <Psi2,Phi1>)*psi1[{j}] \
             + (LAM^2 + <L Psi2,Phi1> + 1/2*(<Psi1,Phi1> - <Psi2,Phi2>))*psi2[{j}] \
             + (phiN*LAM + 1/2*(<Psi2,Phi3> - <Psi3,Phi1>))*psi3[{j}]",
        ),
        (
            "psi3[{j}]",
            "(phiN*LAM + 1/2*(<Psi2,Phi3> - <Psi3,Phi1>))*psi1[{j}] \
             + (1/2*psiN*LAM - 1/2*(<Psi3,Phi2> + <Psi1,Phi3>))*psi2[{j}]",
        ),
        ("psiN", "-(<L Psi3,Phi2> + <L Psi1,Phi3>) + psiN*<L Psi2,Phi1>"),
    ];

    pub const H2: &str = "<L^2 Psi1,Phi1> - <L^2 Psi2,Phi2> + <L Psi2,Phi1>*(<Psi1,Phi1> - <Psi2,Phi2>) \
        + 2*<L Psi2,Phi1> - <L Psi1,Phi2> + <Psi2,Phi1>*<Psi1,Phi2> \
        - phiN*(<L Psi1,Phi3> + <L Psi3,Phi2>) \
        - 1/2*(<Psi2,Phi3> - <Psi3,Phi1>)*(<Psi3,Phi2> + <Psi1,Phi3>) \
        + 1/2*(<L Psi2,Phi3> - <L Psi3,Phi1>)*psiN + phiN*psiN*<L Psi2,Phi1> \
        + 1/4*(<Psi1,Phi1> - <Psi2,Phi2>)^2";

    pub const F3: &str = "<L Psi1,Phi1> - <L Psi2,Phi2> + 4*<L^2 Psi2,Phi1> - 2*<Psi2,Phi1> - <Psi1,Phi2> \
        + <Psi2,Phi1>*(<Psi1,Phi1> - <Psi2,Phi2> + phiN*psiN) - phiN*(<Psi1,Phi3> + <Psi3,Phi2>) \
        + 1/2*(<Psi1,Phi3> - <Psi3,Phi2>)*psiN";

    pub const F4: &str = H2;

    /// Extra-pair rows of the general `t_n` system, `K = n - 1`.
    pub const TEMPORAL_EXT: [(&str, &str); 2] = [
        ("phiN", "1/2*(<L^K Psi2,Phi3> - <L^K Psi3,Phi1>) - phiN*<L^K Psi2,Phi1>"),
        ("psiN", "-(<L^K Psi3,Phi2> + <L^K Psi1,Phi3>) + psiN*<L^K Psi2,Phi1>"),
    ];
}

fn check_rows(
    sys: &EigenSystem,
    id: &str,
    printed: &[(&str, &str)],
    computed: &BTreeMap<JetVar, SPoly>,
) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for &(var, rhs) in printed {
        let indices: Vec<usize> = if var.contains("{j}") {
            (1..=sys.n()).collect()
        } else {
            vec![0]
        };
        for j in indices {
            let name = var.replace("{j}", &j.to_string());
            let key = parse(&name)?.variables()[0];
            let theirs = sys.parse_at(rhs, j.max(1))?;
            let ours = computed.get(&key).cloned().unwrap_or_default();
            out.push(Check::against_printed(format!("{id}:{name}"), &theirs, &ours));
        }
    }
    Ok(out)
}

/// Compare the spectral problem displayed with the sourced hierarchy against
/// `phi_j,x = M(lambda_j) phi_j`.
pub fn source_spectral_report(sys: &EigenSystem) -> Result<Vec<Check>> {
    let d = spectral_derivation(sys)?;
    let mut out = Vec::new();
    for j in 1..=sys.n() {
        for (i, row) in published::SOURCE_SPECTRAL.iter().enumerate() {
            let theirs = sys.parse_at(row, j)?;
            let ours = d.derive_var(JetVar::phi(i + 1, j));
            out.push(Check::against_printed(
                format!("sources:spectral:phi{}[{j}]_x", i + 1),
                &theirs,
                &ours,
            ));
        }
    }
    Ok(out)
}

/// Source terms of the `n = 2` flow against the displayed ones, followed by
/// the full sourced equations.
pub fn check_sources(table: &HierarchyTable, sys: &EigenSystem) -> Result<Vec<Check>> {
    let src = apply_j(&source_vector(sys)?);
    let mut out = Vec::new();
    for (k, (name, printed)) in published::SOURCE_TERMS.iter().enumerate() {
        out.push(Check::against_printed(
            format!("sources:term:{name}"),
            &sys.parse(printed)?,
            &src[k],
        ));
    }
    let flow = source_flow(table, 2, sys)?;
    for (k, (name, printed)) in crate::hierarchy::published::FLOW2_K0_2.iter().enumerate() {
        let theirs = &parse(printed)? + &sys.parse(published::SOURCE_TERMS[k].1)?;
        out.push(Check::against_printed(
            format!("sources:flow:{name}"),
            &theirs,
            &flow[&FIELDS[k]],
        ));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Variational derivative of an eigenvalue

/// Unnormalized `delta lambda_j / delta u`.
pub fn grad_lambda(j: usize) -> Vec4 {
    let f = |i| EigenSystem::phi(i, j);
    let g = |i| EigenSystem::psi(i, j);
    [
        (&(&g(1) * &f(1)) - &(&g(2) * &f(2))).scale(&rat(1, 2)),
        (&g(2) * &f(1)).scale_int(-2),
        &(&g(3) * &f(2)) + &(&g(1) * &f(3)),
        &(&g(2) * &f(3)) - &(&g(3) * &f(1)),
    ]
}

/// [`grad_lambda`] with the odd components negated: the sign convention of
/// the hierarchy gradients, in which it is an eigenvector of `L`.
pub fn grad_lambda_graded(j: usize) -> Vec4 {
    let [a, b, c, d] = grad_lambda(j);
    [a, b, -c, -d]
}

/// `(L - lambda_j) X` with eigenfunction derivatives taken from the spectral
/// problem. The first row is lifted by `D`.
pub fn eigen_residual(sys: &EigenSystem, j: usize, x: &Vec4) -> Result<Vec4> {
    let d = spectral_derivation(sys)?;
    let lam = sys.lambda(j);
    let lifted = lifted_l_row1_with(x, &d);
    let [r2, r3, r4] = l_local_rows_with(x, &d);
    Ok([
        &lifted - &(lam * &d.apply(&x[0])),
        &r2 - &(lam * &x[1]),
        &r3 - &(lam * &x[2]),
        &r4 - &(lam * &x[3]),
    ])
}

// ---------------------------------------------------------------------------
// Symmetry constraint and nonlinearization

/// Hierarchy rows at `k0 = 1`, as used by the constraint.
pub fn unit_table(order: usize) -> Result<HierarchyTable> {
    recurse(&HierarchyConfig::new(int(1), order)?)
}

/// Gradient `k` of the unit hierarchy minus `sum_j grad_lambda_graded(j)`.
/// At `k = 2` its lines are the displayed constraint up to sign.
pub fn constraint_from_gradient(sys: &EigenSystem, k: usize) -> Result<Vec4> {
    let table = unit_table(k.max(1))?;
    let mut g = table.gradient(k);
    for j in 1..=sys.n() {
        let gl = grad_lambda_graded(j);
        for i in 0..4 {
            g[i] -= &gl[i];
        }
    }
    Ok(g)
}

/// The substitution rules of the constraint together with the x-flow of
/// the nonlinearized system they induce.
#[derive(Clone, Debug)]
pub struct ConstrainedSystem {
    pub sys: EigenSystem,
    /// Keys `v, w, alpha, beta, alpha_x, beta_x`.
    pub rules: BTreeMap<JetVar, SPoly>,
    pub rhs_x: BTreeMap<JetVar, SPoly>,
}

impl ConstrainedSystem {
    pub fn new(sys: &EigenSystem) -> Result<Self> {
        let alpha = JetVar::new(Field::Alpha);
        let beta = JetVar::new(Field::Beta);
        let mut rules = BTreeMap::new();
        rules.insert(JetVar::new(Field::V), sys.parse("-2*<Psi2,Phi1>")?);
        rules.insert(alpha, EigenSystem::phi_ext());
        rules.insert(beta, EigenSystem::psi_ext().scale(&rat(1, 2)));
        let w = &sys.parse("alpha*beta + 1/2*(<Psi1,Phi1> - <Psi2,Phi2>)")?;
        let w = substitute(w, &rules, &JetDerivation)?;
        rules.insert(JetVar::new(Field::W), w);
        // Lines 3 and 4 are linear in beta_x and alpha_x with coefficient -2.
        for (line, var) in [(2, beta), (3, alpha)] {
            let eq = sys.parse(published::CONSTRAINT[line])?;
            let rest = &eq + &SPoly::var(var.derivative()).scale_int(2);
            let solved = substitute(&rest, &rules, &JetDerivation)?.scale(&rat(1, 2));
            rules.insert(var.derivative(), solved);
        }

        let mut rhs_x = BTreeMap::new();
        let free = spectral_derivation(sys)?;
        for (var, rhs) in &free.rules {
            rhs_x.insert(*var, substitute(rhs, &rules, &JetDerivation)?);
        }
        rhs_x.insert(JetVar::new(Field::PhiExt), rules[&alpha.derivative()].clone());
        rhs_x.insert(
            JetVar::new(Field::PsiExt),
            rules[&beta.derivative()].scale_int(2),
        );
        Ok(ConstrainedSystem {
            sys: sys.clone(),
            rules,
            rhs_x,
        })
    }

    pub fn x_derivation(&self) -> MapDerivation {
        MapDerivation::new(self.rhs_x.clone())
    }

    /// Replace potentials and their derivatives by their constrained values.
    pub fn constrain(&self, p: &SPoly) -> Result<SPoly> {
        substitute(p, &self.rules, &self.x_derivation())
    }

    /// Remaining lines of the displayed constraint after substitution; all
    /// vanish by construction.
    pub fn constraint_residuals(&self) -> Result<Vec<SPoly>> {
        published::CONSTRAINT
            .iter()
            .map(|l| self.constrain(&self.sys.parse(l)?))
            .collect()
    }

    pub fn h1(&self) -> Result<SPoly> {
        self.sys.parse(published::H1)
    }

    /// Rows `0..=max_m` of the constrained recursion table: rows 0 and 1
    /// come from the hierarchy, the rest from the eigenfunction formulas.
    pub fn tilde_rows(&self, max_m: usize) -> Result<Vec<Row>> {
        let table = unit_table(1)?;
        let mut rows = Vec::new();
        for m in 0..=max_m.min(1) {
            let r = table.row(m);
            rows.push(Row {
                a: self.constrain(&r.a)?,
                b: self.constrain(&r.b)?,
                c: self.constrain(&r.c)?,
                rho: self.constrain(&r.rho)?,
                delta: self.constrain(&r.delta)?,
            });
        }
        for m in 2..=max_m {
            let k = m - 2;
            let ip = |s: &str| self.sys.parse(&s.replace("K", &k.to_string()));
            rows.push(Row {
                a: ip("1/2*(<L^K Psi1,Phi1> - <L^K Psi2,Phi2>)")?,
                b: ip("<L^K Psi2,Phi1>")?,
                c: ip("<L^K Psi2,Phi1> + 1/2*<L^K Psi1,Phi2>")?,
                rho: ip("-1/2*(<L^K Psi2,Phi3> - <L^K Psi3,Phi1>)")?,
                delta: ip("1/2*(<L^K Psi3,Phi2> + <L^K Psi1,Phi3>)")?,
            });
        }
        Ok(rows)
    }

    /// Hierarchy rows `2..=max_m` under the constraint minus the
    /// eigenfunction formulas for the same rows.
    pub fn tilde_identity_residuals(&self, max_m: usize) -> Result<Vec<Row>> {
        let table = unit_table(max_m)?;
        let tilde = self.tilde_rows(max_m)?;
        let mut out = Vec::new();
        for (m, t) in tilde.iter().enumerate().skip(2) {
            let r = table.row(m);
            out.push(Row {
                a: &self.constrain(&r.a)? - &t.a,
                b: &self.constrain(&r.b)? - &t.b,
                c: &self.constrain(&r.c)? - &t.c,
                rho: &self.constrain(&r.rho)? - &t.rho,
                delta: &self.constrain(&r.delta)? - &t.delta,
            });
        }
        Ok(out)
    }

    /// Right-hand sides of the nonlinearized `t_n` flow.
    pub fn rhs_t(&self, n: usize) -> Result<BTreeMap<JetVar, SPoly>> {
        let rows = self.tilde_rows(n + 1)?;
        let mut out = BTreeMap::new();
        for j in 1..=self.sys.n() {
            let mut m = SuperMatrix::zero(2, 1);
            for (i, row) in rows.iter().enumerate().take(n + 1) {
                let lam = self.sys.lambda(j).pow((n - i) as u32);
                let scaled = row.matrix().map_coeffs(|e| &lam * e);
                m = m.add(&scaled)?;
            }
            let b = &rows[n + 1].b;
            let z = SPoly::zero;
            m = m.add(&SuperMatrix::from_spoly_rows([
                [b.clone(), z(), z()],
                [z(), -b, z()],
                [z(), z(), z()],
            ]))?;
            insert_vec(&mut out, j, &m)?;
        }
        let last = &rows[n + 1];
        out.insert(
            JetVar::new(Field::PhiExt),
            &(&EigenSystem::phi_ext() * &last.b) - &last.rho,
        );
        out.insert(
            JetVar::new(Field::PsiExt),
            &(&-&EigenSystem::psi_ext() * &last.b) + &last.delta.scale_int(2),
        );
        Ok(out)
    }

    /// `F_m` from the constrained table, `m = 0..=max_m`.
    pub fn generating_integrals(&self, max_m: usize) -> Result<Vec<SPoly>> {
        let rows = self.tilde_rows(max_m)?;
        Ok((0..=max_m)
            .map(|m| {
                (0..=m)
                    .map(|i| {
                        let (p, q) = (&rows[i], &rows[m - i]);
                        let mut t = &p.a * &q.a;
                        t -= &(&p.b * &q.b).scale_int(2);
                        t += &(&p.b * &q.c).scale_int(2);
                        t += &(&p.rho * &q.delta).scale_int(2);
                        t
                    })
                    .sum()
            })
            .collect())
    }

    /// `f_k = phi_1k psi_1k + phi_2k psi_2k + phi_3k psi_3k`.
    pub fn f_integrals(&self) -> Vec<SPoly> {
        (1..=self.sys.n())
            .map(|k| {
                (1..=3)
                    .map(|i| &EigenSystem::phi(i, k) * &EigenSystem::psi(i, k))
                    .sum()
            })
            .collect()
    }

    /// `f_k = phi_1k psi_1k + phi_2k psi_2k - phi_3k psi_3k`, the pairing
    /// `psi_k^T phi_k` that the spatial flow preserves.
    pub fn f_integrals_graded(&self) -> Vec<SPoly> {
        (1..=self.sys.n())
            .map(|k| {
                let p = |i| &EigenSystem::phi(i, k) * &EigenSystem::psi(i, k);
                &(&p(1) + &p(2)) - &p(3)
            })
            .collect()
    }

    /// Hamiltonian vector field of `h` with the sign pattern
    /// `phi -> dh/dpsi`, `psi -> -dh/dphi` (even pairs) or `+dh/dphi` (odd
    /// pairs). `ext_side` is used for the extra pair, `side` for the rest.
    pub fn hamilton_vector_field(
        &self,
        h: &SPoly,
        side: Side,
        ext_side: Side,
    ) -> BTreeMap<JetVar, SPoly> {
        let mut out = BTreeMap::new();
        for (phi, psi) in self.sys.pairs() {
            let s = if phi.field == Field::PhiExt { ext_side } else { side };
            out.insert(phi, partial(h, psi, s));
            let d = partial(h, phi, s);
            out.insert(psi, if phi.is_odd() { d } else { -d });
        }
        out
    }

    /// Poisson bracket with the displayed signs.
    pub fn poisson(&self, f: &SPoly, g: &SPoly) -> SPoly {
        self.poisson_with(f, g, BracketSigns::PRINTED)
    }

    pub fn poisson_with(&self, f: &SPoly, g: &SPoly, signs: BracketSigns) -> SPoly {
        let mut acc = SPoly::zero();
        for (phi, psi) in self.sys.pairs() {
            let fp = partial(f, phi, Side::Left);
            let fq = partial(f, psi, Side::Left);
            let gp = partial(g, phi, Side::Left);
            let gq = partial(g, psi, Side::Left);
            let (first, second) = (&fp * &gq, &fq * &gp);
            if phi.field == Field::PhiExt {
                acc += &(&first + &second).scale_int(signs.ext);
            } else if phi.is_odd() {
                acc += &(&first + &second).scale_int(signs.odd);
            } else {
                acc += &(&first - &second);
            }
        }
        acc
    }
}

/// Signs of the two odd sectors of the Poisson bracket: the eigenfunction
/// pairs `(phi_3j, psi_3j)` and the extra pair. Even pairs always enter as
/// `f_phi g_psi - f_psi g_phi`; an odd sector with sign `s` enters as
/// `s (f_phi g_psi + f_psi g_phi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BracketSigns {
    pub odd: i64,
    pub ext: i64,
}

impl BracketSigns {
    /// Both odd sectors with `+`.
    pub const PRINTED: BracketSigns = BracketSigns { odd: 1, ext: 1 };
    /// The bracket for which `D_x F = {F, H1}` along the spatial flow.
    pub const FLOW: BracketSigns = BracketSigns { odd: -1, ext: 1 };
}

/// Variables whose right-hand sides differ; empty when the flows agree.
pub fn flow_difference(
    ours: &BTreeMap<JetVar, SPoly>,
    theirs: &BTreeMap<JetVar, SPoly>,
) -> Vec<(JetVar, SPoly)> {
    ours.iter()
        .map(|(k, v)| (*k, v - &theirs.get(k).cloned().unwrap_or_default()))
        .filter(|(_, r)| !r.is_zero())
        .collect()
}

fn names(diff: &[(JetVar, SPoly)]) -> String {
    let v: Vec<String> = diff.iter().map(|(k, _)| SPoly::var(*k).to_string()).collect();
    if v.is_empty() {
        "none".into()
    } else {
        v.join(", ")
    }
}

/// Hamiltonian form of `rhs` with respect to `h`. Passes when the form
/// holds with left partials on the eigenfunction rows and right partials on
/// the extra pair; the note lists the rows that fail under a single side.
pub fn check_hamilton(
    cs: &ConstrainedSystem,
    id: &str,
    rhs: &BTreeMap<JetVar, SPoly>,
    h: &SPoly,
) -> Check {
    let mixed = flow_difference(rhs, &cs.hamilton_vector_field(h, Side::Left, Side::Right));
    let left = flow_difference(rhs, &cs.hamilton_vector_field(h, Side::Left, Side::Left));
    let right = flow_difference(rhs, &cs.hamilton_vector_field(h, Side::Right, Side::Right));
    let mut c = if mixed.is_empty() {
        Check::new(id, Status::Pass)
    } else {
        Check::new(id, Status::Fail).with_residual(&mixed[0].1)
    };
    c.note = Some(format!(
        "rows failing with left partials: {}; with right partials: {}; with left partials and right on the extra pair: {}",
        names(&left),
        names(&right),
        names(&mixed)
    ));
    c
}

pub fn check_spatial(cs: &ConstrainedSystem) -> Result<Vec<Check>> {
    check_rows(&cs.sys, "spatial", &published::SPATIAL, &cs.rhs_x)
}

pub fn check_temporal(cs: &ConstrainedSystem) -> Result<Vec<Check>> {
    check_rows(&cs.sys, "temporal", &published::TEMPORAL, &cs.rhs_t(2)?)
}

/// Displayed derivatives of the constrained potentials against `D_x` of the
/// substitution rules.
pub fn check_tilde_derivatives(cs: &ConstrainedSystem) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for (name, printed) in published::TILDE_DERIVATIVES {
        let var = parse(&format!("{name}_x"))?;
        out.push(Check::against_printed(
            format!("tilde:{name}_x"),
            &cs.sys.parse(printed)?,
            &cs.constrain(&var)?,
        ));
    }
    Ok(out)
}

/// The unconstrained `t_2` system with the constraint inserted, per variable.
pub fn constrained_unconstrained_temporal(
    cs: &ConstrainedSystem,
) -> Result<BTreeMap<JetVar, SPoly>> {
    let mut out = BTreeMap::new();
    for (var, rhs) in published::TEMPORAL_UNCONSTRAINED {
        for j in 1..=cs.sys.n() {
            let key = parse(&var.replace("{j}", &j.to_string()))?.variables()[0];
            out.insert(key, cs.constrain(&cs.sys.parse_at(rhs, j)?)?);
        }
    }
    Ok(out)
}

/// The displayed `t_2` system before the constraint, after substitution,
/// against the computed flow (eigenfunction rows only).
pub fn check_temporal_consistency(cs: &ConstrainedSystem) -> Result<Vec<Check>> {
    let sub = constrained_unconstrained_temporal(cs)?;
    let ours = cs.rhs_t(2)?;
    Ok(sub
        .iter()
        .map(|(k, theirs)| {
            Check::against_printed(format!("temporal-unconstrained:{}", SPoly::var(*k)), theirs, &ours[k])
        })
        .collect())
}

/// Extra-pair rows of the `t_n` flow against the general display.
pub fn check_temporal_ext(cs: &ConstrainedSystem, n: usize) -> Result<Vec<Check>> {
    let ours = cs.rhs_t(n)?;
    let mut out = Vec::new();
    for (name, printed) in published::TEMPORAL_EXT {
        let key = parse(name)?.variables()[0];
        let theirs = cs.sys.parse(&printed.replace('K', &(n - 1).to_string()))?;
        out.push(Check::against_printed(format!("temporal-t{n}:{name}"), &theirs, &ours[&key]));
    }
    Ok(out)
}

/// Eigen-property of both sign conventions for every `j`.
pub fn check_eigen(sys: &EigenSystem) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for j in 1..=sys.n() {
        let printed = eigen_residual(sys, j, &grad_lambda(j))?;
        out.push(Check::all_zero(format!("eigen:printed:{j}"), printed.iter()));
        let graded = eigen_residual(sys, j, &grad_lambda_graded(j))?;
        out.push(Check::all_zero(format!("eigen:graded:{j}"), graded.iter()));
    }
    Ok(out)
}

/// The displayed constraint against the second hierarchy gradient minus the
/// summed eigenvalue gradients.
pub fn check_constraint(sys: &EigenSystem) -> Result<Vec<Check>> {
    let g = constraint_from_gradient(sys, 2)?;
    let signs = [1, 1, -1, -1];
    let mut out = Vec::new();
    for i in 0..4 {
        let printed = sys.parse(published::CONSTRAINT[i])?;
        out.push(Check::against_printed(
            format!("constraint:line{}", i + 1),
            &printed,
            &g[i].scale_int(signs[i]),
        ));
    }
    Ok(out)
}

/// Every check on the integrals `F_m`, `f_k` and the two brackets.
pub fn check_integrals(cs: &ConstrainedSystem, max_m: usize) -> Result<Vec<Check>> {
    let f = cs.generating_integrals(max_m.max(4))?;
    let d = cs.x_derivation();
    let mut out = Vec::new();
    for (m, value) in [(0, 1), (1, 0), (2, -2)] {
        out.push(Check::against_printed(format!("F{m}"), &SPoly::int(value), &f[m]));
    }
    out.push(Check::against_printed("F3", &cs.sys.parse(published::F3)?, &f[3]));
    out.push(Check::against_printed("F4=H2", &cs.sys.parse(published::H2)?, &f[4]));
    for (m, fm) in f.iter().enumerate() {
        out.push(Check::zero(format!("dx:F{m}"), &d.apply(fm)));
    }
    for (k, fk) in cs.f_integrals().iter().enumerate() {
        out.push(Check::zero(format!("dx:f{}", k + 1), &d.apply(fk)));
    }
    for (k, fk) in cs.f_integrals_graded().iter().enumerate() {
        out.push(Check::zero(format!("dx:f{}-graded", k + 1), &d.apply(fk)));
    }
    for (label, signs) in [("printed", BracketSigns::PRINTED), ("flow", BracketSigns::FLOW)] {
        for m in 2..=max_m {
            for n in m + 1..=max_m {
                let b = cs.poisson_with(&f[m], &f[n], signs);
                out.push(Check::zero(format!("bracket-{label}:F{m},F{n}"), &b));
            }
            for (k, fk) in cs.f_integrals().iter().enumerate() {
                let b = cs.poisson_with(&f[m], fk, signs);
                out.push(Check::zero(format!("bracket-{label}:F{m},f{}", k + 1), &b));
            }
            for (k, fk) in cs.f_integrals_graded().iter().enumerate() {
                let b = cs.poisson_with(&f[m], fk, signs);
                out.push(Check::zero(format!("bracket-{label}:F{m},f{}-graded", k + 1), &b));
            }
        }
    }
    let h1 = cs.h1()?;
    for (m, fm) in f.iter().enumerate() {
        let lhs = d.apply(fm);
        let rhs = cs.poisson_with(fm, &h1, BracketSigns::FLOW);
        out.push(Check::zero(format!("dx=bracket:F{m}"), &(&lhs - &rhs)));
    }
    Ok(out)
}

/// Hamiltonian forms of the spatial flow and of the `t_n` flows.
pub fn check_hamilton_forms(cs: &ConstrainedSystem, max_n: usize) -> Result<Vec<Check>> {
    let mut out = vec![check_hamilton(cs, "hamilton:x:H1", &cs.rhs_x, &cs.h1()?)];
    let h2 = cs.sys.parse(published::H2)?;
    out.push(check_hamilton(cs, "hamilton:t2:H2", &cs.rhs_t(2)?, &h2));
    let printed = printed_temporal(cs)?;
    out.push(check_hamilton(cs, "hamilton:t2-printed:H2", &printed, &h2));
    let f = cs.generating_integrals(max_n + 2)?;
    for n in 2..=max_n {
        out.push(check_hamilton(cs, &format!("hamilton:t{n}:F{}", n + 2), &cs.rhs_t(n)?, &f[n + 2]));
    }
    Ok(out)
}

/// The displayed `t_2` system as a map.
pub fn printed_temporal(cs: &ConstrainedSystem) -> Result<BTreeMap<JetVar, SPoly>> {
    printed_map(&cs.sys, &published::TEMPORAL)
}

pub fn printed_spatial(cs: &ConstrainedSystem) -> Result<BTreeMap<JetVar, SPoly>> {
    printed_map(&cs.sys, &published::SPATIAL)
}

fn printed_map(sys: &EigenSystem, rows: &[(&str, &str)]) -> Result<BTreeMap<JetVar, SPoly>> {
    let mut out = BTreeMap::new();
    for &(var, rhs) in rows {
        let js: Vec<usize> = if var.contains("{j}") { (1..=sys.n()).collect() } else { vec![1] };
        for j in js {
            let key = parse(&var.replace("{j}", &j.to_string()))?.variables()[0];
            out.insert(key, sys.parse_at(rhs, j)?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::superpoly::{Grading, Parity};

    fn sys1() -> EigenSystem {
        EigenSystem::numeric(1)
    }

    /// `D F = sum_g D(g) dF/dg` with left partials.
    fn chain_rule(rhs: &BTreeMap<JetVar, SPoly>, f: &SPoly) -> SPoly {
        rhs.iter().map(|(g, r)| r * &partial(f, *g, Side::Left)).sum()
    }

    #[test]
    fn grad_lambda_shape() {
        let g = grad_lambda(1);
        assert_eq!(g[0], parse("1/2*(psi1[1]*phi1[1] - psi2[1]*phi2[1])").unwrap());
        let par: Vec<Grading> = g.iter().map(|p| p.parity()).collect();
        assert_eq!(
            par,
            vec![Grading::Even, Grading::Even, Grading::Odd, Grading::Odd]
        );
    }

    #[test]
    fn rejects_repeated_eigenvalues() {
        assert!(EigenSystem::with_values(&[int(1), int(2), int(1)]).is_err());
        assert!(EigenSystem::with_values(&[int(1), rat(1, 2)]).is_ok());
    }

    #[test]
    fn source_terms() {
        let table = recurse(&HierarchyConfig::new(int(2), 2).unwrap()).unwrap();
        let sys = EigenSystem::numeric(2);
        let flow = source_flow(&table, 2, &sys).unwrap();
        let plain = table.flow(2).unwrap();
        let v_src = &flow[&Field::V] - &plain[&Field::V];
        assert_eq!(v_src, parse("-4*phi1[1]*phi1[1]_x - 4*phi1[2]*phi1[2]_x").unwrap());
        let a_src = &flow[&Field::Alpha] - &plain[&Field::Alpha];
        assert_eq!(
            a_src,
            parse("-alpha*(phi1[1]^2 + phi1[2]^2) - phi1[1]*phi3[1] - phi1[2]*phi3[2]").unwrap()
        );
        let empty = source_flow(&table, 2, &EigenSystem::numeric(0)).unwrap();
        assert_eq!(empty, plain);
        for c in check_sources(&table, &sys).unwrap().iter().filter(|c| c.id.contains("term")) {
            assert!(c.passed(), "{}", c.id);
        }
    }

    #[test]
    fn displayed_spectral_rows_differ() {
        let report = source_spectral_report(&sys1()).unwrap();
        let status: Vec<Status> = report.iter().map(|c| c.status).collect();
        assert_eq!(
            status,
            vec![Status::PaperDiscrepancy, Status::PaperDiscrepancy, Status::Pass]
        );
    }

    #[test]
    fn eigen_property() {
        for n in 1..=3 {
            let sys = EigenSystem::symbolic(n);
            for j in 1..=n {
                let r = eigen_residual(&sys, j, &grad_lambda_graded(j)).unwrap();
                assert!(r.iter().all(SPoly::is_zero), "N={n} j={j}");
                let r = eigen_residual(&sys, j, &grad_lambda(j)).unwrap();
                assert!(!r[2].is_zero());
            }
        }
    }

    #[test]
    fn constraint_is_second_gradient() {
        for c in check_constraint(&EigenSystem::symbolic(2)).unwrap() {
            assert!(c.passed(), "{}", c.id);
        }
    }

    #[test]
    fn substitution_rules() {
        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        assert_eq!(cs.rules[&JetVar::new(Field::V)], sys.parse("-2<Psi2,Phi1>").unwrap());
        let ax = sys
            .parse("-1/2*(<Psi2,Phi3> - <Psi3,Phi1>) - <Psi2,Phi1>*phiN")
            .unwrap();
        assert_eq!(cs.rules[&JetVar::new(Field::Alpha).derivative()], ax);
        assert!(cs.constraint_residuals().unwrap().iter().all(SPoly::is_zero));
        let empty = ConstrainedSystem::new(&EigenSystem::numeric(0)).unwrap();
        assert!(empty.constrain(&parse("w - alpha*beta").unwrap()).unwrap().is_zero());
    }

    #[test]
    fn constrained_values_stay_in_generators() {
        let cs = ConstrainedSystem::new(&sys1()).unwrap();
        let p = parse("v_xx*alpha_x + w_x*beta + alpha_xx").unwrap();
        let q = cs.constrain(&p).unwrap();
        assert!(q.variables().iter().all(|v| v.order == 0
            && !matches!(v.field, Field::V | Field::W | Field::Alpha | Field::Beta)));
    }

    #[test]
    fn spatial_system() {
        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        assert_eq!(
            cs.rhs_x[&JetVar::phi(3, 2)],
            parse("1/2*psiN*phi1[2] - phiN*phi2[2]").unwrap()
        );
        for c in check_spatial(&cs).unwrap() {
            assert!(c.passed(), "{}", c.id);
        }
        for c in check_tilde_derivatives(&cs).unwrap() {
            assert!(c.passed(), "{}", c.id);
        }
    }

    #[test]
    fn bosonic_reduction() {
        let cs = ConstrainedSystem::new(&sys1()).unwrap();
        let odd = [Field::Phi3, Field::Psi3, Field::PhiExt, Field::PsiExt];
        let phi1 = cs.rhs_x[&JetVar::phi(1, 1)].kill_fields(&odd);
        assert_eq!(phi1, parse("(-1 - psi2[1]*phi1[1])*phi1[1] + phi2[1]").unwrap());
        assert!(cs.rhs_x[&JetVar::phi(3, 1)].kill_fields(&odd).is_zero());
    }

    #[test]
    fn hamilton_forms() {
        let cs = ConstrainedSystem::new(&sys1()).unwrap();
        let h1 = cs.h1().unwrap();
        assert_eq!(
            partial(&h1, JetVar::psi(1, 1), Side::Left),
            cs.rhs_x[&JetVar::phi(1, 1)]
        );
        for c in check_hamilton_forms(&cs, 3).unwrap() {
            let expect = !c.id.contains("printed");
            assert_eq!(c.passed(), expect, "{}", c.id);
        }
    }

    #[test]
    fn temporal_extra_rows_are_negated() {
        let cs = ConstrainedSystem::new(&EigenSystem::numeric(2)).unwrap();
        let ours = cs.rhs_t(2).unwrap();
        let printed = printed_temporal(&cs).unwrap();
        for name in ["phiN", "psiN"] {
            let k = parse(name).unwrap().variables()[0];
            assert_eq!(ours[&k], -&printed[&k]);
        }
        assert_eq!(ours[&JetVar::phi(2, 1)], printed[&JetVar::phi(2, 1)]);
    }

    #[test]
    fn integrals() {
        let sys = EigenSystem::numeric(2);
        let cs = ConstrainedSystem::new(&sys).unwrap();
        let f = cs.generating_integrals(5).unwrap();
        assert_eq!(f[0], SPoly::int(1));
        assert!(f[1].is_zero());
        assert_eq!(f[2], SPoly::int(-2));
        assert_eq!(f[4], sys.parse(published::H2).unwrap());
        assert_eq!(f[3], -cs.h1().unwrap());
        for fm in &f {
            assert!(chain_rule(&cs.rhs_x, fm).is_zero());
        }
        let rt = cs.rhs_t(2).unwrap();
        for fm in &f {
            assert!(chain_rule(&rt, fm).is_zero());
        }
        for fk in cs.f_integrals_graded() {
            assert!(chain_rule(&cs.rhs_x, &fk).is_zero());
        }
        assert!(!chain_rule(&cs.rhs_x, &cs.f_integrals()[0]).is_zero());
    }

    #[test]
    fn brackets() {
        let cs = ConstrainedSystem::new(&sys1()).unwrap();
        let p = SPoly::var(JetVar::phi(1, 1));
        let q = SPoly::var(JetVar::psi(1, 1));
        assert_eq!(cs.poisson(&p, &q), SPoly::one());
        assert_eq!(cs.poisson(&q, &p), -SPoly::one());
        let p3 = SPoly::var(JetVar::phi(3, 1));
        let q3 = SPoly::var(JetVar::psi(3, 1));
        assert_eq!(cs.poisson(&p3, &q3), cs.poisson(&q3, &p3));
        assert_eq!(Parity::Odd, JetVar::phi(3, 1).parity());

        let f = cs.generating_integrals(6).unwrap();
        let h1 = cs.h1().unwrap();
        for m in 2..=6 {
            assert_eq!(
                chain_rule(&cs.rhs_x, &f[m]),
                cs.poisson_with(&f[m], &h1, BracketSigns::FLOW)
            );
            for n in 2..=6 {
                assert!(cs.poisson_with(&f[m], &f[n], BracketSigns::FLOW).is_zero());
            }
        }
        assert!(!cs.poisson(&f[3], &f[4]).is_zero());
    }
}
