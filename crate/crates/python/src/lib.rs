//! Python bindings: polynomials, the hierarchy table, the nonlinearized
//! system, Grassmann numbers and the command line.

use std::collections::BTreeMap;

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use sgbk_core::constraint::{BracketSigns, ConstrainedSystem as CoreSystem, EigenSystem};
use sgbk_core::dynamics::{self, GrassmannNumber, Part, PhasePoint};
use sgbk_core::hierarchy::{recurse, HierarchyConfig};
use sgbk_core::superpoly::{self as sp, SPoly, Side};
use sgbk_core::Error;

fn err(e: Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn jet(name: &str) -> PyResult<sp::JetVar> {
    let p = sp::parse(name).map_err(err)?;
    match p.variables().as_slice() {
        [v] if p == SPoly::var(*v) => Ok(*v),
        _ => Err(PyValueError::new_err(format!("{name:?} is not a single variable"))),
    }
}

fn side(s: &str) -> PyResult<Side> {
    match s {
        "left" => Ok(Side::Left),
        "right" => Ok(Side::Right),
        _ => Err(PyValueError::new_err("side must be 'left' or 'right'")),
    }
}

fn show(map: &BTreeMap<sp::JetVar, SPoly>) -> BTreeMap<String, String> {
    map.iter()
        .map(|(v, p)| (SPoly::var(*v).to_string(), p.to_string()))
        .collect()
}

/// Polynomial over jet variables with exact rational coefficients.
#[pyclass(name = "SPoly", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PySPoly(SPoly);

#[pymethods]
impl PySPoly {
    #[new]
    fn new(src: &str) -> PyResult<Self> {
        sp::parse(src).map(PySPoly).map_err(err)
    }

    fn __str__(&self) -> String {
        self.0.to_string()
    }

    fn __repr__(&self) -> String {
        format!("SPoly('{}')", self.0)
    }

    fn __eq__(&self, other: &PySPoly) -> bool {
        self.0 == other.0
    }

    fn __add__(&self, other: &PySPoly) -> PySPoly {
        PySPoly(&self.0 + &other.0)
    }

    fn __sub__(&self, other: &PySPoly) -> PySPoly {
        PySPoly(&self.0 - &other.0)
    }

    fn __mul__(&self, other: &PySPoly) -> PySPoly {
        PySPoly(&self.0 * &other.0)
    }

    fn __neg__(&self) -> PySPoly {
        PySPoly(-&self.0)
    }

    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    fn parity(&self) -> String {
        self.0.parity().to_string()
    }

    fn latex(&self) -> String {
        self.0.to_latex()
    }

    fn d_x(&self) -> PySPoly {
        PySPoly(self.0.d_x())
    }

    fn integrate_x(&self) -> PyResult<PySPoly> {
        sp::integrate_x(&self.0).map(PySPoly).map_err(err)
    }

    #[pyo3(signature = (var, side = "left"))]
    fn partial(&self, var: &str, side: &str) -> PyResult<PySPoly> {
        Ok(PySPoly(sp::partial(&self.0, jet(var)?, self::side(side)?)))
    }

    #[pyo3(signature = (var, side = "left"))]
    fn euler(&self, var: &str, side: &str) -> PyResult<PySPoly> {
        Ok(PySPoly(sp::euler_variational(&self.0, jet(var)?, self::side(side)?)))
    }
}

/// Rows `a, b, c, rho, delta` of the recursion table as strings.
#[pyfunction]
#[pyo3(signature = (order, k0 = "k0"))]
fn hierarchy(order: usize, k0: &str) -> PyResult<Vec<BTreeMap<String, String>>> {
    let seed = sp::parse(k0).map_err(err)?;
    let table = recurse(&HierarchyConfig::with_seed(seed, order).map_err(err)?).map_err(err)?;
    Ok(table
        .rows
        .iter()
        .map(|r| {
            r.entries()
                .iter()
                .map(|(n, p)| (n.to_string(), p.to_string()))
                .collect()
        })
        .collect())
}

/// Flow `n` of the hierarchy as `field -> right-hand side`.
#[pyfunction]
#[pyo3(signature = (n, k0 = "k0"))]
fn flow(n: usize, k0: &str) -> PyResult<BTreeMap<String, String>> {
    let seed = sp::parse(k0).map_err(err)?;
    let table = recurse(&HierarchyConfig::with_seed(seed, n + 1).map_err(err)?).map_err(err)?;
    Ok(table
        .flow(n)
        .map_err(err)?
        .into_iter()
        .map(|(f, p)| (f.name().to_string(), p.to_string()))
        .collect())
}

/// Nonlinearized system for `n` eigenvalues `1..n`.
#[pyclass(name = "ConstrainedSystem", frozen)]
struct PySystem(CoreSystem);

#[pymethods]
impl PySystem {
    #[new]
    fn new(n: usize) -> PyResult<Self> {
        CoreSystem::new(&EigenSystem::numeric(n)).map(PySystem).map_err(err)
    }

    fn rhs_x(&self) -> BTreeMap<String, String> {
        show(&self.0.rhs_x)
    }

    fn rhs_t(&self, n: usize) -> PyResult<BTreeMap<String, String>> {
        Ok(show(&self.0.rhs_t(n).map_err(err)?))
    }

    fn h1(&self) -> PyResult<PySPoly> {
        self.0.h1().map(PySPoly).map_err(err)
    }

    /// `F_0 .. F_max_m`.
    fn integrals(&self, max_m: usize) -> PyResult<Vec<PySPoly>> {
        Ok(self
            .0
            .generating_integrals(max_m)
            .map_err(err)?
            .into_iter()
            .map(PySPoly)
            .collect())
    }

    #[pyo3(signature = (graded = false))]
    fn f_integrals(&self, graded: bool) -> Vec<PySPoly> {
        let fs = if graded {
            self.0.f_integrals_graded()
        } else {
            self.0.f_integrals()
        };
        fs.into_iter().map(PySPoly).collect()
    }

    /// Poisson bracket; `signs` is `"printed"` or `"flow"`.
    #[pyo3(signature = (f, g, signs = "printed"))]
    fn poisson(&self, f: &PySPoly, g: &PySPoly, signs: &str) -> PyResult<PySPoly> {
        let s = match signs {
            "printed" => BracketSigns::PRINTED,
            "flow" => BracketSigns::FLOW,
            _ => return Err(PyValueError::new_err("signs must be 'printed' or 'flow'")),
        };
        Ok(PySPoly(self.0.poisson_with(&f.0, &g.0, s)))
    }

    /// Total x-derivative along the spatial flow.
    fn d_x(&self, p: &PySPoly) -> PySPoly {
        use sp::Derivation;
        PySPoly(self.0.x_derivation().apply(&p.0))
    }
}

/// Element of a Grassmann algebra with real coefficients.
#[pyclass(name = "GrassmannNumber", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyGrassmann(GrassmannNumber<f64>);

#[pymethods]
impl PyGrassmann {
    #[new]
    fn new(k: usize, coeffs: Vec<f64>) -> PyResult<Self> {
        if k > dynamics::HARD_MAX_K {
            return Err(PyValueError::new_err("too many generators"));
        }
        GrassmannNumber::from_coeffs(k, coeffs).map(PyGrassmann).map_err(err)
    }

    /// `c * theta_i`, `i` from 1.
    #[staticmethod]
    #[pyo3(signature = (k, i, c = 1.0))]
    fn generator(k: usize, i: usize, c: f64) -> PyResult<Self> {
        if i == 0 || i > k || k > dynamics::HARD_MAX_K {
            return Err(PyValueError::new_err("generator index out of range"));
        }
        Ok(PyGrassmann(GrassmannNumber::generator(k, i, c)))
    }

    fn __mul__(&self, other: &PyGrassmann) -> PyResult<PyGrassmann> {
        dynamics::g_mul(&self.0, &other.0).map(PyGrassmann).map_err(err)
    }

    fn __add__(&self, other: &PyGrassmann) -> PyResult<PyGrassmann> {
        self.0.add(&other.0).map(PyGrassmann).map_err(err)
    }

    fn __eq__(&self, other: &PyGrassmann) -> bool {
        self.0 == other.0
    }

    fn __repr__(&self) -> String {
        format!("GrassmannNumber({}, {:?})", self.0.generators(), self.0.coeffs())
    }

    #[getter]
    fn coeffs(&self) -> Vec<f64> {
        self.0.coeffs().to_vec()
    }

    fn parity(&self) -> String {
        self.0.parity().to_string()
    }
}

/// Integrate a flow from a seeded point and return the maximal drift of
/// `F_2..F_4` and of both versions of `f_k`.
#[pyfunction]
#[pyo3(signature = (n, part = "x", span = (0.0, 1.0), dt = 1e-3, seed = 0, k = None))]
fn simulate(
    n: usize,
    part: &str,
    span: (f64, f64),
    dt: f64,
    seed: u64,
    k: Option<usize>,
) -> PyResult<BTreeMap<String, f64>> {
    let part: Part = part.parse().map_err(err)?;
    let sys = EigenSystem::numeric(n);
    let k = k.unwrap_or_else(|| sys.generators().iter().filter(|v| v.is_odd()).count());
    let cs = CoreSystem::new(&sys).map_err(err)?;
    let pt = PhasePoint::random(&sys, k, seed).map_err(err)?.to_f64();
    let traj = dynamics::integrate_ode(&cs, part, &pt, span, dt).map_err(err)?;
    let ints = sgbk_core::cli::monitored(&cs).map_err(err)?;
    Ok(dynamics::monitor(&traj, &ints)
        .map_err(err)?
        .into_iter()
        .map(|d| (d.name, d.max))
        .collect())
}

/// Run the command line with `args` (without the program name); returns
/// the exit code and the output text.
#[pyfunction]
fn run_cli(args: Vec<String>) -> (i32, String) {
    sgbk_core::cli::run_to_string(std::iter::once("sgbk".to_string()).chain(args))
}

#[pymodule]
pub fn sgbk(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySPoly>()?;
    m.add_class::<PySystem>()?;
    m.add_class::<PyGrassmann>()?;
    m.add_function(wrap_pyfunction!(hierarchy, m)?)?;
    m.add_function(wrap_pyfunction!(flow, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    Ok(())
}
