use pyo3::prelude::*;
use sgbk::sgbk;

#[test]
fn module_imports_and_runs() {
    pyo3::append_to_inittab!(sgbk);
    Python::initialize();
    Python::attach(|py| {
        py.run(
            c"import sgbk\n\
cs = sgbk.ConstrainedSystem(1)\n\
F = cs.integrals(4)\n\
assert str(F[2]) == '-2'\n\
assert cs.poisson(F[3], F[4], 'flow').is_zero()\n\
assert not cs.poisson(F[3], F[4]).is_zero()\n\
code, out = sgbk.run_cli(['verify', 'zero-curvature', '--n', '1'])\n\
assert code == 0, out\n",
            None,
            None,
        )
        .unwrap();
    });
}
