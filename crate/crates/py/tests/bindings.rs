use pyo3::prelude::*;
use pyo3::types::PyDict;

fn with_module(code: &str) {
    Python::attach(|py| {
        let module = pyo3::wrap_pymodule!(dtsync_py::dtsync_py)(py);
        let globals = PyDict::new(py);
        globals.set_item("dt", module).unwrap();
        let code = std::ffi::CString::new(code).unwrap();
        py.run(&code, Some(&globals), None).unwrap();
    });
}

#[test]
fn solvers_agree_through_python() {
    with_module(
        "spec = dt.MdpSpec(4, 0.5, 0.1, update_cost=1.0)\n\
         a = dt.solve(spec); b = dt.solve_rvi(spec)\n\
         assert abs(a.gain - b.gain) < 1e-9\n\
         assert a.shortcut_mismatches == 0\n\
         assert len(a.thresholds()) == 4\n\
         assert spec.threshold_for(1) is None or spec.threshold_for(1) >= 1\n",
    );
}

#[test]
fn errors_map_to_python_exceptions() {
    with_module(
        "try:\n    dt.MdpSpec(4, 1.5, 0.3)\nexcept ValueError as e:\n    assert 'p_tx' in str(e)\nelse:\n    raise AssertionError()\n\
         try:\n    dt.simulate(dt.MdpSpec(4, 0.5, 0.3), 'bogus')\nexcept ValueError:\n    pass\nelse:\n    raise AssertionError()\n",
    );
}

#[test]
fn simulation_and_deployment_are_exposed() {
    with_module(
        "spec = dt.MdpSpec(30, 1.0, 1.0, update_cost=12.0)\n\
         m = dt.simulate(spec, 'ZW', runs=4, horizon=100)\n\
         assert m.total_cost == 13.0 and m.runs == 4 and m.slots == 100\n\
         n, r, o = dt.deploy_baselines(2, num_devices=5, num_bs=3, random_draws=4)\n\
         assert o <= n and o <= r\n",
    );
}
