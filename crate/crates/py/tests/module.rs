use pyo3::prelude::*;
use pyo3::types::PyModule;

fn with_module(f: impl FnOnce(&Bound<'_, PyModule>)) {
    Python::initialize();
    Python::attach(|py| {
        let m = PyModule::new(py, "epilab").unwrap();
        epilab_py::init(&m).unwrap();
        f(&m);
    });
}

#[test]
fn exact_delta() {
    with_module(|m| {
        let one = (1i64, 1i64);
        let d: (i64, i64) = m.getattr("derive_delta_exact").unwrap().call1((one, one, one)).unwrap().extract().unwrap();
        assert_eq!(d, (1, 12));
    });
}

#[test]
fn invalid_parameters_raise() {
    with_module(|m| {
        let err = m.getattr("derive_delta").unwrap().call1((2.0,)).unwrap_err();
        Python::attach(|py| assert!(err.is_instance(py, &m.getattr("EpilabError").unwrap())));
    });
}

#[test]
fn trace_round_trip() {
    with_module(|m| {
        let p = m.getattr("DecayParams").unwrap().call0().unwrap();
        let t = m.getattr("synth_saturating_trace").unwrap().call1((&p, 0.2, 50usize)).unwrap();
        assert_eq!(t.len().unwrap(), 50);
        let rep = m.getattr("verify_ode").unwrap().call1((&t, &p)).unwrap();
        assert!(rep.getattr("passed").unwrap().extract::<bool>().unwrap());
    });
}
