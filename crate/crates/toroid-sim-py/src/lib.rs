use pyo3::prelude::*;

#[pymodule]
fn toroid_sim_py(_m: &Bound<'_, PyModule>) -> PyResult<()> { Ok(()) }
