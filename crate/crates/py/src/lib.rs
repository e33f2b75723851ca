use pyo3::prelude::*;

#[pymodule]
fn slicesim_py(_m: &Bound<'_, PyModule>) -> PyResult<()> {
    Ok(())
}
