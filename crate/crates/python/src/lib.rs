//! Python bindings. Matrices cross the boundary as lists of rows.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qhid_core::config::{ExperimentConfig, ZeroSelectionConfig};
use qhid_core::liealg::{self, BasisSet};
use qhid_core::noisemodel::{self, RationalPsd};
use qhid_core::statespace::{StateSpaceModel, Trajectory};
use qhid_core::tfmatch;

fn py_err(e: qhid_core::Error) -> PyErr {
    if e.exit_code() == 2 {
        PyValueError::new_err(e.to_string())
    } else {
        PyRuntimeError::new_err(e.to_string())
    }
}

fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn matrix(rows: &[Vec<f64>], what: &str) -> PyResult<DMatrix<f64>> {
    let ncols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err(format!("{what} has rows of different lengths")));
    }
    Ok(DMatrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

fn model_dict<'py>(py: Python<'py>, m: &StateSpaceModel) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("a", rows(&m.a))?;
    d.set_item("c", rows(&m.c))?;
    d.set_item("x0", m.x0.iter().copied().collect::<Vec<f64>>())?;
    d.set_item("labels", m.labels.iter().map(|l| l.to_string()).collect::<Vec<_>>())?;
    Ok(d)
}

fn trajectory_dict<'py>(py: Python<'py>, t: &Trajectory) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("dt", t.dt)?;
    d.set_item("t", t.times().collect::<Vec<f64>>())?;
    d.set_item("y", rows(&t.samples))?;
    d.set_item("channels", t.channel_names.clone())?;
    Ok(d)
}

/// Orthogonal su(N) basis with its structure constants.
#[pyclass(name = "Basis", module = "qhid", frozen)]
struct PyBasis {
    inner: BasisSet,
}

#[pymethods]
impl PyBasis {
    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.labels().to_vec()
    }

    /// tr(X_m²), shared by every element.
    #[getter]
    fn norm(&self) -> f64 {
        self.inner.norm()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn element(&self, m: usize) -> PyResult<Vec<Vec<Complex64>>> {
        if m >= self.inner.len() {
            return Err(PyValueError::new_err(format!("element {m} out of range")));
        }
        let x = self.inner.element(m);
        Ok((0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect())
    }

    /// C[j][k][l].
    fn structure(&self, j: usize, k: usize, l: usize) -> PyResult<Complex64> {
        let n = self.inner.len();
        if j >= n || k >= n || l >= n {
            return Err(PyValueError::new_err("structure index out of range"));
        }
        Ok(self.inner.structure().get(j, k, l))
    }

    /// Expansion coefficients of a Hermitian operator.
    fn expand(&self, op: Vec<Vec<Complex64>>) -> PyResult<Vec<f64>> {
        let n = op.len();
        if op.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("operator must be square"));
        }
        let h = DMatrix::from_row_iterator(n, n, op.into_iter().flatten());
        Ok(liealg::expand_hamiltonian(&h, &self.inner).map_err(py_err)?.a)
    }

    fn __repr__(&self) -> String {
        format!("Basis(su({}), {} elements)", self.inner.dim(), self.inner.len())
    }
}

#[pyfunction]
fn pauli_basis(qubits: usize) -> PyResult<PyBasis> {
    Ok(PyBasis {
        inner: liealg::pauli_basis(qubits).map_err(py_err)?,
    })
}

#[pyfunction]
fn gell_mann_basis(n: usize) -> PyResult<PyBasis> {
    Ok(PyBasis {
        inner: liealg::gell_mann_basis(n).map_err(py_err)?,
    })
}

/// Stable factor Γ of a rational PSD given as even polynomials in ω.
/// Returns (beta, alpha) of Γ(s) = (β₁s^{n−1}+…+β_n)/(s^n+α₁s^{n−1}+…+α_n).
#[pyfunction]
#[pyo3(signature = (psd_num, psd_den, zero_selection = "minimum_phase", time_unit = 1.0))]
fn spectral_factorize(
    psd_num: Vec<f64>,
    psd_den: Vec<f64>,
    zero_selection: &str,
    time_unit: f64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let sel = ZeroSelectionConfig::Named(zero_selection.to_string())
        .resolve()
        .map_err(py_err)?;
    let psd = RationalPsd::new(&psd_num, &psd_den).map_err(py_err)?;
    let tf = noisemodel::spectral_factorize(&psd, &sel).map_err(py_err)?;
    let tf = if time_unit != 1.0 { tf.rescale_time(time_unit) } else { tf };
    Ok((tf.beta, tf.alpha))
}

/// Monic denominator and one numerator per output of C(sI − A)⁻¹x0.
#[pyfunction]
fn transfer_coeffs(a: Vec<Vec<f64>>, c: Vec<Vec<f64>>, x0: Vec<f64>) -> PyResult<(Vec<f64>, Vec<Vec<f64>>)> {
    let a = matrix(&a, "a")?;
    let c = matrix(&c, "c")?;
    let tc = tfmatch::transfer_coeffs(&a, &c, &DVector::from_vec(x0)).map_err(py_err)?;
    Ok((tc.den, tc.num))
}

/// A TOML experiment: simulation, identification and noise checks.
#[pyclass(name = "Experiment", module = "qhid", frozen)]
struct PyExperiment {
    inner: qhid_core::experiment::Experiment,
}

#[pymethods]
impl PyExperiment {
    #[new]
    fn new(path: std::path::PathBuf) -> PyResult<Self> {
        let cfg = ExperimentConfig::load(&path).map_err(py_err)?;
        Self::build(cfg)
    }

    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Self::build(ExperimentConfig::parse(text).map_err(py_err)?)
    }

    #[getter]
    fn name(&self) -> Option<String> {
        self.inner.config.name.clone()
    }

    #[getter]
    fn param_names(&self) -> Vec<String> {
        self.inner.template.param_names().to_vec()
    }

    fn quantum_model<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        model_dict(py, &self.inner.quantum_truth().map_err(py_err)?)
    }

    fn ground_truth<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        model_dict(py, &self.inner.ground_truth().map_err(py_err)?.model)
    }

    /// Measured and noise-free trajectories.
    fn simulate<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let sim = py.detach(|| self.inner.simulate()).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("measured", trajectory_dict(py, &sim.measured)?)?;
        d.set_item("quantum", trajectory_dict(py, &sim.quantum)?)?;
        Ok(d)
    }

    /// Identify the unknowns from samples (one row per time step).
    fn identify<'py>(&self, py: Python<'py>, y: Vec<Vec<f64>>, dt: f64) -> PyResult<Bound<'py, PyDict>> {
        let samples = matrix(&y, "y")?;
        let names = (1..=samples.ncols()).map(|i| format!("y{i}")).collect();
        let traj = Trajectory::new(dt, samples, names).map_err(py_err)?;
        let res = py.detach(|| self.inner.identify(&traj)).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("names", res.names.clone())?;
        let best = res.best_solution();
        let params = PyDict::new(py);
        for (n, v) in res.names.iter().zip(&best.params) {
            params.set_item(n, *v)?;
        }
        d.set_item("params", params)?;
        d.set_item("residual", best.residual)?;
        let sols: Vec<(Vec<f64>, f64, usize)> = res
            .solutions
            .iter()
            .map(|s| (s.params.clone(), s.residual, s.multiplicity))
            .collect();
        d.set_item("solutions", sols)?;
        if let Some(real) = &res.realization {
            d.set_item("order", real.selection.order)?;
            d.set_item("singular_values", real.singular_values.clone())?;
        }
        d.set_item("converged", res.runs.iter().filter(|r| r.converged).count())?;
        d.set_item("equivalence", res.equivalence_note.clone())?;
        Ok(d)
    }

    fn noise_check<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let chk = py.detach(|| self.inner.noise_check()).map_err(py_err)?;
        let d = PyDict::new(py);
        d.set_item("omega", chk.omega)?;
        d.set_item("theory", chk.theory)?;
        d.set_item("welch_tf", chk.welch_tf)?;
        d.set_item("welch_realization", chk.welch_realization)?;
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Experiment({:?})", self.inner.config.name)
    }
}

impl PyExperiment {
    fn build(cfg: ExperimentConfig) -> PyResult<Self> {
        Ok(Self {
            inner: qhid_core::experiment::Experiment::new(cfg).map_err(py_err)?,
        })
    }
}

#[pymodule]
#[pyo3(name = "qhid")]
fn qhid_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyBasis>()?;
    m.add_class::<PyExperiment>()?;
    m.add_function(wrap_pyfunction!(pauli_basis, m)?)?;
    m.add_function(wrap_pyfunction!(gell_mann_basis, m)?)?;
    m.add_function(wrap_pyfunction!(spectral_factorize, m)?)?;
    m.add_function(wrap_pyfunction!(transfer_coeffs, m)?)?;
    Ok(())
}
