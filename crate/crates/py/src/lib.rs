//! Python module `fermigauss`. Matrices cross the boundary as nested lists,
//! amplitudes as lists of complex numbers.

use fermigauss::channels::{apply_channel_cm, cj_cm, GaussianChannel};
use fermigauss::gfs_cm::{
    correlation_rank, is_s2pi_separable_cm, validate_cm as core_validate, Bipartition, CovarianceMatrix,
};
use fermigauss::glu_standard::{glu_equivalent_with, standard_form_with, StandardFormConfig, EQUIVALENCE_TOL};
use fermigauss::jw_fock::{cm_from_state, ghz_hadamard_state, is_gaussian_pure, lambda_residual, FockVector};
use fermigauss::locc_sim::{ghz3_protocol, run_protocol};
use fermigauss::nalgebra::DMatrix;
use fermigauss::num_complex::Complex64;
use fermigauss::slocc::{classify_3mode, classify_4mode_seed, normal_form_iterate};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: fermigauss::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_dmatrix(rows: &[Vec<f64>]) -> PyResult<DMatrix<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(n, m, |r, c| rows[r][c]))
}

fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|r| (0..m.ncols()).map(|c| m[(r, c)]).collect()).collect()
}

/// Real antisymmetric covariance matrix of a fermionic state.
#[pyclass(name = "CovarianceMatrix", module = "fermigauss")]
pub struct PyCovarianceMatrix {
    inner: CovarianceMatrix,
}

#[pymethods]
impl PyCovarianceMatrix {
    #[new]
    fn new(gamma: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = CovarianceMatrix::new(to_dmatrix(&gamma)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn vacuum(modes: usize) -> Self {
        Self {
            inner: CovarianceMatrix::vacuum(modes),
        }
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn gamma(&self) -> Vec<Vec<f64>> {
        to_rows(self.inner.gamma())
    }

    fn is_physical(&self) -> bool {
        self.inner.is_physical()
    }

    fn is_pure(&self) -> bool {
        self.inner.is_pure()
    }

    fn williamson_spectrum(&self) -> Vec<f64> {
        self.inner.williamson_spectrum()
    }

    /// Returns `(standard_cm, angles, flips)`.
    #[pyo3(signature = (allow_z_flips = true))]
    fn standard_form(&self, allow_z_flips: bool) -> PyResult<(PyCovarianceMatrix, Vec<f64>, Vec<bool>)> {
        let r = standard_form_with(&self.inner, &StandardFormConfig { allow_z_flips }).map_err(py_err)?;
        Ok((PyCovarianceMatrix { inner: r.s_gamma }, r.ops.angles, r.ops.flips))
    }

    #[pyo3(signature = (other, tol = EQUIVALENCE_TOL, allow_z_flips = true))]
    fn glu_equivalent(&self, other: &PyCovarianceMatrix, tol: f64, allow_z_flips: bool) -> PyResult<bool> {
        glu_equivalent_with(&self.inner, &other.inner, tol, &StandardFormConfig { allow_z_flips }).map_err(py_err)
    }

    /// Direct-sum separability across `labels` (one party label per mode).
    fn is_separable(&self, labels: Vec<usize>) -> PyResult<bool> {
        is_s2pi_separable_cm(&self.inner, &Bipartition::new(labels)).map_err(py_err)
    }

    fn correlation_rank(&self, labels: Vec<usize>) -> PyResult<usize> {
        correlation_rank(&self.inner, &Bipartition::new(labels)).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        format!("CovarianceMatrix(modes={})", self.inner.modes())
    }
}

/// Normalized Jordan-Wigner state vector; mode 1 is the most significant bit.
#[pyclass(name = "FockVector", module = "fermigauss")]
pub struct PyFockVector {
    inner: FockVector,
}

#[pymethods]
impl PyFockVector {
    #[new]
    fn new(modes: usize, amplitudes: Vec<Complex64>) -> PyResult<Self> {
        let inner = FockVector::from_slice(modes, &amplitudes).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn ghz(modes: usize) -> PyResult<Self> {
        Ok(Self {
            inner: ghz_hadamard_state(modes).map_err(py_err)?,
        })
    }

    #[getter]
    fn modes(&self) -> usize {
        self.inner.modes()
    }

    #[getter]
    fn amplitudes(&self) -> Vec<Complex64> {
        self.inner.amplitudes().iter().copied().collect()
    }

    fn covariance_matrix(&self) -> PyResult<PyCovarianceMatrix> {
        Ok(PyCovarianceMatrix {
            inner: cm_from_state(&self.inner).map_err(py_err)?,
        })
    }

    fn is_gaussian(&self) -> PyResult<bool> {
        is_gaussian_pure(&self.inner).map_err(py_err)
    }

    fn lambda_residual(&self) -> f64 {
        lambda_residual(&self.inner)
    }

    /// SLOCC class name of a three-mode state.
    fn classify(&self) -> PyResult<String> {
        Ok(classify_3mode(&self.inner).map_err(py_err)?.name().to_string())
    }

    /// Returns `(verdict, iterations)`.
    #[pyo3(signature = (max_iter = 1000, tol = 1e-10))]
    fn normal_form(&self, max_iter: usize, tol: f64) -> PyResult<(String, usize)> {
        let t = normal_form_iterate(&self.inner, max_iter, tol).map_err(py_err)?;
        let verdict = format!("{:?}", t.verdict);
        Ok((verdict, t.iterations))
    }

    fn overlap(&self, other: &PyFockVector) -> f64 {
        self.inner.overlap(&other.inner)
    }

    fn __repr__(&self) -> String {
        format!("FockVector(modes={})", self.inner.modes())
    }
}

/// Gaussian channel `γ ↦ B γ Bᵀ + D` with CJ blocks `A, B, D`.
#[pyclass(name = "GaussianChannel", module = "fermigauss")]
pub struct PyGaussianChannel {
    inner: GaussianChannel,
}

#[pymethods]
impl PyGaussianChannel {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<Vec<f64>>, d: Vec<Vec<f64>>) -> PyResult<Self> {
        let inner = GaussianChannel::new(to_dmatrix(&a)?, to_dmatrix(&b)?, to_dmatrix(&d)?).map_err(py_err)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    fn identity(modes: usize) -> Self {
        Self {
            inner: GaussianChannel::identity(modes),
        }
    }

    fn apply(&self, cm: &PyCovarianceMatrix) -> PyResult<PyCovarianceMatrix> {
        Ok(PyCovarianceMatrix {
            inner: apply_channel_cm(&self.inner, &cm.inner).map_err(py_err)?,
        })
    }

    fn cj_cm(&self) -> PyCovarianceMatrix {
        PyCovarianceMatrix {
            inner: cj_cm(&self.inner),
        }
    }
}

/// `{"antisymmetric", "physical", "pure", "williamson_spectrum"}`.
#[pyfunction]
fn validate_cm<'py>(py: Python<'py>, gamma: Vec<Vec<f64>>) -> PyResult<Bound<'py, PyDict>> {
    let r = core_validate(&to_dmatrix(&gamma)?).map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("antisymmetric", r.antisymmetric)?;
    d.set_item("physical", r.physical)?;
    d.set_item("pure", r.pure)?;
    d.set_item("williamson_spectrum", r.williamson_spectrum)?;
    Ok(d)
}

/// SLOCC label of a four-mode seed family member.
#[pyfunction]
fn classify_seed(family: &str, params: Vec<Complex64>) -> PyResult<String> {
    Ok(classify_4mode_seed(&params, family).map_err(py_err)?.name().to_string())
}

/// Branch `(transcript, probability, state)` triples of the two-round GHZ protocol.
#[pyfunction]
fn run_ghz3_protocol(
    state: &PyFockVector,
    d1: [f64; 2],
    d2: [f64; 2],
) -> PyResult<Vec<(Vec<usize>, f64, PyFockVector)>> {
    let p = ghz3_protocol(d1, d2).map_err(py_err)?;
    let branches = run_protocol(&state.inner, &p).map_err(py_err)?;
    Ok(branches
        .into_iter()
        .map(|b| (b.transcript, b.probability, PyFockVector { inner: b.state }))
        .collect())
}

#[pymodule(name = "fermigauss")]
fn fermigauss_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    register(m)
}

/// Adds every class and function to `m`.
pub fn register(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCovarianceMatrix>()?;
    m.add_class::<PyFockVector>()?;
    m.add_class::<PyGaussianChannel>()?;
    m.add_function(wrap_pyfunction!(validate_cm, m)?)?;
    m.add_function(wrap_pyfunction!(classify_seed, m)?)?;
    m.add_function(wrap_pyfunction!(run_ghz3_protocol, m)?)?;
    Ok(())
}
