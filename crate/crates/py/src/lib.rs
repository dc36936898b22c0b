//! Python bindings. Matrices cross the boundary as nested lists of complex numbers,
//! fixtures and suite configs as the same JSON the CLI accepts.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use randpur::algebra::decompose;
use randpur::boson::{self, GaugeInvariantGaussian};
use randpur::fermion;
use randpur::linalg::{CMat, CVec, DenseOperator, RngStream};
use randpur::purification::{self, ExplicitForm};
use randpur::suites::{self, Suite, SuiteConfig};
use randpur::tomography::{self, PovmSamplerConfig};
use randpur::Error;

create_exception!(randpur, BudgetExceeded, PyException, "A requested size exceeds the dense-simulation budget.");

type Matrix = Vec<Vec<Complex64>>;
/// `(k, dim, [(dim_L, dim_R)])`.
type Sector = (usize, usize, Vec<(usize, usize)>);

fn py_err(e: Error) -> PyErr {
    match e {
        Error::BudgetExceeded(msg) => BudgetExceeded::new_err(msg),
        Error::InvalidArgument(_) | Error::Parse(_) | Error::DimensionMismatch { .. } | Error::NotAState(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn to_cmat(rows: &Matrix) -> PyResult<CMat> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != cols) {
        return Err(PyValueError::new_err("ragged matrix"));
    }
    Ok(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

fn from_cmat(m: &CMat) -> Matrix {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn state(rows: &Matrix, dims: Vec<usize>) -> PyResult<DenseOperator> {
    DenseOperator::new(dims, to_cmat(rows)?).map_err(py_err)
}

/// Purification channel of a named fixture algebra, e.g. `permutation-d2-n3`.
#[pyclass(name = "PurificationChannel", module = "randpur")]
struct PyChannel {
    inner: purification::PurificationChannel,
    dims: Vec<usize>,
}

#[pymethods]
impl PyChannel {
    #[new]
    #[pyo3(signature = (fixture, seed = 1))]
    fn new(fixture: &str, seed: u64) -> PyResult<Self> {
        let fixtures = suites::parse_fixture(fixture).map_err(py_err)?;
        let [f] = fixtures.as_slice() else {
            return Err(PyValueError::new_err("expected a single fixture name"));
        };
        let mut rng = RngStream::new(seed, 0).rng();
        let dec = decompose(&f.algebra().map_err(py_err)?, &mut rng).map_err(py_err)?;
        let inner = purification::PurificationChannel::build(dec, None).map_err(py_err)?;
        Ok(Self { inner, dims: f.ambient_dims() })
    }

    #[getter]
    fn input_dim(&self) -> usize {
        self.inner.input_dim()
    }

    #[getter]
    fn output_dims(&self) -> Vec<usize> {
        self.inner.output_dims().to_vec()
    }

    /// `(dim_L, dim_R)` per block.
    fn blocks(&self) -> Vec<(usize, usize)> {
        self.inner.block_info().iter().map(|b| (b.dim_l, b.dim_r)).collect()
    }

    fn apply(&self, rho: Matrix) -> PyResult<Matrix> {
        let out = self.inner.apply(&state(&rho, self.dims.clone())?).map_err(py_err)?;
        Ok(from_cmat(out.matrix()))
    }

    /// `form` is `"pinch"` or `"sqrt"`.
    fn explicit_form(&self, rho: Matrix, form: &str) -> PyResult<Matrix> {
        let form = match form {
            "pinch" => ExplicitForm::Pinch,
            "sqrt" => ExplicitForm::Sqrt,
            _ => return Err(PyValueError::new_err("form must be 'pinch' or 'sqrt'")),
        };
        let out = self.inner.explicit_form_apply(&state(&rho, self.dims.clone())?, form).map_err(py_err)?;
        Ok(from_cmat(out.matrix()))
    }

    fn identity_output(&self) -> Matrix {
        from_cmat(self.inner.identity_output().matrix())
    }
}

/// Gaussian-symmetric purification channel on `n` copies of `m` modes.
#[pyclass(name = "FermionChannel", module = "randpur")]
struct PyFermionChannel {
    inner: fermion::FermionChannel,
}

#[pymethods]
impl PyFermionChannel {
    #[new]
    #[pyo3(signature = (m, n, seed = 1))]
    fn new(m: usize, n: usize, seed: u64) -> PyResult<Self> {
        let mut rng = RngStream::new(seed, 0).rng();
        Ok(Self { inner: fermion::fermi_purify_channel(m, n, &mut rng).map_err(py_err)? })
    }

    fn apply(&self, rho: Matrix) -> PyResult<Matrix> {
        let dims = vec![2; self.inner.modes() * self.inner.copies()];
        let out = self.inner.apply(&state(&rho, dims)?).map_err(py_err)?;
        Ok(from_cmat(out.matrix()))
    }
}

/// Truncated purification channel for gauge-invariant bosonic Gaussian states.
#[pyclass(name = "BosonChannel", module = "randpur")]
struct PyBosonChannel {
    inner: boson::BosonChannel,
    cutoff: usize,
}

#[pymethods]
impl PyBosonChannel {
    #[new]
    #[pyo3(signature = (m, n, cutoff, seed = 1))]
    fn new(m: usize, n: usize, cutoff: usize, seed: u64) -> PyResult<Self> {
        let mut rng = RngStream::new(seed, 0).rng();
        Ok(Self { inner: boson::boson_purify_channel(m, n, cutoff, &mut rng).map_err(py_err)?, cutoff })
    }

    /// One entry per particle-number sector.
    fn sectors(&self) -> Vec<Sector> {
        self.inner
            .metadata()
            .into_iter()
            .map(|s| (s.k, s.dim, s.blocks.iter().map(|b| (b.dim_l, b.dim_r)).collect()))
            .collect()
    }

    /// Sector outputs for the thermal state with inverse temperatures `betas` and `O = I`.
    #[pyo3(signature = (betas, truncation_tol = 1e-3))]
    fn apply(&self, betas: Vec<f64>, truncation_tol: f64) -> PyResult<Vec<Matrix>> {
        let m = self.inner.modes();
        let identity = CMat::identity(m, m);
        let sigma = GaugeInvariantGaussian::new(&betas, &identity, self.cutoff, truncation_tol).map_err(py_err)?;
        let outs = self.inner.apply(&sigma).map_err(py_err)?;
        Ok(outs.iter().map(|o| from_cmat(o.matrix())).collect())
    }
}

/// Runs one suite and returns its JSON lines. `config` is a JSON object with the CLI's config keys.
#[pyfunction]
#[pyo3(signature = (suite, config = None))]
fn run_suite(suite: &str, config: Option<&str>) -> PyResult<Vec<String>> {
    let suite: Suite = suite.parse().map_err(py_err)?;
    // keys in `config` override the CLI defaults
    let mut merged = serde_json::to_value(SuiteConfig::with_seed(1)).expect("config serializes");
    if let Some(text) = config {
        let extra: serde_json::Map<String, serde_json::Value> =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        merged.as_object_mut().expect("object").extend(extra);
    }
    let cfg: SuiteConfig = serde_json::from_value(merged).map_err(|e| PyValueError::new_err(e.to_string()))?;
    let records = suites::run_suite(suite, &cfg).map_err(py_err)?;
    Ok(records.iter().map(|r| r.to_json_line()).collect())
}

#[pyfunction]
fn rep_dimension(n: usize, m: usize) -> PyResult<BigInt> {
    if m == 0 {
        return Err(PyValueError::new_err("m must be positive"));
    }
    Ok(tomography::rep_dimension(n, m).value)
}

/// `d_{n,m} / d_{n+k,m}` as a `fractions.Fraction`.
#[pyfunction]
#[pyo3(signature = (n, m, k = 1))]
fn dimension_ratio(n: usize, m: usize, k: usize) -> PyResult<BigRational> {
    if m == 0 {
        return Err(PyValueError::new_err("m must be positive"));
    }
    Ok(tomography::dimension_ratio(n, m, k))
}

#[pyfunction]
fn lower_bound_report(m: usize, eps: f64) -> PyResult<i64> {
    tomography::lower_bound_report(m, eps).map_err(py_err)
}

/// Overlaps `|⟨ψ|ψ̂⟩|²` from pure-state tomography with `n` copies.
#[pyfunction]
#[pyo3(signature = (m, n, trials, seed = 1))]
fn sample_overlaps(m: usize, n: usize, trials: usize, seed: u64) -> PyResult<Vec<f64>> {
    tomography::sample_overlaps(m, n, trials, &PovmSamplerConfig::auto(m, n), seed).map_err(py_err)
}

/// `(‖Λ(ψ⊗ψ)‖, ‖MMᵀ − I‖)` for a pure state on `m` modes.
#[pyfunction]
fn gaussianity_residuals(m: usize, amplitudes: Vec<Complex64>) -> PyResult<(f64, f64)> {
    if amplitudes.len() != 1 << m {
        return Err(PyValueError::new_err(format!("expected {} amplitudes", 1usize << m)));
    }
    Ok(fermion::gaussianity_residuals(m, &CVec::from_vec(amplitudes)))
}

/// The action of a passive mode unitary on the `k`-particle sector.
#[pyfunction]
fn passive_unitary_sector(o: Matrix, k: usize) -> PyResult<Matrix> {
    let u = boson::passive_unitary_sector(&to_cmat(&o)?, k).map_err(py_err)?;
    Ok(from_cmat(u.matrix()))
}

/// Occupation vectors of the `k`-particle sector on `m` modes, in basis order.
#[pyfunction]
fn fock_basis(m: usize, k: usize) -> Vec<Vec<usize>> {
    boson::FockSectorSpace::new(m, k).basis().to_vec()
}

#[pymodule]
#[pyo3(name = "randpur")]
fn py_randpur(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", suites::VERSION)?;
    m.add("RECORD_FORMAT", suites::RECORD_FORMAT)?;
    m.add("BudgetExceeded", m.py().get_type::<BudgetExceeded>())?;
    m.add_class::<PyChannel>()?;
    m.add_class::<PyFermionChannel>()?;
    m.add_class::<PyBosonChannel>()?;
    m.add_function(wrap_pyfunction!(run_suite, m)?)?;
    m.add_function(wrap_pyfunction!(rep_dimension, m)?)?;
    m.add_function(wrap_pyfunction!(dimension_ratio, m)?)?;
    m.add_function(wrap_pyfunction!(lower_bound_report, m)?)?;
    m.add_function(wrap_pyfunction!(sample_overlaps, m)?)?;
    m.add_function(wrap_pyfunction!(gaussianity_residuals, m)?)?;
    m.add_function(wrap_pyfunction!(passive_unitary_sector, m)?)?;
    m.add_function(wrap_pyfunction!(fock_basis, m)?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matrix_roundtrip() {
        let m = CMat::from_fn(2, 3, |i, j| Complex64::new(i as f64, j as f64));
        let rows = from_cmat(&m);
        assert_eq!(rows[1][2], Complex64::new(1.0, 2.0));
        assert_eq!(to_cmat(&rows).unwrap(), m);
    }
}
