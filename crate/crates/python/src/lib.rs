//! Python bindings: moment sequences, kernels (series and closed forms),
//! the Mittag-Leffler evaluator, the TYZ expansion, the Hankel spectrum,
//! the minimal-ball kernel and the verification suites.

use kepler_core::geometry::sample_kepler as core_sample_kepler;
use kepler_core::hankel::HankelSpectrum;
use kepler_core::kernels::{
    exa_closed, kernel_alpha_weight_closed, kernel_ball_closed, kernel_series, kernel_tyz_closed,
    tyz_fit_b1 as core_fit_b1, tyz_residual as core_tyz_residual, ExpGenerating, KernelSpec,
};
use kepler_core::measures::{MomentSequence, Parity, PhiProfile, RadialMeasureFamily};
use kepler_core::minimal_ball::{exb_closed, minimal_ball_kernel};
use kepler_core::mittag_leffler::{ml_eval, ml_log_eval, tyz_coeffs, MlParams};
use kepler_core::verify::{self, Suite, VerifyConfig};
use kepler_core::Error;
use num_complex::Complex64;
use pyo3::exceptions::{PyArithmeticError, PyOverflowError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::InvalidParameter(_)
        | Error::Domain(_)
        | Error::LengthMismatch(..)
        | Error::DerivativeOrder(_) => PyValueError::new_err(e.to_string()),
        Error::Overflow(_) => PyOverflowError::new_err(e.to_string()),
        _ => PyArithmeticError::new_err(e.to_string()),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for Result<T, Error> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Moments q_k of a radial measure.
#[pyclass(name = "Moments", module = "kepler_kernels", frozen)]
struct PyMoments {
    inner: MomentSequence,
}

impl PyMoments {
    fn wrap(family: Result<RadialMeasureFamily, Error>) -> PyResult<Self> {
        Ok(PyMoments {
            inner: MomentSequence::new(family.py()?),
        })
    }
}

#[pymethods]
impl PyMoments {
    /// dμ = (1−t)^s on the unit ball.
    #[staticmethod]
    fn bergman_beta(n: u32, s: f64) -> PyResult<Self> {
        Self::wrap(RadialMeasureFamily::bergman_beta(n, s))
    }

    /// dμ = c t^s e^{−s t^{2m}}.
    #[staticmethod]
    fn power_exp(c: f64, m: f64, n: u32, s: f64) -> PyResult<Self> {
        Self::wrap(RadialMeasureFamily::power_exp(c, m, n, s))
    }

    /// Measures generated by a radial profile: "jacobi" (m), "exponential" (c)
    /// or "stretched-exp" (s, m).
    #[staticmethod]
    #[pyo3(signature = (n, profile, *, m = 1.0, c = 1.0, s = 1.0))]
    fn phi_radial(n: u32, profile: &str, m: f64, c: f64, s: f64) -> PyResult<Self> {
        let phi = match profile {
            "jacobi" => PhiProfile::Jacobi { m },
            "exponential" => PhiProfile::Exponential { c },
            "stretched-exp" => PhiProfile::StretchedExp { s, m },
            other => return Err(PyValueError::new_err(format!("unknown profile '{other}'"))),
        };
        Self::wrap(RadialMeasureFamily::phi_radial(n, phi))
    }

    /// Explicit moments; with even_only the values are q_0, q_2, q_4, ….
    #[staticmethod]
    #[pyo3(signature = (values, support = f64::INFINITY, even_only = false))]
    fn tabulated(values: Vec<f64>, support: f64, even_only: bool) -> PyResult<Self> {
        let parity = if even_only {
            Parity::EvenOnly
        } else {
            Parity::All
        };
        Self::wrap(RadialMeasureFamily::tabulated(support, values, parity))
    }

    #[getter]
    fn dimension(&self) -> Option<u32> {
        self.inner.family().dimension()
    }

    fn moment(&self, k: usize) -> PyResult<f64> {
        self.inner.moment(k).py()
    }

    fn ln_moment(&self, k: usize) -> PyResult<f64> {
        self.inner.ln_moment(k).py()
    }

    #[pyo3(signature = (k, rel_tol = 1e-12))]
    fn quadrature(&self, k: usize, rel_tol: f64) -> PyResult<f64> {
        self.inner.quadrature_oracle(k, rel_tol).py()
    }

    /// Rows k = 0..=kmax as dicts, with the quadrature oracle when requested.
    #[pyo3(signature = (kmax, check_quadrature = None))]
    fn table<'py>(
        &self,
        py: Python<'py>,
        kmax: usize,
        check_quadrature: Option<f64>,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let rows = self.inner.table(kmax, check_quadrature).py()?;
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("k", r.k)?;
                d.set_item("q_k", r.q_k)?;
                d.set_item("log_q_k", r.log_q_k)?;
                if check_quadrature.is_some() {
                    d.set_item("quadrature_q_k", r.quadrature_q_k)?;
                    d.set_item("rel_diff", r.rel_diff)?;
                }
                Ok(d)
            })
            .collect()
    }

    fn __repr__(&self) -> String {
        format!("Moments({})", self.inner.family().describe())
    }
}

/// K(t) = Σ N(l) t^l / q_{2l} for a moment sequence.
#[pyclass(name = "Kernel", module = "kepler_kernels", frozen)]
struct PyKernel {
    spec: KernelSpec,
}

#[pymethods]
impl PyKernel {
    #[new]
    #[pyo3(signature = (moments, n = None))]
    fn new(moments: &PyMoments, n: Option<u32>) -> PyResult<Self> {
        let seq = moments.inner.clone();
        let spec = match n {
            Some(n) => KernelSpec::with_dimension(n, seq),
            None => KernelSpec::new(seq),
        };
        Ok(PyKernel { spec: spec.py()? })
    }

    #[getter]
    fn n(&self) -> u32 {
        self.spec.n
    }

    /// Radius of convergence in t.
    #[getter]
    fn radius_squared(&self) -> f64 {
        self.spec.radius_squared()
    }

    #[pyo3(signature = (t, tol = 1e-16))]
    fn __call__(&self, t: Complex64, tol: f64) -> PyResult<Complex64> {
        kernel_series(&self.spec, t, tol).py()
    }
}

/// Closed-form kernel of the Jacobi profile (1−r)^m.
#[pyfunction]
fn jacobi_closed(n: u32, m: f64, t: Complex64) -> PyResult<Complex64> {
    exa_closed(n, m, t).py()
}

/// Closed-form kernel of the ball measure (1−t)^s.
#[pyfunction]
fn ball_closed(n: u32, s: f64, t: Complex64) -> PyResult<Complex64> {
    kernel_ball_closed(n, s, t).py()
}

/// Closed-form kernel of the power-exponential measure.
#[pyfunction]
fn power_exp_closed(n: u32, m: f64, c: f64, s: f64, t: Complex64) -> PyResult<Complex64> {
    kernel_tyz_closed(n, m, c, s, t).py()
}

/// Closed-form kernel of the profile e^{−s r^m}.
#[pyfunction]
fn stretched_exp_closed(n: u32, m: f64, s: f64, t: Complex64) -> PyResult<Complex64> {
    kernel_alpha_weight_closed(n, m, s, t).py()
}

/// d-th derivative of E_{α,β} at t ≥ 0.
#[pyfunction]
#[pyo3(signature = (alpha, beta, t, d = 0))]
fn mittag_leffler(alpha: f64, beta: f64, t: f64, d: usize) -> PyResult<f64> {
    ml_eval(&MlParams::new(alpha, beta).py()?, t, d).py()
}

/// ln of the d-th derivative of E_{α,β} at t ≥ 0; finite where the value overflows.
#[pyfunction]
#[pyo3(signature = (alpha, beta, t, d = 0))]
fn log_mittag_leffler(alpha: f64, beta: f64, t: f64, d: usize) -> PyResult<f64> {
    ml_log_eval(&MlParams::new(alpha, beta).py()?, t, d).py()
}

/// b_0, …, b_{n−1} of the large-parameter expansion.
#[pyfunction]
fn tyz_coefficients(n: u32, m: f64) -> PyResult<Vec<f64>> {
    Ok(tyz_coeffs(n, m).py()?.b)
}

/// (estimate, error estimate) of b_1 extrapolated from an s grid.
#[pyfunction]
fn tyz_fit_b1(n: u32, m: f64, c: f64, r: f64, s_grid: Vec<f64>) -> PyResult<(f64, f64)> {
    let fit = core_fit_b1(n, m, c, r, &s_grid).py()?;
    Ok((fit.estimate, fit.error_estimate))
}

#[pyfunction]
fn tyz_residual<'py>(
    py: Python<'py>,
    n: u32,
    m: f64,
    c: f64,
    s: f64,
    r: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let row = core_tyz_residual(n, m, c, s, r).py()?;
    let d = PyDict::new(py);
    d.set_item("s", row.s)?;
    d.set_item("lhs", row.lhs)?;
    d.set_item("leading", row.leading)?;
    d.set_item("partial_sums", row.partial_sums)?;
    d.set_item("residual", row.residual)?;
    d.set_item("branch", format!("{:?}", row.branch).to_lowercase())?;
    Ok(d)
}

/// Spectrum of |H_{z̄^m}|² on the Bergman space of a moment sequence.
#[pyclass(name = "HankelSpectrum", module = "kepler_kernels", frozen)]
struct PyHankel {
    inner: HankelSpectrum,
}

#[pymethods]
impl PyHankel {
    #[new]
    fn new(n: u32, m: u32, moments: &PyMoments) -> PyResult<Self> {
        Ok(PyHankel {
            inner: HankelSpectrum::new(n, m, moments.inner.clone()).py()?,
        })
    }

    fn eigenvalue(&self, l: u64) -> PyResult<f64> {
        self.inner.eigenvalue(l).py()
    }

    /// Exact eigenvalue as fractions.Fraction (rational moments only).
    fn eigenvalue_exact<'py>(&self, py: Python<'py>, l: u64) -> PyResult<Bound<'py, PyAny>> {
        let q = self.inner.eigenvalue_exact(l).py()?;
        py.import("fractions")?
            .getattr("Fraction")?
            .call1((q.to_string(),))
    }

    fn multiplicity(&self, l: u64) -> PyResult<u128> {
        self.inner.multiplicity(l).py()
    }

    /// One dict per p with the partial sum, diagnostics and verdict letter.
    fn cutoff_scan<'py>(
        &self,
        py: Python<'py>,
        p_grid: Vec<f64>,
        l_max: u64,
    ) -> PyResult<Vec<Bound<'py, PyDict>>> {
        let inner = &self.inner;
        let rows = py.detach(|| inner.cutoff_scan(&p_grid, l_max)).py()?;
        rows.iter()
            .map(|r| {
                let d = PyDict::new(py);
                d.set_item("p", r.p)?;
                d.set_item("L", r.l_max)?;
                d.set_item("partial_sum", r.partial_sum)?;
                d.set_item("growth_ratio", r.growth_ratio)?;
                d.set_item("term_exponent", r.term_exponent)?;
                d.set_item("tail_estimate", r.tail_estimate)?;
                d.set_item("doubling_increments", r.doubling_increments.to_vec())?;
                d.set_item("verdict", r.verdict.letter())?;
                Ok(d)
            })
            .collect()
    }
}

/// Minimal-ball kernel for φ(r) = e^{−cr}, assembled from the generating
/// function; `closed=True` uses the sinh/cosh closed form instead.
#[pyfunction]
#[pyo3(signature = (n, c, z, w, closed = false))]
fn minimal_ball_exponential(
    n: u32,
    c: f64,
    z: Vec<Complex64>,
    w: Vec<Complex64>,
    closed: bool,
) -> PyResult<Complex64> {
    if closed {
        exb_closed(n, c, &z, &w).py()
    } else {
        let f = ExpGenerating { scale: c, rate: c };
        minimal_ball_kernel(n, &f, &z, &w).py()
    }
}

/// `count` points on the Kepler manifold in C^{n+1} with |z| = r.
#[pyfunction]
#[pyo3(signature = (n, r = 1.0, count = 1, seed = 0))]
fn sample_kepler(n: usize, r: f64, count: usize, seed: u64) -> PyResult<Vec<Vec<Complex64>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| Ok(core_sample_kepler(n, r, &mut rng).py()?.coords().to_vec()))
        .collect()
}

/// Runs a verification suite; returns (all passed, list of check dicts).
#[pyfunction]
#[pyo3(signature = (suite = "all", seed = 42, samples = 100_000, schatten_l = 1_000_000))]
fn run_verify<'py>(
    py: Python<'py>,
    suite: &str,
    seed: u64,
    samples: usize,
    schatten_l: u64,
) -> PyResult<(bool, Vec<Bound<'py, PyDict>>)> {
    let suite: Suite = suite.parse().py()?;
    let cfg = VerifyConfig {
        seed,
        samples,
        schatten_l,
    };
    let checks = py.detach(|| verify::run(suite, &cfg));
    let pass = checks.iter().all(|c| c.pass);
    let dicts = checks
        .iter()
        .map(|c| {
            let d = PyDict::new(py);
            d.set_item("suite", &c.suite)?;
            d.set_item("name", &c.name)?;
            d.set_item("value", c.value)?;
            d.set_item("target", c.target)?;
            d.set_item("tolerance", c.tolerance)?;
            d.set_item("pass", c.pass)?;
            d.set_item("detail", &c.detail)?;
            Ok(d)
        })
        .collect::<PyResult<Vec<_>>>()?;
    Ok((pass, dicts))
}

#[pymodule]
fn kepler_kernels(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<PyMoments>()?;
    m.add_class::<PyKernel>()?;
    m.add_class::<PyHankel>()?;
    m.add_function(wrap_pyfunction!(jacobi_closed, m)?)?;
    m.add_function(wrap_pyfunction!(ball_closed, m)?)?;
    m.add_function(wrap_pyfunction!(power_exp_closed, m)?)?;
    m.add_function(wrap_pyfunction!(stretched_exp_closed, m)?)?;
    m.add_function(wrap_pyfunction!(mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(log_mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(tyz_coefficients, m)?)?;
    m.add_function(wrap_pyfunction!(tyz_fit_b1, m)?)?;
    m.add_function(wrap_pyfunction!(tyz_residual, m)?)?;
    m.add_function(wrap_pyfunction!(minimal_ball_exponential, m)?)?;
    m.add_function(wrap_pyfunction!(sample_kepler, m)?)?;
    m.add_function(wrap_pyfunction!(run_verify, m)?)?;
    Ok(())
}
