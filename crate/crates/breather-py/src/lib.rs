//! Python bindings: breather families, functionals, Galerkin spectra and
//! stability reports.

use breather_lab::breathers::{self, Family, Gardner, GardnerSoliton, Kksh, Mkdv, MkdvSoliton, NonzeroMean, Sg, SgKink};
use breather_lab::cli::family_echo;
use breather_lab::error::Error;
use breather_lab::functionals::{self, FunctionalKind};
use breather_lab::galerkin::{self, GalerkinProblem};
use breather_lab::linops::LinearizedOperator;
use breather_lab::stability::{self, KPartial};
use pyo3::exceptions::{PyArithmeticError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Quadrature { .. } | Error::Asymmetry(_) | Error::Eigen(_) | Error::Singular(_) | Error::Degenerate(_) => {
            PyArithmeticError::new_err(e.to_string())
        }
        _ => PyValueError::new_err(e.to_string()),
    }
}

trait Lift<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> Lift<T> for breather_lab::error::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

/// A breather, soliton or kink profile.
#[pyclass(name = "Family", frozen, module = "pybreather")]
pub struct PyFamily {
    inner: Family,
}

fn wrap(f: breather_lab::error::Result<Family>) -> PyResult<PyFamily> {
    f.py().map(|inner| PyFamily { inner })
}

#[pymethods]
impl PyFamily {
    #[staticmethod]
    #[pyo3(signature = (alpha, beta, x1 = 0.0, x2 = 0.0))]
    fn mkdv(alpha: f64, beta: f64, x1: f64, x2: f64) -> PyResult<Self> {
        wrap(Mkdv::new(alpha, beta, x1, x2).map(Family::Mkdv))
    }

    #[staticmethod]
    #[pyo3(signature = (alpha, beta, mu, x1 = 0.0, x2 = 0.0))]
    fn gardner(alpha: f64, beta: f64, mu: f64, x1: f64, x2: f64) -> PyResult<Self> {
        wrap(Gardner::new(alpha, beta, mu, x1, x2).map(Family::Gardner))
    }

    #[staticmethod]
    #[pyo3(signature = (beta, v, x1 = 0.0, x2 = 0.0))]
    fn sg(beta: f64, v: f64, x1: f64, x2: f64) -> PyResult<Self> {
        wrap(Sg::new(beta, v, x1, x2).map(Family::Sg))
    }

    /// Periodic mKdV breather; give exactly one of `k`, `m`.
    #[staticmethod]
    #[pyo3(signature = (beta, k = None, m = None, x1 = 0.0, x2 = 0.0))]
    fn kksh(beta: f64, k: Option<f64>, m: Option<f64>, x1: f64, x2: f64) -> PyResult<Self> {
        match (k, m) {
            (Some(k), None) => wrap(Kksh::new(beta, k, x1, x2).map(Family::Kksh)),
            (None, Some(m)) => wrap(Kksh::from_m(beta, m, x1, x2).map(Family::Kksh)),
            _ => Err(PyValueError::new_err("give exactly one of k, m")),
        }
    }

    #[staticmethod]
    fn nonzero_mean(mu: f64, c1: f64, p: u64, q: u64) -> PyResult<Self> {
        wrap(NonzeroMean::new(mu, c1, p, q).map(Family::NonzeroMean))
    }

    /// Nonzero-mean breather from the two speeds, via the Bäcklund construction.
    #[staticmethod]
    fn backlund(c1: f64, c2: f64, p: u64, q: u64) -> PyResult<Self> {
        let mu = NonzeroMean::from_speeds(c1, c2, p, q).py()?.mu();
        wrap(breathers::backlund_construct(mu, c1, p, q))
    }

    #[staticmethod]
    fn mkdv_soliton(c: f64) -> PyResult<Self> {
        wrap(MkdvSoliton::new(c).map(Family::MkdvSoliton))
    }

    #[staticmethod]
    fn gardner_soliton(c: f64, mu: f64) -> PyResult<Self> {
        wrap(GardnerSoliton::new(c, mu).map(Family::GardnerSoliton))
    }

    #[staticmethod]
    #[pyo3(signature = (v, x0 = 0.0))]
    fn sg_kink(v: f64, x0: f64) -> PyResult<Self> {
        wrap(SgKink::new(v, x0).map(Family::SgKink))
    }

    #[getter]
    fn tag(&self) -> &'static str {
        self.inner.tag()
    }

    #[getter]
    fn period(&self) -> Option<f64> {
        self.inner.period()
    }

    /// Resolved parameters, including derived constants.
    fn params<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (k, v) in family_echo(&self.inner) {
            d.set_item(k, v)?;
        }
        Ok(d)
    }

    fn with_shifts(&self, x1: f64, x2: f64) -> PyResult<Self> {
        wrap(self.inner.with_shifts(x1, x2))
    }

    /// `B(t, x)`.
    fn __call__(&self, t: f64, x: f64) -> PyResult<f64> {
        Ok(self.inner.eval(t, x, 0).py()?.value())
    }

    /// `[∂ₓʲ B(t, x) for j in 0..=deg]`.
    #[pyo3(signature = (t, x, deg = 4))]
    fn x_derivatives(&self, t: f64, x: f64, deg: usize) -> PyResult<Vec<f64>> {
        let j = self.inner.eval(t, x, deg).py()?;
        Ok((0..=deg).map(|k| j.dx(k)).collect())
    }

    fn pde_residual(&self, t: f64, x: f64) -> PyResult<f64> {
        breathers::pde_residual(&self.inner, t, x).py()
    }

    /// `(primary, secondary)` relative stationary residuals on `xs`.
    #[pyo3(signature = (xs, t = 0.0))]
    fn stationary_residual(&self, xs: Vec<f64>, t: f64) -> PyResult<(f64, Option<f64>)> {
        let r = functionals::stationary_residual(&self.inner, &xs, t).py()?;
        Ok((r.primary, r.secondary))
    }

    /// `(value, drift)` of a conserved or Lyapunov functional.
    #[pyo3(signature = (kind, t = 0.0))]
    fn functional(&self, kind: &str, t: f64) -> PyResult<(f64, f64)> {
        let k = FunctionalKind::parse(kind).ok_or_else(|| PyValueError::new_err(format!("unknown functional '{kind}'")))?;
        functionals::evaluate_functional_with(k, &self.inner, t).py()
    }

    fn __repr__(&self) -> String {
        let p: Vec<String> = family_echo(&self.inner).into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        format!("Family.{}({})", self.inner.tag(), p.join(", "))
    }
}

/// Galerkin spectrum of the linearized operator at the `t = 0` normal form.
#[pyfunction]
#[pyo3(signature = (family, n = None, dim_total = None, basis = None, kernel_tol = None))]
fn spectrum<'py>(
    py: Python<'py>,
    family: &PyFamily,
    n: Option<usize>,
    dim_total: Option<usize>,
    basis: Option<&str>,
    kernel_tol: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let f = family.inner;
    let fourier = match basis {
        None => f.period().is_some(),
        Some("fourier") => true,
        Some("hermite") => false,
        Some(b) => return Err(PyValueError::new_err(format!("unknown basis '{b}'"))),
    };
    let (asm, s, dim) = py
        .detach(move || -> breather_lab::error::Result<_> {
            let nf = breathers::normal_form(&f, 0.0).unwrap_or(f);
            let op = LinearizedOperator::for_family(&nf)?;
            let p = match (fourier, dim_total) {
                (true, _) => GalerkinProblem::fourier(op, n.unwrap_or(40))?,
                (false, Some(d)) => GalerkinProblem::hermite_total(op, d)?,
                (false, None) => GalerkinProblem::hermite(op, n.unwrap_or(160))?,
            };
            let (asm, s) = galerkin::solve(&p, kernel_tol)?;
            Ok((asm, s, p.dim()))
        })
        .py()?;
    let d = PyDict::new(py);
    d.set_item("eigenvalues", s.eigenvalues.clone())?;
    d.set_item("dim", dim)?;
    d.set_item("kernel_tol", s.kernel_tol)?;
    d.set_item("n_neg", s.classification.n_neg)?;
    d.set_item("kernel_dim", s.classification.kernel_dim)?;
    d.set_item("gap", s.classification.gap)?;
    d.set_item("asymmetry", asm.asymmetry)?;
    d.set_item("quadrature_drift", asm.quadrature_drift)?;
    Ok(d)
}

fn k_partial(mode: &str) -> PyResult<KPartial> {
    match mode {
        "frozen-m" => Ok(KPartial::FrozenM),
        "resolved" => Ok(KPartial::Resolved),
        _ => Err(PyValueError::new_err(format!("unknown k-partial mode '{mode}'"))),
    }
}

/// Stability report of the periodic breather at `(β, k)`.
#[pyfunction]
#[pyo3(signature = (beta, k, mode = "frozen-m"))]
fn stability_report<'py>(py: Python<'py>, beta: f64, k: f64, mode: &str) -> PyResult<Bound<'py, PyDict>> {
    let r = stability::stability_report(beta, k, k_partial(mode)?).py()?;
    let d = PyDict::new(py);
    for (key, v) in [
        ("beta", r.beta),
        ("k", r.k),
        ("m", r.m),
        ("alpha", r.alpha),
        ("L", r.l),
        ("mass", r.mass),
        ("a1", r.a1),
        ("a2", r.a2),
        ("D", r.d),
        ("HG", r.hg),
    ] {
        d.set_item(key, v)?;
    }
    d.set_item("verdict", r.verdict.as_str())?;
    Ok(d)
}

#[pyfunction]
fn commensurate_m(k: f64) -> PyResult<f64> {
    stability::commensurate_m(k).py()
}

#[pyfunction]
fn commensurate_k(m: f64) -> PyResult<f64> {
    stability::commensurate_k(m).py()
}

/// Upper end of the commensurable range of `k`.
#[pyfunction]
fn kstar() -> PyResult<f64> {
    stability::find_kstar_commensurability().py()
}

#[pyfunction]
fn periodic_mass(beta: f64, k: f64) -> PyResult<f64> {
    stability::periodic_mass(beta, k).py()
}

#[pyfunction]
#[pyo3(signature = (beta, lo, hi, mode = "frozen-m"))]
fn discriminant_root(beta: f64, lo: f64, hi: f64, mode: &str) -> PyResult<f64> {
    stability::discriminant_root(beta, lo, hi, k_partial(mode)?).py()
}

#[pymodule]
fn pybreather(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(stability_report, m)?)?;
    m.add_function(wrap_pyfunction!(commensurate_m, m)?)?;
    m.add_function(wrap_pyfunction!(commensurate_k, m)?)?;
    m.add_function(wrap_pyfunction!(kstar, m)?)?;
    m.add_function(wrap_pyfunction!(periodic_mass, m)?)?;
    m.add_function(wrap_pyfunction!(discriminant_root, m)?)?;
    Ok(())
}
