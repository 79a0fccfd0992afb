//! Python module `complex_geodesics`.

use complex_geodesics::boundary::{self, ShootOptions};
use complex_geodesics::canonical::{verify_straightening, CanonicalChart as CoreChart};
use complex_geodesics::circle::CircleField;
use complex_geodesics::domain::{Domain as CoreDomain, DomainConfig};
use complex_geodesics::geodesic::{self, GeodesicDisc, SolveOptions};
use complex_geodesics::verify::{run_geodesic_battery, run_hcma_suite, run_smoothness_suite, Report, SamplePlan};
use complex_geodesics::{Error, C64};
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;

create_exception!(complex_geodesics, GeodesicError, PyException);

fn err(e: Error) -> PyErr {
    GeodesicError::new_err(e.to_string())
}

fn json_err(e: serde_json::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn shoot_opts(nodes: usize) -> ShootOptions {
    ShootOptions { solve: SolveOptions { nodes, ..SolveOptions::default() }, ..ShootOptions::default() }
}

#[pyclass(name = "Domain", module = "complex_geodesics", frozen, skip_from_py_object)]
#[derive(Clone)]
struct Domain(CoreDomain);

#[pymethods]
impl Domain {
    #[staticmethod]
    fn ball(n: usize) -> PyResult<Self> {
        CoreDomain::make_ball(n).map(Domain).map_err(err)
    }

    #[staticmethod]
    fn ellipsoid(b: Vec<Vec<f64>>, epsilon: f64) -> PyResult<Self> {
        CoreDomain::make_ellipsoid(b.len(), &b, epsilon).map(Domain).map_err(err)
    }

    /// Domain from a config JSON string `{"type", "n", "epsilon", "B"}`.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let cfg: DomainConfig = serde_json::from_str(text).map_err(json_err)?;
        CoreDomain::from_config(&cfg).map(Domain).map_err(err)
    }

    #[getter]
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn rho(&self, z: Vec<C64>) -> f64 {
        self.0.rho(&z)
    }

    fn normal(&self, z: Vec<C64>) -> Vec<C64> {
        self.0.normal(&z)
    }

    #[pyo3(signature = (count, seed = 0))]
    fn boundary_samples(&self, count: usize, seed: u64) -> Vec<Vec<C64>> {
        self.0.boundary_samples(count, seed)
    }

    fn boundary_along(&self, direction: Vec<C64>) -> PyResult<Vec<C64>> {
        self.0.boundary_along(&direction).map_err(err)
    }
}

#[pyclass(name = "Geodesic", module = "complex_geodesics", frozen)]
struct Geodesic(GeodesicDisc);

#[pymethods]
impl Geodesic {
    /// Value of the disc at `zeta` in the closed unit disc.
    fn __call__(&self, zeta: C64) -> Vec<C64> {
        self.0.eval(zeta)
    }

    #[getter]
    fn p(&self) -> Vec<C64> {
        self.0.datum.p.clone()
    }

    #[getter]
    fn v(&self) -> Vec<C64> {
        self.0.datum.v.clone()
    }

    #[getter]
    fn nodes(&self) -> usize {
        self.0.phi.num_nodes()
    }

    #[getter]
    fn trace(&self) -> Vec<Vec<C64>> {
        (0..self.0.phi.num_nodes()).map(|j| self.0.phi.node_vector(j)).collect()
    }

    #[getter]
    fn dual(&self) -> Vec<Vec<C64>> {
        (0..self.0.dual.num_nodes()).map(|j| self.0.dual.node_vector(j)).collect()
    }

    #[getter]
    fn residual(&self) -> f64 {
        self.0.diagnostics.theta_max()
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.0.diagnostics.iterations
    }

    #[getter]
    fn winding(&self) -> i64 {
        self.0.diagnostics.winding
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.0.to_json()).map_err(json_err)
    }
}

#[pyfunction]
#[pyo3(signature = (domain, p, vhat, nodes = 256, tol = geodesic::TOL_GEO))]
fn solve_preferred(domain: &Domain, p: Vec<C64>, vhat: Vec<C64>, nodes: usize, tol: f64) -> PyResult<Geodesic> {
    let opts = SolveOptions { nodes, tol, ..SolveOptions::default() };
    geodesic::solve_preferred(&domain.0, &p, &vhat, &opts).map(Geodesic).map_err(err)
}

/// Closed-form ball geodesic through `p` with direction `v`.
#[pyfunction]
#[pyo3(signature = (p, v, nodes = 256))]
fn ball_geodesic(p: Vec<C64>, v: Vec<C64>, nodes: usize) -> PyResult<Geodesic> {
    geodesic::ball_geodesic(&p, &v, nodes).map(Geodesic).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (domain, p, z, nodes = 256))]
fn psi(domain: &Domain, p: Vec<C64>, z: Vec<C64>, nodes: usize) -> PyResult<Vec<C64>> {
    boundary::psi(&domain.0, &p, &z, &shoot_opts(nodes)).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (domain, p, w, nodes = 256))]
fn psi_inverse(domain: &Domain, p: Vec<C64>, w: Vec<C64>, nodes: usize) -> PyResult<Vec<C64>> {
    boundary::psi_inverse(&domain.0, &p, &w, &shoot_opts(nodes).solve).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (domain, p, z, nodes = 256))]
fn poisson_kernel(domain: &Domain, p: Vec<C64>, z: Vec<C64>, nodes: usize) -> PyResult<f64> {
    boundary::poisson_kernel(&domain.0, &p, &z, &shoot_opts(nodes)).map_err(err)
}

/// Leaf coordinates `(vhat, zeta)` of `z`.
#[pyfunction]
#[pyo3(signature = (domain, p, z, nodes = 256))]
fn shoot(domain: &Domain, p: Vec<C64>, z: Vec<C64>, nodes: usize) -> PyResult<(Vec<C64>, C64)> {
    boundary::shoot(&domain.0, &p, &z, &shoot_opts(nodes)).map(|c| (c.vhat, c.zeta)).map_err(err)
}

/// Conjugate function of nodal samples on the circle.
#[pyfunction]
fn hilbert_transform(values: Vec<C64>) -> PyResult<Vec<C64>> {
    let n = values.len();
    let f = CircleField::from_values(n, 1, values).map_err(err)?;
    Ok(f.hilbert_transform().values().to_vec())
}

#[pyclass(name = "CanonicalChart", module = "complex_geodesics", frozen)]
struct CanonicalChart(CoreChart);

#[pymethods]
impl CanonicalChart {
    #[new]
    fn new(domain: &Domain, geodesic: &Geodesic) -> PyResult<Self> {
        CoreChart::new(&domain.0, &geodesic.0).map(CanonicalChart).map_err(err)
    }

    fn rho(&self, z: Vec<C64>) -> PyResult<f64> {
        self.0.canonical_rho(&z).map_err(err)
    }

    fn f_map(&self, z1: C64, zp: Vec<C64>) -> Vec<C64> {
        self.0.f_map(z1, &zp)
    }

    /// Straightening report as a JSON string.
    fn verify(&self) -> PyResult<String> {
        serde_json::to_string(&verify_straightening(&self.0)).map_err(json_err)
    }
}

/// Runs `geodesic`, `hcma`, `smoothness` or `all`; returns the report JSON.
#[pyfunction]
#[pyo3(signature = (domain, suite = "geodesic", count = 20, seed = 1))]
fn verify(py: Python<'_>, domain: &Domain, suite: &str, count: usize, seed: u64) -> PyResult<String> {
    let plan = SamplePlan { count, seed, ..SamplePlan::default() };
    let dom = domain.0.clone();
    let suite = suite.to_string();
    if !matches!(suite.as_str(), "geodesic" | "hcma" | "smoothness" | "all") {
        return Err(PyValueError::new_err(format!("unknown suite '{suite}'")));
    }
    let rep = py.detach(move || {
        let mut rep = Report::default();
        if suite == "geodesic" || suite == "all" {
            rep.extend(run_geodesic_battery(&dom, &plan));
        }
        if suite == "hcma" || suite == "all" {
            rep.extend(run_hcma_suite(&dom, &plan));
        }
        if suite == "smoothness" || suite == "all" {
            rep.extend(run_smoothness_suite(&dom, &plan));
        }
        rep
    });
    let doc = serde_json::json!({ "pass": rep.pass(), "checks": rep.checks, "failures": rep.failures });
    Ok(doc.to_string())
}

#[pymodule]
#[pyo3(name = "complex_geodesics")]
fn python_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GeodesicError", m.py().get_type::<GeodesicError>())?;
    m.add_class::<Domain>()?;
    m.add_class::<Geodesic>()?;
    m.add_class::<CanonicalChart>()?;
    m.add_function(wrap_pyfunction!(solve_preferred, m)?)?;
    m.add_function(wrap_pyfunction!(ball_geodesic, m)?)?;
    m.add_function(wrap_pyfunction!(psi, m)?)?;
    m.add_function(wrap_pyfunction!(psi_inverse, m)?)?;
    m.add_function(wrap_pyfunction!(poisson_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(shoot, m)?)?;
    m.add_function(wrap_pyfunction!(hilbert_transform, m)?)?;
    m.add_function(wrap_pyfunction!(verify, m)?)?;
    Ok(())
}
