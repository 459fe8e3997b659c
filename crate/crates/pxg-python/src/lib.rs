//! Python bindings: the graph constructions, edge functional, difference
//! operators, stabilization-radius estimate, and the normal-distance
//! statistics, exposed as a `pxg` module.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use pxg_core::functional::{self, WeightSpec};
use pxg_core::geom;
use pxg_core::graph;
use pxg_core::harness;
use pxg_core::pointproc;
use pxg_core::regions::{self, BuiltinTemplate};
use pxg_core::stabilize::{self, BaseSet};
use pxg_core::stats;
use pxg_core::PxgError;

fn err(e: PxgError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

#[pyclass(name = "Window", from_py_object)]
#[derive(Clone)]
struct PyWindow {
    inner: geom::Window,
}

#[pymethods]
impl PyWindow {
    #[staticmethod]
    fn ball(center: Vec<f64>, radius: f64) -> PyResult<Self> {
        Ok(Self { inner: geom::Window::ball(center, radius).map_err(err)? })
    }

    #[staticmethod]
    fn cube(corner: Vec<f64>, side: f64) -> PyResult<Self> {
        Ok(Self { inner: geom::Window::cube(corner, side).map_err(err)? })
    }

    #[staticmethod]
    fn unit_ball(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: geom::Window::unit_ball(dim).map_err(err)? })
    }

    #[staticmethod]
    fn unit_cube(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: geom::Window::unit_cube(dim).map_err(err)? })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn volume(&self) -> f64 {
        self.inner.volume()
    }

    #[getter]
    fn diameter(&self) -> f64 {
        self.inner.diameter()
    }

    fn contains(&self, p: Vec<f64>) -> bool {
        self.inner.contains(&p)
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

#[pyclass(name = "RegionFamily")]
struct PyFamily {
    inner: regions::RegionFamily,
}

#[pymethods]
impl PyFamily {
    #[staticmethod]
    fn gabriel(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: regions::RegionFamily::gabriel(dim).map_err(err)? })
    }

    #[staticmethod]
    fn relative_neighborhood(dim: usize) -> PyResult<Self> {
        Ok(Self { inner: regions::RegionFamily::relative_neighborhood(dim).map_err(err)? })
    }

    #[staticmethod]
    fn annulus_sector(dim: usize) -> PyResult<Self> {
        Ok(Self {
            inner: regions::RegionFamily::builtin_template(dim, BuiltinTemplate::AnnulusSector)
                .map_err(err)?,
        })
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label().to_string()
    }

    #[getter]
    fn normalized_diameter(&self) -> f64 {
        self.inner.normalized_diameter()
    }

    #[getter]
    fn ball_ratio(&self) -> f64 {
        self.inner.ball_ratio()
    }

    /// Membership of z in the open region attached to the pair (x, y).
    fn contains(&self, x: Vec<f64>, y: Vec<f64>, z: Vec<f64>) -> PyResult<bool> {
        self.inner.contains(&x, &y, &z).map_err(err)
    }

    fn __repr__(&self) -> String {
        format!("RegionFamily({}, dim={})", self.inner.label(), self.inner.dim())
    }
}

#[pyclass(name = "PointCloud")]
struct PyCloud {
    inner: pointproc::PointCloud,
}

#[pymethods]
impl PyCloud {
    #[new]
    #[pyo3(signature = (points, window=None))]
    fn new(points: Vec<Vec<f64>>, window: Option<PyWindow>) -> PyResult<Self> {
        let dim = points.first().map(|p| p.len()).unwrap_or_else(|| {
            window.as_ref().map(|w| w.inner.dim()).unwrap_or(1)
        });
        let mut coords = Vec::with_capacity(points.len() * dim);
        for p in &points {
            coords.extend_from_slice(p);
        }
        let inner = pointproc::PointCloud::from_points(dim, coords, window.map(|w| w.inner))
            .map_err(err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn n(&self) -> usize {
        self.inner.n()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn points(&self) -> Vec<Vec<f64>> {
        self.inner.iter_points().map(<[f64]>::to_vec).collect()
    }

    #[getter]
    fn window(&self) -> PyWindow {
        PyWindow { inner: self.inner.window().clone() }
    }

    fn __len__(&self) -> usize {
        self.inner.n()
    }

    fn __repr__(&self) -> String {
        format!("PointCloud(n={}, dim={})", self.inner.n(), self.inner.dim())
    }
}

#[pyclass(name = "Graph")]
struct PyGraph {
    inner: graph::ProximityGraph,
}

#[pymethods]
impl PyGraph {
    #[getter]
    fn n_vertices(&self) -> usize {
        self.inner.n_vertices()
    }

    #[getter]
    fn n_edges(&self) -> usize {
        self.inner.n_edges()
    }

    fn edges(&self) -> Vec<(u32, u32)> {
        self.inner.edges().to_vec()
    }

    fn contains_edge(&self, i: u32, j: u32) -> bool {
        self.inner.contains_edge(i, j)
    }

    fn degrees(&self) -> Vec<usize> {
        self.inner.degrees()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(n_vertices={}, n_edges={})",
            self.inner.n_vertices(),
            self.inner.n_edges()
        )
    }
}

#[pyclass(name = "RadiusEstimate")]
struct PyRadius {
    inner: stabilize::RadiusEstimate,
}

#[pymethods]
impl PyRadius {
    #[getter]
    fn max_distance(&self) -> f64 {
        self.inner.max_distance
    }

    #[getter]
    fn inflated(&self) -> f64 {
        self.inner.inflated
    }

    #[getter]
    fn witness(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        self.inner.witness.clone()
    }

    #[getter]
    fn contributing_regions(&self) -> usize {
        self.inner.contributing_regions
    }

    #[getter]
    fn pairs_tested(&self) -> usize {
        self.inner.pairs_tested
    }

    #[getter]
    fn candidates(&self) -> usize {
        self.inner.candidates
    }

    #[getter]
    fn spacing(&self) -> f64 {
        self.inner.spacing
    }

    fn __repr__(&self) -> String {
        format!(
            "RadiusEstimate(max_distance={:.6}, contributing_regions={})",
            self.inner.max_distance, self.inner.contributing_regions
        )
    }
}

#[pyfunction]
#[pyo3(signature = (window, t, seed=0))]
fn sample_poisson(window: &PyWindow, t: f64, seed: u64) -> PyResult<PyCloud> {
    Ok(PyCloud { inner: pointproc::sample_poisson(&window.inner, t, seed).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (window, n, seed=0))]
fn sample_binomial(window: &PyWindow, n: usize, seed: u64) -> PyResult<PyCloud> {
    Ok(PyCloud { inner: pointproc::sample_binomial(&window.inner, n, seed).map_err(err)? })
}

#[pyfunction]
fn build_graph(cloud: &PyCloud, family: &PyFamily) -> PyResult<PyGraph> {
    Ok(PyGraph { inner: graph::build_accelerated(&cloud.inner, &family.inner).map_err(err)? })
}

#[pyfunction]
fn build_graph_naive(cloud: &PyCloud, family: &PyFamily) -> PyResult<PyGraph> {
    Ok(PyGraph { inner: graph::build_naive(&cloud.inner, &family.inner).map_err(err)? })
}

#[pyfunction]
#[pyo3(signature = (cloud, graph, alpha=1.0))]
fn eval_l(cloud: &PyCloud, graph: &PyGraph, alpha: f64) -> PyResult<f64> {
    let w = WeightSpec::power(alpha).map_err(err)?;
    functional::eval_l(&cloud.inner, &graph.inner, &w).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (cloud, graph, family, x, alpha=1.0))]
fn add_one_cost(
    cloud: &PyCloud,
    graph: &PyGraph,
    family: &PyFamily,
    x: Vec<f64>,
    alpha: f64,
) -> PyResult<f64> {
    let w = WeightSpec::power(alpha).map_err(err)?;
    functional::add_one_cost(&cloud.inner, &graph.inner, &family.inner, &w, &x).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (cloud, family, x, y, alpha=1.0))]
fn second_difference(
    cloud: &PyCloud,
    family: &PyFamily,
    x: Vec<f64>,
    y: Vec<f64>,
    alpha: f64,
) -> PyResult<f64> {
    let w = WeightSpec::power(alpha).map_err(err)?;
    functional::second_difference(&cloud.inner, &family.inner, &w, &x, &y).map_err(err)
}

#[pyfunction]
#[pyo3(signature = (cloud, family, center, spacing, radius=None))]
fn estimate_radius(
    cloud: &PyCloud,
    family: &PyFamily,
    center: Vec<f64>,
    spacing: f64,
    radius: Option<f64>,
) -> PyResult<PyRadius> {
    let base = match radius {
        Some(r) => BaseSet::ball(center, r).map_err(err)?,
        None => BaseSet::point(center),
    };
    Ok(PyRadius {
        inner: stabilize::estimate_radius(&cloud.inner, &family.inner, &base, spacing)
            .map_err(err)?,
    })
}

/// Kolmogorov distance of a sample to the standard normal; sorts a copy.
#[pyfunction]
fn empirical_kolmogorov(mut values: Vec<f64>) -> PyResult<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    harness::empirical_kolmogorov(&values).map_err(err)
}

/// 1-Wasserstein distance of a sample to the standard normal; sorts a copy.
#[pyfunction]
fn empirical_wasserstein1(mut values: Vec<f64>) -> PyResult<f64> {
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    harness::empirical_wasserstein1(&values).map_err(err)
}

#[pyfunction]
fn normal_cdf(x: f64) -> f64 {
    stats::normal_cdf(x)
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    stats::normal_quantile(p).map_err(err)
}

#[pyfunction]
fn certify_constants(family: &PyFamily, samples: usize, seed: u64) -> PyResult<bool> {
    Ok(regions::certify_constants(&family.inner, samples, seed)
        .map_err(err)?
        .is_ok())
}

#[pymodule]
fn pxg(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyWindow>()?;
    m.add_class::<PyFamily>()?;
    m.add_class::<PyCloud>()?;
    m.add_class::<PyGraph>()?;
    m.add_class::<PyRadius>()?;
    m.add_function(wrap_pyfunction!(sample_poisson, m)?)?;
    m.add_function(wrap_pyfunction!(sample_binomial, m)?)?;
    m.add_function(wrap_pyfunction!(build_graph, m)?)?;
    m.add_function(wrap_pyfunction!(build_graph_naive, m)?)?;
    m.add_function(wrap_pyfunction!(eval_l, m)?)?;
    m.add_function(wrap_pyfunction!(add_one_cost, m)?)?;
    m.add_function(wrap_pyfunction!(second_difference, m)?)?;
    m.add_function(wrap_pyfunction!(estimate_radius, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_kolmogorov, m)?)?;
    m.add_function(wrap_pyfunction!(empirical_wasserstein1, m)?)?;
    m.add_function(wrap_pyfunction!(normal_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(certify_constants, m)?)?;
    Ok(())
}
