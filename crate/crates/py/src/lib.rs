//! Python bindings: lattice regions, walk kernels, profiles, the three
//! particle engines, percolation samples, fronts and the experiment harness.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyMemoryError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use diffront::constants::Constants;
use diffront::error::Error;
use diffront::geometry::{self, FrontCurve};
use diffront::harness::config::ExperimentConfig;
use diffront::harness::experiments::{self, box_region, OutputFormat};
use diffront::lattice::{self, RegionSpec, SitePos};
use diffront::occupation;
use diffront::percolation::{self, Direction, Parallelogram, Polarity};
use diffront::sampler::{self, KernelMode};
use diffront::walk_kernel;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::ResourceCap { .. } => PyMemoryError::new_err(e.to_string()),
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        Error::NoInterface(_) | Error::Trace(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

fn kernel_mode(name: &str) -> PyResult<KernelMode> {
    match name {
        "lclt" => Ok(KernelMode::Lclt),
        "exact" => Ok(KernelMode::Exact),
        _ => Err(PyValueError::new_err(format!(
            "kernel must be 'lclt' or 'exact', not {name:?}"
        ))),
    }
}

/// A finite set of lattice sites in axial coordinates `(a, b)`.
#[pyclass(frozen, module = "diffront")]
struct Region {
    inner: Arc<lattice::Region>,
}

impl Region {
    fn build(spec: RegionSpec) -> PyResult<Self> {
        Ok(Region {
            inner: Arc::new(lattice::Region::build(spec).map_err(py_err)?),
        })
    }
}

#[pymethods]
impl Region {
    #[staticmethod]
    fn disk(r: f64) -> PyResult<Self> {
        Self::build(RegionSpec::Disk { r })
    }

    #[staticmethod]
    fn annulus(r_inner: f64, r_outer: f64) -> PyResult<Self> {
        Self::build(RegionSpec::Annulus { r_inner, r_outer })
    }

    #[staticmethod]
    fn parallelogram(a1: i32, a2: i32, b1: i32, b2: i32) -> PyResult<Self> {
        Self::build(RegionSpec::Parallelogram { a1, a2, b1, b2 })
    }

    #[staticmethod]
    fn strip(ell: i32, height: i32) -> PyResult<Self> {
        Self::build(RegionSpec::Strip { ell, height })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __contains__(&self, site: (i32, i32)) -> bool {
        self.inner.contains(SitePos::new(site.0, site.1))
    }

    /// Sites in lexicographic order.
    fn sites(&self) -> Vec<(i32, i32)> {
        self.inner.sites().iter().map(|z| (z.a, z.b)).collect()
    }

    fn __repr__(&self) -> String {
        format!("Region({:?}, {} sites)", self.inner.spec(), self.inner.len())
    }
}

/// Exact distribution `π_t` of the simple random walk.
#[pyclass(frozen, module = "diffront")]
struct WalkField {
    inner: Arc<walk_kernel::WalkField>,
}

#[pymethods]
impl WalkField {
    #[new]
    fn new(t: u32) -> PyResult<Self> {
        let field =
            walk_kernel::exact_distribution(t, diffront::constants::KERNEL_CAP as u32).map_err(py_err)?;
        Ok(WalkField {
            inner: Arc::new(field),
        })
    }

    #[getter]
    fn t(&self) -> u32 {
        self.inner.t()
    }

    fn get(&self, a: i32, b: i32) -> f64 {
        self.inner.get(SitePos::new(a, b))
    }

    fn total(&self) -> f64 {
        self.inner.total()
    }

    fn items(&self) -> Vec<((i32, i32), f64)> {
        self.inner.iter().map(|(z, v)| ((z.a, z.b), v)).collect()
    }

    /// Largest relative deviation from the local limit over `‖z‖ ≤ t^{9/16}`.
    fn lclt_max_relative_error(&self) -> f64 {
        walk_kernel::lclt_max_relative_error(&self.inner)
    }
}

/// Particle counts per site produced by one of the engines.
#[pyclass(frozen, module = "diffront")]
struct OccupancyField {
    inner: sampler::OccupancyField,
}

#[pymethods]
impl OccupancyField {
    #[getter]
    fn t(&self) -> u32 {
        self.inner.t
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.mode.as_str()
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    fn get(&self, a: i32, b: i32) -> u32 {
        self.inner.get(SitePos::new(a, b))
    }

    fn total(&self) -> u64 {
        self.inner.total()
    }

    fn counts(&self) -> Vec<((i32, i32), u32)> {
        self.inner
            .counts()
            .iter()
            .map(|&(z, c)| ((z.a, z.b), c))
            .collect()
    }

    /// Occupied iff at least one particle, on the support box grown by `margin`.
    #[pyo3(signature = (margin = 2))]
    fn to_percolation(&self, margin: i32) -> PyResult<PercolationSample> {
        let region = Arc::new(box_region(&self.inner, margin).map_err(py_err)?);
        Ok(PercolationSample {
            inner: sampler::occupancy_to_percolation(&self.inner, region),
        })
    }

    fn on_region(&self, region: &Region) -> PercolationSample {
        PercolationSample {
            inner: sampler::occupancy_to_percolation(&self.inner, region.inner.clone()),
        }
    }

    /// Writes the binary grid format.
    fn save(&self, path: PathBuf) -> PyResult<()> {
        experiments::save_field(&self.inner, &path).map_err(py_err)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let bytes =
            std::fs::read(&path).map_err(|e| PyIOError::new_err(format!("{}: {e}", path.display())))?;
        let inner = diffront::grid::read_occupancy(&bytes[..]).map_err(py_err)?;
        Ok(OccupancyField { inner })
    }
}

/// An interface traced on dual edges.
#[pyclass(frozen, module = "diffront")]
struct Front {
    inner: FrontCurve,
}

#[pymethods]
impl Front {
    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn winding(&self) -> i32 {
        self.inner.winding
    }

    #[getter]
    fn closed(&self) -> bool {
        self.inner.closed
    }

    fn vertices(&self) -> Vec<(f64, f64)> {
        self.inner.vertices.clone()
    }

    fn radii(&self) -> Vec<f64> {
        self.inner.radii.clone()
    }

    /// `(inside, outside)` site pairs of each edge.
    fn edges(&self) -> Vec<((i32, i32), (i32, i32))> {
        self.inner
            .edges
            .iter()
            .map(|e| {
                let o = e.outside();
                ((e.inside.a, e.inside.b), (o.a, o.b))
            })
            .collect()
    }

    fn statistics<'py>(&self, py: Python<'py>, r_star: f64) -> PyResult<Bound<'py, PyDict>> {
        let s = geometry::front_statistics(&self.inner, r_star);
        let d = PyDict::new(py);
        d.set_item("length", s.length)?;
        d.set_item("max_inward", s.max_inward)?;
        d.set_item("max_outward", s.max_outward)?;
        d.set_item("mean_radius", s.mean_radius)?;
        Ok(d)
    }

    /// Box-counting dimension over the given box sizes: `(slope, stderr)`.
    fn box_dimension(&self, scales: Vec<f64>) -> PyResult<(f64, f64)> {
        let fit = geometry::box_counting_dimension(&self.inner, &scales).map_err(py_err)?;
        Ok((fit.slope, fit.stderr))
    }
}

/// Occupied/vacant status on every site of a region.
#[pyclass(frozen, module = "diffront")]
struct PercolationSample {
    inner: percolation::PercolationSample,
}

#[pymethods]
impl PercolationSample {
    /// Independent sites, each occupied with probability `p`.
    #[staticmethod]
    fn bernoulli(region: &Region, p: f64, seed: u64) -> PyResult<Self> {
        let inner = percolation::sample_bernoulli(|_| p, region.inner.clone(), seed).map_err(py_err)?;
        Ok(PercolationSample { inner })
    }

    /// Gradient strip of height `n` and width `ell`, `p(y) = 1 − y/n`.
    #[staticmethod]
    fn gradient_strip(n: u32, ell: u32, seed: u64) -> PyResult<Self> {
        let inner = percolation::strip_gradient_sample(n, ell, seed).map_err(py_err)?;
        Ok(PercolationSample { inner })
    }

    fn __len__(&self) -> usize {
        self.inner.region().len()
    }

    fn occupied(&self, a: i32, b: i32) -> Option<bool> {
        self.inner.is_occupied(SitePos::new(a, b))
    }

    fn occupied_count(&self) -> usize {
        self.inner.occupied_count()
    }

    fn status(&self) -> Vec<bool> {
        self.inner.status().to_vec()
    }

    fn region(&self) -> Region {
        Region {
            inner: self.inner.region_arc().clone(),
        }
    }

    /// Crossing of the box `[a1, a2] × [b1, b2]`; `direction` is
    /// "horizontal" or "vertical", `polarity` "occupied" or "vacant".
    #[pyo3(signature = (a1, a2, b1, b2, direction = "horizontal", polarity = "occupied"))]
    fn has_crossing(
        &self,
        a1: i32,
        a2: i32,
        b1: i32,
        b2: i32,
        direction: &str,
        polarity: &str,
    ) -> PyResult<bool> {
        let direction = match direction {
            "horizontal" => Direction::Horizontal,
            "vertical" => Direction::Vertical,
            _ => {
                return Err(PyValueError::new_err(
                    "direction must be 'horizontal' or 'vertical'",
                ))
            }
        };
        let polarity = match polarity {
            "occupied" => Polarity::Occupied,
            "vacant" => Polarity::Vacant,
            _ => return Err(PyValueError::new_err("polarity must be 'occupied' or 'vacant'")),
        };
        percolation::has_crossing(
            &self.inner,
            Parallelogram::new(a1, a2, b1, b2),
            direction,
            polarity,
        )
        .map_err(py_err)
    }

    /// Outer boundary of the filled cluster of the origin.
    #[pyo3(signature = (inner_r = 0.0, outer_r = f64::INFINITY))]
    fn front(&self, inner_r: f64, outer_r: f64) -> PyResult<Front> {
        let inner = geometry::extract_front(&self.inner, inner_r, outer_r).map_err(py_err)?;
        Ok(Front { inner })
    }

    /// Interface of a gradient strip: `(front, max_deviation, unique)`.
    fn strip_front(&self) -> PyResult<(Front, f64, bool)> {
        let s = percolation::strip_front(&self.inner).map_err(py_err)?;
        Ok((Front { inner: s.curve }, s.max_deviation, s.unique))
    }

    /// Cluster count and largest diameter.
    fn clusters(&self) -> (usize, f64) {
        let report = geometry::connected_clusters(&self.inner);
        (report.count(), report.max_diameter())
    }

    /// "dilute" or "dense" against the threshold `c·ln n`.
    #[pyo3(signature = (n, c = diffront::constants::DILUTE_DIAMETER_FACTOR))]
    fn phase(&self, n: f64, c: f64) -> PyResult<&'static str> {
        let report = geometry::classify_phase(n, &self.inner, c).map_err(py_err)?;
        Ok(match report.phase {
            geometry::Phase::Dilute => "dilute",
            geometry::Phase::Dense => "dense",
        })
    }
}

#[pyfunction]
fn simulate_particles(n: u64, times: Vec<u32>, seed: u64) -> PyResult<Vec<OccupancyField>> {
    let fields = sampler::simulate_particles(n, &times, seed).map_err(py_err)?;
    Ok(fields.into_iter().map(|inner| OccupancyField { inner }).collect())
}

#[pyfunction]
fn simulate_source(mu: f64, times: Vec<u32>, seed: u64) -> PyResult<Vec<OccupancyField>> {
    let fields = sampler::simulate_source(mu, &times, seed).map_err(py_err)?;
    Ok(fields.into_iter().map(|inner| OccupancyField { inner }).collect())
}

#[pyfunction]
#[pyo3(signature = (n, t, region, seed, kernel = "lclt"))]
fn sample_poisson_field(
    n: u64,
    t: u32,
    region: &Region,
    seed: u64,
    kernel: &str,
) -> PyResult<OccupancyField> {
    let inner =
        sampler::sample_poisson_field(n, t, &region.inner, kernel_mode(kernel)?, seed).map_err(py_err)?;
    Ok(OccupancyField { inner })
}

#[pyfunction]
fn radial_profile(n: f64, t: f64, r: f64) -> f64 {
    occupation::radial_profile(n, t, r)
}

#[pyfunction]
fn critical_radius(n: f64, t: f64) -> Option<f64> {
    occupation::critical_radius(n, t)
}

#[pyfunction]
fn source_profile(mu: f64, t: f64, r: f64) -> PyResult<f64> {
    occupation::source_profile(mu, t, r).map_err(py_err)
}

#[pyfunction]
fn source_critical_radius(mu: f64, t: f64) -> PyResult<f64> {
    occupation::source_critical_radius(mu, t).map_err(py_err)
}

#[pyfunction]
fn lambda_constants() -> (f64, f64) {
    occupation::lambda_constants()
}

#[pyfunction]
fn exp_integral(x: f64) -> PyResult<f64> {
    walk_kernel::exp_integral(x).map_err(py_err)
}

#[pyfunction]
fn lclt_density(t: u32, r: f64) -> PyResult<f64> {
    walk_kernel::lclt_density(t, r).map_err(py_err)
}

/// Characteristic length `L_ε(p)`, or `None` at `p = 1/2`.
#[pyfunction]
#[pyo3(signature = (p, epsilon = occupation::DEFAULT_EPSILON, samples_per_size = 1000, seed = 0))]
fn characteristic_length(p: f64, epsilon: f64, samples_per_size: u32, seed: u64) -> PyResult<Option<u32>> {
    let est =
        percolation::estimate_characteristic_length(p, epsilon, samples_per_size, seed).map_err(py_err)?;
    Ok(est.length)
}

#[pyfunction]
fn constants(py: Python<'_>) -> PyResult<Bound<'_, PyDict>> {
    let d = PyDict::new(py);
    let value = serde_json::to_value(Constants::current()).expect("constants serialize");
    for (k, v) in value.as_object().expect("a struct") {
        match v.as_u64() {
            Some(u) => d.set_item(k, u)?,
            None => d.set_item(k, v.as_f64())?,
        }
    }
    Ok(d)
}

/// Runs an experiment from TOML text; returns the written paths.
#[pyfunction]
#[pyo3(signature = (config_toml, out = None, json = false))]
fn run_experiment(
    py: Python<'_>,
    config_toml: &str,
    out: Option<PathBuf>,
    json: bool,
) -> PyResult<Vec<PathBuf>> {
    let mut cfg = ExperimentConfig::from_toml(config_toml).map_err(py_err)?;
    if let Some(out) = out {
        cfg.out = out;
    }
    let format = if json {
        OutputFormat::Json
    } else {
        OutputFormat::Csv
    };
    py.detach(|| experiments::run_experiment(&cfg, format))
        .map_err(py_err)
}

#[pymodule]
#[pyo3(name = "diffront")]
fn diffront_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Region>()?;
    m.add_class::<WalkField>()?;
    m.add_class::<OccupancyField>()?;
    m.add_class::<PercolationSample>()?;
    m.add_class::<Front>()?;
    m.add_function(wrap_pyfunction!(simulate_particles, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_source, m)?)?;
    m.add_function(wrap_pyfunction!(sample_poisson_field, m)?)?;
    m.add_function(wrap_pyfunction!(radial_profile, m)?)?;
    m.add_function(wrap_pyfunction!(critical_radius, m)?)?;
    m.add_function(wrap_pyfunction!(source_profile, m)?)?;
    m.add_function(wrap_pyfunction!(source_critical_radius, m)?)?;
    m.add_function(wrap_pyfunction!(lambda_constants, m)?)?;
    m.add_function(wrap_pyfunction!(exp_integral, m)?)?;
    m.add_function(wrap_pyfunction!(lclt_density, m)?)?;
    m.add_function(wrap_pyfunction!(characteristic_length, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
