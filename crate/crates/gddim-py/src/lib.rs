//! Python bindings for the gddim toolkit. The surface mirrors the Rust API
//! closely: families and schedules are small wrapper classes, sampling and
//! metrics are module functions returning plain lists.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use rand::SeedableRng;

use gddim::sampler::{sample, MomentSource, SampleMode};
use gddim::{AtomicDataDistribution, Checkpoint, Error, Schedule, ScheduleKind};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Numerical(_) => PyRuntimeError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A standardized location-scale noise family.
#[pyclass(name = "Family", from_py_object)]
#[derive(Clone)]
struct PyFamily {
    inner: gddim::Family,
}

#[pymethods]
impl PyFamily {
    /// Parse a family tag: gaussian | laplace | student_t:<df> | gg:<beta> | uniform.
    #[new]
    fn new(tag: &str) -> PyResult<Self> {
        Ok(PyFamily { inner: gddim::Family::parse(tag).map_err(to_py)? })
    }

    fn tag(&self) -> String {
        self.inner.tag()
    }

    /// Draw n standardized (mean 0, variance 1) samples.
    fn sample_standard(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = gddim::family::Rng::seed_from_u64(seed);
        self.inner.sample_standard(&mut rng, n)
    }

    /// Log-density of the standardized member at z.
    fn log_pdf(&self, z: f64) -> f64 {
        self.inner.log_pdf(z)
    }

    /// Map (mean, variance) to (loc, scale).
    fn moments_to_locscale(&self, mean: f64, variance: f64) -> PyResult<(f64, f64)> {
        let p = self.inner.moments_to_locscale(mean, variance).map_err(to_py)?;
        Ok((p.loc, p.scale))
    }

    /// Map (loc, scale) to (mean, variance).
    fn locscale_to_moments(&self, loc: f64, scale: f64) -> (f64, f64) {
        self.inner.locscale_to_moments(gddim::LocScale { loc, scale })
    }

    fn __repr__(&self) -> String {
        format!("Family('{}')", self.inner.tag())
    }
}

/// A forward-corruption schedule: alpha_bar over t = 0..=T.
#[pyclass(name = "Schedule")]
struct PySchedule {
    inner: Schedule,
}

#[pymethods]
impl PySchedule {
    /// kind is "linear" or "cosine".
    #[new]
    fn new(kind: &str, t_max: usize) -> PyResult<Self> {
        let kind = ScheduleKind::parse(kind).map_err(to_py)?;
        Ok(PySchedule { inner: Schedule::build(kind, t_max).map_err(to_py)? })
    }

    fn t_max(&self) -> usize {
        self.inner.t_max()
    }

    fn alpha_bar(&self, t: usize) -> f64 {
        self.inner.alpha_bar(t)
    }

    /// Data coefficient f(t) = sqrt(alpha_bar_t).
    fn f(&self, t: usize) -> f64 {
        self.inner.f(t)
    }

    /// Noise coefficient g(t) = sqrt(1 - alpha_bar_t).
    fn g(&self, t: usize) -> f64 {
        self.inner.g(t)
    }

    /// Reverse-jump coefficients (f_bar, g_bar) for t -> s, s < t.
    fn coeffs(&self, t: usize, s: usize) -> PyResult<(f64, f64)> {
        let c = self.inner.coeffs(t, s).map_err(to_py)?;
        Ok((c.f_bar, c.g_bar))
    }

    fn __repr__(&self) -> String {
        format!("Schedule('{}', T={})", self.inner.kind().tag(), self.inner.t_max())
    }
}

/// Oracle-driven reverse sampling from a finite-atom data prior.
/// atoms is flattened row-major with `dim` coordinates per atom.
/// Returns a flattened (n, dim) list of samples.
#[pyfunction]
#[pyo3(signature = (atoms, dim, weights, family, schedule, t_max, n, steps, seed, mode="mean_var"))]
#[allow(clippy::too_many_arguments)]
fn oracle_sample(
    atoms: Vec<f64>,
    dim: usize,
    weights: Vec<f64>,
    family: &PyFamily,
    schedule: &str,
    t_max: usize,
    n: usize,
    steps: usize,
    seed: u64,
    mode: &str,
) -> PyResult<Vec<f64>> {
    let dist = AtomicDataDistribution::new(atoms, dim, weights).map_err(to_py)?;
    let kind = ScheduleKind::parse(schedule).map_err(to_py)?;
    let sched = Schedule::build(kind, t_max).map_err(to_py)?;
    let mode = SampleMode::parse(mode).map_err(to_py)?;
    let src = MomentSource::Oracle(&dist);
    let batch = sample(n, dim, &sched, &family.inner, &src, mode, steps, seed).map_err(to_py)?;
    Ok(batch.points)
}

/// Reverse sampling from a trained checkpoint file. Returns (samples, dim)
/// with samples flattened row-major.
#[pyfunction]
#[pyo3(signature = (path, n, steps, seed, mode="mean_var"))]
fn checkpoint_sample(
    path: &str,
    n: usize,
    steps: usize,
    seed: u64,
    mode: &str,
) -> PyResult<(Vec<f64>, usize)> {
    let ckpt = Checkpoint::load(std::path::Path::new(path)).map_err(to_py)?;
    let sched = Schedule::build(ckpt.schedule_kind, ckpt.t_max).map_err(to_py)?;
    let mode = SampleMode::parse(mode).map_err(to_py)?;
    let src = MomentSource::Net(&ckpt.net);
    let d = ckpt.net.config().dim;
    let batch = sample(n, d, &sched, &ckpt.family, &src, mode, steps, seed).map_err(to_py)?;
    Ok((batch.points, d))
}

/// Sliced Wasserstein-2 distance between flattened point clouds of
/// dimension d.
#[pyfunction]
fn sliced_wasserstein(
    a: Vec<f64>,
    b: Vec<f64>,
    d: usize,
    n_projections: usize,
    seed: u64,
) -> PyResult<f64> {
    gddim::metrics::sliced_wasserstein(&a, &b, d, n_projections, seed).map_err(to_py)
}

/// Energy distance (V-statistic) between flattened point clouds.
#[pyfunction]
fn energy_distance(a: Vec<f64>, b: Vec<f64>, d: usize) -> PyResult<f64> {
    gddim::metrics::energy_distance(&a, &b, d).map_err(to_py)
}

/// Run the fast invariant suite; returns a list of (name, passed, detail).
#[pyfunction]
fn selftest() -> Vec<(String, bool, String)> {
    let (checks, _) = gddim::selftest::selftest();
    checks.into_iter().map(|c| (c.name.to_string(), c.passed, c.detail)).collect()
}

#[pymodule]
fn gddim_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFamily>()?;
    m.add_class::<PySchedule>()?;
    m.add_function(wrap_pyfunction!(oracle_sample, m)?)?;
    m.add_function(wrap_pyfunction!(checkpoint_sample, m)?)?;
    m.add_function(wrap_pyfunction!(sliced_wasserstein, m)?)?;
    m.add_function(wrap_pyfunction!(energy_distance, m)?)?;
    m.add_function(wrap_pyfunction!(selftest, m)?)?;
    Ok(())
}
