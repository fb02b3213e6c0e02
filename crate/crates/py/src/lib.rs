//! Python bindings: `Map` and `System` wrap the circle maps and the driving
//! measure, and the estimators hang off `System` as methods. Circle points
//! cross the boundary as plain floats in [0, 1); estimates come back as
//! (value, stderr) pairs or small dicts.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use circle_rds::estimators::{
    arc_dichotomy, dimension_identity_residual, estimate_pi, estimate_theta, exponents_integral,
    extremal_exponents_kingman, furstenberg_entropy, local_dimension, pointwise_exponent,
    sample_stationary, suggested_entropy_radius, sync_rate,
};
use circle_rds::oracle::{top_lyapunov, MatrixAtomSet};
use circle_rds::rng::child_seed;
use circle_rds::{
    diagnostics, CirclePoint, DimensionRunConfig, EstimateReport, MapDescriptor, NuMeasure,
    OmegaStream,
};

fn to_py_err(e: circle_rds::Error) -> PyErr {
    use circle_rds::Error;
    match e {
        Error::InvalidDescriptor(_) | Error::InvalidMeasure(_) | Error::InvalidArgument(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn pair(r: &EstimateReport) -> (f64, f64) {
    (r.value, r.stderr)
}

/// One circle homeomorphism.
#[pyclass(frozen, skip_from_py_object, module = "circle_rds_py")]
#[derive(Clone)]
struct Map {
    inner: MapDescriptor,
}

#[pymethods]
impl Map {
    /// Projective action of an invertible 2x2 matrix.
    #[staticmethod]
    fn projective(m11: f64, m12: f64, m21: f64, m22: f64) -> PyResult<Self> {
        MapDescriptor::projective(m11, m12, m21, m22)
            .map(|inner| Map { inner })
            .map_err(to_py_err)
    }

    /// x + a + (b / 2 pi) sin(2 pi x), a diffeomorphism for |b| < 1.
    #[staticmethod]
    fn sine_diffeo(a: f64, b: f64) -> PyResult<Self> {
        MapDescriptor::sine_diffeo(a, b).map(|inner| Map { inner }).map_err(to_py_err)
    }

    #[staticmethod]
    fn rotation(a: f64) -> Self {
        Map { inner: MapDescriptor::rotation(a) }
    }

    fn eval(&self, x: f64) -> f64 {
        self.inner.eval(CirclePoint::new(x)).value()
    }

    fn eval_inverse(&self, y: f64) -> f64 {
        self.inner.eval_inverse(CirclePoint::new(y)).value()
    }

    fn log_derivative(&self, x: f64) -> f64 {
        self.inner.log_derivative(CirclePoint::new(x))
    }

    fn invert(&self) -> Self {
        Map { inner: self.inner.invert() }
    }

    fn __repr__(&self) -> String {
        format!("{:?}", self.inner)
    }
}

/// A finite set of maps with probabilities: the driving measure of the
/// random dynamical system.
#[pyclass(frozen, module = "circle_rds_py")]
struct System {
    inner: NuMeasure,
}

impl System {
    fn wrap(inner: NuMeasure) -> Self {
        System { inner }
    }
}

#[pymethods]
impl System {
    #[new]
    fn new(atoms: Vec<(Py<Map>, f64)>) -> PyResult<Self> {
        let pairs: Vec<(MapDescriptor, f64)> =
            atoms.iter().map(|(m, p)| (m.get().inner, *p)).collect();
        NuMeasure::new(pairs).map(System::wrap).map_err(to_py_err)
    }

    /// Equal weights over the given maps.
    #[staticmethod]
    fn uniform(maps: Vec<Py<Map>>) -> PyResult<Self> {
        NuMeasure::uniform(maps.iter().map(|m| m.get().inner).collect())
            .map(System::wrap)
            .map_err(to_py_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn atoms(&self) -> Vec<(Map, f64)> {
        self.inner.atoms().map(|&(inner, p)| (Map { inner }, p)).collect()
    }

    /// The system of inverse maps, same weights.
    fn inverse(&self) -> Self {
        System::wrap(self.inner.inverse())
    }

    /// Atom indices at positions 1..=n of the realization (seed, shift).
    #[pyo3(signature = (seed, n, shift = 0))]
    fn word(&self, seed: u64, n: u64, shift: u64) -> Vec<usize> {
        let omega = OmegaStream::new(seed).shifted(shift);
        (1..=n).map(|k| self.inner.index_at(&omega, k)).collect()
    }

    /// The random attracting point of the realization, as the common limit
    /// of reversed-word probe orbits.
    #[pyo3(signature = (seed, n = 400, probes = 4, tol = 1e-6, shift = 0))]
    fn attracting_point(&self, seed: u64, n: usize, probes: usize, tol: f64, shift: u64) -> PyResult<f64> {
        let omega = OmegaStream::new(seed).shifted(shift);
        estimate_pi(&self.inner, &omega, n, probes, tol)
            .map(|e| e.point.value())
            .map_err(to_py_err)
    }

    /// The random repelling point, as the common limit of backward-word
    /// probe orbits.
    #[pyo3(signature = (seed, n = 400, probes = 4, tol = 1e-6, shift = 0))]
    fn repelling_point(&self, seed: u64, n: usize, probes: usize, tol: f64, shift: u64) -> PyResult<f64> {
        let omega = OmegaStream::new(seed).shifted(shift);
        estimate_theta(&self.inner, &omega, n, probes, tol)
            .map(|e| e.point.value())
            .map_err(to_py_err)
    }

    /// (1/n) log of the word derivative along the forward orbit of x.
    fn pointwise_exponent(&self, seed: u64, x: f64, n: usize) -> f64 {
        pointwise_exponent(&self.inner, &OmegaStream::new(seed), CirclePoint::new(x), n)
    }

    /// Samples of the attracting-point distribution, plus the probe-check
    /// counts (checked, disagreements).
    fn stationary_sample(&self, n: usize, n_samples: usize, seed: u64) -> (Vec<f64>, usize, usize) {
        let st = sample_stationary(&self.inner, n, n_samples, seed);
        (st.measure.samples().to_vec(), st.checked, st.warnings)
    }

    /// Extremal derivative exponents ((inf, stderr), (sup, stderr)) via the
    /// subadditive route.
    #[pyo3(signature = (n, n_samples, grid = 128, seed = 0))]
    fn extremal_exponents(
        &self,
        n: usize,
        n_samples: usize,
        grid: usize,
        seed: u64,
    ) -> ((f64, f64), (f64, f64)) {
        let (lam, sup) = extremal_exponents_kingman(&self.inner, n, n_samples, grid, seed);
        (pair(&lam), pair(&sup))
    }

    /// The same exponents as one-step integrals against the attracting and
    /// repelling stationary measures.
    #[pyo3(signature = (n, n_samples, mc_draws, seed = 0))]
    fn integral_exponents(
        &self,
        n: usize,
        n_samples: usize,
        mc_draws: usize,
        seed: u64,
    ) -> ((f64, f64), (f64, f64)) {
        let eta = sample_stationary(&self.inner, n, n_samples, child_seed(seed, 1)).measure;
        let eta_minus =
            sample_stationary(&self.inner.inverse(), n, n_samples, child_seed(seed, 2)).measure;
        let (lam, sup) = exponents_integral(&self.inner, &eta, &eta_minus, mc_draws, child_seed(seed, 3));
        (pair(&lam), pair(&sup))
    }

    /// Top Lyapunov exponent of the matrix cocycle behind an all-projective
    /// system; the circle exponents of a unimodular family are +-2 times it.
    fn oracle_top_exponent(&self, n: usize, n_samples: usize, seed: u64) -> PyResult<(f64, f64)> {
        let ms = MatrixAtomSet::from_nu(&self.inner).map_err(to_py_err)?;
        Ok(pair(&top_lyapunov(&ms, n, n_samples, seed)))
    }

    /// Average exponential approach rate of a start pair, (value, stderr).
    fn sync_rate(&self, x: f64, y: f64, n: usize, n_samples: usize, seed: u64) -> (f64, f64) {
        pair(&sync_rate(&self.inner, CirclePoint::new(x), CirclePoint::new(y), n, n_samples, seed))
    }

    /// Fraction of realizations that carried one of the two arcs between x
    /// and y below the resolution floor.
    fn arc_collapse_fraction(&self, x: f64, y: f64, n: usize, n_samples: usize, seed: u64) -> f64 {
        arc_dichotomy(&self.inner, CirclePoint::new(x), CirclePoint::new(y), n, n_samples, seed)
    }

    /// Entropy of the one-step mass transport, (value, stderr). The ball
    /// radius is chosen from the sample when not given.
    #[pyo3(signature = (n, n_samples, mc_draws, seed, radius = None))]
    fn furstenberg_entropy(
        &self,
        n: usize,
        n_samples: usize,
        mc_draws: usize,
        seed: u64,
        radius: Option<f64>,
    ) -> PyResult<(f64, f64)> {
        let eta = sample_stationary(&self.inner, n, n_samples, child_seed(seed, 1)).measure;
        let r = radius.unwrap_or_else(|| suggested_entropy_radius(&eta, child_seed(seed, 2)));
        furstenberg_entropy(&self.inner, &eta, r, mc_draws, child_seed(seed, 3))
            .map(|e| pair(&e))
            .map_err(to_py_err)
    }

    /// Local dimension of the attracting stationary measure by ball-mass
    /// regression, (value, stderr).
    #[pyo3(signature = (n, n_samples, probes, seed, r_min = 1e-4, r_max = 0.05, n_radii = 12))]
    fn local_dimension(
        &self,
        n: usize,
        n_samples: usize,
        probes: usize,
        seed: u64,
        r_min: f64,
        r_max: f64,
        n_radii: usize,
    ) -> PyResult<(f64, f64)> {
        let eta = sample_stationary(&self.inner, n, n_samples, child_seed(seed, 1)).measure;
        local_dimension(&eta, probes, r_min, r_max, n_radii, child_seed(seed, 2))
            .map(|e| pair(&e))
            .map_err(to_py_err)
    }

    /// Full dimension = entropy over contraction identity run; refuses
    /// degenerate families.
    #[pyo3(signature = (n, n_samples, mc_draws, probes, seed, r_min = 1e-4, r_max = 0.05, n_radii = 12, radius = None))]
    #[allow(clippy::too_many_arguments)]
    fn dimension_identity<'py>(
        &self,
        py: Python<'py>,
        n: usize,
        n_samples: usize,
        mc_draws: usize,
        probes: usize,
        seed: u64,
        r_min: f64,
        r_max: f64,
        n_radii: usize,
        radius: Option<f64>,
    ) -> PyResult<Bound<'py, PyDict>> {
        let cfg = DimensionRunConfig {
            n,
            n_samples,
            mc_draws,
            probes,
            n_radii,
            radius,
            r_min,
            r_max,
            seed,
        };
        let id = dimension_identity_residual(&self.inner, &cfg).map_err(to_py_err)?;
        let out = PyDict::new(py);
        out.set_item("residual", id.residual)?;
        out.set_item("dimension", pair(&id.dimension))?;
        out.set_item("entropy", pair(&id.entropy))?;
        out.set_item("contraction", pair(&id.lambda))?;
        out.set_item("predicted", id.predicted)?;
        out.set_item("predicted_stderr", id.predicted_stderr)?;
        Ok(out)
    }

    /// Standing-hypothesis diagnostics: no common fixed point, proximality,
    /// synchronization.
    fn hypothesis_report<'py>(&self, py: Python<'py>, seed: u64) -> PyResult<Bound<'py, PyDict>> {
        let rep = diagnostics::hypothesis_report(&self.inner, seed);
        let out = PyDict::new(py);
        out.set_item("verdict", rep.verdict)?;
        out.set_item("common_fixed_point", rep.common_fixed_point.map(|p| p.value()))?;
        out.set_item("proximality_min_gap", rep.proximality_min_gap)?;
        out.set_item("sync_rate", rep.sync_rate)?;
        out.set_item("reasons", rep.reasons)?;
        Ok(out)
    }

    fn __repr__(&self) -> String {
        format!("System(len={})", self.inner.len())
    }
}

#[pymodule]
fn circle_rds_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("GENERATOR_ID", circle_rds::GENERATOR_ID)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add_class::<Map>()?;
    m.add_class::<System>()?;
    Ok(())
}
