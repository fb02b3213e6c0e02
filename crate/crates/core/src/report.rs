//! Result containers shared by the estimators and the CLI. Serialization
//! uses fixed field order and sorted diagnostic keys so reports are byte
//! stable across runs and thread counts.

use crate::circle::CirclePoint;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Scalar estimate with its provenance: every report carries enough to
/// reproduce the run bit for bit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateReport {
    pub value: f64,
    pub stderr: f64,
    pub n_steps: usize,
    pub n_samples: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Sorted key/value pairs: convergence flags, drift checks, counts.
    pub diagnostics: BTreeMap<String, String>,
}

impl EstimateReport {
    pub fn new(value: f64, stderr: f64, n_steps: usize, n_samples: usize, seed: u64) -> Self {
        EstimateReport {
            value,
            stderr,
            n_steps,
            n_samples,
            burn_in: 0,
            seed,
            diagnostics: BTreeMap::new(),
        }
    }

    pub fn with_diag(mut self, key: &str, value: impl std::fmt::Display) -> Self {
        self.diagnostics.insert(key.to_string(), value.to_string());
        self
    }
}

/// A random point estimated from several probe orbits: the circular mean of
/// the probe endpoints plus their largest pairwise distance. A small spread
/// is the convergence certificate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct PointEstimate {
    pub point: CirclePoint,
    /// Max pairwise distance between probe endpoints.
    pub spread: f64,
    pub n_steps: usize,
    pub probes: usize,
}

/// Maximizer set of the n-step derivative over a grid, with golden-section
/// refinement. `points[0]` is the refined best location; the rest are grid
/// points within one nat of the maximum. `degenerate` flags a near-constant
/// objective whose maximizer set covers much of the circle, in which case
/// the points carry no information.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ArgmaxSet {
    pub points: Vec<CirclePoint>,
    /// Objective value at `points[0]` (log of the n-step derivative).
    pub attained_value: f64,
    /// Max pairwise distance within `points`.
    pub diameter: f64,
    pub degenerate: bool,
}

impl ArgmaxSet {
    /// The refined maximizer.
    pub fn point(&self) -> CirclePoint {
        self.points[0]
    }
}

/// Mean and standard error of a sample of scalars.
pub(crate) fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
