//! Empirical measures on the circle: raw sorted samples with exact ball and
//! arc masses. No histograms or kernels anywhere; every mass query counts
//! samples, so telescoping identities hold to floating point.

use crate::circle::{Arc, CirclePoint};

/// Sorted sample cloud with total mass 1.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    samples: Vec<f64>,
}

impl EmpiricalMeasure {
    pub fn from_points(points: Vec<CirclePoint>) -> Self {
        let mut samples: Vec<f64> = points.into_iter().map(|p| p.value()).collect();
        samples.sort_unstable_by(f64::total_cmp);
        assert!(!samples.is_empty(), "empirical measure needs at least one sample");
        EmpiricalMeasure { samples }
    }

    pub fn from_values(values: Vec<f64>) -> Self {
        Self::from_points(values.into_iter().map(CirclePoint::new).collect())
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Sorted sample values in [0, 1).
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Draws the k-th sample index of a deterministic resampling stream.
    pub fn sample_at(&self, rng: &mut crate::rng::DetRng) -> CirclePoint {
        CirclePoint::new(self.samples[rng.index(self.samples.len())])
    }

    /// Number of samples in the closed interval [lo, hi] of [0, 1) values.
    fn count_linear(&self, lo: f64, hi: f64) -> usize {
        let a = self.samples.partition_point(|&s| s < lo);
        let b = self.samples.partition_point(|&s| s <= hi);
        b - a
    }

    /// Number of samples in a closed arc.
    pub fn arc_count(&self, arc: Arc) -> usize {
        let (lo, hi) = (arc.start.value(), arc.end.value());
        if lo <= hi {
            self.count_linear(lo, hi)
        } else {
            self.count_linear(lo, 1.0) + self.count_linear(0.0, hi)
        }
    }

    /// Mass of a closed arc: arc_count / n.
    pub fn arc_mass(&self, arc: Arc) -> f64 {
        self.arc_count(arc) as f64 / self.samples.len() as f64
    }

    /// Mass of the closed ball of radius r; exact sample count, total mass 1
    /// once 2r covers the circle.
    pub fn ball_mass(&self, center: CirclePoint, r: f64) -> f64 {
        assert!(r >= 0.0);
        if r >= 0.5 {
            return 1.0;
        }
        self.arc_mass(Arc::ball(center, r))
    }

    /// Largest ball mass over all samples at the given radius; a cheap atom
    /// detector (mass near 1 in a tiny ball means a Dirac component).
    pub fn max_ball_mass(&self, r: f64) -> f64 {
        let mut worst = 0.0f64;
        for &s in &self.samples {
            worst = worst.max(self.ball_mass(CirclePoint::new(s), r));
        }
        worst
    }

    /// Smallest radius whose closed ball around x holds at least `count`
    /// samples, located by bisection to 1e-12.
    pub fn radius_for_count(&self, x: CirclePoint, count: usize) -> f64 {
        let count = count.min(self.samples.len());
        let (mut lo, mut hi) = (0.0f64, 0.5f64);
        for _ in 0..50 {
            let mid = 0.5 * (lo + hi);
            if self.arc_count(Arc::ball(x, mid.min(0.499_999_999_999))) >= count {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }
}
