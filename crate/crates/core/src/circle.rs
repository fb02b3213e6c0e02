//! Points and closed arcs on S^1 = R/Z.
//!
//! A point is stored as its representative in [0, 1). An arc is the closed,
//! positively oriented interval from `start` to `end`; the pair (start, end)
//! is ordered, so [0.9, 0.1] is the short arc through 0. A degenerate arc
//! with start == end is the single point, never the full circle.

use serde::{Deserialize, Serialize};

/// A point of R/Z, normalized to [0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CirclePoint {
    value: f64,
}

impl CirclePoint {
    /// Reduces any finite real mod 1.
    #[inline]
    pub fn new(r: f64) -> Self {
        debug_assert!(r.is_finite(), "circle point from non-finite {r}");
        let mut v = r - r.floor();
        // r - floor(r) can round up to exactly 1.0 for tiny negative r.
        if v >= 1.0 {
            v = 0.0;
        }
        CirclePoint { value: v }
    }

    #[inline]
    pub fn value(self) -> f64 {
        self.value
    }

    /// Translation by t (mod 1).
    #[inline]
    pub fn add(self, t: f64) -> Self {
        CirclePoint::new(self.value + t)
    }

    /// Arc-length distance, the shorter way around; always ≤ 1/2.
    #[inline]
    pub fn dist(self, other: CirclePoint) -> f64 {
        let d = (self.value - other.value).abs();
        d.min(1.0 - d)
    }

    /// Signed representative of `self - other` in [-1/2, 1/2).
    #[inline]
    pub fn signed_diff(self, other: CirclePoint) -> f64 {
        let mut d = self.value - other.value;
        if d < -0.5 {
            d += 1.0;
        } else if d >= 0.5 {
            d -= 1.0;
        }
        d
    }
}

impl From<f64> for CirclePoint {
    fn from(r: f64) -> Self {
        CirclePoint::new(r)
    }
}

/// Circular mean: direction of the mean resultant vector of the angles
/// 2*pi*x. Undefined (returns None) when the resultant is numerically zero.
pub fn circular_mean(points: &[CirclePoint]) -> Option<CirclePoint> {
    let tau = std::f64::consts::TAU;
    let (mut c, mut s) = (0.0, 0.0);
    for p in points {
        let a = tau * p.value();
        c += a.cos();
        s += a.sin();
    }
    if c.hypot(s) < 1e-12 * points.len() as f64 {
        return None;
    }
    Some(CirclePoint::new(s.atan2(c) / tau))
}

/// Largest pairwise distance within a finite set of circle points.
pub fn spread(points: &[CirclePoint]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            worst = worst.max(a.dist(*b));
        }
    }
    worst
}

/// Closed positively oriented arc from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Arc {
    pub start: CirclePoint,
    pub end: CirclePoint,
}

impl Arc {
    #[inline]
    pub fn new(start: CirclePoint, end: CirclePoint) -> Self {
        Arc { start, end }
    }

    /// Closed r-ball around a center, as the arc [c - r, c + r]. Requires
    /// r < 1/2 so the ball is a proper arc.
    #[inline]
    pub fn ball(center: CirclePoint, r: f64) -> Self {
        debug_assert!((0.0..0.5).contains(&r), "ball radius {r} out of range");
        Arc::new(center.add(-r), center.add(r))
    }

    /// Arc length in [0, 1); a degenerate arc has length 0, never 1.
    #[inline]
    pub fn length(self) -> f64 {
        let l = self.end.value() - self.start.value();
        if l < 0.0 {
            l + 1.0
        } else {
            l
        }
    }

    /// The closed complementary arc [end, start]. Lengths of an arc and its
    /// complement sum to 1 for non-degenerate arcs.
    #[inline]
    pub fn complement(self) -> Self {
        Arc::new(self.end, self.start)
    }

    /// Closed-arc membership; both endpoints belong to the arc.
    #[inline]
    pub fn contains(self, x: CirclePoint) -> bool {
        let t = CirclePoint::new(x.value() - self.start.value()).value();
        t <= self.length()
    }

    /// Image arc under a circle homeomorphism, given the images of the two
    /// endpoints and the orientation sign of the map. An orientation
    /// reversing map swaps which endpoint starts the image arc.
    #[inline]
    pub fn map_through(self, image_start: CirclePoint, image_end: CirclePoint, orientation: i8) -> Self {
        debug_assert!(orientation == 1 || orientation == -1);
        if orientation == 1 {
            Arc::new(image_start, image_end)
        } else {
            Arc::new(image_end, image_start)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(v: f64) -> CirclePoint {
        CirclePoint::new(v)
    }

    #[test]
    fn normalization_reduces_mod_one() {
        assert_eq!(p(1.25).value(), 0.25);
        assert_eq!(p(-0.25).value(), 0.75);
        assert_eq!(p(3.0).value(), 0.0);
        assert_eq!(p(0.0).value(), 0.0);
    }

    #[test]
    fn normalization_never_returns_one() {
        // r - floor(r) rounds to 1.0 here; must clamp to 0.
        let x = p(-1e-18);
        assert!(x.value() < 1.0);
        assert_eq!(x.value(), 0.0);
    }

    #[test]
    fn dist_matches_hand_values() {
        assert!((p(0.1).dist(p(0.9)) - 0.2).abs() < 1e-15);
        assert_eq!(p(0.3).dist(p(0.3)), 0.0);
        assert!((p(0.0).dist(p(0.5)) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn arc_contains_handles_zero_crossing() {
        let a = Arc::new(p(0.9), p(0.1));
        assert!(a.contains(p(0.0)));
        assert!(a.contains(p(0.9)));
        assert!(a.contains(p(0.1)));
        assert!(!a.contains(p(0.5)));
        let b = Arc::new(p(0.2), p(0.4));
        assert!(b.contains(p(0.3)));
        assert!(!b.contains(p(0.5)));
    }

    #[test]
    fn degenerate_arc_is_a_point() {
        let a = Arc::new(p(0.3), p(0.3));
        assert_eq!(a.length(), 0.0);
        assert!(a.contains(p(0.3)));
        assert!(!a.contains(p(0.3 + 1e-9)));
    }

    #[test]
    fn map_through_respects_orientation() {
        // Rotation by 1/2 of [0.9, 0.1].
        let a = Arc::new(p(0.9), p(0.1));
        let img = a.map_through(p(0.4), p(0.6), 1);
        assert_eq!(img, Arc::new(p(0.4), p(0.6)));
        // x -> -x reverses: [0.2, 0.4] -> [0.6, 0.8].
        let b = Arc::new(p(0.2), p(0.4));
        let img = b.map_through(p(0.8), p(0.6), -1);
        assert_eq!(img, Arc::new(p(0.6), p(0.8)));
    }

    #[test]
    fn circular_mean_of_tight_cluster() {
        let pts: Vec<CirclePoint> = [0.999, 0.001, 0.0015, 0.9985].iter().map(|&v| p(v)).collect();
        let m = circular_mean(&pts).unwrap();
        assert!(m.dist(p(0.0)) < 1e-3, "mean {:?}", m);
    }

    #[test]
    fn circular_mean_undefined_for_balanced_antipodes() {
        assert!(circular_mean(&[p(0.0), p(0.5)]).is_none());
    }

    #[test]
    fn spread_of_probe_sets() {
        assert_eq!(spread(&[p(0.2)]), 0.0);
        let s = spread(&[p(0.0), p(0.25), p(0.5)]);
        assert!((s - 0.5).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn dist_is_symmetric_bounded_and_triangular(a in -5.0..5.0f64, b in -5.0..5.0f64, c in -5.0..5.0f64) {
            let (x, y, z) = (p(a), p(b), p(c));
            prop_assert!((x.dist(y) - y.dist(x)).abs() < 1e-15);
            prop_assert!(x.dist(y) <= 0.5 + 1e-15);
            prop_assert!(x.dist(z) <= x.dist(y) + y.dist(z) + 1e-12);
        }

        #[test]
        fn arc_and_complement_lengths_sum_to_one(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            prop_assume!(a != b);
            let arc = Arc::new(p(a), p(b));
            let total = arc.length() + arc.complement().length();
            prop_assert!((total - 1.0).abs() < 1e-12, "total {total}");
        }

        #[test]
        fn normalization_is_idempotent(r in -50.0..50.0f64) {
            let once = p(r);
            let twice = p(once.value());
            prop_assert_eq!(once.value().to_bits(), twice.value().to_bits());
        }

        #[test]
        fn signed_diff_is_consistent_with_dist(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let (x, y) = (p(a), p(b));
            prop_assert!((x.signed_diff(y).abs() - x.dist(y)).abs() < 1e-15);
        }

        #[test]
        fn endpoints_always_inside_arc(a in 0.0..1.0f64, b in 0.0..1.0f64) {
            let arc = Arc::new(p(a), p(b));
            prop_assert!(arc.contains(p(a)));
            prop_assert!(arc.contains(p(b)));
        }
    }
}
