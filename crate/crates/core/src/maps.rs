//! Parametric families of circle homeomorphisms.
//!
//! * `Projective`: the action of an invertible 2x2 matrix A on the circle of
//!   directions, P^1 ≅ S^1 via x = φ/π. Derivative det A / |A v(πx)|², so a
//!   matrix and any nonzero scalar multiple act identically.
//! * `SineDiffeo`: f(x) = x + a + (b/2π) sin(2πx) with |b| < 1, an
//!   orientation preserving analytic diffeomorphism.
//! * `SineDiffeoInverse`: the inverse of a `SineDiffeo`; no closed form, so
//!   evaluation delegates to the root finder of the original.
//! * `Rotation`: x + a.
//!
//! Orientation-reversing maps enter only through `Projective` atoms with
//! negative determinant.

use crate::circle::{Arc, CirclePoint};
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// (sin πx, cos πx) with exact range reduction in x, so that the axis points
/// x = 0, 1/2 produce exact (0, ±1)/(±1, 0) pairs. Without this, orbits
/// seeded exactly on a projective fixed point drift off it.
#[inline]
pub(crate) fn sin_cos_pi(x: f64) -> (f64, f64) {
    let mut r = x - x.floor();
    if r >= 1.0 {
        r = 0.0;
    }
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 0.5 {
        (1.0, 0.0)
    } else if r < 0.5 {
        let a = PI * r;
        (a.sin(), a.cos())
    } else {
        // 1 - r is exact for r in (1/2, 1) (Sterbenz), keeping the second
        // half-turn as accurate as the first.
        let a = PI * (1.0 - r);
        (a.sin(), -a.cos())
    }
}

/// A circle homeomorphism from one of the supported families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapDescriptor {
    Projective { m11: f64, m12: f64, m21: f64, m22: f64 },
    SineDiffeo { a: f64, b: f64 },
    SineDiffeoInverse { a: f64, b: f64 },
    Rotation { a: f64 },
}

use MapDescriptor::*;

impl MapDescriptor {
    /// Projective atom from matrix entries; rejects numerically singular
    /// matrices (determinant below 1e-12 relative to the squared scale).
    pub fn projective(m11: f64, m12: f64, m21: f64, m22: f64) -> Result<Self> {
        for e in [m11, m12, m21, m22] {
            if !e.is_finite() {
                return Err(Error::InvalidDescriptor(format!("non-finite matrix entry {e}")));
            }
        }
        let det = m11 * m22 - m12 * m21;
        let scale = m11.abs().max(m12.abs()).max(m21.abs()).max(m22.abs());
        if scale == 0.0 || det.abs() <= 1e-12 * scale * scale {
            return Err(Error::InvalidDescriptor(format!("singular matrix, det = {det:.3e}")));
        }
        Ok(Projective { m11, m12, m21, m22 })
    }

    /// Projective atom from a row-major 2x2 matrix.
    pub fn projective_matrix(m: [[f64; 2]; 2]) -> Result<Self> {
        Self::projective(m[0][0], m[0][1], m[1][0], m[1][1])
    }

    /// Sine diffeomorphism; requires |b| < 1 so the derivative stays positive.
    pub fn sine_diffeo(a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidDescriptor("non-finite sine parameter".into()));
        }
        if b.abs() >= 1.0 {
            return Err(Error::InvalidDescriptor(format!("sine amplitude |b| = {} is not < 1", b.abs())));
        }
        Ok(SineDiffeo { a, b })
    }

    pub fn rotation(a: f64) -> Self {
        Rotation { a: CirclePoint::new(a).value() }
    }

    pub fn eval(&self, x: CirclePoint) -> CirclePoint {
        match *self {
            Projective { m11, m12, m21, m22 } => {
                let (s, c) = sin_cos_pi(x.value());
                let wx = m11 * c + m12 * s;
                let wy = m21 * c + m22 * s;
                CirclePoint::new(wy.atan2(wx) / PI)
            }
            SineDiffeo { a, b } => {
                let t = std::f64::consts::TAU * x.value();
                CirclePoint::new(x.value() + a + b / std::f64::consts::TAU * t.sin())
            }
            SineDiffeoInverse { a, b } => sine_inverse(a, b, x),
            Rotation { a } => x.add(a),
        }
    }

    /// Exact functional inverse of `eval` up to floating point; round-trips
    /// within ~1 ulp for the closed-form families and within the root-finder
    /// tolerance for the sine family.
    pub fn eval_inverse(&self, y: CirclePoint) -> CirclePoint {
        match *self {
            Projective { .. } => self.invert().eval(y),
            SineDiffeo { a, b } => sine_inverse(a, b, y),
            SineDiffeoInverse { a, b } => SineDiffeo { a, b }.eval(y),
            Rotation { a } => y.add(-a),
        }
    }

    /// log |f'(x)|. Finite for every family: projective derivatives never
    /// vanish, and the sine family keeps 1 + b cos(2πx) > 0.
    pub fn log_derivative(&self, x: CirclePoint) -> f64 {
        match *self {
            Projective { m11, m12, m21, m22 } => {
                let det = m11 * m22 - m12 * m21;
                let (s, c) = sin_cos_pi(x.value());
                let wx = m11 * c + m12 * s;
                let wy = m21 * c + m22 * s;
                det.abs().ln() - 2.0 * wx.hypot(wy).ln()
            }
            SineDiffeo { a: _, b } => {
                let t = std::f64::consts::TAU * x.value();
                (1.0 + b * t.cos()).ln()
            }
            SineDiffeoInverse { a, b } => {
                // (f^{-1})'(x) = 1 / f'(f^{-1}(x)).
                let pre = sine_inverse(a, b, x);
                -SineDiffeo { a, b }.log_derivative(pre)
            }
            Rotation { .. } => 0.0,
        }
    }

    /// +1 for orientation preserving, -1 for reversing (projective atoms
    /// with negative determinant).
    pub fn orientation(&self) -> i8 {
        match *self {
            Projective { m11, m12, m21, m22 } => {
                if m11 * m22 - m12 * m21 < 0.0 {
                    -1
                } else {
                    1
                }
            }
            _ => 1,
        }
    }

    /// Descriptor of the inverse map. Projective atoms invert through the
    /// adjugate (the inverse up to scale, which acts identically); the sine
    /// family flips to/from its wrapper, so double inversion is exact.
    pub fn invert(&self) -> Self {
        match *self {
            Projective { m11, m12, m21, m22 } => Projective { m11: m22, m12: -m12, m21: -m21, m22: m11 },
            SineDiffeo { a, b } => SineDiffeoInverse { a, b },
            SineDiffeoInverse { a, b } => SineDiffeo { a, b },
            Rotation { a } => Rotation { a: CirclePoint::new(-a).value() },
        }
    }

    /// Set-image of a closed arc: endpoint images, ordered by orientation.
    pub fn arc_image(&self, a: Arc) -> Arc {
        a.map_through(self.eval(a.start), self.eval(a.end), self.orientation())
    }

    /// Grid lower bound for the modulus of continuity of log f':
    /// α_f(eps) = sup { |log f'(x) - log f'(y)| : d(x, y) ≤ eps }.
    pub fn holder_modulus(&self, eps: f64, grid: usize) -> f64 {
        assert!(grid >= 2 && eps > 0.0);
        let vals: Vec<f64> = (0..grid)
            .map(|i| self.log_derivative(CirclePoint::new(i as f64 / grid as f64)))
            .collect();
        // Grid points at circular index offset ≤ k are within eps.
        let k = ((eps * grid as f64).floor() as usize).min(grid - 1);
        let w = k + 1;
        // Sliding max minus sliding min over every circular window of w
        // points, computed with monotone deques on the doubled array.
        let n = grid + w - 1;
        let at = |i: usize| vals[i % grid];
        let mut maxq: std::collections::VecDeque<usize> = Default::default();
        let mut minq: std::collections::VecDeque<usize> = Default::default();
        let mut best = 0.0f64;
        for i in 0..n {
            while maxq.front().is_some_and(|&j| j + w <= i) {
                maxq.pop_front();
            }
            while minq.front().is_some_and(|&j| j + w <= i) {
                minq.pop_front();
            }
            while maxq.back().is_some_and(|&j| at(j) <= at(i)) {
                maxq.pop_back();
            }
            while minq.back().is_some_and(|&j| at(j) >= at(i)) {
                minq.pop_back();
            }
            maxq.push_back(i);
            minq.push_back(i);
            if i + 1 >= w {
                best = best.max(at(maxq[0]) - at(minq[0]));
            }
        }
        best
    }
}

/// Inverse of the sine diffeomorphism by bisection on the monotone lift
/// g(t) = t + a + (b/2π) sin(2πt), then Newton polish. The solution lies
/// within |b|/2π < 0.16 of y - a, so the bracket below always straddles it.
fn sine_inverse(a: f64, b: f64, y: CirclePoint) -> CirclePoint {
    let tau = std::f64::consts::TAU;
    let g = |t: f64| t + a + b / tau * (tau * t).sin();
    let yv = y.value();
    let (mut lo, mut hi) = (yv - a - 0.17, yv - a + 0.17);
    debug_assert!(g(lo) < yv && g(hi) > yv);
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < yv {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut t = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = 1.0 + b * (tau * t).cos();
        t -= (g(t) - yv) / d;
    }
    // Internal bug guard: with |b| < 1 the bracketed solve cannot fail.
    assert!((g(t) - yv).abs() <= 1e-12, "sine inverse residual {:.3e}", (g(t) - yv).abs());
    CirclePoint::new(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::DetRng;

    fn p(v: f64) -> CirclePoint {
        CirclePoint::new(v)
    }

    fn diag_2_half() -> MapDescriptor {
        MapDescriptor::projective(2.0, 0.0, 0.0, 0.5).unwrap()
    }

    /// Independent route to the projective action: the fractional-linear
    /// formula in t = tan(πx). Valid away from x = 1/2.
    fn projective_by_tangent(m: [f64; 4], x: f64) -> f64 {
        let t = (PI * x).tan();
        let num = m[2] + m[3] * t;
        let den = m[0] + m[1] * t;
        let y = (num / den).atan() / PI;
        y - y.floor()
    }

    #[test]
    fn construction_rejects_singular_and_steep() {
        assert!(MapDescriptor::projective(1.0, 2.0, 2.0, 4.0).is_err());
        assert!(MapDescriptor::projective(0.0, 0.0, 0.0, 0.0).is_err());
        assert!(MapDescriptor::sine_diffeo(0.3, 1.0).is_err());
        assert!(MapDescriptor::sine_diffeo(0.3, -1.2).is_err());
        assert!(MapDescriptor::sine_diffeo(0.3, 0.999).is_ok());
    }

    #[test]
    fn identity_matrix_acts_as_identity() {
        let id = MapDescriptor::projective(1.0, 0.0, 0.0, 1.0).unwrap();
        for x in [0.0, 0.1, 0.37, 0.5, 0.9] {
            assert!(id.eval(p(x)).dist(p(x)) < 1e-15);
            assert!(id.log_derivative(p(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn diagonal_action_matches_arctangent_value() {
        // A = diag(2, 1/2) at x = 1/4 lands on atan(1/4)/π.
        let f = diag_2_half();
        let expect = 0.25f64.atan() / PI;
        assert!((f.eval(p(0.25)).value() - expect).abs() < 1e-15);
        assert!((expect - 0.077979).abs() < 1e-6);
    }

    #[test]
    fn projective_eval_agrees_with_tangent_formula() {
        let maps = [
            [2.0, 0.0, 0.0, 0.5],
            [1.25, 0.75, 0.75, 1.25],
            [0.3, -1.1, 0.7, 2.0],
            [1.0, 0.2, -0.4, -0.9],
        ];
        let mut rng = DetRng::new(41);
        for m in maps {
            let f = MapDescriptor::projective(m[0], m[1], m[2], m[3]).unwrap();
            for _ in 0..200 {
                let x = rng.next_f64();
                if (x - 0.5).abs() < 1e-3 {
                    continue;
                }
                let got = f.eval(p(x)).value();
                let want = projective_by_tangent(m, x);
                let d = p(got).dist(p(want));
                assert!(d < 1e-9, "map {m:?} x {x}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn axis_fixed_points_are_exact() {
        // Diagonal matrices fix the axes; the representation must hold them
        // exactly so repelling fixed points do not leak.
        let f = diag_2_half();
        assert_eq!(f.eval(p(0.0)).value(), 0.0);
        assert_eq!(f.eval(p(0.5)).value(), 0.5);
    }

    #[test]
    fn diagonal_log_derivative_at_fixed_points() {
        let f = diag_2_half();
        let two_log2 = 2.0 * 2.0f64.ln();
        assert!((f.log_derivative(p(0.0)) + two_log2).abs() < 1e-14);
        assert!((f.log_derivative(p(0.5)) - two_log2).abs() < 1e-14);
        assert!((f.log_derivative(p(0.0)) + 1.386294).abs() < 1e-5);
    }

    #[test]
    fn rotation_and_sine_basics() {
        let r = MapDescriptor::rotation(0.25);
        assert!((r.eval(p(0.9)).value() - 0.15).abs() < 1e-15);
        assert_eq!(r.log_derivative(p(0.3)), 0.0);

        let s = MapDescriptor::sine_diffeo(0.17, 0.5).unwrap();
        // f(0) = a exactly, f'(0) = 1 + b.
        assert!((s.eval(p(0.0)).value() - 0.17).abs() < 1e-15);
        assert!((s.log_derivative(p(0.0)) - 1.5f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn sine_inverse_round_trips() {
        let s = MapDescriptor::sine_diffeo(0.61, 0.5).unwrap();
        let mut rng = DetRng::new(5);
        for _ in 0..500 {
            let x = p(rng.next_f64());
            let y = s.eval(x);
            assert!(s.eval_inverse(y).dist(x) < 1e-13);
            // And the other composition order.
            let z = s.eval(s.eval_inverse(x));
            assert!(z.dist(x) < 1e-13);
        }
    }

    #[test]
    fn orientation_signs() {
        assert_eq!(diag_2_half().orientation(), 1);
        assert_eq!(MapDescriptor::projective(1.0, 0.0, 0.0, -1.0).unwrap().orientation(), -1);
        assert_eq!(MapDescriptor::rotation(0.3).orientation(), 1);
        assert_eq!(MapDescriptor::sine_diffeo(0.1, 0.4).unwrap().orientation(), 1);
    }

    #[test]
    fn reflection_acts_as_negation() {
        let f = MapDescriptor::projective(1.0, 0.0, 0.0, -1.0).unwrap();
        assert!(f.eval(p(0.2)).dist(p(0.8)) < 1e-15);
        let img = f.arc_image(Arc::new(p(0.2), p(0.4)));
        assert!(img.start.dist(p(0.6)) < 1e-15 && img.end.dist(p(0.8)) < 1e-15);
    }

    #[test]
    fn inversion_round_trips() {
        let maps = [
            diag_2_half(),
            MapDescriptor::projective(1.25, 0.75, 0.75, 1.25).unwrap(),
            MapDescriptor::rotation(0.3),
            MapDescriptor::sine_diffeo(0.17, 0.5).unwrap(),
        ];
        let mut rng = DetRng::new(17);
        for f in maps {
            let g = f.invert();
            let gg = g.invert();
            for _ in 0..100 {
                let x = p(rng.next_f64());
                assert!(g.eval(f.eval(x)).dist(x) < 1e-12, "{f:?}");
                assert!((g.log_derivative(f.eval(x)) + f.log_derivative(x)).abs() < 1e-10, "{f:?}");
                // Double inversion acts identically (descriptors may differ
                // by one rounding in the rotation angle).
                assert!(gg.eval(x).dist(f.eval(x)) < 1e-12, "{f:?}");
            }
        }
        // The sine wrapper flattens exactly.
        let s = MapDescriptor::sine_diffeo(0.17, 0.5).unwrap();
        assert_eq!(s.invert().invert(), s);
    }

    #[test]
    fn adjugate_of_diagonal_is_swapped_diagonal() {
        let g = diag_2_half().invert();
        assert_eq!(g, MapDescriptor::projective(0.5, 0.0, 0.0, 2.0).unwrap());
    }

    #[test]
    fn projective_scale_invariance() {
        let f = MapDescriptor::projective(1.25, 0.75, 0.75, 1.25).unwrap();
        let g = MapDescriptor::projective(5.0, 3.0, 3.0, 5.0).unwrap();
        let mut rng = DetRng::new(3);
        for _ in 0..200 {
            let x = p(rng.next_f64());
            assert_eq!(f.eval(x).value().to_bits(), g.eval(x).value().to_bits());
            assert!((f.log_derivative(x) - g.log_derivative(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn finite_difference_derivative_consistency() {
        let maps = [
            diag_2_half(),
            MapDescriptor::projective(1.25, 0.75, 0.75, 1.25).unwrap(),
            MapDescriptor::projective(1.0, 0.3, -0.2, -1.1).unwrap(),
            MapDescriptor::sine_diffeo(0.17, 0.5).unwrap(),
            MapDescriptor::sine_diffeo(0.61, 0.5).unwrap().invert(),
            MapDescriptor::rotation(0.41),
        ];
        let h = 1e-6;
        let mut rng = DetRng::new(2024);
        for f in maps {
            for _ in 0..100 {
                let x = rng.next_f64();
                let fwd = f.eval(p(x + h));
                let bwd = f.eval(p(x - h));
                let fd = fwd.signed_diff(bwd) / (2.0 * h);
                let exact = f.orientation() as f64 * f.log_derivative(p(x)).exp();
                assert!((fd - exact).abs() <= 1e-5, "{f:?} at {x}: fd {fd} exact {exact}");
            }
        }
    }

    #[test]
    fn holder_modulus_matches_bruteforce_pairs() {
        let maps = [diag_2_half(), MapDescriptor::sine_diffeo(0.17, 0.5).unwrap()];
        let grid = 2048;
        let eps = 0.25;
        for f in maps {
            let fast = f.holder_modulus(eps, grid);
            // Exhaustive scan over ordered pairs within eps.
            let vals: Vec<f64> =
                (0..grid).map(|i| f.log_derivative(p(i as f64 / grid as f64))).collect();
            let k = (eps * grid as f64).floor() as usize;
            let mut brute = 0.0f64;
            for i in 0..grid {
                for off in 1..=k {
                    brute = brute.max((vals[i] - vals[(i + off) % grid]).abs());
                }
            }
            assert!((fast - brute).abs() < 1e-3, "{f:?}: {fast} vs {brute}");
        }
    }

    #[test]
    fn holder_modulus_shrinks_with_eps_and_vanishes_for_rotations() {
        assert_eq!(MapDescriptor::rotation(0.3).holder_modulus(0.1, 512), 0.0);
        let f = MapDescriptor::sine_diffeo(0.17, 0.5).unwrap();
        let a1 = f.holder_modulus(0.2, 4096);
        let a2 = f.holder_modulus(0.05, 4096);
        let a3 = f.holder_modulus(0.01, 4096);
        assert!(a1 >= a2 && a2 >= a3 && a3 > 0.0);
    }
}
