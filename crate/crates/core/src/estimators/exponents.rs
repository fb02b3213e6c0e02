//! Derivative exponents of long compositions.
//!
//! The inf of the n-step log derivative sits on a wide plateau, so a grid
//! scan sees it directly. The sup does not: it lives on a spike of width
//! comparable to e^{-Λn} around the finite-time repeller, which no scan in
//! x can hit once n is large. The substitution w = f^n_ω(z) fixes this:
//! log|(f^n_ω)'(z)| = -log|((f^n_ω)^{-1})'(w)|, and the backward derivative
//! on the right takes its generic value on a wide plateau in w because
//! backward orbits fall onto the repelling family. Both extremes are
//! therefore grid scans of well-conditioned functions at any horizon.

use super::golden_max;
use super::points::estimate_pi;
use crate::circle::CirclePoint;
use crate::engine::{
    backward_apply_with_sum, log_pair_distance, reversed_apply, CompositionOrder, NuMeasure,
    OmegaStream,
};
use crate::error::{Error, Result};
use crate::measure::EmpiricalMeasure;
use crate::report::{mean_stderr, EstimateReport};
use crate::rng::{self, DetRng};
use rayon::prelude::*;

/// (1/n) of the chain-rule log derivative of f_n ∘ … ∘ f_1 at x.
pub fn pointwise_exponent(nu: &NuMeasure, omega: &OmegaStream, x: CirclePoint, n: usize) -> f64 {
    assert!(n >= 1);
    forward_sum(nu, omega, x, n) / n as f64
}

fn forward_sum(nu: &NuMeasure, omega: &OmegaStream, x: CirclePoint, n: usize) -> f64 {
    let mut y = x;
    let mut s = 0.0;
    for k in 1..=n as u64 {
        let f = nu.map_at(omega, k);
        s += f.log_derivative(y);
        y = f.eval(y);
    }
    s
}

/// Extremal exponents (inf, sup) of the n-step derivative, averaged over
/// independent realizations. Returned as (lambda, Lambda) reports.
pub fn extremal_exponents_kingman(
    nu: &NuMeasure,
    n: usize,
    n_samples: usize,
    grid: usize,
    seed: u64,
) -> (EstimateReport, EstimateReport) {
    assert!(grid >= 64, "grid of {grid} cannot localize the extremal cells");
    assert!(n >= 1 && n_samples >= 1);
    let per: Vec<(f64, f64)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let omega = OmegaStream::substream(seed, k);
            let inf_fwd = grid_extreme(grid, |t| forward_sum(nu, &omega, CirclePoint::new(t), n));
            let inf_back =
                grid_extreme(grid, |t| backward_apply_with_sum(nu, &omega, CirclePoint::new(t), n).1);
            // `+ 0.0` keeps the exact zero of an isometry family positive.
            (inf_fwd / n as f64, -inf_back / n as f64 + 0.0)
        })
        .collect();
    let (lams, sups): (Vec<f64>, Vec<f64>) = per.into_iter().unzip();
    let (lm, ls) = mean_stderr(&lams);
    let (sm, ss) = mean_stderr(&sups);
    (
        EstimateReport::new(lm, ls, n, n_samples, seed),
        EstimateReport::new(sm, ss, n, n_samples, seed),
    )
}

/// Smallest value of g over the grid, sharpened by golden-section descent
/// in the best cell (phrased as maximization of -g). Flat landscapes are
/// returned untouched so isometries keep their exact zero.
fn grid_extreme(grid: usize, g: impl Fn(f64) -> f64) -> f64 {
    let cells: Vec<f64> = (0..grid).map(|i| g(i as f64 / grid as f64)).collect();
    let (best, &best_val) =
        cells.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("non-empty grid");
    let hi = cells.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi - best_val <= 1e-9 {
        return best_val;
    }
    let h = 1.0 / grid as f64;
    let t0 = best as f64 / grid as f64;
    let (_, refined) = golden_max(|t| -g(t), t0 - h, t0 + h, 40);
    best_val.min(-refined)
}

/// Exponents as integrals of the one-step log derivative: lambda against
/// the attracting stationary measure, Lambda as minus the inverse-map
/// integral against the repelling one. The sign and the inverse maps on
/// the Lambda side are forced by the time-reversal that swaps the two
/// families: the repelling measure is stationary for the inverse system.
pub fn exponents_integral(
    nu: &NuMeasure,
    eta: &EmpiricalMeasure,
    eta_minus: &EmpiricalMeasure,
    mc_draws: usize,
    seed: u64,
) -> (EstimateReport, EstimateReport) {
    assert!(mc_draws >= 1);
    assert!(!eta.is_empty() && !eta_minus.is_empty());
    let lam = {
        let mut rng = DetRng::new(rng::child_seed(seed, 1));
        let terms: Vec<f64> = (0..mc_draws)
            .map(|_| {
                let x = eta.sample_at(&mut rng);
                let f = nu.atom(nu.index_for(rng.next_f64()));
                f.log_derivative(x)
            })
            .collect();
        let (m, s) = mean_stderr(&terms);
        EstimateReport::new(m, s, 0, mc_draws, seed)
    };
    let sup = {
        let mut rng = DetRng::new(rng::child_seed(seed, 2));
        let terms: Vec<f64> = (0..mc_draws)
            .map(|_| {
                let x = eta_minus.sample_at(&mut rng);
                let f = nu.atom(nu.index_for(rng.next_f64()));
                f.invert().log_derivative(x)
            })
            .collect();
        let (m, s) = mean_stderr(&terms);
        EstimateReport::new(-m + 0.0, s, 0, mc_draws, seed)
    };
    (lam, sup)
}

/// Average of (1/n) log d(f^n_ω(x), f^n_ω(y)) over realizations. Negative
/// means the pair synchronizes; the magnitude approaches the contraction
/// exponent. Distances are tracked in log space, so rates far below the
/// underflow scale of a direct distance are still exact.
pub fn sync_rate(
    nu: &NuMeasure,
    x: CirclePoint,
    y: CirclePoint,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> EstimateReport {
    assert!(x.dist(y) > 0.0, "pair must be distinct");
    assert!(n >= 1 && n_samples >= 1);
    let rates: Vec<f64> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let omega = OmegaStream::substream(seed, k);
            log_pair_distance(nu, &omega, x, y, n, CompositionOrder::Forward) / n as f64
        })
        .collect();
    let (m, s) = mean_stderr(&rates);
    EstimateReport::new(m, s, n, n_samples, seed)
}

const COLLAPSE: f64 = 1e-6;

/// Fraction of realizations in which at least one of the two arcs bounded
/// by x and y contracts below 1e-6 within n steps. Near 1 certifies the
/// one-arc collapse dichotomy; isometries give exactly 0.
pub fn arc_dichotomy(
    nu: &NuMeasure,
    x: CirclePoint,
    y: CirclePoint,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> f64 {
    assert!(x.dist(y) > 0.0, "pair must be distinct");
    let hits: usize = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let omega = OmegaStream::substream(seed, k);
            let mut a = crate::circle::Arc::new(x, y);
            let mut b = crate::circle::Arc::new(y, x);
            for step in 1..=n as u64 {
                let f = nu.map_at(&omega, step);
                a = f.arc_image(a);
                b = f.arc_image(b);
                if a.length().min(b.length()) < COLLAPSE {
                    return 1usize;
                }
            }
            0usize
        })
        .sum();
    hits as f64 / n_samples as f64
}

/// Worst-case contraction rate toward the attracting point over starts at
/// least delta away from the maximizer set of the n-step reversed
/// derivative. The reference orbit starts at the attracting point of the
/// n-shifted stream, which the reversed word carries to the attracting
/// point itself; distances to it are tracked in log space.
pub fn pi_attraction_rate(
    nu: &NuMeasure,
    omega: &OmegaStream,
    delta: f64,
    n: usize,
    grid: usize,
) -> Result<f64> {
    if !(delta > 0.0 && delta < 0.25) {
        return Err(Error::InvalidArgument(format!("delta {delta} outside (0, 1/4)")));
    }
    estimate_pi(nu, omega, n, 4, 1e-6)?;
    let x_ref = estimate_pi(nu, &omega.shifted(n as u64), n, 4, 1e-6)?.point;

    let sums: Vec<f64> = (0..grid)
        .into_par_iter()
        .map(|i| reversed_apply(nu, omega, CirclePoint::new(i as f64 / grid as f64), n).1)
        .collect();
    let top = sums.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let maximizers: Vec<CirclePoint> = (0..grid)
        .filter(|&i| top - sums[i] <= 1.0)
        .map(|i| CirclePoint::new(i as f64 / grid as f64))
        .collect();
    if maximizers.len() * 4 >= grid {
        return Err(Error::HypothesisViolation(
            "reversed derivative has no pronounced maximizer".into(),
        ));
    }

    let candidates: Vec<CirclePoint> = (0..grid)
        .map(|i| CirclePoint::new(i as f64 / grid as f64))
        .filter(|x| maximizers.iter().all(|m| x.dist(*m) >= delta) && x.dist(x_ref) > 0.0)
        .collect();
    if candidates.is_empty() {
        return Err(Error::InvalidArgument("delta excludes the whole grid".into()));
    }
    let rate = candidates
        .into_par_iter()
        .map(|x| log_pair_distance(nu, omega, x, x_ref, n, CompositionOrder::Reversed) / n as f64)
        .reduce(|| f64::NEG_INFINITY, f64::max);
    Ok(rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maps::MapDescriptor;

    fn p(v: f64) -> CirclePoint {
        CirclePoint::new(v)
    }

    fn diag_2_half() -> NuMeasure {
        NuMeasure::dirac(MapDescriptor::projective(2.0, 0.0, 0.0, 0.5).unwrap())
    }

    fn rotation_nu() -> NuMeasure {
        NuMeasure::dirac(MapDescriptor::rotation(0.2357))
    }

    const LOG4: f64 = 1.386_294_361_119_890_6;

    #[test]
    fn pointwise_exponent_off_the_repeller_is_contracting() {
        let lam = pointwise_exponent(&diag_2_half(), &OmegaStream::new(1), p(0.25), 1000);
        assert!((lam + LOG4).abs() < 0.05, "{lam}");
    }

    #[test]
    fn pointwise_exponent_at_the_repeller_is_expanding() {
        let lam = pointwise_exponent(&diag_2_half(), &OmegaStream::new(1), p(0.5), 1000);
        assert!((lam - LOG4).abs() < 1e-9, "{lam}");
    }

    #[test]
    fn isometries_have_zero_extremes_exactly() {
        let (lam, sup) = extremal_exponents_kingman(&rotation_nu(), 300, 4, 64, 5);
        assert_eq!(lam.value, 0.0);
        assert_eq!(sup.value, 0.0);
        assert_eq!(lam.stderr, 0.0);
    }

    #[test]
    fn hyperbolic_atom_extremes_are_plus_minus_log4() {
        let (lam, sup) = extremal_exponents_kingman(&diag_2_half(), 500, 4, 64, 6);
        assert!((lam.value + LOG4).abs() < 0.05, "lambda {}", lam.value);
        assert!((sup.value - LOG4).abs() < 0.05, "Lambda {}", sup.value);
    }

    #[test]
    fn sup_side_survives_horizons_beyond_underflow() {
        // At n = 4000 the sup peak has width ~e^{-5500}; only the backward
        // parameterization can see it.
        let (lam, sup) = extremal_exponents_kingman(&diag_2_half(), 4000, 2, 64, 7);
        assert!((sup.value - LOG4).abs() < 0.01, "Lambda {}", sup.value);
        assert!((lam.value + LOG4).abs() < 0.01, "lambda {}", lam.value);
    }

    #[test]
    fn integral_form_is_exact_on_point_masses() {
        let eta = EmpiricalMeasure::from_values(vec![0.0]);
        let eta_minus = EmpiricalMeasure::from_values(vec![0.5]);
        let (lam, sup) = exponents_integral(&diag_2_half(), &eta, &eta_minus, 100, 8);
        // Every draw contributes the identical term; only the final mean
        // division can wobble.
        assert!((lam.value + LOG4).abs() < 1e-14);
        assert!((sup.value - LOG4).abs() < 1e-14);
        assert!(lam.stderr < 1e-13);
        assert!(sup.stderr < 1e-13);
    }

    #[test]
    fn integral_form_is_zero_for_rotations() {
        let eta = EmpiricalMeasure::from_values((0..64).map(|i| i as f64 / 64.0).collect());
        let (lam, sup) = exponents_integral(&rotation_nu(), &eta, &eta, 500, 9);
        assert_eq!(lam.value, 0.0);
        assert_eq!(sup.value, 0.0);
    }

    #[test]
    fn sync_rate_of_contracting_atom() {
        let r = sync_rate(&diag_2_half(), p(0.3), p(0.4), 1000, 4, 10);
        assert!((r.value + LOG4).abs() < 0.05, "{}", r.value);
    }

    #[test]
    fn sync_rate_of_isometries_vanishes_with_horizon() {
        let r = sync_rate(&rotation_nu(), p(0.3), p(0.4), 2000, 4, 11);
        assert!(r.value.abs() < 0.01, "{}", r.value);
        assert!(r.value < 0.0, "log of a distance below 1 stays negative");
    }

    #[test]
    fn arcs_collapse_for_hyperbolic_atoms_but_never_for_isometries() {
        assert_eq!(arc_dichotomy(&diag_2_half(), p(0.3), p(0.7), 100, 50, 12), 1.0);
        assert_eq!(arc_dichotomy(&rotation_nu(), p(0.3), p(0.7), 100, 50, 13), 0.0);
    }

    #[test]
    fn attraction_rate_matches_uniform_contraction() {
        let rate = pi_attraction_rate(&diag_2_half(), &OmegaStream::new(14), 0.1, 300, 256).unwrap();
        assert!((rate + LOG4).abs() < 0.1, "{rate}");
    }

    #[test]
    fn attraction_rate_refuses_isometries() {
        match pi_attraction_rate(&rotation_nu(), &OmegaStream::new(15), 0.1, 200, 256) {
            Err(Error::NonConvergence { .. }) => {}
            other => panic!("expected NonConvergence, got {other:?}"),
        }
    }
}
