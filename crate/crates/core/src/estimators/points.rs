//! Locating the random attracting and repelling points.

use super::golden_max;
use crate::circle::{circular_mean, spread, CirclePoint};
use crate::engine::{backward_apply, forward_apply, reversed_apply, NuMeasure, OmegaStream};
use crate::error::{Error, Result};
use crate::report::{ArgmaxSet, PointEstimate};

/// Probe starts at (i + 1/2)/probes. The half-cell offset keeps 0 and 1/2
/// out of the start set, so families fixing the coordinate axes still see
/// only generic probes.
fn probe_starts(probes: usize) -> impl Iterator<Item = CirclePoint> {
    (0..probes).map(move |i| CirclePoint::new((i as f64 + 0.5) / probes as f64))
}

fn certify(endpoints: Vec<CirclePoint>, tol: f64, n: usize) -> Result<PointEstimate> {
    let sp = spread(&endpoints);
    if sp > tol {
        return Err(Error::NonConvergence { spread: sp, tol });
    }
    let point = circular_mean(&endpoints)
        .expect("probe endpoints within tol of each other have a resultant");
    Ok(PointEstimate { point, spread: sp, n_steps: n, probes: endpoints.len() })
}

/// Attracting point of the realization: limit of f_1 ∘ … ∘ f_n over probe
/// starts. All probes except one exceptional point land together; their
/// spread is the convergence certificate.
pub fn estimate_pi(
    nu: &NuMeasure,
    omega: &OmegaStream,
    n: usize,
    probes: usize,
    tol: f64,
) -> Result<PointEstimate> {
    if probes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 probes, got {probes}")));
    }
    let endpoints = probe_starts(probes).map(|x| reversed_apply(nu, omega, x, n).0).collect();
    certify(endpoints, tol, n)
}

/// Repelling point: limit of f_1^{-1} ∘ … ∘ f_n^{-1} over probe starts.
pub fn estimate_theta(
    nu: &NuMeasure,
    omega: &OmegaStream,
    n: usize,
    probes: usize,
    tol: f64,
) -> Result<PointEstimate> {
    if probes < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 probes, got {probes}")));
    }
    let endpoints = probe_starts(probes).map(|x| backward_apply(nu, omega, x, n)).collect();
    certify(endpoints, tol, n)
}

/// Width of the value band (nats below the maximum) that counts a grid
/// point as a near-maximizer.
const NEAR_MAX_BAND: f64 = 1.0;

/// Maximizer of the n-step derivative of f_n ∘ … ∘ f_1 over a grid,
/// sharpened by golden-section search in the best cell. Near the repelling
/// point the log derivative grows like −2 log d(x, θ_n), a unimodal spike
/// that the bracket shrinkage follows down to machine resolution; the grid
/// maximizer itself stays in the candidate set, so refinement never loses
/// to the plain grid.
pub fn estimate_theta_argmax(nu: &NuMeasure, omega: &OmegaStream, n: usize, grid: usize) -> ArgmaxSet {
    assert!(grid >= 16, "grid of {grid} cannot bracket a maximizer");
    let value = |t: f64| {
        let x = CirclePoint::new(t);
        forward_apply(nu, omega, x, n).log_deriv_sums[n]
    };
    let cells: Vec<f64> = (0..grid).map(|i| value(i as f64 / grid as f64)).collect();
    let (best, &best_val) = cells
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    let lo = cells.iter().cloned().fold(f64::INFINITY, f64::min);

    let (mut arg, mut attained) = (best as f64 / grid as f64, best_val);
    // A flat landscape (isometries) has nothing to refine and the exact
    // grid value, typically 0, should be reported untouched.
    if best_val - lo > 1e-9 {
        let h = 1.0 / grid as f64;
        let (a, v) = golden_max(value, arg - h, arg + h, 100);
        if v > attained {
            arg = a;
            attained = v;
        }
    }

    let mut points = vec![CirclePoint::new(arg)];
    for (i, &v) in cells.iter().enumerate() {
        if best_val - v <= NEAR_MAX_BAND && i != best {
            points.push(CirclePoint::new(i as f64 / grid as f64));
        }
    }
    let degenerate = points.len() * 10 >= grid;
    let diameter = spread(&points);
    ArgmaxSet { points, attained_value: attained, diameter, degenerate }
}

/// How far the estimated attracting and repelling points are from
/// satisfying their one-step transport identities, maximized over the
/// first `n_check` shifts of the stream origin. The attracting point of
/// the shifted realization is carried to the unshifted one by the first
/// map; the repelling point is carried the other way.
pub fn equivariance_residuals(
    nu: &NuMeasure,
    omega: &OmegaStream,
    n_check: usize,
    n_est: usize,
) -> Result<(f64, f64)> {
    const PROBES: usize = 4;
    const TOL: f64 = 1e-3;
    let pi: Vec<CirclePoint> = (0..=n_check as u64)
        .map(|k| Ok(estimate_pi(nu, &omega.shifted(k), n_est, PROBES, TOL)?.point))
        .collect::<Result<_>>()?;
    let th: Vec<CirclePoint> = (0..=n_check as u64)
        .map(|k| Ok(estimate_theta(nu, &omega.shifted(k), n_est, PROBES, TOL)?.point))
        .collect::<Result<_>>()?;
    let mut pi_res = 0.0f64;
    let mut theta_res = 0.0f64;
    for k in 1..=n_check {
        let first = nu.map_at(&omega.shifted(k as u64 - 1), 1);
        pi_res = pi_res.max(first.eval(pi[k]).dist(pi[k - 1]));
        theta_res = theta_res.max(first.eval(th[k - 1]).dist(th[k]));
    }
    Ok((pi_res, theta_res))
}
