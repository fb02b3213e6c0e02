//! Stationary measures and the entropy/dimension quantities built on them.

use super::exponents::exponents_integral;
use crate::circle::{Arc, CirclePoint};
use crate::diagnostics;
use crate::engine::{reversed_apply, NuMeasure, OmegaStream};
use crate::error::{Error, Result};
use crate::maps::MapDescriptor;
use crate::measure::EmpiricalMeasure;
use crate::report::{mean_stderr, EstimateReport};
use crate::rng::{self, DetRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Empirical stationary measure plus the convergence bookkeeping from the
/// sparse second-probe checks.
#[derive(Debug, Clone)]
pub struct StationarySample {
    pub measure: EmpiricalMeasure,
    /// Realizations that got a second probe.
    pub checked: usize,
    /// Second probes that disagreed with the first by more than 1e-6.
    pub warnings: usize,
}

/// Distribution of the attracting point, sampled as the n-step limit of
/// f_1 ∘ … ∘ f_n from a fixed start. Every 64th realization is re-run from
/// an unrelated start; disagreement is counted, not fatal, since a slow
/// family contaminates all estimates downstream and the count says so.
/// Both anchors sit at nothing-special values: 0 is fixed exactly by every
/// eigenbasis-aligned projective atom, and a start pinned to a repelling
/// fixed point never leaves it.
pub fn sample_stationary(nu: &NuMeasure, n: usize, n_samples: usize, seed: u64) -> StationarySample {
    assert!(n_samples >= 1);
    let start = CirclePoint::new(0.271_828_182_845_904_5);
    let probe = CirclePoint::new(0.37);
    let rows: Vec<(f64, Option<bool>)> = (0..n_samples as u64)
        .into_par_iter()
        .map(|k| {
            let omega = OmegaStream::substream(seed, k);
            let p = reversed_apply(nu, &omega, start, n).0;
            let check = (k % 64 == 0).then(|| {
                let q = reversed_apply(nu, &omega, probe, n).0;
                p.dist(q) > 1e-6
            });
            (p.value(), check)
        })
        .collect();
    let checked = rows.iter().filter(|r| r.1.is_some()).count();
    let warnings = rows.iter().filter(|r| r.1 == Some(true)).count();
    let measure = EmpiricalMeasure::from_values(rows.into_iter().map(|r| r.0).collect());
    StationarySample { measure, checked, warnings }
}

/// Entropy of the one-step mass transport: average of log of the ratio
/// η(f^{-1}B(y, r))/η(B(y, r)) for y = f(x), x ~ η, f ~ ν. The preimage
/// arc is exact (endpoint inversion plus orientation), so the only
/// approximation is the finite radius and the finite sample.
pub fn furstenberg_entropy(
    nu: &NuMeasure,
    eta: &EmpiricalMeasure,
    radius: f64,
    mc_draws: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if !(radius > 0.0 && radius < 0.5) {
        return Err(Error::InvalidArgument(format!("radius {radius} outside (0, 1/2)")));
    }
    assert!(mc_draws >= 1 && !eta.is_empty());
    let mut rng = DetRng::new(rng::child_seed(seed, 3));
    let mut terms = Vec::with_capacity(mc_draws);
    let mut counts = Vec::with_capacity(mc_draws);
    let mut zero_den = 0usize;
    let mut zero_num = 0usize;
    for _ in 0..mc_draws {
        let x = eta.sample_at(&mut rng);
        let f = nu.atom(nu.index_for(rng.next_f64()));
        let y = f.eval(x);
        let ball = Arc::ball(y, radius);
        // The conditioned atom always lies in f^{-1}(ball) and sometimes in
        // the ball itself; counting it tilts every ratio up by ~1/count,
        // which drowns small entropies. Both counts leave it out.
        let den = eta.arc_count(ball) - usize::from(ball.contains(x));
        counts.push(den);
        if den == 0 {
            zero_den += 1;
            continue;
        }
        let num = eta.arc_count(f.invert().arc_image(ball)) - 1;
        if num == 0 {
            zero_num += 1;
            continue;
        }
        terms.push((num as f64 / den as f64).ln());
    }
    if zero_den * 100 > mc_draws {
        return Err(Error::DegenerateBall(format!(
            "{zero_den} of {mc_draws} balls of radius {radius} hold no sample"
        )));
    }
    counts.sort_unstable();
    let (m, s) = mean_stderr(&terms);
    Ok(EstimateReport::new(m, s, 0, mc_draws, seed)
        .with_diag("radius", radius)
        .with_diag("median_ball_count", counts[counts.len() / 2])
        .with_diag("zero_denominator", zero_den)
        .with_diag("zero_numerator", zero_num))
}

/// Probe-averaged slope of log ball mass against log radius over a
/// geometric radius schedule; the empirical local dimension. The spread of
/// per-probe slopes doubles as the exact-dimensionality diagnostic.
pub fn local_dimension(
    eta: &EmpiricalMeasure,
    probes: usize,
    r_min: f64,
    r_max: f64,
    n_radii: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if !(r_min > 0.0 && r_min < r_max && r_max < 0.5) {
        return Err(Error::InvalidArgument(format!("bad radius range [{r_min}, {r_max}]")));
    }
    if n_radii < 3 {
        return Err(Error::InvalidArgument(format!("{n_radii} radii cannot carry a regression")));
    }
    assert!(probes >= 1 && !eta.is_empty());
    let ratio = r_max / r_min;
    let radii: Vec<f64> =
        (0..n_radii).map(|i| r_min * ratio.powf(i as f64 / (n_radii - 1) as f64)).collect();
    let mut rng = DetRng::new(rng::child_seed(seed, 4));
    let mut slopes = Vec::with_capacity(probes);
    let mut skipped = 0usize;
    for _ in 0..probes {
        let x = eta.sample_at(&mut rng);
        let pts: Vec<(f64, f64)> = radii
            .iter()
            .filter_map(|&r| {
                // Probe centers are themselves atoms; the center is left out
                // of the count so tiny balls are not pinned at mass 1/N.
                let neighbors = eta.arc_count(Arc::ball(x, r)) - 1;
                (neighbors > 0)
                    .then(|| (r.ln(), (neighbors as f64 / eta.len() as f64).ln()))
            })
            .collect();
        if pts.len() < 3 {
            skipped += 1;
            continue;
        }
        slopes.push(least_squares_slope(&pts));
    }
    if slopes.len() * 2 < probes {
        return Err(Error::DegenerateBall(format!(
            "{skipped} of {probes} probes had fewer than 3 radii with mass"
        )));
    }
    let spread = slopes.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    let (m, s) = mean_stderr(&slopes);
    Ok(EstimateReport::new(m, s, 0, slopes.len(), seed)
        .with_diag("slope_spread", spread)
        .with_diag("skipped_probes", skipped))
}

fn least_squares_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let num: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let den: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    num / den
}

/// Parameters of the full dimension-identity pipeline.
#[derive(Debug, Clone)]
pub struct DimensionRunConfig {
    /// Composition length for stationary sampling.
    pub n: usize,
    /// Stationary sample count (for both measures).
    pub n_samples: usize,
    /// Monte-Carlo draws for the exponent and entropy integrals.
    pub mc_draws: usize,
    /// Probe count for the dimension regression.
    pub probes: usize,
    pub n_radii: usize,
    /// Ball radius for the entropy estimator; chosen from the sample when
    /// absent (median radius holding about 100 points).
    pub radius: Option<f64>,
    pub r_min: f64,
    pub r_max: f64,
    pub seed: u64,
}

impl Default for DimensionRunConfig {
    fn default() -> Self {
        DimensionRunConfig {
            n: 400,
            n_samples: 100_000,
            mc_draws: 200_000,
            probes: 4_000,
            n_radii: 12,
            radius: None,
            r_min: 1e-4,
            r_max: 0.05,
            seed: 0,
        }
    }
}

/// Everything the identity check produced, so a caller can see which side
/// moved. `residual` is |dimension − (−entropy/lambda)|.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DimensionIdentity {
    pub residual: f64,
    pub dimension: EstimateReport,
    pub entropy: EstimateReport,
    pub lambda: EstimateReport,
    /// −entropy/lambda.
    pub predicted: f64,
    /// First-order error of `predicted` from the two sub-estimates.
    pub predicted_stderr: f64,
}

/// Runs the full pipeline behind dim η = −h_F/λ and reports the residual.
/// Refuses families that fail the hypothesis checks; the identity means
/// nothing for them and a small residual would be an accident.
pub fn dimension_identity_residual(nu: &NuMeasure, cfg: &DimensionRunConfig) -> Result<DimensionIdentity> {
    let hyp = diagnostics::hypothesis_report(nu, rng::child_seed(cfg.seed, 10));
    if !hyp.verdict {
        return Err(Error::HypothesisViolation(hyp.reasons.join("; ")));
    }
    let eta = sample_stationary(nu, cfg.n, cfg.n_samples, rng::child_seed(cfg.seed, 11)).measure;
    let eta_minus =
        sample_stationary(&nu.inverse(), cfg.n, cfg.n_samples, rng::child_seed(cfg.seed, 12)).measure;
    let (lambda, _) = exponents_integral(nu, &eta, &eta_minus, cfg.mc_draws, rng::child_seed(cfg.seed, 13));
    if lambda.value >= 0.0 {
        return Err(Error::HypothesisViolation(format!(
            "contraction exponent {} is not negative",
            lambda.value
        )));
    }
    let radius = cfg.radius.unwrap_or_else(|| suggested_entropy_radius(&eta, rng::child_seed(cfg.seed, 16)));
    let entropy = furstenberg_entropy(nu, &eta, radius, cfg.mc_draws, rng::child_seed(cfg.seed, 14))?;
    let dimension =
        local_dimension(&eta, cfg.probes, cfg.r_min, cfg.r_max, cfg.n_radii, rng::child_seed(cfg.seed, 15))?;
    let predicted = -entropy.value / lambda.value;
    let predicted_stderr = (entropy.stderr / lambda.value).abs()
        + (entropy.value * lambda.stderr / (lambda.value * lambda.value)).abs();
    Ok(DimensionIdentity {
        residual: (dimension.value - predicted).abs(),
        dimension,
        entropy,
        lambda,
        predicted,
        predicted_stderr,
    })
}

/// Median over probes of the radius whose ball captures about 100 samples;
/// the default entropy radius when none is configured.
pub fn suggested_entropy_radius(eta: &EmpiricalMeasure, seed: u64) -> f64 {
    let mut rng = DetRng::new(seed);
    let target = 100.min(eta.len());
    let mut radii: Vec<f64> = (0..128)
        .map(|_| {
            let x = eta.sample_at(&mut rng);
            eta.radius_for_count(x, target)
        })
        .collect();
    radii.sort_unstable_by(f64::total_cmp);
    radii[radii.len() / 2]
}

/// Both sides of the arc mass chain identity
///   −log η(I_0) = −log η(I_N) + Σ_n [log η(I_n) − log η(I_{n−1})],
/// with I_n the exact preimage of I_0 under the first n maps of the
/// reversed word. Algebra guarantees cancellation for any measure and any
/// maps; the returned difference measures only floating-point noise, and
/// anything larger is an arc-preimage bug.
pub fn telescoping_residual(eta: &EmpiricalMeasure, maps: &[MapDescriptor], i0: Arc) -> Result<f64> {
    let mut arcs = vec![i0];
    for f in maps {
        let prev = *arcs.last().expect("seeded");
        arcs.push(f.invert().arc_image(prev));
    }
    let log_masses: Vec<f64> = arcs
        .iter()
        .enumerate()
        .map(|(i, &a)| {
            let mass = eta.arc_mass(a);
            if mass == 0.0 {
                return Err(Error::DegenerateBall(format!("arc {i} holds no sample")));
            }
            Ok(mass.ln())
        })
        .collect::<Result<_>>()?;
    let n = maps.len();
    let lhs = -log_masses[0];
    let mut rhs = -log_masses[n];
    for k in 1..=n {
        rhs += log_masses[k] - log_masses[k - 1];
    }
    Ok((lhs - rhs).abs())
}
