//! Release gate: a fixed matrix of end-to-end checks over pinned map
//! families, run at full budget with hard-coded seeds and tolerances.
//!
//! Each criterion owns one falsifiable claim about the toolkit: estimator
//! against independent oracle, estimator against estimator, exact algebraic
//! identity, or a negative control that must be refused. The matrix is what
//! `circle-rds verify` runs and what the acceptance test asserts; tolerances
//! live here and nowhere else.

use crate::circle::{Arc, CirclePoint};
use crate::diagnostics::hypothesis_report;
use crate::engine::{backward_apply_with_sum, reversed_apply, NuMeasure, OmegaStream};
use crate::error::Error;
use crate::estimators::{
    arc_dichotomy, dimension_identity_residual, equivariance_residuals, estimate_pi,
    estimate_theta, estimate_theta_argmax, extremal_exponents_kingman, furstenberg_entropy,
    local_dimension, pi_attraction_rate, pointwise_exponent, sample_stationary,
    telescoping_residual, DimensionRunConfig,
};
use crate::maps::MapDescriptor;
use crate::measure::EmpiricalMeasure;
use crate::oracle::{oseledets_directions, projective_consistency, MatrixAtomSet};
use crate::report::mean_stderr;
use crate::rng::{child_seed, DetRng};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::time::Instant;

/// Everything in the matrix derives its randomness from this one seed.
/// Root seed of the verification matrix. Criteria derive per-criterion
/// seeds from it, so the whole matrix is one pinned experiment; runner
/// seeds do not apply to it.
pub const MATRIX_SEED: u64 = 0xCE5A_11AD;

/// Outcome of one criterion. `skipped` marks a criterion whose input family
/// is absent from the run; it never counts as a failure but is always
/// reported. `negative_control` marks the criterion whose pass condition is
/// that the system under test refuses or fails as predicted.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: usize,
    pub name: String,
    pub passed: bool,
    pub skipped: bool,
    pub negative_control: bool,
    pub details: String,
}

impl CriterionResult {
    fn ok(id: usize, name: &str, details: String) -> Self {
        CriterionResult {
            id,
            name: name.to_string(),
            passed: true,
            skipped: false,
            negative_control: false,
            details,
        }
    }

    fn fail(id: usize, name: &str, details: String) -> Self {
        CriterionResult { passed: false, ..Self::ok(id, name, details) }
    }

    fn skip(id: usize, name: &str, reason: &str) -> Self {
        CriterionResult {
            passed: true,
            skipped: true,
            ..Self::fail(id, name, format!("skipped: {reason}"))
        }
    }
}

/// Role a family plays in the matrix. Positive criteria run on the primary
/// roles; the negative roles exist to be refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyRole {
    PrimaryProjective,
    PrimarySine,
    NegativeRotation,
    NegativeSingle,
    NegativeInversePair,
}

#[derive(Debug, Clone)]
pub struct VerifyFamily {
    pub name: String,
    pub role: FamilyRole,
    pub nu: NuMeasure,
}

fn pair(a: MapDescriptor, b: MapDescriptor) -> NuMeasure {
    NuMeasure::new(vec![(a, 0.5), (b, 0.5)]).unwrap()
}

/// diag(2, 1/2) and its rotation by π/4: the canonical hyperbolic pair.
pub fn projective_pair() -> NuMeasure {
    pair(
        MapDescriptor::projective(2.0, 0.0, 0.0, 0.5).unwrap(),
        MapDescriptor::projective(1.25, 0.75, 0.75, 1.25).unwrap(),
    )
}

pub fn sine_pair() -> NuMeasure {
    pair(
        MapDescriptor::sine_diffeo(0.17, 0.5).unwrap(),
        MapDescriptor::sine_diffeo(0.61, 0.5).unwrap(),
    )
}

pub fn rotation_pair() -> NuMeasure {
    pair(MapDescriptor::rotation(0.3), MapDescriptor::rotation(0.41))
}

pub fn single_map_family() -> NuMeasure {
    NuMeasure::dirac(MapDescriptor::projective(2.0, 0.0, 0.0, 0.5).unwrap())
}

/// A hyperbolic map together with its inverse: zero top exponent, shared
/// fixed points, everything the hypotheses forbid.
pub fn inverse_pair() -> NuMeasure {
    pair(
        MapDescriptor::projective(1.25, 0.75, 0.75, 1.25).unwrap(),
        MapDescriptor::projective(1.25, -0.75, -0.75, 1.25).unwrap(),
    )
}

pub fn default_families() -> Vec<VerifyFamily> {
    vec![
        VerifyFamily {
            name: "projective-pair".into(),
            role: FamilyRole::PrimaryProjective,
            nu: projective_pair(),
        },
        VerifyFamily { name: "sine-pair".into(), role: FamilyRole::PrimarySine, nu: sine_pair() },
        VerifyFamily {
            name: "rotation-pair".into(),
            role: FamilyRole::NegativeRotation,
            nu: rotation_pair(),
        },
        VerifyFamily {
            name: "single-map".into(),
            role: FamilyRole::NegativeSingle,
            nu: single_map_family(),
        },
        VerifyFamily {
            name: "inverse-pair".into(),
            role: FamilyRole::NegativeInversePair,
            nu: inverse_pair(),
        },
    ]
}

/// Exponent estimates shared by the later criteria; produced by criterion 1.
struct ExponentContext {
    lambda: f64,
    lambda_stderr: f64,
    sup: f64,
}

pub fn run_all() -> Vec<CriterionResult> {
    run_families(&default_families())
}

/// Runs every criterion applicable to the given families. A criterion whose
/// role is not represented is reported as skipped, never dropped.
pub fn run_families(families: &[VerifyFamily]) -> Vec<CriterionResult> {
    let find = |role: FamilyRole| families.iter().find(|f| f.role == role);
    let projective = find(FamilyRole::PrimaryProjective);
    let sine = find(FamilyRole::PrimarySine);
    let rotation = find(FamilyRole::NegativeRotation);
    let single = find(FamilyRole::NegativeSingle);
    let inverse = find(FamilyRole::NegativeInversePair);

    let mut out = Vec::with_capacity(10);
    let mut ctx: Option<ExponentContext> = None;

    match projective {
        Some(f) => {
            let (r, c) = c1_oracle_match(f);
            out.push(r);
            ctx = c;
        }
        None => out.push(CriterionResult::skip(1, C1_NAME, "no projective family in run")),
    }
    out.push(match projective {
        Some(f) => c2_point_vs_directions(f),
        None => CriterionResult::skip(2, C2_NAME, "no projective family in run"),
    });
    out.push(c3_equivariance(projective, sine));
    out.push(match (projective, &ctx) {
        (Some(f), Some(c)) => c4_pointwise_split(f, c),
        (Some(_), None) => {
            CriterionResult::fail(4, C4_NAME, "exponent context unavailable".into())
        }
        (None, _) => CriterionResult::skip(4, C4_NAME, "no projective family in run"),
    });
    out.push(c5_dimension_identity(projective, sine));
    out.push(match projective {
        Some(f) => c6_arc_dichotomy(f, rotation),
        None => CriterionResult::skip(6, C6_NAME, "no projective family in run"),
    });
    out.push(match (projective, &ctx) {
        (Some(f), Some(c)) => c7_attraction_rate(f, c),
        (Some(_), None) => {
            CriterionResult::fail(7, C7_NAME, "exponent context unavailable".into())
        }
        (None, _) => CriterionResult::skip(7, C7_NAME, "no projective family in run"),
    });
    out.push(c8_telescoping_and_synthetic_dimensions());
    out.push(c9_negative_controls(single, inverse, rotation));
    out.push(c10_thread_determinism());
    out
}

const C1_NAME: &str = "extremal exponents match the matrix oracle";
const C2_NAME: &str = "attracting/repelling points match singular directions";
const C3_NAME: &str = "one-step equivariance of the random points";
const C4_NAME: &str = "pointwise exponents split at the repeller";
const C5_NAME: &str = "dimension matches entropy over contraction";
const C6_NAME: &str = "one-arc collapse dichotomy";
const C7_NAME: &str = "attraction rate at macroscopic scale";
const C8_NAME: &str = "telescoping identity and synthetic dimensions";
const C9_NAME: &str = "degenerate families are refused";
const C10_NAME: &str = "results independent of thread count";

/// Full-budget two-sided oracle comparison, forced onto one thread so the
/// wall-clock bound means something.
fn c1_oracle_match(f: &VerifyFamily) -> (CriterionResult, Option<ExponentContext>) {
    let ms = match MatrixAtomSet::from_nu(&f.nu) {
        Ok(ms) => ms,
        Err(e) => return (CriterionResult::fail(1, C1_NAME, format!("{e}")), None),
    };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let t0 = Instant::now();
    let rep = pool.install(|| projective_consistency(&ms, &f.nu, 10_000, 100, child_seed(MATRIX_SEED, 1)));
    let elapsed = t0.elapsed().as_secs_f64();
    let rep = match rep {
        Ok(r) => r,
        Err(e) => return (CriterionResult::fail(1, C1_NAME, format!("{e}")), None),
    };
    let scale = 2.0 * rep.lambda1.value;
    let rel_sup = rep.sup_residual.abs() / scale;
    let rel_inf = rep.inf_residual.abs() / scale;
    // Wall time is checked but kept out of the details string: verdict
    // reports must be byte-identical across reruns of one config.
    let mut details = format!(
        "lambda1={:.6} sup={:.6} inf={:.6} rel_sup={:.4} rel_inf={:.4}",
        rep.lambda1.value, rep.circle_sup.value, rep.circle_inf.value, rel_sup, rel_inf
    );
    if elapsed > 60.0 {
        let _ = write!(details, " over 60s budget");
    }
    let passed = scale > 0.0 && rel_sup <= 0.02 && rel_inf <= 0.02 && elapsed <= 60.0;
    let ctx = ExponentContext {
        lambda: rep.circle_inf.value,
        lambda_stderr: rep.circle_inf.stderr,
        sup: rep.circle_sup.value,
    };
    let r = if passed {
        CriterionResult::ok(1, C1_NAME, details)
    } else {
        CriterionResult::fail(1, C1_NAME, details)
    };
    (r, Some(ctx))
}

fn c2_point_vs_directions(f: &VerifyFamily) -> CriterionResult {
    let ms = match MatrixAtomSet::from_nu(&f.nu) {
        Ok(ms) => ms,
        Err(e) => return CriterionResult::fail(2, C2_NAME, format!("{e}")),
    };
    let seed = child_seed(MATRIX_SEED, 2);
    let n = 400;
    let mut worst_pi = 0.0f64;
    let mut worst_theta = 0.0f64;
    for k in 0..20u64 {
        let omega = OmegaStream::substream(seed, k);
        let pi = match estimate_pi(&f.nu, &omega, n, 8, 1e-8) {
            Ok(p) => p.point,
            Err(e) => return CriterionResult::fail(2, C2_NAME, format!("seed {k}: {e}")),
        };
        let dirs = match oseledets_directions(&ms, &omega, n) {
            Ok(d) => d,
            Err(e) => return CriterionResult::fail(2, C2_NAME, format!("seed {k}: {e}")),
        };
        worst_pi = worst_pi.max(pi.dist(dirs.unstable));
        let theta = match estimate_theta(&f.nu, &omega, n, 8, 1e-8) {
            Ok(p) => p.point,
            Err(e) => return CriterionResult::fail(2, C2_NAME, format!("seed {k}: {e}")),
        };
        let am = estimate_theta_argmax(&f.nu, &omega, n, 2048);
        if am.degenerate {
            return CriterionResult::fail(2, C2_NAME, format!("seed {k}: degenerate argmax set"));
        }
        worst_theta = worst_theta.max(theta.dist(am.point())).max(theta.dist(dirs.stable));
    }
    let details =
        format!("20 seeds, n={n}: max|pi-unstable|={worst_pi:.2e} max theta gap={worst_theta:.2e}");
    if worst_pi <= 1e-6 && worst_theta <= 1e-4 {
        CriterionResult::ok(2, C2_NAME, details)
    } else {
        CriterionResult::fail(2, C2_NAME, details)
    }
}

fn c3_equivariance(projective: Option<&VerifyFamily>, sine: Option<&VerifyFamily>) -> CriterionResult {
    // The sine pair contracts at only a few hundredths of a nat per step,
    // so its probes need a much longer horizon to glue.
    let cases: Vec<(&VerifyFamily, f64, usize)> = projective
        .map(|f| (f, 1e-6, 400))
        .into_iter()
        .chain(sine.map(|f| (f, 1e-5, 3_000)))
        .collect();
    if cases.is_empty() {
        return CriterionResult::skip(3, C3_NAME, "no primary family in run");
    }
    let seed = child_seed(MATRIX_SEED, 3);
    let mut details = String::new();
    let mut passed = true;
    for (f, tol, n_est) in cases {
        let mut worst = 0.0f64;
        for k in 0..20u64 {
            let omega = OmegaStream::substream(seed, k);
            match equivariance_residuals(&f.nu, &omega, 4, n_est) {
                Ok((p, t)) => worst = worst.max(p).max(t),
                Err(e) => {
                    return CriterionResult::fail(3, C3_NAME, format!("{}: seed {k}: {e}", f.name))
                }
            }
        }
        let _ = write!(details, "{}: max residual {worst:.2e} (tol {tol:.0e}); ", f.name);
        passed &= worst <= tol;
    }
    if passed {
        CriterionResult::ok(3, C3_NAME, details)
    } else {
        CriterionResult::fail(3, C3_NAME, details)
    }
}

/// Generic points must see the bottom exponent; the repeller must not. A
/// float-exact repeller estimate shadows the repelling family for tens of
/// steps, so its 50-step derivative average sits far above λ̂.
///
/// All 64 generic orbits of one realization collapse onto a single
/// trajectory, so the within-seed spread says nothing about the estimate's
/// real fluctuation; the yardstick is the spread across independent seeds.
fn c4_pointwise_split(f: &VerifyFamily, ctx: &ExponentContext) -> CriterionResult {
    let seed = child_seed(MATRIX_SEED, 4);
    let n = 2_000;
    let mid = 0.5 * (ctx.lambda + ctx.sup);
    let mut generic = Vec::with_capacity(20);
    let mut repeller = Vec::with_capacity(20);
    for k in 0..20u64 {
        let omega = OmegaStream::substream(seed, k);
        let mut rng = DetRng::new(child_seed(seed, 1_000 + k));
        let exps: Vec<f64> = (0..64)
            .map(|_| pointwise_exponent(&f.nu, &omega, CirclePoint::new(rng.next_f64()), n))
            .collect();
        generic.push(mean_stderr(&exps).0);
        let theta = match estimate_theta(&f.nu, &omega, 800, 4, 1e-6) {
            Ok(p) => p.point,
            Err(e) => return CriterionResult::fail(4, C4_NAME, format!("seed {k}: {e}")),
        };
        repeller.push(pointwise_exponent(&f.nu, &omega, theta, 50));
    }
    let (_, seed_stderr) = mean_stderr(&generic);
    let seed_sd = seed_stderr * (generic.len() as f64).sqrt();
    let sigma = (seed_sd * seed_sd + ctx.lambda_stderr * ctx.lambda_stderr).sqrt();
    let mut failures = Vec::new();
    let mut worst_dev = 0.0f64;
    for k in 0..20usize {
        let dev = (generic[k] - ctx.lambda).abs();
        worst_dev = worst_dev.max(dev / sigma);
        if !(dev <= 3.0 * sigma && repeller[k] > mid) {
            failures.push(k);
        }
    }
    let min_rep = repeller.iter().cloned().fold(f64::INFINITY, f64::min);
    let details = format!(
        "20 seeds: worst generic deviation {worst_dev:.2} sigma (sd {seed_sd:.4}), min repeller \
         50-step exponent {min_rep:.3} vs midpoint {mid:.3}, failing seeds {failures:?}"
    );
    if failures.len() <= 1 {
        CriterionResult::ok(4, C4_NAME, details)
    } else {
        CriterionResult::fail(4, C4_NAME, details)
    }
}

fn c5_dimension_identity(
    projective: Option<&VerifyFamily>,
    sine: Option<&VerifyFamily>,
) -> CriterionResult {
    let cases: Vec<&VerifyFamily> = projective.into_iter().chain(sine).collect();
    if cases.is_empty() {
        return CriterionResult::skip(5, C5_NAME, "no primary family in run");
    }
    let t0 = Instant::now();
    let mut details = String::new();
    let mut passed = true;
    for (i, f) in cases.iter().enumerate() {
        let cfg = DimensionRunConfig {
            n: 400,
            n_samples: 100_000,
            mc_draws: 200_000,
            probes: 4_000,
            n_radii: 12,
            radius: None,
            r_min: 1e-4,
            r_max: 0.05,
            seed: child_seed(MATRIX_SEED, 5) + i as u64,
        };
        let id = match dimension_identity_residual(&f.nu, &cfg) {
            Ok(id) => id,
            Err(e) => return CriterionResult::fail(5, C5_NAME, format!("{}: {e}", f.name)),
        };
        let dim = id.dimension.value;
        let entropy_bound =
            id.entropy.value <= -id.lambda.value + 3.0 * (id.entropy.stderr + id.lambda.stderr);
        let ok = id.residual.abs() <= 0.1 && dim > 0.0 && dim <= 1.05 && entropy_bound;
        let _ = write!(
            details,
            "{}: dim={dim:.3} h={:.3} lambda={:.3} residual={:+.3}; ",
            f.name, id.entropy.value, id.lambda.value, id.residual
        );
        passed &= ok;
    }
    let elapsed = t0.elapsed().as_secs_f64();
    if elapsed > 300.0 {
        let _ = write!(details, "over 300s budget; ");
        passed = false;
    }
    if passed {
        CriterionResult::ok(5, C5_NAME, details)
    } else {
        CriterionResult::fail(5, C5_NAME, details)
    }
}

fn c6_arc_dichotomy(f: &VerifyFamily, rotation: Option<&VerifyFamily>) -> CriterionResult {
    let seed = child_seed(MATRIX_SEED, 6);
    let (x, y) = (CirclePoint::new(0.1), CirclePoint::new(0.6));
    let frac = arc_dichotomy(&f.nu, x, y, 500, 200, seed);
    let mut details = format!("{}: collapse fraction {frac:.3}", f.name);
    let mut passed = frac >= 0.99;
    match rotation {
        Some(r) => {
            let frac0 = arc_dichotomy(&r.nu, x, y, 500, 200, seed);
            let _ = write!(details, "; {}: {frac0}", r.name);
            passed &= frac0 == 0.0;
        }
        None => {
            let _ = write!(details, "; isometry leg skipped: no rotation family in run");
        }
    }
    if passed {
        CriterionResult::ok(6, C6_NAME, details)
    } else {
        CriterionResult::fail(6, C6_NAME, details)
    }
}

fn c7_attraction_rate(f: &VerifyFamily, ctx: &ExponentContext) -> CriterionResult {
    use rayon::prelude::*;
    let seed = child_seed(MATRIX_SEED, 7);
    let bound = ctx.lambda + 0.05;
    let rates: Vec<Result<f64, Error>> = (0..10u64)
        .into_par_iter()
        .map(|k| pi_attraction_rate(&f.nu, &OmegaStream::substream(seed, k), 0.05, 2_000, 4_096))
        .collect();
    let mut worst = f64::NEG_INFINITY;
    for (k, r) in rates.into_iter().enumerate() {
        match r {
            Ok(v) => worst = worst.max(v),
            Err(e) => return CriterionResult::fail(7, C7_NAME, format!("seed {k}: {e}")),
        }
    }
    let details = format!("10 seeds: worst rate {worst:.4} vs bound {bound:.4}");
    if worst <= bound {
        CriterionResult::ok(7, C7_NAME, details)
    } else {
        CriterionResult::fail(7, C7_NAME, details)
    }
}

fn random_invertible_map(rng: &mut DetRng) -> MapDescriptor {
    loop {
        match rng.index(3) {
            0 => {
                let m = MapDescriptor::projective(
                    rng.range(-1.5, 1.5),
                    rng.range(-1.5, 1.5),
                    rng.range(-1.5, 1.5),
                    rng.range(-1.5, 1.5),
                );
                if let Ok(m) = m {
                    return m;
                }
            }
            1 => return MapDescriptor::rotation(rng.next_f64()),
            _ => {
                return MapDescriptor::sine_diffeo(rng.next_f64(), rng.range(-0.8, 0.8)).unwrap()
            }
        }
    }
}

/// The pulled-back log-mass chain must cancel to rounding error for any
/// measure, any word, any arc: each term is computed once and reused, so
/// only float addition is being tested, which is the point.
fn c8_telescoping_and_synthetic_dimensions() -> CriterionResult {
    let mut rng = DetRng::new(child_seed(MATRIX_SEED, 8));
    let mut worst = 0.0f64;
    let mut instances = 0;
    while instances < 100 {
        let eta = EmpiricalMeasure::from_values((0..4_000).map(|_| rng.next_f64()).collect());
        let maps: Vec<MapDescriptor> = (0..4).map(|_| random_invertible_map(&mut rng)).collect();
        let lo = rng.next_f64();
        let arc = Arc::new(CirclePoint::new(lo), CirclePoint::new(lo + rng.range(0.2, 0.5)));
        match telescoping_residual(&eta, &maps, arc) {
            Ok(r) => {
                worst = worst.max(r.abs());
                instances += 1;
            }
            // A word can push the arc into an unsampled gap; such draws
            // carry no information about the identity, so redraw.
            Err(Error::DegenerateBall(_)) => continue,
            Err(e) => return CriterionResult::fail(8, C8_NAME, format!("{e}")),
        }
    }
    let mut details = format!("100 instances: max residual {worst:.2e}");
    let mut passed = worst <= 1e-10;

    let uniform =
        EmpiricalMeasure::from_values((0..100_000).map(|_| rng.next_f64()).collect());
    let dirac = EmpiricalMeasure::from_values(vec![0.37; 50_000]);
    let mut cantor_points = Vec::with_capacity(100_000);
    for _ in 0..100_000 {
        let mut x = 0.0f64;
        let mut scale = 1.0f64;
        for _ in 0..40 {
            scale /= 3.0;
            if rng.next_u64() & 1 == 1 {
                x += 2.0 * scale;
            }
        }
        cantor_points.push(x);
    }
    let cantor = EmpiricalMeasure::from_values(cantor_points);
    let log3 = 3.0f64.ln();
    for (name, eta, probes, r_min, r_max, expect, tol) in [
        ("uniform", &uniform, 400, 1e-3, 0.03, 1.0, 0.05),
        ("dirac", &dirac, 400, 1e-3, 0.03, 0.0, 0.01),
        ("cantor", &cantor, 2_000, 1e-4, 0.01, 2.0f64.ln() / log3, 0.03),
    ] {
        match local_dimension(eta, probes, r_min, r_max, 10, rng.next_u64()) {
            Ok(rep) => {
                let _ = write!(details, "; {name} dim {:.3}", rep.value);
                passed &= (rep.value - expect).abs() <= tol;
            }
            Err(e) => return CriterionResult::fail(8, C8_NAME, format!("{name}: {e}")),
        }
    }
    if passed {
        CriterionResult::ok(8, C8_NAME, details)
    } else {
        CriterionResult::fail(8, C8_NAME, details)
    }
}

/// Pass condition inverted: these families violate the standing hypotheses
/// and the pipeline must say so rather than produce numbers.
fn c9_negative_controls(
    single: Option<&VerifyFamily>,
    inverse: Option<&VerifyFamily>,
    rotation: Option<&VerifyFamily>,
) -> CriterionResult {
    if single.is_none() && inverse.is_none() && rotation.is_none() {
        return CriterionResult::skip(9, C9_NAME, "no negative-control family in run");
    }
    let seed = child_seed(MATRIX_SEED, 9);
    let small = DimensionRunConfig {
        n: 50,
        n_samples: 2_000,
        mc_draws: 2_000,
        probes: 200,
        n_radii: 6,
        radius: None,
        r_min: 1e-3,
        r_max: 0.05,
        seed,
    };
    let mut details = String::new();
    let mut passed = true;
    for f in [single, inverse].into_iter().flatten() {
        match dimension_identity_residual(&f.nu, &small) {
            Err(Error::HypothesisViolation(msg)) => {
                let _ = write!(details, "{} refused: {msg}; ", f.name);
            }
            Err(e) => {
                let _ = write!(details, "{} wrong refusal ({e}); ", f.name);
                passed = false;
            }
            Ok(_) => {
                let _ = write!(details, "{} was accepted; ", f.name);
                passed = false;
            }
        }
    }
    if let Some(f) = rotation {
        let rep = hypothesis_report(&f.nu, seed);
        if rep.verdict {
            let _ = write!(details, "{} passed the hypothesis screen; ", f.name);
            passed = false;
        } else {
            let _ = write!(details, "{} flagged: {}; ", f.name, rep.reasons.join(" / "));
        }
    }
    let mut r = if passed {
        CriterionResult::ok(9, C9_NAME, details)
    } else {
        CriterionResult::fail(9, C9_NAME, details)
    };
    r.negative_control = true;
    r
}

#[derive(Serialize)]
struct Bundle {
    exponents: (crate::report::EstimateReport, crate::report::EstimateReport),
    stationary: Vec<f64>,
    warnings: usize,
    entropy: crate::report::EstimateReport,
    sync: crate::report::EstimateReport,
}

/// Serialized mid-scale run touching every parallel code path. Must come
/// out byte-identical under any pool size; every draw is a pure function of
/// (seed, index), so it does.
pub fn representative_bundle_json(seed: u64) -> String {
    let nu = projective_pair();
    let exponents = extremal_exponents_kingman(&nu, 500, 8, 64, child_seed(seed, 1));
    let st = sample_stationary(&nu, 200, 4_000, child_seed(seed, 2));
    let entropy =
        furstenberg_entropy(&nu, &st.measure, 0.02, 20_000, child_seed(seed, 3)).unwrap();
    let sync = sync_rate_for_bundle(&nu, child_seed(seed, 4));
    let bundle = Bundle {
        exponents,
        stationary: st.measure.samples().to_vec(),
        warnings: st.warnings,
        entropy,
        sync,
    };
    serde_json::to_string(&bundle).unwrap()
}

fn sync_rate_for_bundle(nu: &NuMeasure, seed: u64) -> crate::report::EstimateReport {
    crate::estimators::sync_rate(nu, CirclePoint::new(0.1), CirclePoint::new(0.6), 400, 16, seed)
}

fn c10_thread_determinism() -> CriterionResult {
    let seed = child_seed(MATRIX_SEED, 10);
    let mut outputs = Vec::new();
    for threads in [1usize, 4] {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        outputs.push(pool.install(|| representative_bundle_json(seed)));
    }
    let identical = outputs[0] == outputs[1];
    let details = format!(
        "bundle of {} bytes identical across 1 and 4 threads: {identical}",
        outputs[0].len()
    );
    if identical {
        CriterionResult::ok(10, C10_NAME, details)
    } else {
        CriterionResult::fail(10, C10_NAME, details)
    }
}

/// Derivative-along-orbit identity at full horizon: the reversed word's
/// derivative at the attractor of the shifted stream averages to λ̂, and the
/// forward word's derivative at the repeller averages to Λ̂. The repeller
/// side is evaluated through the backward sum started at θ̂(σ^n ω), which
/// equals minus the forward log-derivative at θ̂(ω) exactly.
pub fn orbit_derivative_check(n: usize, realizations: usize) -> (f64, f64, f64, f64) {
    let nu = projective_pair();
    let seed = child_seed(MATRIX_SEED, 11);
    let mut at_pi = Vec::with_capacity(realizations);
    let mut at_theta = Vec::with_capacity(realizations);
    for k in 0..realizations as u64 {
        let omega = OmegaStream::substream(seed, k);
        let pi_n = estimate_pi(&nu, &omega.shifted(n as u64), 400, 4, 1e-6).unwrap().point;
        at_pi.push(reversed_apply(&nu, &omega, pi_n, n).1 / n as f64);
        let theta_n = estimate_theta(&nu, &omega.shifted(n as u64), 800, 4, 1e-6).unwrap().point;
        at_theta.push(-backward_apply_with_sum(&nu, &omega, theta_n, n).1 / n as f64);
    }
    let (m1, s1) = mean_stderr(&at_pi);
    let (m2, s2) = mean_stderr(&at_theta);
    (m1, s1, m2, s2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_families_cover_all_roles() {
        let fams = default_families();
        assert_eq!(fams.len(), 5);
        for role in [
            FamilyRole::PrimaryProjective,
            FamilyRole::PrimarySine,
            FamilyRole::NegativeRotation,
            FamilyRole::NegativeSingle,
            FamilyRole::NegativeInversePair,
        ] {
            assert!(fams.iter().any(|f| f.role == role));
        }
    }

    #[test]
    fn inverse_pair_atoms_are_mutual_inverses() {
        let nu = inverse_pair();
        let a = nu.atom(0);
        let b = nu.atom(1);
        for i in 0..32 {
            let x = CirclePoint::new(i as f64 / 32.0 + 0.013);
            assert!(b.eval(a.eval(x)).dist(x) < 1e-12);
        }
    }

    #[test]
    fn empty_family_list_reports_every_criterion() {
        let out = run_families(&[]);
        assert_eq!(out.len(), 10);
        // Family-bound criteria are skipped, the standalone ones still run.
        for r in &out {
            if r.id == 8 || r.id == 10 {
                assert!(!r.skipped && r.passed, "criterion {}: {}", r.id, r.details);
            } else {
                assert!(r.skipped, "criterion {} should be skipped", r.id);
            }
        }
    }

    #[test]
    fn bundle_json_is_reproducible() {
        assert_eq!(representative_bundle_json(7), representative_bundle_json(7));
        assert_ne!(representative_bundle_json(7), representative_bundle_json(8));
    }
}
