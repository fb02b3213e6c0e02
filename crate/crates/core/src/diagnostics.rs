//! Empirical checks of the standing hypotheses: no common fixed point,
//! proximality, synchronization. Estimators whose meaning depends on these
//! refuse to run when the checks fail; the checks are evidence, not proof.

use crate::circle::CirclePoint;
use crate::engine::NuMeasure;
use crate::estimators::{self, sync_rate};
use crate::measure::EmpiricalMeasure;
use crate::rng::{self, DetRng};
use serde::{Deserialize, Serialize};

/// Joint outcome of the hypothesis checks for one atom family.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub common_fixed_point: Option<CirclePoint>,
    /// Max over probed pairs of the smallest gap any explored word achieved.
    pub proximality_min_gap: f64,
    /// Average one-step-normalized log pair distance after many steps.
    pub sync_rate: f64,
    pub verdict: bool,
    pub reasons: Vec<String>,
}

/// A point fixed by every atom, if one exists. Scans max over atoms of
/// dist(f(x), x) on a grid and golden-refines the best cell; a refined
/// minimum below tol is reported as a common fixed point. A point fixed by
/// all generators is fixed by the whole semigroup, so generators suffice.
pub fn common_fixed_point_scan(nu: &NuMeasure, grid: usize, tol: f64) -> Option<CirclePoint> {
    assert!(grid >= 256, "grid of {grid} can straddle a fixed point");
    let displacement = |t: f64| {
        let x = CirclePoint::new(t);
        nu.atoms().map(|(f, _)| f.eval(x).dist(x)).fold(0.0, f64::max)
    };
    let (best, best_val) = (0..grid)
        .map(|i| {
            let t = i as f64 / grid as f64;
            (t, displacement(t))
        })
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let h = 1.0 / grid as f64;
    let (arg, refined) = estimators::golden_max(|t| -displacement(t), best - h, best + h, 100);
    let (arg, val) = if -refined < best_val { (arg, -refined) } else { (best, best_val) };
    (val < tol).then(|| CirclePoint::new(arg))
}

/// Heuristic proximality certificate: beam search over composition words,
/// trying to drive sampled pairs together. Returns the worst pair's best
/// gap; a small value is evidence that every pair can be collapsed.
pub fn proximality_probe(nu: &NuMeasure, pairs: usize, depth: usize, beam: usize, seed: u64) -> f64 {
    assert!(depth >= 1 && beam >= 1 && pairs >= 1);
    let mut rng = DetRng::new(rng::child_seed(seed, 0x9a1));
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let x = CirclePoint::new(rng.next_f64());
        let y = x.add(rng.range(0.05, 0.95));
        worst = worst.max(pair_min_gap(nu, x, y, depth, beam));
    }
    worst
}

/// Smallest gap reachable for one pair. The empty word counts, matching
/// the convention that the identity belongs to the semigroup.
fn pair_min_gap(nu: &NuMeasure, x: CirclePoint, y: CirclePoint, depth: usize, beam: usize) -> f64 {
    let mut frontier: Vec<(CirclePoint, CirclePoint)> = vec![(x, y)];
    let mut best = x.dist(y);
    for _ in 0..depth {
        let mut next: Vec<(CirclePoint, CirclePoint)> = frontier
            .iter()
            .flat_map(|&(a, b)| nu.atoms().map(move |(f, _)| (f.eval(a), f.eval(b))))
            .collect();
        next.sort_by(|p, q| p.0.dist(p.1).total_cmp(&q.0.dist(q.1)));
        next.truncate(beam);
        if let Some(front) = next.first() {
            best = best.min(front.0.dist(front.1));
        }
        frontier = next;
    }
    best
}

/// Sample points repeated more often than threshold·count, as evidence of
/// atoms in an empirical measure. Exact duplicates only: the attracting
/// point of an atom-carrying family is hit bit-for-bit by collapsed orbits.
pub fn atom_scan(eta: &EmpiricalMeasure, threshold: f64) -> Vec<CirclePoint> {
    let samples = eta.samples();
    let cutoff = (threshold * samples.len() as f64).max(1.0);
    let mut found = Vec::new();
    let mut run_start = 0;
    for i in 1..=samples.len() {
        if i == samples.len() || samples[i] != samples[run_start] {
            if (i - run_start) as f64 > cutoff {
                found.push(CirclePoint::new(samples[run_start]));
            }
            run_start = i;
        }
    }
    found
}

/// Gap below which the beam search is taken as evidence of proximality.
pub const PROXIMALITY_GATE: f64 = 1e-3;

/// Runs all hypothesis checks with standard settings and combines them
/// into the verdict the gated estimators consult.
pub fn hypothesis_report(nu: &NuMeasure, seed: u64) -> HypothesisReport {
    let common_fixed_point = common_fixed_point_scan(nu, 512, 1e-9);
    let proximality_min_gap = proximality_probe(nu, 16, 60, 8, rng::child_seed(seed, 1));
    let sync = sync_rate(
        nu,
        CirclePoint::new(0.1),
        CirclePoint::new(0.6),
        500,
        32,
        rng::child_seed(seed, 2),
    )
    .value;
    let mut reasons = Vec::new();
    if let Some(p) = common_fixed_point {
        reasons.push(format!("common fixed point near {}", p.value()));
    }
    if proximality_min_gap > PROXIMALITY_GATE {
        reasons.push(format!("beam search left a pair gap of {proximality_min_gap:.3e}"));
    }
    if sync >= 0.0 {
        reasons.push(format!("pairs do not contract (sync rate {sync:.3e})"));
    }
    HypothesisReport {
        common_fixed_point,
        proximality_min_gap,
        sync_rate: sync,
        verdict: reasons.is_empty(),
        reasons,
    }
}
