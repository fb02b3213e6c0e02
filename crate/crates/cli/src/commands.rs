//! The six subcommands. Each loads its config, runs the estimators under
//! seeds derived from the run seed, writes artifacts plus a runinfo sidecar,
//! and maps failures onto the exit-code contract (2 config, 3 convergence,
//! 4 hypothesis, 1 anything else).

use crate::config::{self, ExperimentConfig, RadiiConfig};
use crate::reports::{self, ReportHeader, RunPaths};
use circle_rds::diagnostics;
use circle_rds::estimators::{
    arc_dichotomy, dimension_identity_residual, exponents_integral, extremal_exponents_kingman,
    furstenberg_entropy, sample_stationary, suggested_entropy_radius, sync_rate, StationarySample,
};
use circle_rds::oracle::{top_lyapunov, MatrixAtomSet};
use circle_rds::rng::{child_seed, DetRng};
use circle_rds::verify::{run_families, CriterionResult, FamilyRole, MATRIX_SEED};
use circle_rds::{
    Arc, CirclePoint, DimensionIdentity, DimensionRunConfig, EmpiricalMeasure, EstimateReport,
    HypothesisReport, MapDescriptor, NuMeasure,
};
use serde::Serialize;
use std::path::PathBuf;
use std::time::Instant;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    NonConvergence(String),
    Hypothesis(String),
    Failure(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failure(_) => 1,
            CliError::Config(_) => 2,
            CliError::NonConvergence(_) => 3,
            CliError::Hypothesis(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m)
            | CliError::NonConvergence(m)
            | CliError::Hypothesis(m)
            | CliError::Failure(m) => write!(f, "{m}"),
        }
    }
}

impl From<config::ConfigError> for CliError {
    fn from(e: config::ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<circle_rds::Error> for CliError {
    fn from(e: circle_rds::Error) -> Self {
        use circle_rds::Error;
        match e {
            Error::NonConvergence { .. } => CliError::NonConvergence(e.to_string()),
            Error::HypothesisViolation(_) => CliError::Hypothesis(e.to_string()),
            Error::InvalidDescriptor(_) | Error::InvalidMeasure(_) | Error::InvalidArgument(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Failure(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Failure(format!("io error: {e}"))
    }
}

type Result<T> = std::result::Result<T, CliError>;

/// Parsed command line handed down from main.
pub struct Invocation {
    pub config: PathBuf,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

struct Run {
    cfg: ExperimentConfig,
    nu: NuMeasure,
    seed: u64,
    header: ReportHeader,
    paths: RunPaths,
    t0: Instant,
}

fn start(inv: &Invocation) -> Result<Run> {
    let (cfg, text) = config::load_experiment(&inv.config)?;
    let nu = cfg.measure()?;
    let seed = inv.seed.unwrap_or(cfg.seed);
    let header = ReportHeader::new(seed, &text);
    let dir = inv
        .out
        .clone()
        .or_else(|| cfg.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let paths = RunPaths::new(dir, cfg.output.prefix.clone())?;
    Ok(Run { cfg, nu, seed, header, paths, t0: Instant::now() })
}

#[derive(Serialize)]
struct AtomRow {
    map: MapDescriptor,
    prob: f64,
}

fn atom_rows(nu: &NuMeasure) -> Vec<AtomRow> {
    nu.atoms().map(|&(map, prob)| AtomRow { map, prob }).collect()
}

#[derive(Serialize)]
struct SideSummary {
    n_samples: usize,
    checked: usize,
    warnings: usize,
    warning_fraction: f64,
    /// Points carrying at least the atom-threshold fraction of the mass.
    atoms_detected: Vec<f64>,
    csv: String,
}

fn warning_fraction(st: &StationarySample) -> f64 {
    if st.checked == 0 {
        0.0
    } else {
        st.warnings as f64 / st.checked as f64
    }
}

fn side_summary(st: &StationarySample, threshold: f64, csv: String) -> SideSummary {
    SideSummary {
        n_samples: st.measure.len(),
        checked: st.checked,
        warnings: st.warnings,
        warning_fraction: warning_fraction(st),
        atoms_detected: diagnostics::atom_scan(&st.measure, threshold)
            .iter()
            .map(|p| p.value())
            .collect(),
        csv,
    }
}

#[derive(Serialize)]
struct StationaryReport {
    header: ReportHeader,
    n_steps: usize,
    atom_threshold: f64,
    atoms: Vec<AtomRow>,
    forward: SideSummary,
    backward: SideSummary,
}

pub fn stationary(inv: &Invocation) -> Result<()> {
    let run = start(inv)?;
    let cfg = &run.cfg;
    let st = sample_stationary(&run.nu, cfg.n_steps, cfg.n_samples, child_seed(run.seed, 1));
    let st_minus =
        sample_stationary(&run.nu.inverse(), cfg.n_steps, cfg.n_samples, child_seed(run.seed, 2));
    reports::write_samples_csv(
        &run.paths.file("stationary_eta.csv"),
        "point",
        st.measure.samples(),
    )?;
    reports::write_samples_csv(
        &run.paths.file("stationary_eta_minus.csv"),
        "point",
        st_minus.measure.samples(),
    )?;
    let threshold = cfg.tolerances.atom_threshold;
    let report = StationaryReport {
        header: run.header.clone(),
        n_steps: cfg.n_steps,
        atom_threshold: threshold,
        atoms: atom_rows(&run.nu),
        forward: side_summary(&st, threshold, run.paths.name("stationary_eta.csv")),
        backward: side_summary(&st_minus, threshold, run.paths.name("stationary_eta_minus.csv")),
    };
    reports::write_json(&run.paths.file("stationary.json"), &report)?;
    reports::write_runinfo(&run.paths, "stationary", run.t0.elapsed().as_secs_f64())?;
    for (side, st) in [("forward", &st), ("backward", &st_minus)] {
        let f = warning_fraction(st);
        if f > cfg.tolerances.max_warning_fraction {
            return Err(CliError::NonConvergence(format!(
                "{side} sampler: {} of {} probe checks disagreed (fraction {f:.3} exceeds \
                 max_warning_fraction {}); artifacts were still written",
                st.warnings, st.checked, cfg.tolerances.max_warning_fraction
            )));
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct RouteBlock {
    lambda: EstimateReport,
    sup: EstimateReport,
}

#[derive(Serialize)]
struct OracleBlock {
    lambda1: EstimateReport,
    doubled: f64,
    sup_residual: f64,
    inf_residual: f64,
    rel_sup_residual: f64,
    rel_inf_residual: f64,
}

#[derive(Serialize)]
struct ExponentsReport {
    header: ReportHeader,
    n_steps: usize,
    n_realizations: usize,
    grid: usize,
    mc_draws: usize,
    kingman: RouteBlock,
    integral: RouteBlock,
    forward_warning_fraction: f64,
    backward_warning_fraction: f64,
    oracle_note: String,
    oracle: Option<OracleBlock>,
}

/// The matrix-cocycle cross-check applies exactly to unimodular projective
/// families, where the circle exponents must be ±2 lambda1.
fn oracle_block(
    nu: &NuMeasure,
    kingman: &RouteBlock,
    n: usize,
    n_samples: usize,
    seed: u64,
) -> (String, Option<OracleBlock>) {
    let ms = match MatrixAtomSet::from_nu(nu) {
        Ok(ms) => ms,
        Err(_) => return ("skipped: family has non-projective atoms".into(), None),
    };
    let worst =
        (0..ms.len()).map(|i| (ms.mat(i).det().abs() - 1.0).abs()).fold(0.0, f64::max);
    if worst > 1e-9 {
        return (
            format!("skipped: atoms are not unimodular (max |det| deviation {worst:.3e})"),
            None,
        );
    }
    let lambda1 = top_lyapunov(&ms, n, n_samples, seed);
    let doubled = 2.0 * lambda1.value;
    let sup_residual = kingman.sup.value - doubled;
    let inf_residual = kingman.lambda.value + doubled;
    let scale = doubled.abs().max(1e-12);
    let block = OracleBlock {
        lambda1,
        doubled,
        sup_residual,
        inf_residual,
        rel_sup_residual: sup_residual.abs() / scale,
        rel_inf_residual: inf_residual.abs() / scale,
    };
    ("matrix cocycle comparison: circle exponents against plus/minus 2 lambda1".into(), Some(block))
}

pub fn exponents(inv: &Invocation) -> Result<()> {
    let run = start(inv)?;
    let cfg = &run.cfg;
    let realizations = cfg.exponents.n_samples;
    let horizon = cfg.exponents.n_steps.unwrap_or(cfg.n_steps);
    let (lam_k, sup_k) =
        extremal_exponents_kingman(&run.nu, horizon, realizations, cfg.grid, child_seed(run.seed, 1));
    let st = sample_stationary(&run.nu, cfg.n_steps, cfg.n_samples, child_seed(run.seed, 2));
    let st_minus =
        sample_stationary(&run.nu.inverse(), cfg.n_steps, cfg.n_samples, child_seed(run.seed, 3));
    let (lam_i, sup_i) = exponents_integral(
        &run.nu,
        &st.measure,
        &st_minus.measure,
        cfg.mc_draws,
        child_seed(run.seed, 4),
    );
    let kingman = RouteBlock { lambda: lam_k, sup: sup_k };
    let (oracle_note, oracle) =
        oracle_block(&run.nu, &kingman, horizon, realizations, child_seed(run.seed, 5));
    let report = ExponentsReport {
        header: run.header.clone(),
        n_steps: horizon,
        n_realizations: realizations,
        grid: cfg.grid,
        mc_draws: cfg.mc_draws,
        kingman,
        integral: RouteBlock { lambda: lam_i, sup: sup_i },
        forward_warning_fraction: warning_fraction(&st),
        backward_warning_fraction: warning_fraction(&st_minus),
        oracle_note,
        oracle,
    };
    reports::write_json(&run.paths.file("exponents.json"), &report)?;
    reports::write_runinfo(&run.paths, "exponents", run.t0.elapsed().as_secs_f64())?;
    Ok(())
}

#[derive(Serialize)]
struct DimensionReport {
    header: ReportHeader,
    hypothesis: HypothesisReport,
    identity: DimensionIdentity,
    regression_csv: String,
}

/// Per-radius regression table: mean log ball mass over probe centers drawn
/// from the sample, the drawn center left out of its own count.
fn regression_rows(
    eta: &EmpiricalMeasure,
    probes: usize,
    radii: &RadiiConfig,
    seed: u64,
) -> Vec<Vec<f64>> {
    let mut rng = DetRng::new(seed);
    let centers: Vec<CirclePoint> = (0..probes).map(|_| eta.sample_at(&mut rng)).collect();
    let total = eta.len() as f64;
    let (lo, hi) = (radii.r_min.ln(), radii.r_max.ln());
    (0..radii.n_radii)
        .map(|i| {
            let t = if radii.n_radii == 1 {
                0.0
            } else {
                i as f64 / (radii.n_radii - 1) as f64
            };
            let r = (lo + t * (hi - lo)).exp();
            let mut used = 0usize;
            let mut sum = 0.0;
            for &x in &centers {
                let count = eta.arc_count(Arc::ball(x, r)) - 1;
                if count > 0 {
                    used += 1;
                    sum += (count as f64 / total).ln();
                }
            }
            let mean = if used == 0 { f64::NAN } else { sum / used as f64 };
            vec![r, r.ln(), mean, used as f64]
        })
        .collect()
}

pub fn dimension(inv: &Invocation) -> Result<()> {
    let run = start(inv)?;
    let cfg = &run.cfg;
    let hypothesis = diagnostics::hypothesis_report(&run.nu, child_seed(run.seed, 2));
    let dimcfg = DimensionRunConfig {
        n: cfg.n_steps,
        n_samples: cfg.n_samples,
        mc_draws: cfg.mc_draws,
        probes: cfg.probes,
        n_radii: cfg.radii.n_radii,
        radius: cfg.radii.entropy_radius,
        r_min: cfg.radii.r_min,
        r_max: cfg.radii.r_max,
        seed: child_seed(run.seed, 1),
    };
    let identity = dimension_identity_residual(&run.nu, &dimcfg)?;
    let eta =
        sample_stationary(&run.nu, cfg.n_steps, cfg.n_samples, child_seed(run.seed, 3)).measure;
    let rows = regression_rows(&eta, cfg.probes, &cfg.radii, child_seed(run.seed, 4));
    reports::write_table_csv(
        &run.paths.file("dimension_regression.csv"),
        &["radius", "log_radius", "mean_log_mass", "probes_used"],
        &rows,
    )?;
    let report = DimensionReport {
        header: run.header.clone(),
        hypothesis,
        identity,
        regression_csv: run.paths.name("dimension_regression.csv"),
    };
    reports::write_json(&run.paths.file("dimension.json"), &report)?;
    reports::write_runinfo(&run.paths, "dimension", run.t0.elapsed().as_secs_f64())?;
    Ok(())
}

#[derive(Serialize)]
struct EntropyReport {
    header: ReportHeader,
    radius: f64,
    radius_source: String,
    entropy: EstimateReport,
    forward_warning_fraction: f64,
}

pub fn entropy(inv: &Invocation) -> Result<()> {
    let run = start(inv)?;
    let cfg = &run.cfg;
    let st = sample_stationary(&run.nu, cfg.n_steps, cfg.n_samples, child_seed(run.seed, 1));
    let (radius, radius_source) = match cfg.radii.entropy_radius {
        Some(r) => (r, "config".to_string()),
        None => (
            suggested_entropy_radius(&st.measure, child_seed(run.seed, 2)),
            "sample median".to_string(),
        ),
    };
    let entropy = furstenberg_entropy(&run.nu, &st.measure, radius, cfg.mc_draws, child_seed(run.seed, 3))?;
    let report = EntropyReport {
        header: run.header.clone(),
        radius,
        radius_source,
        entropy,
        forward_warning_fraction: warning_fraction(&st),
    };
    reports::write_json(&run.paths.file("entropy.json"), &report)?;
    reports::write_runinfo(&run.paths, "entropy", run.t0.elapsed().as_secs_f64())?;
    Ok(())
}

#[derive(Serialize)]
struct SyncReport {
    header: ReportHeader,
    x: f64,
    y: f64,
    n_steps: usize,
    n_samples: usize,
    rate: EstimateReport,
    collapse_fraction: f64,
}

pub fn sync(inv: &Invocation) -> Result<()> {
    let run = start(inv)?;
    let cfg = &run.cfg;
    let Some(sc) = cfg.sync.clone() else {
        return Err(CliError::Config(
            "sync: a [sync] section with x, y and n_samples is required for this subcommand".into(),
        ));
    };
    let (x, y) = (CirclePoint::new(sc.x), CirclePoint::new(sc.y));
    let rate = sync_rate(&run.nu, x, y, cfg.n_steps, sc.n_samples, child_seed(run.seed, 1));
    let collapse_fraction =
        arc_dichotomy(&run.nu, x, y, cfg.n_steps, sc.n_samples, child_seed(run.seed, 2));
    let report = SyncReport {
        header: run.header.clone(),
        x: x.value(),
        y: y.value(),
        n_steps: cfg.n_steps,
        n_samples: sc.n_samples,
        rate,
        collapse_fraction,
    };
    reports::write_json(&run.paths.file("sync.json"), &report)?;
    reports::write_runinfo(&run.paths, "sync", run.t0.elapsed().as_secs_f64())?;
    Ok(())
}

#[derive(Serialize)]
struct FamilyRow {
    name: String,
    role: FamilyRole,
}

#[derive(Serialize)]
struct VerifySummary {
    total: usize,
    passed: usize,
    failed: usize,
    skipped: usize,
    negative_controls: usize,
}

#[derive(Serialize)]
struct VerifyReport {
    header: ReportHeader,
    families: Vec<FamilyRow>,
    summary: VerifySummary,
    criteria: Vec<CriterionResult>,
}

pub fn verify(inv: &Invocation) -> Result<()> {
    if inv.seed.is_some() {
        return Err(CliError::Config(
            "--seed does not apply to verify: the matrix runs on pinned per-criterion seeds".into(),
        ));
    }
    let (set, text) = config::load_verify_set(&inv.config)?;
    let families = set.families()?;
    let header = ReportHeader::new(MATRIX_SEED, &text);
    let dir = inv
        .out
        .clone()
        .or_else(|| set.output.dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    let paths = RunPaths::new(dir, set.output.prefix.clone())?;
    let t0 = Instant::now();
    let criteria = run_families(&families);
    for r in &criteria {
        let tag = if r.skipped {
            "SKIP"
        } else if !r.passed {
            "FAIL"
        } else {
            "PASS"
        };
        let control = if r.negative_control && !r.skipped { " [negative control]" } else { "" };
        println!("[{tag}] C{:02} {}{control} :: {}", r.id, r.name, r.details);
    }
    let summary = VerifySummary {
        total: criteria.len(),
        passed: criteria.iter().filter(|r| r.passed && !r.skipped).count(),
        failed: criteria.iter().filter(|r| !r.passed).count(),
        skipped: criteria.iter().filter(|r| r.skipped).count(),
        negative_controls: criteria.iter().filter(|r| r.negative_control && !r.skipped).count(),
    };
    println!(
        "verified {} criteria: {} passed, {} failed, {} skipped",
        summary.total, summary.passed, summary.failed, summary.skipped
    );
    let failed = summary.failed;
    let report = VerifyReport {
        header,
        families: families
            .iter()
            .map(|f| FamilyRow { name: f.name.clone(), role: f.role })
            .collect(),
        summary,
        criteria,
    };
    reports::write_json(&paths.file("verify.json"), &report)?;
    reports::write_runinfo(&paths, "verify", t0.elapsed().as_secs_f64())?;
    if failed > 0 {
        return Err(CliError::Failure(format!("{failed} of 10 criteria failed")));
    }
    Ok(())
}
