//! Experiment configuration: one TOML file per run. Unknown keys are
//! rejected everywhere so a typo in a tolerance cannot silently revert to a
//! default and corrupt a verification run.

use circle_rds::verify::{FamilyRole, VerifyFamily};
use circle_rds::{MapDescriptor, NuMeasure};
use serde::Deserialize;

/// Config-stage failure; everything in here maps to exit code 2.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "config error: {}", self.0)
    }
}

impl std::error::Error for ConfigError {}

type Result<T> = std::result::Result<T, ConfigError>;

fn err<T>(msg: impl Into<String>) -> Result<T> {
    Err(ConfigError(msg.into()))
}

/// One atom of the driving measure. All map parameters are optional at the
/// parse stage; `to_map` enforces exactly the set the named kind needs, so a
/// leftover `b = …` on a rotation is an error, not dead weight.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomSpec {
    pub kind: String,
    pub m11: Option<f64>,
    pub m12: Option<f64>,
    pub m21: Option<f64>,
    pub m22: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub prob: f64,
}

impl AtomSpec {
    fn fields(&self) -> [(&'static str, Option<f64>); 6] {
        [
            ("m11", self.m11),
            ("m12", self.m12),
            ("m21", self.m21),
            ("m22", self.m22),
            ("a", self.a),
            ("b", self.b),
        ]
    }

    /// Builds the descriptor, naming any missing or extraneous field. `at`
    /// locates the atom in the file for the message.
    pub fn to_map(&self, at: &str) -> Result<MapDescriptor> {
        let required: &[&str] = match self.kind.as_str() {
            "projective" => &["m11", "m12", "m21", "m22"],
            "sine_diffeo" | "sine_diffeo_inverse" => &["a", "b"],
            "rotation" => &["a"],
            other => {
                return err(format!(
                    "{at}: unknown kind {other:?} (expected projective, sine_diffeo, \
                     sine_diffeo_inverse or rotation)"
                ))
            }
        };
        let mut got = std::collections::BTreeMap::new();
        for (name, value) in self.fields() {
            match value {
                Some(v) if required.contains(&name) => {
                    got.insert(name, v);
                }
                Some(_) => {
                    return err(format!("{at}: field {name} does not apply to kind {:?}", self.kind))
                }
                None if required.contains(&name) => {
                    return err(format!("{at}: kind {:?} requires field {name}", self.kind))
                }
                None => {}
            }
        }
        let built = match self.kind.as_str() {
            "projective" => {
                MapDescriptor::projective(got["m11"], got["m12"], got["m21"], got["m22"])
            }
            "sine_diffeo" => MapDescriptor::sine_diffeo(got["a"], got["b"]),
            "sine_diffeo_inverse" => {
                MapDescriptor::sine_diffeo(got["a"], got["b"]).map(|m| m.invert())
            }
            "rotation" => Ok(MapDescriptor::rotation(got["a"])),
            _ => unreachable!("kind vetted above"),
        };
        built.map_err(|e| ConfigError(format!("{at}: {e}")))
    }
}

fn build_measure(atoms: &[AtomSpec], at: &str) -> Result<NuMeasure> {
    if atoms.is_empty() {
        return err(format!("{at}: at least one [[atoms]] entry is required"));
    }
    let total: f64 = atoms.iter().map(|a| a.prob).sum();
    if (total - 1.0).abs() > 1e-12 {
        return err(format!("{at}: prob values sum to {total}, expected 1"));
    }
    for (i, a) in atoms.iter().enumerate() {
        if !(a.prob > 0.0 && a.prob <= 1.0) {
            return err(format!("{at}[{i}]: prob {} outside (0, 1]", a.prob));
        }
    }
    let pairs: Vec<(MapDescriptor, f64)> = atoms
        .iter()
        .enumerate()
        .map(|(i, a)| Ok((a.to_map(&format!("{at}[{i}]"))?, a.prob)))
        .collect::<Result<_>>()?;
    NuMeasure::new(pairs).map_err(|e| ConfigError(format!("{at}: {e}")))
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadiiConfig {
    pub r_min: f64,
    pub r_max: f64,
    pub n_radii: usize,
    /// Ball radius for the entropy integrand; picked from the sample when
    /// absent.
    pub entropy_radius: Option<f64>,
}

impl Default for RadiiConfig {
    fn default() -> Self {
        RadiiConfig { r_min: 1e-4, r_max: 0.05, n_radii: 12, entropy_radius: None }
    }
}

/// Knobs for the derivative-exponent estimators, which pay n_steps × grid
/// work per realization and want few realizations but a long horizon;
/// n_steps falls back to the top-level value when absent.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsConfig {
    pub n_samples: usize,
    pub n_steps: Option<usize>,
}

impl Default for ExponentsConfig {
    fn default() -> Self {
        ExponentsConfig { n_samples: 100, n_steps: None }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TolerancesConfig {
    #[serde(default = "default_point_tol")]
    pub point_tol: f64,
    #[serde(default = "default_warning_fraction")]
    pub max_warning_fraction: f64,
    #[serde(default = "default_atom_threshold")]
    pub atom_threshold: f64,
}

fn default_point_tol() -> f64 {
    1e-6
}

fn default_warning_fraction() -> f64 {
    0.01
}

fn default_atom_threshold() -> f64 {
    1e-3
}

impl Default for TolerancesConfig {
    fn default() -> Self {
        TolerancesConfig {
            point_tol: default_point_tol(),
            max_warning_fraction: default_warning_fraction(),
            atom_threshold: default_atom_threshold(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Output directory; the --out flag overrides it.
    pub dir: Option<String>,
    #[serde(default = "default_prefix")]
    pub prefix: String,
}

fn default_prefix() -> String {
    "run".to_string()
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dir: None, prefix: default_prefix() }
    }
}

/// Start pair for the `sync` subcommand.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyncConfig {
    pub x: f64,
    pub y: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub n_steps: usize,
    pub n_samples: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_probes")]
    pub probes: usize,
    #[serde(default = "default_mc_draws")]
    pub mc_draws: usize,
    pub atoms: Vec<AtomSpec>,
    #[serde(default)]
    pub radii: RadiiConfig,
    #[serde(default)]
    pub exponents: ExponentsConfig,
    #[serde(default)]
    pub tolerances: TolerancesConfig,
    #[serde(default)]
    pub output: OutputConfig,
    pub sync: Option<SyncConfig>,
}

fn default_grid() -> usize {
    128
}

fn default_probes() -> usize {
    2000
}

fn default_mc_draws() -> usize {
    20_000
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("n_steps", self.n_steps),
            ("n_samples", self.n_samples),
            ("probes", self.probes),
            ("mc_draws", self.mc_draws),
            ("radii.n_radii", self.radii.n_radii),
            ("exponents.n_samples", self.exponents.n_samples),
        ] {
            if v < 1 {
                return err(format!("{name} must be at least 1"));
            }
        }
        if self.grid < 64 {
            return err("grid must be at least 64");
        }
        if self.exponents.n_steps == Some(0) {
            return err("exponents.n_steps must be at least 1");
        }
        let r = &self.radii;
        if !(r.r_min > 0.0 && r.r_min < r.r_max && r.r_max < 0.5) {
            return err(format!(
                "radii: need 0 < r_min < r_max < 0.5, got r_min = {}, r_max = {}",
                r.r_min, r.r_max
            ));
        }
        if let Some(er) = r.entropy_radius {
            if !(er > 0.0 && er < 0.5) {
                return err(format!("radii.entropy_radius {er} outside (0, 0.5)"));
            }
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tolerances.point_tol", t.point_tol),
            ("tolerances.max_warning_fraction", t.max_warning_fraction),
            ("tolerances.atom_threshold", t.atom_threshold),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return err(format!("{name} must be a positive number, got {v}"));
            }
        }
        if let Some(s) = &self.sync {
            if s.n_samples < 1 {
                return err("sync.n_samples must be at least 1");
            }
            if !(s.x.is_finite() && s.y.is_finite()) {
                return err(format!("sync start points must be finite, got x = {}, y = {}", s.x, s.y));
            }
        }
        Ok(())
    }

    pub fn measure(&self) -> Result<NuMeasure> {
        build_measure(&self.atoms, "atoms")
    }
}

/// One family of the verification matrix: a role tag plus its atoms.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilySpec {
    pub name: String,
    pub role: FamilyRole,
    pub atoms: Vec<AtomSpec>,
}

/// Family roster for the verification matrix. Deliberately has no seed
/// knob: criteria run on pinned internal seeds so every invocation is the
/// same experiment.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyConfigSet {
    pub families: Vec<FamilySpec>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl VerifyConfigSet {
    pub fn families(&self) -> Result<Vec<VerifyFamily>> {
        self.families
            .iter()
            .enumerate()
            .map(|(i, f)| {
                if f.name.is_empty() {
                    return err(format!("families[{i}]: name must be non-empty"));
                }
                Ok(VerifyFamily {
                    name: f.name.clone(),
                    role: f.role,
                    nu: build_measure(&f.atoms, &format!("families[{i}].atoms"))?,
                })
            })
            .collect()
    }
}

pub fn load_experiment(path: &std::path::Path) -> Result<(ExperimentConfig, String)> {
    let text = read_config_text(path)?;
    let cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    cfg.validate()?;
    Ok((cfg, text))
}

pub fn load_verify_set(path: &std::path::Path) -> Result<(VerifyConfigSet, String)> {
    let text = read_config_text(path)?;
    let cfg: VerifyConfigSet =
        toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
    Ok((cfg, text))
}

fn read_config_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| ConfigError(format!("cannot read {}: {e}", path.display())))
}
