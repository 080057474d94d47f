//! Scenario files: TOML with `#` comments.
//!
//! ```toml
//! name = "fig3b"
//! N = 20
//! scheme = "nonlocal_parity"
//!
//! [state]
//! kind = "variational"
//! target = "eigenstate"
//! m = 6
//! p = 3
//!
//! [gravity]
//! omega_eg = 3.141592653589793e15
//! delta_z = 1.0
//!
//! [time]
//! stop = 10.0
//! steps = 2001
//! ```
//!
//! Angles may be written as numbers or as `"pi/50"`, `"3*pi/4"` and so on.

use std::fmt;
use std::path::{Path, PathBuf};

use dickenet_core::dicke::EnsembleDims;
use dickenet_core::gravity::{GravityContext, ReferenceNode, HBAR, SPEED_OF_LIGHT, STANDARD_GRAVITY};
use dickenet_core::measurement::SchemeKind;
use dickenet_core::network::SeedSpec;
use serde::{Deserialize, Deserializer, Serialize};

/// A configuration problem, anchored to a line of the file when possible.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: Option<PathBuf>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.path, self.line) {
            (Some(p), Some(l)) => write!(f, "{}:{l}: {}", p.display(), self.message),
            (Some(p), None) => write!(f, "{}: {}", p.display(), self.message),
            (None, Some(l)) => write!(f, "line {l}: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PathChoice {
    #[default]
    Analytic,
    Oracle,
    /// Analytic trace plus an analytic-versus-oracle comparison.
    Both,
}

fn default_scheme() -> SchemeKind {
    SchemeKind::NonlocalParity
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    #[serde(rename = "N")]
    pub atoms: usize,
    #[serde(default)]
    pub rng_seed: u64,
    /// Relative to the output root.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
    #[serde(default = "default_scheme")]
    pub scheme: SchemeKind,
    #[serde(default)]
    pub path: PathChoice,
    #[serde(default)]
    pub seed: SeedConfig,
    pub gravity: GravityConfig,
    pub time: TimeGrid,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aci: Option<AciConfig>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeedConfig {
    #[serde(default, deserialize_with = "angle")]
    pub phi0: f64,
    #[serde(default)]
    pub infidelity: f64,
}

impl SeedConfig {
    pub fn spec(&self) -> SeedSpec {
        SeedSpec { phi0: self.phi0, infidelity: self.infidelity }
    }
}

fn standard_gravity() -> f64 {
    STANDARD_GRAVITY
}
fn speed_of_light() -> f64 {
    SPEED_OF_LIGHT
}
fn hbar() -> f64 {
    HBAR
}

/// Node B sits `delta_z` above node A in a field `g`, unless both
/// potentials are given explicitly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GravityConfig {
    /// Transition angular frequency, rad/s.
    pub omega_eg: f64,
    #[serde(default = "standard_gravity")]
    pub g: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta_z: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_a: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_b: Option<f64>,
    #[serde(default = "speed_of_light")]
    pub c: f64,
    #[serde(default = "hbar")]
    pub hbar: f64,
    #[serde(default)]
    pub reference: ReferenceNode,
}

impl GravityConfig {
    pub fn context(&self) -> dickenet_core::Result<GravityContext> {
        let ctx = GravityContext::new(self.omega_eg, self.g, self.delta_z.unwrap_or(0.0))?
            .with_constants(self.c, self.hbar)?
            .with_reference(self.reference);
        match (self.phi_a, self.phi_b) {
            (Some(a), Some(b)) => ctx.with_potentials(a, b),
            _ => Ok(ctx),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        let step = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.start + k as f64 * step).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StateSpec {
    Variational(VariationalSpec),
    /// Double twisting applied to both nodes.
    NoonMinusOne,
    /// Double twisting followed by the energy-tuning gate.
    PsiAlpha(AlphaConfig),
    Sequential(SequentialSpec),
    /// Explicit real amplitudes `ψ_ℓ` for `ℓ = 0..=N` (normalized on load).
    Profile(ProfileSpec),
}

impl StateSpec {
    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::Variational(_) => "variational",
            Self::NoonMinusOne => "noon_minus_one",
            Self::PsiAlpha(_) => "psi_alpha",
            Self::Sequential(_) => "sequential",
            Self::Profile(_) => "profile",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Eigenstate,
    Clock,
    Coherent,
    Energy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSettings {
    #[serde(default = "OptimizerSettings::default_restarts")]
    pub restarts: usize,
    #[serde(default = "OptimizerSettings::default_max_evals")]
    pub max_evals: usize,
    #[serde(default = "OptimizerSettings::default_tolerance")]
    pub simplex_tolerance: f64,
}

impl OptimizerSettings {
    fn default_restarts() -> usize {
        50
    }
    fn default_max_evals() -> usize {
        20_000
    }
    fn default_tolerance() -> f64 {
        1e-8
    }
}

impl Default for OptimizerSettings {
    fn default() -> Self {
        Self {
            restarts: Self::default_restarts(),
            max_evals: Self::default_max_evals(),
            simplex_tolerance: Self::default_tolerance(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariationalSpec {
    pub target: TargetKind,
    pub p: usize,
    /// Eigenstate excitation number.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m2: Option<usize>,
    /// Overlap weight of the target-distribution cost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda2: Option<f64>,
    #[serde(default)]
    pub optimizer: OptimizerSettings,
}

impl VariationalSpec {
    /// Tuned per target so that the vacuum term is not sacrificed for overlap.
    pub fn default_lambda(target: TargetKind) -> f64 {
        match target {
            TargetKind::Eigenstate => 0.5,
            TargetKind::Clock => 0.25,
            TargetKind::Coherent | TargetKind::Energy => 1.0,
        }
    }

    pub fn lambda_or_default(&self) -> f64 {
        self.lambda.unwrap_or_else(|| Self::default_lambda(self.target))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaConfig {
    #[serde(deserialize_with = "angle")]
    pub alpha: f64,
    #[serde(default)]
    pub k: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SequenceKind {
    Eigenstate,
    Clock,
    Profile,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialSpec {
    pub sequence: SequenceKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l1: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l2: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub first: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty", deserialize_with = "angles")]
    pub thetas: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub amplitudes: Vec<f64>,
}

/// Either explicit `effective_mass`/`effective_splitting` or the excitation
/// levels `upper`/`lower` they derive from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AciConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_mass: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub effective_splitting: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub upper: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lower: Option<usize>,
    /// Visibility window, seconds.
    pub window: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum RawAngle {
    Float(f64),
    Int(i64),
    Text(String),
}

impl RawAngle {
    fn value(self) -> Result<f64, String> {
        match self {
            RawAngle::Float(v) => Ok(v),
            RawAngle::Int(v) => Ok(v as f64),
            RawAngle::Text(s) => parse_angle(&s),
        }
    }
}

fn angle<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    RawAngle::deserialize(d)?.value().map_err(serde::de::Error::custom)
}

fn angles<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    Vec::<RawAngle>::deserialize(d)?
        .into_iter()
        .map(|a| a.value().map_err(serde::de::Error::custom))
        .collect()
}

/// `"0.3"`, `"pi"`, `"-pi/4"`, `"3*pi/4"`, `"2pi/3"`.
pub fn parse_angle(text: &str) -> Result<f64, String> {
    let s = text.trim().to_ascii_lowercase();
    let bad = || format!("`{text}` is not an angle (try 0.3, pi/50 or 3*pi/4)");
    let (num, den) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), Some(d.trim())),
        None => (s.as_str(), None),
    };
    let (sign, num) = match num.strip_prefix('-') {
        Some(rest) => (-1.0, rest.trim()),
        None => (1.0, num),
    };
    let numerator = match num.strip_suffix("pi").or_else(|| num.strip_suffix('π')) {
        Some(coef) => {
            let coef = coef.trim().trim_end_matches('*').trim();
            let c = if coef.is_empty() { 1.0 } else { coef.parse::<f64>().map_err(|_| bad())? };
            c * std::f64::consts::PI
        }
        None => num.parse::<f64>().map_err(|_| bad())?,
    };
    let denominator = match den {
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
        None => 1.0,
    };
    let v = sign * numerator / denominator;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(bad())
    }
}

/// Finds the line of `key` inside `[table]` (`""` is the root table), or of
/// the table header when the key is absent.
pub fn locate(text: &str, table: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut header = (table.is_empty()).then_some(1);
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            if current == table {
                header = Some(i + 1);
            }
            continue;
        }
        if current == table && !key.is_empty() {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim().trim_matches('"') == key {
                    return Some(i + 1);
                }
            }
        }
    }
    header
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// A parsed file together with its text, for anchoring later errors.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: ScenarioConfig,
    pub path: Option<PathBuf>,
    pub text: String,
}

impl LoadedConfig {
    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
            path: Some(path.to_path_buf()),
            line: None,
            message: format!("cannot read config: {e}"),
        })?;
        let mut loaded = Self::from_text(&text).map_err(|e| ConfigError { path: Some(path.to_path_buf()), ..e })?;
        loaded.path = Some(path.to_path_buf());
        Ok(loaded)
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let config: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError {
            path: None,
            line: e.span().map(|s| line_of_offset(text, s.start)),
            message: e.message().to_string(),
        })?;
        let loaded = Self { config, path: None, text: text.to_string() };
        loaded.config.validate().map_err(|(table, key, message)| loaded.error(table, key, message))?;
        Ok(loaded)
    }

    pub fn error(&self, table: &str, key: &str, message: impl Into<String>) -> ConfigError {
        ConfigError { path: self.path.clone(), line: locate(&self.text, table, key), message: message.into() }
    }

    pub fn with_path(mut self, path: Option<PathBuf>) -> Self {
        self.path = path;
        self
    }
}

type Invalid = (&'static str, &'static str, String);

fn require(ok: bool, table: &'static str, key: &'static str, message: impl FnOnce() -> String) -> Result<(), Invalid> {
    if ok {
        Ok(())
    } else {
        Err((table, key, message()))
    }
}

impl ScenarioConfig {
    pub fn dims(&self) -> EnsembleDims {
        EnsembleDims::new(self.atoms).expect("validated")
    }

    /// Checks everything that can be checked without running physics.
    pub fn validate(&self) -> Result<(), Invalid> {
        require(!self.name.trim().is_empty(), "", "name", || "name must not be empty".into())?;
        require(EnsembleDims::new(self.atoms).is_ok(), "", "N", || format!("N = {} must be at least 1", self.atoms))?;
        if let Some(dir) = &self.output_dir {
            require(!Path::new(dir).is_absolute(), "", "output_dir", || {
                "output_dir must be relative to the output root".into()
            })?;
        }
        self.seed
            .spec()
            .validate()
            .map_err(|e| ("seed", "infidelity", e.to_string()))?;
        let g = &self.gravity;
        require(g.phi_a.is_some() == g.phi_b.is_some(), "gravity", "phi_a", || {
            "phi_a and phi_b must be given together".into()
        })?;
        require(g.delta_z.is_some() || g.phi_a.is_some(), "gravity", "", || {
            "give either delta_z or both phi_a and phi_b".into()
        })?;
        g.context().map_err(|e| ("gravity", "", e.to_string()))?;
        let t = &self.time;
        require(t.steps >= 2, "time", "steps", || format!("steps = {} must be at least 2", t.steps))?;
        require(t.start >= 0.0 && t.start.is_finite(), "time", "start", || "start must be ≥ 0".into())?;
        require(t.stop > t.start && t.stop.is_finite(), "time", "stop", || "stop must exceed start".into())?;
        if let Some(state) = &self.state {
            self.validate_state(state)?;
        }
        if let Some(aci) = &self.aci {
            require(aci.window > 0.0 && aci.window.is_finite(), "aci", "window", || "window must be positive".into())?;
            let explicit = aci.effective_mass.is_some() && aci.effective_splitting.is_some();
            let levels = aci.upper.is_some() && aci.lower.is_some();
            require(explicit != levels, "aci", "", || {
                "give either effective_mass and effective_splitting, or upper and lower".into()
            })?;
        }
        Ok(())
    }

    fn validate_state(&self, state: &StateSpec) -> Result<(), Invalid> {
        let n = self.atoms;
        match state {
            StateSpec::Variational(v) => {
                require(v.p >= 1, "state", "p", || "p must be at least 1".into())?;
                match v.target {
                    TargetKind::Eigenstate => {
                        let m = v.m.unwrap_or(0);
                        require((1..=n).contains(&m), "state", "m", || format!("eigenstate target needs 1 ≤ m ≤ N, got {m}"))?;
                    }
                    TargetKind::Clock => {
                        let (m1, m2) = (v.m1.unwrap_or(0), v.m2.unwrap_or(0));
                        require(1 <= m1 && m1 < m2 && m2 <= n, "state", "m1", || {
                            format!("clock target needs 1 ≤ m1 < m2 ≤ N, got ({m1}, {m2})")
                        })?;
                    }
                    TargetKind::Coherent | TargetKind::Energy => {}
                }
                let lambda = v.lambda_or_default();
                require(lambda > 0.0 && lambda.is_finite(), "state", "lambda", || "lambda must be positive".into())?;
                let o = &v.optimizer;
                require(o.restarts >= 1, "state.optimizer", "restarts", || "restarts must be ≥ 1".into())?;
                require(o.max_evals >= 1, "state.optimizer", "max_evals", || "max_evals must be ≥ 1".into())?;
                require(o.simplex_tolerance > 0.0, "state.optimizer", "simplex_tolerance", || {
                    "simplex_tolerance must be positive".into()
                })?;
            }
            StateSpec::NoonMinusOne | StateSpec::PsiAlpha(_) => {
                require(n % 2 == 0 && n >= 2, "", "N", || format!("double twisting needs even N, got {n}"))?;
            }
            StateSpec::Sequential(s) => match s.sequence {
                SequenceKind::Eigenstate => {
                    let l = s.l.unwrap_or(0);
                    require((1..=n).contains(&l), "state", "l", || format!("need 1 ≤ l ≤ N, got {l}"))?;
                }
                SequenceKind::Clock => {
                    let (l1, l2) = (s.l1.unwrap_or(0), s.l2.unwrap_or(0));
                    require(1 <= l1 && l1 < l2 && l2 <= n, "state", "l1", || {
                        format!("need 1 ≤ l1 < l2 ≤ N, got ({l1}, {l2})")
                    })?;
                }
                SequenceKind::Profile => {
                    let first = s.first.unwrap_or(0);
                    require(first >= 1 && first + s.thetas.len() <= n, "state", "first", || {
                        format!("profile needs 1 ≤ first and first + len(thetas) ≤ N, got {first} + {}", s.thetas.len())
                    })?;
                }
            },
            StateSpec::Profile(p) => {
                require(p.amplitudes.len() == n + 1, "state", "amplitudes", || {
                    format!("expected N + 1 = {} amplitudes, got {}", n + 1, p.amplitudes.len())
                })?;
                require(p.amplitudes[0] == 0.0, "state", "amplitudes", || "the vacuum amplitude must be 0".into())?;
                require(p.amplitudes.iter().any(|a| *a != 0.0), "state", "amplitudes", || {
                    "amplitudes must not all vanish".into()
                })?;
            }
        }
        Ok(())
    }

    /// The text written into manifests; parses back to an equal config.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const FIG3: &str = r#"
name = "fig3b"
N = 20

[state]
kind = "variational"
target = "eigenstate"
m = 6
p = 3

[gravity]
omega_eg = 3.141592653589793e15
delta_z = 1.0

[time]
stop = 10.0
steps = 101
"#;

    #[test]
    fn angles() {
        assert_eq!(parse_angle("0.25").unwrap(), 0.25);
        assert_eq!(parse_angle("pi/50").unwrap(), PI / 50.0);
        assert_eq!(parse_angle("3*pi/4").unwrap(), 3.0 * PI / 4.0);
        assert_eq!(parse_angle("-pi").unwrap(), -PI);
        assert_eq!(parse_angle("2pi/3").unwrap(), 2.0 * PI / 3.0);
        assert!(parse_angle("pie").is_err());
        assert!(parse_angle("1/0").is_err());
    }

    #[test]
    fn parses_and_round_trips() {
        let c = LoadedConfig::from_text(FIG3).unwrap().config;
        assert_eq!(c.atoms, 20);
        assert_eq!(c.gravity.g, STANDARD_GRAVITY);
        assert_eq!(c.scheme, SchemeKind::NonlocalParity);
        let again = LoadedConfig::from_text(&c.to_toml()).unwrap().config;
        assert_eq!(again, c);
    }

    #[test]
    fn angle_strings_in_files() {
        let text = FIG3.replace(
            "kind = \"variational\"\ntarget = \"eigenstate\"\nm = 6\np = 3",
            "kind = \"psi_alpha\"\nalpha = \"pi/50\"",
        );
        let c = LoadedConfig::from_text(&text).unwrap().config;
        assert_eq!(c.state, Some(StateSpec::PsiAlpha(AlphaConfig { alpha: PI / 50.0, k: 0 })));
    }

    #[test]
    fn errors_point_at_lines() {
        let bad = FIG3.replace("p = 3", "p = 0");
        let e = LoadedConfig::from_text(&bad).unwrap_err();
        assert_eq!(e.line, Some(9), "{e}");

        let typo = FIG3.replace("delta_z", "delta_zz");
        let e = LoadedConfig::from_text(&typo).unwrap_err();
        assert_eq!(e.line, Some(13), "{e}");

        let syntax = FIG3.replace("steps = 101", "steps = ");
        let e = LoadedConfig::from_text(&syntax).unwrap_err();
        assert_eq!(e.line, Some(17), "{e}");

        let steps = FIG3.replace("steps = 101", "steps = 1");
        assert_eq!(LoadedConfig::from_text(&steps).unwrap_err().line, Some(17));

        let odd = FIG3
            .replace("N = 20", "N = 21")
            .replace("kind = \"variational\"\ntarget = \"eigenstate\"\nm = 6\np = 3", "kind = \"noon_minus_one\"");
        assert_eq!(LoadedConfig::from_text(&odd).unwrap_err().line, Some(3));
    }

    #[test]
    fn time_grid() {
        let t = TimeGrid { start: 0.0, stop: 1.0, steps: 5 }.times();
        assert_eq!(t, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }
}
