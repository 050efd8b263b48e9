use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize};

use crate::experiment::{Acquisition, CavitySetup, CouplingScale, PhotonFrequency, Shots};
use crate::lattice::{build_preset, kpath, KVector, LatticeSpec, Vec3};
use crate::spinwave::ModelParams;
use crate::Error;

/// A configuration problem located by its key path (e.g. `model.K_aniso`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() || self.path == "." {
            write!(f, "{}", self.message)
        } else {
            write!(f, "{}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

fn located(section: &str, err: Error) -> ConfigError {
    match err {
        Error::InvalidParameter { name, reason } => ConfigError::new(format!("{section}.{name}"), reason),
        other => ConfigError::new(section, other.to_string()),
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeConfig {
    #[serde(default)]
    pub preset: Option<String>,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default = "LatticeConfig::default_constant")]
    pub lattice_constant: f64,
    #[serde(default)]
    pub nn_vectors: Option<Vec<Vec3>>,
    #[serde(default)]
    pub nnn_vectors: Option<Vec<Vec3>>,
}

impl LatticeConfig {
    fn default_constant() -> f64 {
        1.0
    }

    pub fn build(&self) -> Result<LatticeSpec, ConfigError> {
        let custom = self.nn_vectors.is_some() || self.nnn_vectors.is_some();
        match (&self.preset, custom) {
            (Some(_), true) => Err(ConfigError::new(
                "lattice",
                "give either `preset` or custom `nn_vectors`/`nnn_vectors`, not both",
            )),
            (Some(preset), false) => build_preset(preset, self.lattice_constant).map_err(|e| match e {
                Error::UnknownPreset(_) => ConfigError::new("lattice.preset", e.to_string()),
                other => located("lattice", other),
            }),
            (None, _) => {
                let nn = self
                    .nn_vectors
                    .as_deref()
                    .ok_or_else(|| ConfigError::new("lattice.nn_vectors", "missing (or set `preset`)"))?;
                let nnn = self
                    .nnn_vectors
                    .as_deref()
                    .ok_or_else(|| ConfigError::new("lattice.nnn_vectors", "missing (or set `preset`)"))?;
                let name = self.name.clone().unwrap_or_else(|| "custom".into());
                LatticeSpec::custom(name, self.lattice_constant, nn, nnn).map_err(|e| located("lattice", e))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KPathConfig {
    pub direction: Vec3,
    pub k_max: f64,
    pub n_points: usize,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntanglementConfig {
    /// Excitation numbers (x, y) of the α and β modes.
    #[serde(default = "EntanglementConfig::default_states")]
    pub states: Vec<[usize; 2]>,
    #[serde(default = "EntanglementConfig::default_tail_tol")]
    pub tail_tol: f64,
}

impl EntanglementConfig {
    fn default_states() -> Vec<[usize; 2]> {
        vec![[1, 0], [0, 1], [1, 1]]
    }
    fn default_tail_tol() -> f64 {
        crate::squeezed::DEFAULT_TAIL_TOL
    }
}

impl Default for EntanglementConfig {
    fn default() -> Self {
        Self { states: Self::default_states(), tail_tol: Self::default_tail_tol() }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum OmegaSetting {
    Value(f64),
    Named(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub omega: OmegaSetting,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default, rename = "A0")]
    pub a0: Option<f64>,
}

impl CavityConfig {
    pub fn setup(&self) -> Result<CavitySetup, ConfigError> {
        let omega = match &self.omega {
            OmegaSetting::Value(w) if w.is_finite() && *w > 0.0 => PhotonFrequency::Value(*w),
            OmegaSetting::Value(w) => {
                return Err(ConfigError::new("cavity.omega", format!("must be > 0, got {w}")))
            }
            OmegaSetting::Named(s) if s == "resonant_alpha" => PhotonFrequency::ResonantAlpha,
            OmegaSetting::Named(s) if s == "resonant_beta" => PhotonFrequency::ResonantBeta,
            OmegaSetting::Named(s) => {
                return Err(ConfigError::new(
                    "cavity.omega",
                    format!("expected a number, \"resonant_alpha\" or \"resonant_beta\", got \"{s}\""),
                ))
            }
        };
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(v)
            } else {
                Err(ConfigError::new(format!("cavity.{key}"), format!("must be > 0, got {v}")))
            }
        };
        let coupling = match (self.lambda, self.a0) {
            (Some(l), None) => CouplingScale::Lambda(positive("lambda", l)?),
            (None, Some(a)) => CouplingScale::Amplitude(positive("A0", a)?),
            (Some(_), Some(_)) => return Err(ConfigError::new("cavity", "set `lambda` or `A0`, not both")),
            (None, None) => return Err(ConfigError::new("cavity", "missing `lambda` (or `A0`)")),
        };
        Ok(CavitySetup { omega, coupling })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format \"{other}\" (expected csv or json)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "OutputConfig::default_directory")]
    pub directory: PathBuf,
    #[serde(default = "OutputConfig::default_formats")]
    pub formats: Vec<Format>,
    /// Also write the raw (t, value) records of the experiment command.
    #[serde(default)]
    pub dump_series: bool,
}

impl OutputConfig {
    fn default_directory() -> PathBuf {
        PathBuf::from("out")
    }
    fn default_formats() -> Vec<Format> {
        vec![Format::Csv, Format::Json]
    }

    pub fn wants(&self, format: Format) -> bool {
        self.formats.contains(&format)
    }
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { directory: Self::default_directory(), formats: Self::default_formats(), dump_series: false }
    }
}

/// Worker count: a positive number or `auto` (one per core).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Threads {
    #[default]
    Auto,
    Count(usize),
}

impl Threads {
    /// Value for `rayon::ThreadPoolBuilder::num_threads`, where 0 means auto.
    pub fn get(self) -> usize {
        match self {
            Threads::Auto => 0,
            Threads::Count(n) => n,
        }
    }
}

impl FromStr for Threads {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "auto" => Ok(Threads::Auto),
            n => match n.parse::<usize>() {
                Ok(0) | Err(_) => Err(format!("threads must be a positive integer or \"auto\", got \"{n}\"")),
                Ok(n) => Ok(Threads::Count(n)),
            },
        }
    }
}

impl<'de> Deserialize<'de> for Threads {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Count(usize),
            Word(String),
        }
        match Repr::deserialize(d)? {
            Repr::Count(n) => n.to_string().parse(),
            Repr::Word(w) => w.parse(),
        }
        .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelParams,
    pub lattice: LatticeConfig,
    pub kpath: KPathConfig,
    #[serde(default)]
    pub entanglement: EntanglementConfig,
    #[serde(default)]
    pub cavity: Option<CavityConfig>,
    #[serde(default)]
    pub acquisition: Acquisition,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub threads: Threads,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub threads: Option<Threads>,
    pub formats: Option<Vec<Format>>,
    pub seed: Option<u64>,
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new("", e.to_string()))?;
        serde_path_to_error::deserialize(de)
            .map_err(|e| ConfigError::new(e.path().to_string(), e.inner().message().to_string()))
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(dir) = &overrides.out {
            self.output.directory = dir.clone();
        }
        if let Some(t) = overrides.threads {
            self.threads = t;
        }
        if let Some(f) = &overrides.formats {
            self.output.formats = f.clone();
        }
        if let Some(seed) = overrides.seed {
            self.acquisition.seed = seed;
        }
    }

    /// Checks every section and builds the lattice and k-path.
    pub fn resolve(&self) -> Result<Plan, ConfigError> {
        self.model.validate().map_err(|e| located("model", e))?;
        let spec = self.lattice.build()?;
        let ks = kpath(self.kpath.direction, self.kpath.k_max, self.kpath.n_points).map_err(|e| match e {
            Error::DegenerateKPath => ConfigError::new("kpath.direction", e.to_string()),
            other => located("kpath", other),
        })?;

        let tol = self.entanglement.tail_tol;
        if !(tol > 0.0 && tol < 1.0) {
            return Err(ConfigError::new("entanglement.tail_tol", format!("must lie in (0, 1), got {tol}")));
        }
        let states: Vec<(usize, usize)> = self.entanglement.states.iter().map(|s| (s[0], s[1])).collect();
        if let Some(i) = states.iter().position(|&(x, y)| x > 32 || y > 32) {
            return Err(ConfigError::new(format!("entanglement.states[{i}]"), "excitation numbers above 32 are not supported"));
        }

        let cavity = self.cavity.as_ref().map(CavityConfig::setup).transpose()?;
        check_acquisition(&self.acquisition)?;
        if self.output.formats.is_empty() {
            return Err(ConfigError::new("output.formats", "at least one of csv, json is required"));
        }
        Ok(Plan {
            model: self.model,
            spec,
            ks,
            states,
            tail_tol: tol,
            cavity,
            acquisition: self.acquisition,
            output: self.output.clone(),
            threads: self.threads,
        })
    }
}

fn check_acquisition(a: &Acquisition) -> Result<(), ConfigError> {
    if let Some(t) = a.t_max {
        if !(t.is_finite() && t > 0.0) {
            return Err(ConfigError::new("acquisition.t_max", format!("must be > 0, got {t}")));
        }
    }
    if let Some(n) = a.n_samples {
        if n < 32 {
            return Err(ConfigError::new("acquisition.n_samples", format!("need at least 32 samples, got {n}")));
        }
    }
    if !(a.periods.is_finite() && a.periods >= 2.0) {
        return Err(ConfigError::new("acquisition.periods", format!("must be >= 2, got {}", a.periods)));
    }
    if a.samples_per_period < 4 {
        return Err(ConfigError::new(
            "acquisition.samples_per_period",
            format!("must be >= 4, got {}", a.samples_per_period),
        ));
    }
    if let Shots::Count(0) = a.shots {
        return Err(ConfigError::new("acquisition.shots", "must be >= 1"));
    }
    Ok(())
}

/// A validated run: every section checked, lattice and k-path built.
#[derive(Debug, Clone, PartialEq)]
pub struct Plan {
    pub model: ModelParams,
    pub spec: LatticeSpec,
    pub ks: Vec<KVector>,
    pub states: Vec<(usize, usize)>,
    pub tail_tol: f64,
    pub cavity: Option<CavitySetup>,
    pub acquisition: Acquisition,
    pub output: OutputConfig,
    pub threads: Threads,
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
        [model]
        J1 = 1.0
        K_aniso = 0.5
        S = 1.0

        [lattice]
        preset = "g_type_simple_cubic"

        [kpath]
        direction = [0.0, 0.0, 1.0]
        k_max = 3.141592653589793
        n_points = 3
    "#;

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = RunConfig::from_toml_str(BASE).unwrap();
        assert_eq!(cfg.threads, Threads::Auto);
        assert_eq!(cfg.acquisition.shots, Shots::Count(10_000));
        assert_eq!(cfg.acquisition.periods, 4.0);
        assert_eq!(cfg.acquisition.samples_per_period, 64);
        let plan = cfg.resolve().unwrap();
        assert_eq!(plan.ks.len(), 3);
        assert_eq!(plan.spec.z1(), 6);
        assert!(plan.cavity.is_none());
    }

    #[test]
    fn unknown_keys_report_their_path() {
        let text = BASE.replace("K_aniso = 0.5", "K_aniso = 0.5\nJ3 = 1.0");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(err.path, "model.J3");
        assert!(err.message.contains("J3"), "{err}");

        let text = format!("{BASE}\n[output]\nformat = [\"csv\"]\n");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(err.path, "output.format");
        assert!(err.message.contains("format"));
    }

    #[test]
    fn type_errors_report_nested_paths() {
        let text = format!("{BASE}\n[acquisition]\nshots = \"lots\"\n");
        let err = RunConfig::from_toml_str(&text).unwrap_err();
        assert_eq!(err.path, "acquisition.shots");
        let text = format!("{BASE}\n[cavity]\nomega = \"resonant_alpha\"\nlambda = -1.0\n");
        let err = RunConfig::from_toml_str(&text).unwrap().resolve().unwrap_err();
        assert_eq!(err.path, "cavity.lambda");
    }

    #[test]
    fn semantic_errors_report_their_path() {
        let err = RunConfig::from_toml_str(&BASE.replace("K_aniso = 0.5", "K_aniso = -0.5"))
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err.path, "model.K_aniso");
        let err = RunConfig::from_toml_str(&BASE.replace("[0.0, 0.0, 1.0]", "[0.0, 0.0, 0.0]"))
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err.path, "kpath.direction");
        let err = RunConfig::from_toml_str(&BASE.replace("g_type_simple_cubic", "hexagonal"))
            .unwrap()
            .resolve()
            .unwrap_err();
        assert_eq!(err.path, "lattice.preset");
    }

    #[test]
    fn custom_lattice_and_cavity_forms() {
        let text = r#"
            threads = 2
            [model]
            J1 = 1.0
            K_aniso = 0.5
            S = 1.0
            [lattice]
            name = "chain"
            nn_vectors = [[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]]
            nnn_vectors = [[2.0, 0.0, 0.0], [-2.0, 0.0, 0.0]]
            [kpath]
            direction = [1.0, 0.0, 0.0]
            k_max = 1.0
            n_points = 5
            [cavity]
            omega = 3.5
            A0 = 0.01
            [acquisition]
            shots = "exact"
            seed = 9
        "#;
        let plan = RunConfig::from_toml_str(text).unwrap().resolve().unwrap();
        assert_eq!(plan.threads, Threads::Count(2));
        assert_eq!(plan.spec.z1(), 2);
        let cav = plan.cavity.unwrap();
        assert_eq!(cav.omega, PhotonFrequency::Value(3.5));
        assert_eq!(cav.coupling, CouplingScale::Amplitude(0.01));
        assert_eq!(plan.acquisition.shots, Shots::Exact);
    }

    #[test]
    fn overrides_take_precedence() {
        let mut cfg = RunConfig::from_toml_str(BASE).unwrap();
        cfg.apply(&Overrides {
            out: Some("elsewhere".into()),
            threads: Some(Threads::Count(3)),
            formats: Some(vec![Format::Json]),
            seed: Some(42),
        });
        assert_eq!(cfg.output.directory, PathBuf::from("elsewhere"));
        assert_eq!(cfg.threads, Threads::Count(3));
        assert_eq!(cfg.output.formats, vec![Format::Json]);
        assert_eq!(cfg.acquisition.seed, 42);
    }

    #[test]
    fn thread_setting_parses() {
        assert_eq!("auto".parse::<Threads>().unwrap(), Threads::Auto);
        assert_eq!("4".parse::<Threads>().unwrap(), Threads::Count(4));
        assert!("0".parse::<Threads>().is_err());
        assert!("many".parse::<Threads>().is_err());
    }
}
