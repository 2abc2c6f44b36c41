//! JSON run configuration.
//!
//! Every section except `system` and `channels` has defaults. Unknown keys
//! anywhere in the document are rejected.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid override {0:?}: expected key.path=value")]
    Override(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A frequency or duration, either a bare number in run units or a value
/// with an explicit unit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Native(f64),
    WithUnit { value: f64, unit: UnitName },
}

/// Unit names accepted by [`Quantity`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum UnitName {
    #[serde(rename = "native")]
    Native,
    #[serde(rename = "GHz")]
    Ghz,
    #[serde(rename = "THz")]
    Thz,
    #[serde(rename = "ueV", alias = "μeV")]
    MicroEv,
    #[serde(rename = "s")]
    Seconds,
    #[serde(rename = "ns")]
    Nanoseconds,
    #[serde(rename = "ps")]
    Picoseconds,
    #[serde(rename = "fs")]
    Femtoseconds,
}

impl UnitName {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Native => "native",
            Self::Ghz => "GHz",
            Self::Thz => "THz",
            Self::MicroEv => "ueV",
            Self::Seconds => "s",
            Self::Nanoseconds => "ns",
            Self::Picoseconds => "ps",
            Self::Femtoseconds => "fs",
        }
    }

    pub fn is_duration(self) -> bool {
        matches!(self, Self::Seconds | Self::Nanoseconds | Self::Picoseconds | Self::Femtoseconds)
    }
}

impl From<f64> for Quantity {
    fn from(v: f64) -> Self {
        Self::Native(v)
    }
}

/// The driven system and its parameters. Frequencies are angular.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum SystemConfig {
    #[serde(rename = "driven_2ls_rwa")]
    DrivenRwa { omega0: Quantity, omega: Quantity, rabi: Quantity },
    #[serde(rename = "driven_2ls_full")]
    DrivenFull {
        omega0: Quantity,
        omega: Quantity,
        rabi: Quantity,
        /// Counter-rotating amplitude; equal to `rabi` when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        rabi_counter: Option<Quantity>,
    },
    #[serde(rename = "bichromatic")]
    Bichromatic { delta_bar: Quantity, beat: Quantity, rabi1: Quantity, rabi2: Quantity },
    #[serde(rename = "pulse_train")]
    PulseTrain {
        delta: Quantity,
        period: Quantity,
        /// Gaussian width; `period / 16` when omitted.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<Quantity>,
        #[serde(default = "default_harmonics")]
        n_harmonics: usize,
        #[serde(default = "default_area")]
        pulse_area: f64,
        #[serde(default = "default_center")]
        center: Quantity,
    },
}

impl SystemConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::DrivenRwa { .. } => "driven_2ls_rwa",
            Self::DrivenFull { .. } => "driven_2ls_full",
            Self::Bichromatic { .. } => "bichromatic",
            Self::PulseTrain { .. } => "pulse_train",
        }
    }
}

fn default_harmonics() -> usize {
    40
}

fn default_area() -> f64 {
    std::f64::consts::PI
}

fn default_center() -> Quantity {
    Quantity::Native(0.0)
}

/// One collapse channel. Exactly one of `rate` and `lifetime` is given.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub operator: OperatorName,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate: Option<Quantity>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lifetime: Option<Quantity>,
}

/// Named two-level operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorName {
    SigmaMinus,
    SigmaPlus,
    SigmaX,
    SigmaY,
    SigmaZ,
    ExcitedProjector,
    GroundProjector,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    #[default]
    Flime,
    Reference,
    Both,
}

impl SolverChoice {
    pub fn kinds(self) -> &'static [SolverKind] {
        match self {
            Self::Flime => &[SolverKind::Flime],
            Self::Reference => &[SolverKind::Reference],
            Self::Both => &[SolverKind::Flime, SolverKind::Reference],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Flime,
    Reference,
}

impl SolverKind {
    pub fn label(self) -> &'static str {
        match self {
            Self::Flime => "flime",
            Self::Reference => "reference",
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Negligibility cutoff; serialized as a number or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "CutoffRepr", into = "CutoffRepr")]
pub struct Cutoff(pub f64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CutoffRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<CutoffRepr> for Cutoff {
    type Error = String;

    fn try_from(r: CutoffRepr) -> Result<Self, String> {
        match r {
            CutoffRepr::Number(v) if v >= 0.0 => Ok(Self(v)),
            CutoffRepr::Number(v) => Err(format!("secular_cutoff must be >= 0, got {v}")),
            CutoffRepr::Text(s) if s == "inf" => Ok(Self(f64::INFINITY)),
            CutoffRepr::Text(s) => Err(format!("secular_cutoff must be a number or \"inf\", got {s:?}")),
        }
    }
}

impl From<Cutoff> for CutoffRepr {
    fn from(c: Cutoff) -> Self {
        if c.0.is_infinite() {
            Self::Text("inf".into())
        } else {
            Self::Number(c.0)
        }
    }
}

/// Output times: either explicit, or `n_periods * samples_per_period`
/// uniform samples after `t = 0`, which is included.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeGrid {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_periods: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples_per_period: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub times: Option<Vec<f64>>,
}

impl TimeGrid {
    pub const DEFAULT_PERIODS: usize = 10;
    pub const DEFAULT_SAMPLES: usize = 20;

    pub fn periods(&self) -> usize {
        self.n_periods.unwrap_or(Self::DEFAULT_PERIODS)
    }

    pub fn samples(&self) -> usize {
        self.samples_per_period.unwrap_or(Self::DEFAULT_SAMPLES)
    }

    /// Output times for a drive of the given period.
    pub fn resolve(&self, period: f64) -> Vec<f64> {
        match &self.times {
            Some(t) => t.clone(),
            None => {
                let n = self.periods() * self.samples();
                let dt = period / self.samples() as f64;
                (0..=n).map(|j| j as f64 * dt).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    pub rtol: f64,
    pub atol: f64,
    /// Step cap as a fraction of the drive period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_step: Option<f64>,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { rtol: 1e-8, atol: 1e-10, max_step: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    ExcitedPopulation,
    GroundPopulation,
    SigmaX,
    SigmaY,
    SigmaZ,
    /// Real and imaginary part of `<sigma_minus>`.
    CoherenceRe,
    CoherenceIm,
    Purity,
    Trace,
}

impl Observable {
    pub fn name(self) -> &'static str {
        match self {
            Self::ExcitedPopulation => "excited_population",
            Self::GroundPopulation => "ground_population",
            Self::SigmaX => "sigma_x",
            Self::SigmaY => "sigma_y",
            Self::SigmaZ => "sigma_z",
            Self::CoherenceRe => "coherence_re",
            Self::CoherenceIm => "coherence_im",
            Self::Purity => "purity",
            Self::Trace => "trace",
        }
    }
}

fn default_outputs() -> Vec<Observable> {
    vec![Observable::ExcitedPopulation]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialState {
    #[default]
    Ground,
    Excited,
    MaximallyMixed,
    /// Haar-like random pure state drawn from `seed`.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NessConfig {
    pub conv_tol: f64,
    pub max_periods: usize,
    pub samples_per_period: usize,
    pub consecutive: usize,
    pub observable: Observable,
}

impl Default for NessConfig {
    fn default() -> Self {
        Self { conv_tol: 1e-6, max_periods: 5000, samples_per_period: 20, consecutive: 3, observable: Observable::ExcitedPopulation }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowChoice {
    #[default]
    Hann,
    Rectangular,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    /// Correlation window length in run units.
    pub tau_max: f64,
    pub n_tau: usize,
    pub fft_len: usize,
    pub window: WindowChoice,
    /// Subtract the coherent part of the correlation.
    pub incoherent: bool,
    /// Reference frequency shifted to zero detuning.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub demodulate: Option<f64>,
    /// Start states taken evenly from the steady-state cycle.
    pub starts: usize,
    /// Relative threshold for reported peaks.
    pub peak_threshold: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            tau_max: 100.0,
            n_tau: 2048,
            fft_len: 8192,
            window: WindowChoice::Hann,
            incoherent: false,
            demodulate: None,
            starts: 1,
            peak_threshold: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BenchConfig {
    pub periods: Vec<usize>,
    pub repeats: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self { periods: vec![10, 100, 1000, 10000], repeats: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub system: SystemConfig,
    /// Time unit of every bare number: `1`, `s`, `ns`, `ps` or `fs`.
    #[serde(default = "default_unit")]
    pub unit: String,
    pub channels: Vec<ChannelConfig>,
    #[serde(default)]
    pub solver: SolverChoice,
    #[serde(default)]
    pub secular_cutoff: Cutoff,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    #[serde(default = "default_coeff_floor")]
    pub coeff_floor: f64,
    #[serde(default)]
    pub time: TimeGrid,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_outputs")]
    pub outputs: Vec<Observable>,
    #[serde(default)]
    pub initial_state: InitialState,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub ness: NessConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
    #[serde(default)]
    pub bench: BenchConfig,
}

fn default_unit() -> String {
    "1".into()
}

fn default_k_max() -> usize {
    20
}

fn default_n_samples() -> usize {
    256
}

fn default_coeff_floor() -> f64 {
    1e-12
}

impl RunConfig {
    /// Reads a config file and applies `key.path=value` overrides.
    pub fn load(path: &Path, overrides: &[String]) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|source| ConfigError::Read { path: path.display().to_string(), source })?;
        Self::parse(&text, overrides)
    }

    pub fn parse(text: &str, overrides: &[String]) -> Result<Self, ConfigError> {
        // Without overrides parse the text directly so errors carry line numbers.
        let cfg: Self = if overrides.is_empty() {
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?
        } else {
            let mut doc: Value = serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
            for o in overrides {
                apply_override(&mut doc, o)?;
            }
            serde_json::from_value(doc).map_err(|e| ConfigError::Parse(format!("{e} (after overrides)")))?
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.channels.is_empty() {
            return bad("at least one channel is required; use rate 0 for a closed system".into());
        }
        for (i, c) in self.channels.iter().enumerate() {
            if c.rate.is_some() == c.lifetime.is_some() {
                return bad(format!("channels[{i}]: give exactly one of rate and lifetime"));
            }
        }
        if self.n_samples < 4 {
            return bad(format!("n_samples must be >= 4, got {}", self.n_samples));
        }
        if self.k_max >= self.n_samples / 2 {
            return bad(format!("k_max must be below n_samples / 2 = {}, got {}", self.n_samples / 2, self.k_max));
        }
        if !(self.coeff_floor >= 0.0) {
            return bad(format!("coeff_floor must be >= 0, got {}", self.coeff_floor));
        }
        match &self.time.times {
            Some(t) => {
                if self.time.n_periods.is_some() || self.time.samples_per_period.is_some() {
                    return bad("time: give either times or n_periods/samples_per_period".into());
                }
                if t.is_empty() || t[0] < 0.0 || t.windows(2).any(|w| w[1] <= w[0]) || t.iter().any(|x| !x.is_finite()) {
                    return bad("time.times must be finite, non-negative and strictly increasing".into());
                }
            }
            None => {
                if self.time.periods() < 1 {
                    return bad("time.n_periods must be >= 1".into());
                }
                if self.time.samples() < 1 {
                    return bad("time.samples_per_period must be >= 1".into());
                }
            }
        }
        let t = &self.tolerances;
        if !(t.rtol > 0.0 && t.atol > 0.0) || t.max_step.is_some_and(|h| !(h > 0.0)) {
            return bad(format!("tolerances must be positive, got {t:?}"));
        }
        if self.outputs.is_empty() {
            return bad("outputs must name at least one observable".into());
        }
        let n = &self.ness;
        if !(n.conv_tol > 0.0) || n.max_periods == 0 || n.samples_per_period == 0 || n.consecutive == 0 {
            return bad(format!("invalid ness section: {n:?}"));
        }
        let s = &self.spectrum;
        if !(s.tau_max > 0.0) || s.n_tau < 2 || s.starts == 0 {
            return bad(format!("invalid spectrum section: {s:?}"));
        }
        if self.bench.repeats < 3 {
            return bad(format!("bench.repeats must be >= 3, got {}", self.bench.repeats));
        }
        if self.bench.periods.is_empty() || self.bench.periods.contains(&0) {
            return bad("bench.periods must be a non-empty list of positive counts".into());
        }
        Ok(())
    }
}

/// Sets `a.b.c` in a JSON document. The value is parsed as JSON when
/// possible and taken as a string otherwise.
pub fn apply_override(doc: &mut Value, spec: &str) -> Result<(), ConfigError> {
    let (path, raw) = spec.split_once('=').ok_or_else(|| ConfigError::Override(spec.into()))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigError::Override(spec.into()));
    }
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.into()));
    let mut node = doc;
    for key in &keys[..keys.len() - 1] {
        let obj = node
            .as_object_mut()
            .ok_or_else(|| ConfigError::Invalid(format!("override {path}: {key} is not inside an object")))?;
        node = obj.entry(key.to_string()).or_insert_with(|| Value::Object(Default::default()));
    }
    let last = keys[keys.len() - 1];
    node.as_object_mut()
        .ok_or_else(|| ConfigError::Invalid(format!("override {path}: parent of {last} is not an object")))?
        .insert(last.to_string(), value);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "system": {"kind": "driven_2ls_full", "omega0": 1.0, "omega": 1.0, "rabi": 0.5},
        "channels": [{"operator": "sigma_minus", "rate": 0.1}]
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.k_max, 20);
        assert_eq!(cfg.secular_cutoff, Cutoff(0.0));
        assert_eq!(cfg.solver, SolverChoice::Flime);
        assert_eq!(cfg.time.resolve(1.0).len(), 201);
    }

    #[test]
    fn unknown_keys_are_rejected_with_position() {
        let text = MINIMAL.replace("\"rabi\": 0.5", "\"rabi\": 0.5, \"Omega\": 2");
        let err = RunConfig::parse(&text, &[]).unwrap_err().to_string();
        assert!(err.contains("Omega") && err.contains("line 2"), "{err}");
        let text = MINIMAL.replace("\"channels\"", "\"chanels\": [], \"channels\"");
        assert!(RunConfig::parse(&text, &[]).is_err());
    }

    #[test]
    fn unknown_system_names_the_alternatives() {
        let text = MINIMAL.replace("driven_2ls_full", "driven_3ls");
        let err = RunConfig::parse(&text, &[]).unwrap_err().to_string();
        for kind in ["driven_2ls_rwa", "driven_2ls_full", "bichromatic", "pulse_train"] {
            assert!(err.contains(kind), "{err}");
        }
    }

    #[test]
    fn cutoff_accepts_inf() {
        let cfg = RunConfig::parse(MINIMAL, &["secular_cutoff=inf".into()]).unwrap();
        assert!(cfg.secular_cutoff.0.is_infinite());
        let back = serde_json::to_value(&cfg).unwrap();
        assert_eq!(back["secular_cutoff"], "inf");
        assert!(RunConfig::parse(MINIMAL, &["secular_cutoff=\"infinity\"".into()]).is_err());
        assert!(RunConfig::parse(MINIMAL, &["secular_cutoff=-1".into()]).is_err());
    }

    #[test]
    fn overrides_reach_nested_scalars() {
        let cfg = RunConfig::parse(
            MINIMAL,
            &["system.rabi=0.25".into(), "time.n_periods=3".into(), "bench.periods=[10,100]".into()],
        )
        .unwrap();
        match cfg.system {
            SystemConfig::DrivenFull { rabi, .. } => assert_eq!(rabi, Quantity::Native(0.25)),
            other => panic!("{other:?}"),
        }
        assert_eq!(cfg.time.n_periods, Some(3));
        assert_eq!(cfg.bench.periods, vec![10, 100]);
        assert!(RunConfig::parse(MINIMAL, &["noequals".into()]).is_err());
        assert!(RunConfig::parse(MINIMAL, &["system.typo=1".into()]).is_err());
    }

    #[test]
    fn quantities_take_units() {
        let text = MINIMAL.replace("\"omega0\": 1.0", "\"omega0\": {\"value\": 330, \"unit\": \"GHz\"}");
        let cfg = RunConfig::parse(&text, &[]).unwrap();
        match cfg.system {
            SystemConfig::DrivenFull { omega0, .. } => {
                assert_eq!(omega0, Quantity::WithUnit { value: 330.0, unit: UnitName::Ghz })
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn validation_catches_inconsistent_sections() {
        assert!(RunConfig::parse(MINIMAL, &["time.n_periods=0".into()]).is_err());
        assert!(RunConfig::parse(MINIMAL, &["bench.repeats=2".into()]).is_err());
        assert!(RunConfig::parse(MINIMAL, &["k_max=200".into()]).is_err());
        assert!(RunConfig::parse(MINIMAL, &["time.times=[0, 1, 1]".into()]).is_err());
        assert!(RunConfig::parse(MINIMAL, &["channels=[]".into()]).is_err());
    }
}
