//! TOML experiment files. The schema is documented in the README; the
//! shipped files live under `configs/`.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noisemodel::ZeroSelection;
use crate::statespace::FiltrationMode;
use crate::template::NoiseLayout;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseConfig>,
    pub sampling: SamplingConfig,
    #[serde(default)]
    pub identify: IdentifyConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    /// Pauli-product basis on this many qubits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubits: Option<usize>,
    /// Generalized Gell-Mann basis of su(dim).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default)]
    pub filtration: FiltrationChoice,
    pub terms: Vec<TermConfig>,
    #[serde(default)]
    pub params: BTreeMap<String, ParamValue>,
    pub observables: Vec<String>,
    pub initial: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FiltrationChoice {
    #[default]
    Support,
    Full,
}

impl From<FiltrationChoice> for FiltrationMode {
    fn from(c: FiltrationChoice) -> Self {
        match c {
            FiltrationChoice::Support => FiltrationMode::HamiltonianSupport,
            FiltrationChoice::Full => FiltrationMode::FullAlgebra,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub op: String,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub param: Option<String>,
}

fn one() -> f64 {
    1.0
}

/// A number, or the string `"unknown"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Value(f64),
    Marker(String),
}

impl ParamValue {
    pub fn known(&self) -> Option<f64> {
        match self {
            ParamValue::Value(v) => Some(*v),
            ParamValue::Marker(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    /// S(ω) numerator, highest power of ω first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_num: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psd_den: Option<Vec<f64>>,
    /// Simulation time unit expressed in the PSD's time unit.
    #[serde(default = "one")]
    pub psd_time_unit: f64,
    #[serde(default)]
    pub zero_selection: ZeroSelectionConfig,
    /// Γ numerator β₁..β_n.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    /// Γ denominator α₁..α_n (monic leading 1 omitted).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    /// Explicit E, rows.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub e: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<Vec<f64>>,
    pub xi0: Vec<f64>,
    #[serde(default = "default_segment")]
    pub welch_segment: usize,
    #[serde(default = "default_check_steps")]
    pub check_steps: usize,
}

fn default_segment() -> usize {
    1024
}

fn default_check_steps() -> usize {
    1 << 17
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ZeroSelectionConfig {
    Named(String),
    Signs(Vec<i8>),
}

impl Default for ZeroSelectionConfig {
    fn default() -> Self {
        ZeroSelectionConfig::Named("minimum_phase".into())
    }
}

impl ZeroSelectionConfig {
    pub fn resolve(&self) -> Result<ZeroSelection> {
        match self {
            ZeroSelectionConfig::Named(n) => match n.as_str() {
                "minimum_phase" => Ok(ZeroSelection::MinimumPhase),
                "maximum_phase" => Ok(ZeroSelection::MaximumPhase),
                other => Err(Error::Config(format!(
                    "zero_selection must be minimum_phase, maximum_phase or a sign list, got {other}"
                ))),
            },
            ZeroSelectionConfig::Signs(s) => {
                if s.iter().any(|v| *v != 1 && *v != -1) {
                    return Err(Error::Config("zero_selection signs must be 1 or -1".into()));
                }
                Ok(ZeroSelection::Signs(s.clone()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingConfig {
    pub dt: f64,
    /// Record length; the trajectory has round(t_final / dt) samples.
    pub t_final: f64,
    #[serde(default)]
    pub shot_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

impl SamplingConfig {
    pub fn steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentifyConfig {
    #[serde(default = "default_r")]
    pub r: usize,
    #[serde(default = "default_s")]
    pub s: usize,
    #[serde(default = "default_gap")]
    pub gap_ratio: f64,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Largest angular frequency expected in the data, for the aliasing check.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_rate: Option<f64>,
    /// Overrides the singular-value order choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Parameters to estimate even though `system.params` gives them a value
    /// (the value is then only used for simulation).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unknowns: Vec<String>,
    #[serde(default)]
    pub noise_layout: LayoutChoice,
    #[serde(default)]
    pub noise_order: NoiseOrder,
    #[serde(default)]
    pub bounds: BTreeMap<String, [f64; 2]>,
}

impl Default for IdentifyConfig {
    fn default() -> Self {
        Self {
            r: default_r(),
            s: default_s(),
            gap_ratio: default_gap(),
            starts: default_starts(),
            seed: 0,
            tol: default_tol(),
            max_iter: default_max_iter(),
            max_rate: None,
            order: None,
            unknowns: Vec::new(),
            noise_layout: LayoutChoice::default(),
            noise_order: NoiseOrder::default(),
            bounds: BTreeMap::new(),
        }
    }
}

fn default_r() -> usize {
    20
}
fn default_s() -> usize {
    100
}
fn default_gap() -> f64 {
    crate::sysid::DEFAULT_GAP_RATIO
}
fn default_starts() -> usize {
    200
}
fn default_tol() -> f64 {
    1e-6
}
fn default_max_iter() -> usize {
    200
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutChoice {
    #[default]
    Companion,
    Full,
    None,
}

impl LayoutChoice {
    pub fn with_order(self, n: usize) -> NoiseLayout {
        match self {
            _ if n == 0 => NoiseLayout::None,
            LayoutChoice::Companion => NoiseLayout::Companion(n),
            LayoutChoice::Full => NoiseLayout::Full(n),
            LayoutChoice::None => NoiseLayout::None,
        }
    }
}

/// `"auto"` (realization order minus the quantum dimension) or a number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NoiseOrder {
    Fixed(usize),
    Named(String),
}

impl Default for NoiseOrder {
    fn default() -> Self {
        NoiseOrder::Named("auto".into())
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        let sys = &self.system;
        match (sys.qubits, sys.dim) {
            (Some(_), Some(_)) => return Err(Error::Config("set either system.qubits or system.dim, not both".into())),
            (None, None) => return Err(Error::Config("system.qubits or system.dim is required".into())),
            _ => {}
        }
        for t in &sys.terms {
            if let Some(p) = &t.param {
                if !sys.params.contains_key(p) {
                    return Err(Error::Config(format!("term {} uses undeclared parameter {p}", t.op)));
                }
            }
        }
        for (name, v) in &sys.params {
            match v {
                ParamValue::Value(x) if !x.is_finite() => {
                    return Err(Error::Config(format!("parameter {name} is not finite")))
                }
                ParamValue::Marker(m) if m != "unknown" => {
                    return Err(Error::Config(format!(
                        "parameter {name} must be a number or \"unknown\", got \"{m}\""
                    )))
                }
                ParamValue::Marker(_) if !self.identify.bounds.contains_key(name) => {
                    return Err(Error::Config(format!("unknown parameter {name} has no bounds")))
                }
                _ => {}
            }
        }
        let s = &self.sampling;
        if !(s.dt > 0.0 && s.dt.is_finite()) {
            return Err(Error::Config(format!("sampling.dt must be positive, got {}", s.dt)));
        }
        if !(s.t_final > 0.0 && s.t_final.is_finite()) {
            return Err(Error::Config(format!("sampling.t_final must be positive, got {}", s.t_final)));
        }
        if !(s.shot_sigma >= 0.0 && s.shot_sigma.is_finite()) {
            return Err(Error::Config("sampling.shot_sigma must be nonnegative".into()));
        }
        if let Some(n) = &self.noise {
            let psd = n.psd_num.is_some() || n.psd_den.is_some();
            let tf = n.beta.is_some() || n.alpha.is_some();
            let explicit = n.e.is_some() || n.g.is_some();
            if [psd, tf, explicit].iter().filter(|b| **b).count() != 1 {
                return Err(Error::Config(
                    "noise needs exactly one of psd_num/psd_den, beta/alpha, or e/g".into(),
                ));
            }
            if psd && (n.psd_num.is_none() || n.psd_den.is_none()) {
                return Err(Error::Config("noise.psd_num and noise.psd_den go together".into()));
            }
            if tf && (n.beta.is_none() || n.alpha.is_none()) {
                return Err(Error::Config("noise.beta and noise.alpha go together".into()));
            }
            if explicit && (n.e.is_none() || n.g.is_none()) {
                return Err(Error::Config("noise.e and noise.g go together".into()));
            }
            if !(n.psd_time_unit > 0.0 && n.psd_time_unit.is_finite()) {
                return Err(Error::Config("noise.psd_time_unit must be positive".into()));
            }
            n.zero_selection.resolve()?;
        }
        let id = &self.identify;
        if id.r == 0 || id.s == 0 || id.starts == 0 {
            return Err(Error::Config("identify.r, identify.s and identify.starts must be positive".into()));
        }
        if let NoiseOrder::Named(n) = &id.noise_order {
            if n != "auto" {
                return Err(Error::Config(format!("identify.noise_order must be \"auto\" or a number, got \"{n}\"")));
            }
        }
        for name in &id.unknowns {
            if !sys.params.contains_key(name) {
                return Err(Error::Config(format!("identify.unknowns lists undeclared parameter {name}")));
            }
            if !id.bounds.contains_key(name) {
                return Err(Error::Config(format!("unknown parameter {name} has no bounds")));
            }
        }
        for (name, [lo, hi]) in &id.bounds {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::Config(format!("bounds for {name} must be finite with lo <= hi")));
            }
        }
        Ok(())
    }

    /// Parameter values held fixed during identification.
    pub fn known_params(&self) -> BTreeMap<String, f64> {
        self.system
            .params
            .iter()
            .filter(|(k, _)| !self.identify.unknowns.contains(k))
            .filter_map(|(k, v)| v.known().map(|x| (k.clone(), x)))
            .collect()
    }

    /// Every numeric parameter value, including those identified later.
    pub fn param_values(&self) -> BTreeMap<String, f64> {
        self.system
            .params
            .iter()
            .filter_map(|(k, v)| v.known().map(|x| (k.clone(), x)))
            .collect()
    }

    pub fn bounds(&self) -> BTreeMap<String, (f64, f64)> {
        self.identify
            .bounds
            .iter()
            .map(|(k, [lo, hi])| (k.clone(), (*lo, *hi)))
            .collect()
    }

    /// Output directory name derived from the config.
    pub fn slug(&self) -> String {
        self.name.clone().unwrap_or_else(|| "experiment".into())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[system]
qubits = 1
terms = [{ op = "Z", scale = 0.5, param = "w" }]
params = { w = 1.0 }
observables = ["X"]
initial = { Y = 1.0 }

[sampling]
dt = 0.1
t_final = 0.2
"#;

    #[test]
    fn minimal_parses_with_defaults() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.sampling.steps(), 2);
        assert_eq!(c.identify.r, 20);
        assert_eq!(c.identify.noise_order, NoiseOrder::Named("auto".into()));
        assert!(c.noise.is_none());
    }

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::parse(MINIMAL).unwrap();
        let again = ExperimentConfig::parse(&c.to_toml().unwrap()).unwrap();
        assert_eq!(c, again);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = MINIMAL.replace("dt = 0.1", "dt = -0.1");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("w = 1.0", "w = \"unknown\"");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("w = 1.0", "w = \"maybe\"");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::Config(_))));
        let bad = MINIMAL.replace("qubits = 1", "qubits = 1\ncolour = 3");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(Error::Parse(_))));
    }
}
