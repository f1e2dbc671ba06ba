//! JSON run configuration, named presets and initial-condition construction.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};

use crate::algebra::AlgebraElement;
use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::integrate::{BlowupThresholds, StepperConfig};
use crate::spectral::{PeriodicGrid, SpectralField, DEFAULT_N};

/// Names of the shipped presets.
pub const PRESETS: [&str; 3] = ["ch_breaking", "global_s2", "twocomp_smooth"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub a: f64,
    pub s: f64,
    pub kappa: f64,
    pub alpha: f64,
}

impl ModelConfig {
    pub fn params(&self) -> Result<ModelParams> {
        ModelParams::new(self.a, self.kappa, self.alpha, self.s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Target {
    #[default]
    U,
    Rho,
    Both,
}

impl Target {
    fn hits_u(self) -> bool {
        matches!(self, Target::U | Target::Both)
    }

    fn hits_rho(self) -> bool {
        matches!(self, Target::Rho | Target::Both)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    SingleMode,
    FourierList,
    GaussianBump,
}

/// Coefficient `c_k = re + i im` of `e^{2 pi i k x}` for `k >= 0`; the
/// conjugate mode is implied.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierMode {
    pub k: i64,
    pub re: f64,
    #[serde(default)]
    pub im: f64,
}

/// Initial data. Without a `kind` the fields are the constant offsets alone.
///
/// * `single_mode`: `amplitude * cos(2 pi wavenumber x + phase)` on `target`.
/// * `fourier_list`: explicit coefficients for `u` and `rho`.
/// * `gaussian_bump`: periodised `amplitude * exp(-(x - center)^2 / (2 width^2))`
///   on `target`, truncated to the dealiased band.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConditionSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<InitialKind>,
    #[serde(default)]
    pub target: Target,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wavenumber: Option<i64>,
    #[serde(default)]
    pub phase: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub u: Vec<FourierMode>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rho: Vec<FourierMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default)]
    pub u_offset: f64,
    #[serde(default)]
    pub rho_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    /// Write `fields_<step>.csv` for sampled steps divisible by this; 0 disables.
    #[serde(default)]
    pub snapshot_every: usize,
}

/// A fully defaulted and validated run configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub n: usize,
    pub model: ModelConfig,
    pub stepper: StepperConfig,
    pub thresholds: BlowupThresholds,
    pub initial: InitialConditionSpec,
    pub flow_map: bool,
    pub output: OutputConfig,
}

impl SimulationConfig {
    pub fn params(&self) -> Result<ModelParams> {
        self.model.params()
    }

    pub fn grid(&self) -> Result<Arc<PeriodicGrid>> {
        PeriodicGrid::new(self.n)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 8 || self.n % 2 != 0 {
            return Err(Error::Config(format!("n: must be even and ≥ 8 (got {})", self.n)));
        }
        let m = &self.model;
        if !(m.s >= 1.0 && m.s.is_finite()) {
            return Err(Error::Config(format!("model.s: must satisfy s ≥ 1 (got {})", m.s)));
        }
        if !(m.kappa >= 0.0 && m.kappa.is_finite()) {
            return Err(Error::Config(format!(
                "model.kappa: must satisfy kappa ≥ 0 (got {})",
                m.kappa
            )));
        }
        if !m.a.is_finite() || !m.alpha.is_finite() {
            return Err(Error::Config("model.a and model.alpha must be finite".into()));
        }
        if !(self.stepper.dt > 0.0 && self.stepper.dt.is_finite()) {
            return Err(Error::Config(format!(
                "stepper.dt: must be > 0 (got {})",
                self.stepper.dt
            )));
        }
        if !(self.stepper.t_end > 0.0) {
            return Err(Error::Config(format!(
                "stepper.t_end: must be > 0 (got {})",
                self.stepper.t_end
            )));
        }
        self.stepper
            .validate()
            .map_err(|e| Error::Config(format!("stepper: {e}")))?;
        self.thresholds
            .validate()
            .map_err(|e| Error::Config(format!("thresholds: {e}")))?;
        validate_initial(&self.initial, self.n)
    }
}

/// Preset definitions as JSON fragments that user input is merged over.
pub fn preset(name: &str) -> Option<Value> {
    let v = match name {
        "ch_breaking" => json!({
            "model": {"a": 2.0, "s": 1.0, "kappa": 0.0, "alpha": 0.0},
            "stepper": {"t_end": 20.0},
            "initial": {"kind": "single_mode", "target": "u", "amplitude": 1.0, "wavenumber": 1},
            "flow_map": false
        }),
        "global_s2" => json!({
            "model": {"a": 2.0, "s": 2.0, "kappa": 0.0, "alpha": 0.0},
            "stepper": {"dt": 5e-4, "t_end": 10.0},
            "initial": {"kind": "single_mode", "target": "u", "amplitude": 1.0, "wavenumber": 1},
            "flow_map": false
        }),
        "twocomp_smooth" => json!({
            "model": {"a": 2.0, "s": 2.0, "kappa": 1.0, "alpha": 0.0},
            "stepper": {"t_end": 5.0},
            "initial": {
                "kind": "fourier_list",
                "u": [{"k": 1, "re": 0.25, "im": 0.0}],
                "rho": [{"k": 1, "re": 0.0, "im": -0.25}],
                "rho_offset": 2.0
            },
            "flow_map": true
        }),
        _ => return None,
    };
    Some(v)
}

const TOP_KEYS: &[&str] = &[
    "preset",
    "n",
    "model",
    "stepper",
    "thresholds",
    "initial",
    "flow_map",
    "output",
];
const MODEL_KEYS: &[&str] = &["a", "s", "kappa", "alpha"];
const STEPPER_KEYS: &[&str] = &["dt", "t_end", "sample_every"];
const THRESHOLD_KEYS: &[&str] = &["slope_limit", "tail_fraction_limit"];
const INITIAL_KEYS: &[&str] = &[
    "kind",
    "target",
    "amplitude",
    "wavenumber",
    "phase",
    "u",
    "rho",
    "center",
    "width",
    "u_offset",
    "rho_offset",
];
const MODE_KEYS: &[&str] = &["k", "re", "im"];
const OUTPUT_KEYS: &[&str] = &["snapshot_every"];

fn collect_unknown(obj: &Map<String, Value>, allowed: &[&str], prefix: &str, out: &mut BTreeSet<String>) {
    for key in obj.keys() {
        if !allowed.contains(&key.as_str()) {
            out.insert(format!("{prefix}{key}"));
        }
    }
}

fn unknown_keys(root: &Map<String, Value>) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    collect_unknown(root, TOP_KEYS, "", &mut out);
    let sub = [
        ("model", MODEL_KEYS),
        ("stepper", STEPPER_KEYS),
        ("thresholds", THRESHOLD_KEYS),
        ("initial", INITIAL_KEYS),
        ("output", OUTPUT_KEYS),
    ];
    for (name, allowed) in sub {
        if let Some(Value::Object(o)) = root.get(name) {
            collect_unknown(o, allowed, &format!("{name}."), &mut out);
        }
    }
    if let Some(Value::Object(init)) = root.get("initial") {
        for field in ["u", "rho"] {
            if let Some(Value::Array(modes)) = init.get(field) {
                for (i, m) in modes.iter().enumerate() {
                    if let Value::Object(o) = m {
                        collect_unknown(o, MODE_KEYS, &format!("initial.{field}[{i}]."), &mut out);
                    }
                }
            }
        }
    }
    out
}

/// Recursively overlays `top` onto `base`.
fn merge(base: &mut Value, top: Value) {
    match (base, top) {
        (Value::Object(b), Value::Object(t)) => {
            for (k, v) in t {
                match b.get_mut(&k) {
                    Some(slot) => merge(slot, v),
                    None => {
                        b.insert(k, v);
                    }
                }
            }
        }
        (slot, v) => *slot = v,
    }
}

#[derive(Deserialize)]
struct PartialStepper {
    dt: Option<f64>,
    t_end: Option<f64>,
    sample_every: Option<usize>,
}

#[derive(Deserialize)]
struct PartialThresholds {
    slope_limit: Option<f64>,
    tail_fraction_limit: Option<f64>,
}

#[derive(Deserialize)]
struct RawConfig {
    preset: Option<String>,
    n: Option<usize>,
    model: Option<ModelConfig>,
    stepper: Option<PartialStepper>,
    thresholds: Option<PartialThresholds>,
    initial: Option<InitialConditionSpec>,
    flow_map: Option<bool>,
    output: Option<OutputConfig>,
}

/// Parses and validates a configuration document, filling defaults.
pub fn parse_config(text: &str) -> Result<SimulationConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
    config_from_value(value)
}

pub(crate) fn config_from_value(value: Value) -> Result<SimulationConfig> {
    let Value::Object(root) = value else {
        return Err(Error::Config("configuration must be a JSON object".into()));
    };
    let unknown = unknown_keys(&root);
    if !unknown.is_empty() {
        let list: Vec<String> = unknown.into_iter().collect();
        return Err(Error::Config(format!("unknown keys: {}", list.join(", "))));
    }
    let mut value = Value::Object(root);
    if let Some(name) = value.get("preset").cloned() {
        let name = name
            .as_str()
            .ok_or_else(|| Error::Config("preset: must be a string".into()))?
            .to_owned();
        let mut base = preset(&name).ok_or_else(|| {
            Error::Config(format!("preset: unknown preset {name:?} (known: {})", PRESETS.join(", ")))
        })?;
        merge(&mut base, value);
        value = base;
    }
    let raw: RawConfig = serde_json::from_value(value).map_err(|e| Error::Config(e.to_string()))?;
    let model = raw
        .model
        .ok_or_else(|| Error::Config("model: missing (needs a, s, kappa, alpha)".into()))?;
    let defaults = StepperConfig::default();
    let stepper = raw.stepper.map_or(defaults, |s| StepperConfig {
        dt: s.dt.unwrap_or(defaults.dt),
        t_end: s.t_end.unwrap_or(defaults.t_end),
        sample_every: s.sample_every.unwrap_or(defaults.sample_every),
    });
    let dth = BlowupThresholds::default();
    let thresholds = raw.thresholds.map_or(dth, |t| BlowupThresholds {
        slope_limit: t.slope_limit.unwrap_or(dth.slope_limit),
        tail_fraction_limit: t.tail_fraction_limit.unwrap_or(dth.tail_fraction_limit),
    });
    let cfg = SimulationConfig {
        preset: raw.preset,
        n: raw.n.unwrap_or(DEFAULT_N),
        model,
        stepper,
        thresholds,
        initial: raw.initial.unwrap_or_default(),
        flow_map: raw.flow_map.unwrap_or(false),
        output: raw.output.unwrap_or_default(),
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Configuration of a named preset with every other setting at its default.
pub fn preset_config(name: &str) -> Result<SimulationConfig> {
    config_from_value(json!({ "preset": name }))
}

fn validate_initial(spec: &InitialConditionSpec, n: usize) -> Result<()> {
    let cutoff = (n / 3) as i64;
    let finite = |name: &str, v: f64| {
        if v.is_finite() {
            Ok(())
        } else {
            Err(Error::Config(format!("initial.{name}: must be finite")))
        }
    };
    finite("u_offset", spec.u_offset)?;
    finite("rho_offset", spec.rho_offset)?;
    finite("phase", spec.phase)?;
    match spec.kind {
        None => {}
        Some(InitialKind::SingleMode) => {
            let amp = spec
                .amplitude
                .ok_or_else(|| Error::Config("initial.amplitude: required for single_mode".into()))?;
            finite("amplitude", amp)?;
            let k = spec
                .wavenumber
                .ok_or_else(|| Error::Config("initial.wavenumber: required for single_mode".into()))?;
            if k < 0 || k > cutoff {
                return Err(Error::Config(format!(
                    "initial.wavenumber: must lie in 0..={cutoff}, the dealiased band for n = {n} (got {k})"
                )));
            }
        }
        Some(InitialKind::FourierList) => {
            for (name, modes) in [("u", &spec.u), ("rho", &spec.rho)] {
                for m in modes.iter() {
                    if m.k < 0 || m.k > cutoff {
                        return Err(Error::Config(format!(
                            "initial.{name}: wavenumber {} lies outside the dealiased band 0..={cutoff}",
                            m.k
                        )));
                    }
                    if !m.re.is_finite() || !m.im.is_finite() {
                        return Err(Error::Config(format!("initial.{name}: coefficients must be finite")));
                    }
                }
            }
        }
        Some(InitialKind::GaussianBump) => {
            let amp = spec
                .amplitude
                .ok_or_else(|| Error::Config("initial.amplitude: required for gaussian_bump".into()))?;
            finite("amplitude", amp)?;
            let c = spec
                .center
                .ok_or_else(|| Error::Config("initial.center: required for gaussian_bump".into()))?;
            finite("center", c)?;
            let w = spec
                .width
                .ok_or_else(|| Error::Config("initial.width: required for gaussian_bump".into()))?;
            if !(w > 0.0 && w <= 0.5) {
                return Err(Error::Config(format!("initial.width: must lie in (0, 0.5] (got {w})")));
            }
        }
    }
    Ok(())
}

fn from_modes(grid: &Arc<PeriodicGrid>, modes: &[FourierMode]) -> Result<SpectralField> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); grid.n()];
    for m in modes {
        if m.k == 0 {
            coeffs[0] += m.re;
        } else {
            let c = Complex64::new(m.re, m.im);
            coeffs[grid.index_of(m.k).unwrap()] += c;
            coeffs[grid.index_of(-m.k).unwrap()] += c.conj();
        }
    }
    SpectralField::from_coeffs(grid, coeffs)
}

/// Builds `U0 = (u0, rho0, alpha)` on `grid`.
pub fn build_initial_condition(
    spec: &InitialConditionSpec,
    grid: &Arc<PeriodicGrid>,
    alpha: f64,
) -> Result<AlgebraElement> {
    validate_initial(spec, grid.n())?;
    let zero = SpectralField::zeros(grid);
    let (u, rho) = match spec.kind {
        None => (zero.clone(), zero),
        Some(InitialKind::SingleMode) => {
            let amp = spec.amplitude.unwrap_or(0.0);
            let k = spec.wavenumber.unwrap_or(0) as f64;
            let phase = spec.phase;
            let f = SpectralField::from_fn(grid, |x| amp * (2.0 * PI * k * x + phase).cos());
            (
                if spec.target.hits_u() { f.clone() } else { zero.clone() },
                if spec.target.hits_rho() { f } else { zero },
            )
        }
        Some(InitialKind::FourierList) => (from_modes(grid, &spec.u)?, from_modes(grid, &spec.rho)?),
        Some(InitialKind::GaussianBump) => {
            let amp = spec.amplitude.unwrap_or(0.0);
            let c = spec.center.unwrap_or(0.0);
            let w = spec.width.unwrap_or(0.1);
            let f = SpectralField::from_fn(grid, |x| {
                (-6..=6)
                    .map(|m| {
                        let d = x - c - m as f64;
                        (-d * d / (2.0 * w * w)).exp()
                    })
                    .sum::<f64>()
                    * amp
            })
            .truncated(grid.dealias_cutoff());
            (
                if spec.target.hits_u() { f.clone() } else { zero.clone() },
                if spec.target.hits_rho() { f } else { zero },
            )
        }
    };
    AlgebraElement::new(u.add_constant(spec.u_offset), rho.add_constant(spec.rho_offset), alpha)
}
