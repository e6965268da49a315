//! Scenario configuration files.
//!
//! Configs use degrees, dBm/dBi, km, GHz and MHz; everything is converted to
//! linear SI (plus km and radians) exactly once, in [`ScenarioConfig::build`].
//! Unknown keys are rejected at every level.

use std::path::Path;

use anyhow::{bail, Context, Result};
use satsec_core::channel::{db_to_linear, dbm_to_watts, FadingParams, SystemParams};
use satsec_core::secrecy::{Method, N_EXACT_CAP};
use satsec_core::snrdist::{BeamMode, LayerSpec, SnrScenario};
use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemSection {
    pub earth_radius_km: f64,
    pub path_loss_exponent: f64,
    pub speed_of_light_m_s: f64,
    pub carrier_ghz: f64,
    pub bandwidth_mhz: f64,
    pub tx_power_dbm: f64,
    pub noise_psd_dbm_hz: f64,
    pub gain_tx_dbi: f64,
    pub gain_mainlobe_dbi: f64,
    pub gain_sidelobe_dbi: f64,
    pub beam_half_angle_deg: f64,
    pub steer_angle_deg: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            earth_radius_km: 6378.0,
            path_loss_exponent: 2.0,
            speed_of_light_m_s: 3.0e8,
            carrier_ghz: 2.0,
            bandwidth_mhz: 1.0,
            tx_power_dbm: 23.0,
            noise_psd_dbm_hz: -174.0,
            gain_tx_dbi: 0.0,
            gain_mainlobe_dbi: 30.0,
            gain_sidelobe_dbi: 10.0,
            beam_half_angle_deg: 40.0,
            steer_angle_deg: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FadingSection {
    pub b: f64,
    pub m: f64,
    pub omega: f64,
}

impl Default for FadingSection {
    fn default() -> Self {
        Self { b: 0.126, m: 10.1, omega: 0.835 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ServingSection {
    pub altitude_km: f64,
    pub elevation_deg: f64,
}

impl Default for ServingSection {
    fn default() -> Self {
        Self { altitude_km: 600.0, elevation_deg: 60.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSection {
    pub count: u64,
    pub altitude_km: f64,
}

/// Parameters that a sweep or series can vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum SweepVar {
    #[serde(rename = "a_e")]
    EavAltitude,
    #[serde(rename = "a_s")]
    ServingAltitude,
    #[serde(rename = "N")]
    Count,
    #[serde(rename = "P_dBm")]
    TxPower,
    #[serde(rename = "R_t")]
    TargetRate,
    #[serde(rename = "dw_sb", alias = "Δω_sb")]
    SteerAngle,
    #[serde(rename = "theta_s", alias = "θ_s")]
    Elevation,
    #[serde(rename = "omega_th", alias = "ω_th")]
    BeamHalfAngle,
}

impl SweepVar {
    pub fn name(&self) -> &'static str {
        match self {
            SweepVar::EavAltitude => "a_e",
            SweepVar::ServingAltitude => "a_s",
            SweepVar::Count => "N",
            SweepVar::TxPower => "P_dBm",
            SweepVar::TargetRate => "R_t",
            SweepVar::SteerAngle => "dw_sb",
            SweepVar::Elevation => "theta_s",
            SweepVar::BeamHalfAngle => "omega_th",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodName {
    Exact,
    Approx,
    Asymptotic,
    Mc,
}

impl MethodName {
    pub fn method(&self) -> Method {
        match self {
            MethodName::Exact => Method::Exact,
            MethodName::Approx => Method::Approx,
            MethodName::Asymptotic => Method::Asymptotic,
            MethodName::Mc => Method::MonteCarlo,
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "exact" => MethodName::Exact,
            "approx" => MethodName::Approx,
            "asymptotic" => MethodName::Asymptotic,
            "mc" => MethodName::Mc,
            other => bail!("unknown method `{other}` (expected exact, approx, asymptotic or mc)"),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BeamName {
    Fixed,
    Steerable,
}

impl BeamName {
    pub fn mode(&self) -> BeamMode {
        match self {
            BeamName::Fixed => BeamMode::Fixed,
            BeamName::Steerable => BeamMode::Steerable,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            BeamName::Fixed => "fixed",
            BeamName::Steerable => "steerable",
        }
    }
}

/// Metrics a sweep can report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
pub enum Metric {
    #[serde(rename = "c_erg")]
    ErgodicCapacity,
    #[serde(rename = "p_out")]
    OutageProbability,
    #[serde(rename = "c_out")]
    OutageCapacity,
    #[serde(rename = "c_erg_no_eav")]
    CapacityNoEav,
    #[serde(rename = "slope")]
    HighSnrSlope,
    #[serde(rename = "offset")]
    HighSnrOffset,
    #[serde(rename = "case_probs")]
    CaseProbabilities,
    #[serde(rename = "effective_count")]
    EffectiveCount,
}

/// A list of values given either explicitly or as an inclusive range.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Grid {
    pub grid: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

impl Grid {
    pub fn expand(&self, what: &str) -> Result<Vec<f64>> {
        let values = match (&self.grid, self.start, self.stop, self.step) {
            (Some(v), None, None, None) => v.clone(),
            (None, Some(start), Some(stop), Some(step)) => {
                if !(step > 0.0) || stop < start {
                    bail!("{what}: range needs step > 0 and stop >= start");
                }
                let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
                // snap to a 1e-9 lattice so that 0.1 steps print cleanly
                (0..n).map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9).collect()
            }
            _ => bail!("{what}: give either `grid` or all of `start`, `stop`, `step`"),
        };
        if values.is_empty() {
            bail!("{what}: grid is empty");
        }
        if values.iter().any(|v| !v.is_finite()) {
            bail!("{what}: grid values must be finite");
        }
        Ok(values)
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    pub variable: SweepVar,
    pub grid: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
}

impl SeriesSection {
    pub fn values(&self) -> Result<Vec<f64>> {
        Grid { grid: self.grid.clone(), start: self.start, stop: self.stop, step: self.step }.expand("sweep.series")
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub variable: SweepVar,
    pub grid: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub step: Option<f64>,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodName>,
    #[serde(default = "default_metrics")]
    pub metrics: Vec<Metric>,
    #[serde(default = "default_beams")]
    pub beam_modes: Vec<BeamName>,
    #[serde(default = "default_target_rate")]
    pub target_rate: f64,
    #[serde(default = "default_outage_level")]
    pub outage_level: f64,
    #[serde(default = "default_trials")]
    pub mc_trials: u64,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    pub series: Option<SeriesSection>,
}

impl SweepSection {
    pub fn values(&self) -> Result<Vec<f64>> {
        Grid { grid: self.grid.clone(), start: self.start, stop: self.stop, step: self.step }.expand("sweep")
    }
}

fn default_methods() -> Vec<MethodName> {
    vec![MethodName::Exact]
}
fn default_metrics() -> Vec<Metric> {
    vec![Metric::ErgodicCapacity, Metric::OutageProbability, Metric::OutageCapacity]
}
fn default_beams() -> Vec<BeamName> {
    vec![BeamName::Fixed]
}
fn default_target_rate() -> f64 {
    2.0
}
fn default_outage_level() -> f64 {
    0.1
}
fn default_trials() -> u64 {
    100_000
}
fn default_seed() -> u64 {
    1
}
fn default_workers() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub fading: FadingSection,
    #[serde(default)]
    pub serving: ServingSection,
    pub layers: Vec<LayerSection>,
    pub sweep: SweepSection,
}

/// The scenario-defining part of a config, which sweeps mutate.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub system: SystemSection,
    pub fading: FadingSection,
    pub serving: ServingSection,
    pub layers: Vec<LayerSection>,
    pub target_rate: f64,
}

impl ScenarioConfig {
    /// Apply one sweep/series coordinate.
    pub fn set(&mut self, var: SweepVar, value: f64) -> Result<()> {
        let single = |layers: &Vec<LayerSection>| -> Result<()> {
            if layers.len() != 1 {
                bail!("sweeping `{}` needs exactly one eavesdropper layer", var.name());
            }
            Ok(())
        };
        match var {
            SweepVar::EavAltitude => {
                single(&self.layers)?;
                self.layers[0].altitude_km = value;
            }
            SweepVar::Count => {
                single(&self.layers)?;
                if value < 0.0 || value.fract() != 0.0 {
                    bail!("N must be a nonnegative integer, got {value}");
                }
                self.layers[0].count = value as u64;
            }
            SweepVar::ServingAltitude => self.serving.altitude_km = value,
            SweepVar::TxPower => self.system.tx_power_dbm = value,
            SweepVar::TargetRate => self.target_rate = value,
            SweepVar::SteerAngle => self.system.steer_angle_deg = value,
            SweepVar::Elevation => self.serving.elevation_deg = value,
            SweepVar::BeamHalfAngle => self.system.beam_half_angle_deg = value,
        }
        Ok(())
    }

    pub fn system_params(&self) -> SystemParams {
        let s = &self.system;
        SystemParams {
            earth_radius_km: s.earth_radius_km,
            path_loss_exponent: s.path_loss_exponent,
            speed_of_light: s.speed_of_light_m_s,
            carrier_hz: s.carrier_ghz * 1e9,
            bandwidth_hz: s.bandwidth_mhz * 1e6,
            tx_power_w: dbm_to_watts(s.tx_power_dbm),
            noise_psd_w_per_hz: dbm_to_watts(s.noise_psd_dbm_hz),
            gain_tx: db_to_linear(s.gain_tx_dbi),
            gain_mainlobe: db_to_linear(s.gain_mainlobe_dbi),
            gain_sidelobe: db_to_linear(s.gain_sidelobe_dbi),
            beam_half_angle: s.beam_half_angle_deg.to_radians(),
            steer_angle: s.steer_angle_deg.to_radians(),
        }
    }

    /// Convert to the internal scenario for one beam mode.
    pub fn build(&self, beam: BeamMode) -> Result<SnrScenario> {
        if !(self.serving.elevation_deg > 0.0 && self.serving.elevation_deg <= 90.0) {
            bail!("serving elevation must lie in (0, 90] degrees, got {}", self.serving.elevation_deg);
        }
        if !(self.target_rate >= 0.0) {
            bail!("target rate must be >= 0, got {}", self.target_rate);
        }
        let fading = FadingParams::new(self.fading.b, self.fading.m, self.fading.omega)?;
        let layers: Vec<LayerSpec> =
            self.layers.iter().map(|l| LayerSpec { count: l.count, altitude_km: l.altitude_km }).collect();
        let scn = SnrScenario::new(
            self.system_params(),
            fading,
            self.serving.altitude_km,
            self.serving.elevation_deg.to_radians(),
            &layers,
            beam,
        )?;
        Ok(scn)
    }
}

impl Config {
    pub fn scenario(&self) -> ScenarioConfig {
        ScenarioConfig {
            system: self.system.clone(),
            fading: self.fading.clone(),
            serving: self.serving.clone(),
            layers: self.layers.clone(),
            target_rate: self.sweep.target_rate,
        }
    }

    /// Structural checks that do not depend on the sweep coordinate.
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            bail!("at least one [[layers]] entry is required");
        }
        let sw = &self.sweep;
        sw.values()?;
        if let Some(series) = &sw.series {
            series.values()?;
            if series.variable == sw.variable {
                bail!("sweep.series must vary a different parameter than the sweep");
            }
        }
        for (name, empty) in [
            ("methods", sw.methods.is_empty()),
            ("metrics", sw.metrics.is_empty()),
            ("beam_modes", sw.beam_modes.is_empty()),
        ] {
            if empty {
                bail!("sweep.{name} must not be empty");
            }
        }
        if !(sw.outage_level > 0.0 && sw.outage_level < 1.0) {
            bail!("sweep.outage_level must lie in (0, 1)");
        }
        if sw.methods.contains(&MethodName::Mc) && sw.mc_trials == 0 {
            bail!("sweep.mc_trials must be at least 1");
        }
        if sw.methods.contains(&MethodName::Exact) && self.layers.len() > 1 {
            bail!(
                "exact evaluation supports a single eavesdropper layer; this config has {} (use approx or mc)",
                self.layers.len()
            );
        }
        // every swept scenario must be constructible
        let xs = sw.values()?;
        let ss = match &sw.series {
            Some(s) => s.values()?.into_iter().map(|v| Some((s.variable, v))).collect(),
            None => vec![None],
        };
        for s in &ss {
            for &x in &xs {
                let mut scn = self.scenario();
                if let Some((var, v)) = s {
                    scn.set(*var, *v)?;
                }
                scn.set(sw.variable, x)?;
                for beam in &sw.beam_modes {
                    let built = scn.build(beam.mode()).with_context(|| format!("{} = {x}", sw.variable.name()))?;
                    if sw.methods.contains(&MethodName::Exact) && built.total_count() > N_EXACT_CAP {
                        bail!(
                            "exact evaluation is limited to N <= {N_EXACT_CAP} eavesdroppers; {} = {x} gives N = {} (use approx)",
                            sw.variable.name(),
                            built.total_count()
                        );
                    }
                }
            }
        }
        Ok(())
    }
}

fn parse_override_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

/// Apply `path=value` overrides (`system.tx_power_dbm=30`, `layers.0.count=5`).
pub fn apply_override(root: &mut toml::Table, assignment: &str) -> Result<()> {
    let (path, raw) = assignment.split_once('=').with_context(|| format!("override `{assignment}` is not key=value"))?;
    let keys: Vec<&str> = path.trim().split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        bail!("override `{assignment}` has an empty key");
    }
    let value = parse_override_value(raw.trim());
    let mut table = root;
    for (i, key) in keys.iter().enumerate() {
        let last = i + 1 == keys.len();
        if last {
            table.insert((*key).to_string(), value);
            return Ok(());
        }
        let next = table.entry((*key).to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        match next {
            toml::Value::Table(t) => table = t,
            toml::Value::Array(arr) => {
                let idx: usize = keys[i + 1].parse().with_context(|| format!("`{key}` is a list; expected an index"))?;
                let item = arr.get_mut(idx).with_context(|| format!("`{key}` has no entry {idx}"))?;
                let toml::Value::Table(t) = item else { bail!("`{key}.{idx}` is not a table") };
                if i + 2 == keys.len() {
                    bail!("override `{assignment}` must name a field inside `{key}.{idx}`");
                }
                // skip the index segment
                return apply_override(t, &format!("{}={raw}", keys[i + 2..].join(".")));
            }
            _ => bail!("`{key}` is not a table"),
        }
    }
    Ok(())
}

/// Read, override and deserialize a config file.
pub fn load(path: &Path, overrides: &[String]) -> Result<Config> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut root: toml::Table = text.parse().with_context(|| format!("parsing {}", path.display()))?;
    for o in overrides {
        apply_override(&mut root, o)?;
    }
    let cfg: Config = toml::Value::Table(root).try_into().with_context(|| format!("invalid config {}", path.display()))?;
    Ok(cfg)
}
