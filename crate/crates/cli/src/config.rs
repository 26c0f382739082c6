//! Experiment configuration: a single JSON document with nested sections.
//!
//! Unknown keys are rejected everywhere. Every error carries the key path
//! of the offending value and, for syntax and type errors, its line and
//! column.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tdm_core::covariance::{interference_covariance, InterferenceSource};
use tdm_core::matfile;
use tdm_core::{AlphaModel, CovarianceModel, DopplerMode, Radar, Scenario, SelectionMatrix, Target, Vec2, Vehicle};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    /// Dotted key path, e.g. `vehicles[1].velocity`. Empty for the root.
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl ConfigError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            line: None,
            column: None,
            message: message.into(),
        }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let path = if self.path.is_empty() { "<root>" } else { &self.path };
        write!(f, "config error at `{path}`")?;
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, " (line {l}, column {c})")?;
        }
        write!(f, ": {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Optimize,
    Evaluate,
    Roc,
    #[default]
    Compare,
}

impl Mode {
    pub fn needs_permutation(self) -> bool {
        matches!(self, Mode::Optimize | Mode::Compare)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DopplerChoice {
    Literal,
    #[default]
    Relative,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    Fixed,
    #[default]
    Fluctuating,
}

impl From<AlphaChoice> for AlphaModel {
    fn from(a: AlphaChoice) -> Self {
        match a {
            AlphaChoice::Fixed => AlphaModel::Fixed,
            AlphaChoice::Fluctuating => AlphaModel::Fluctuating,
        }
    }
}

fn default_c() -> f64 {
    299_792_458.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RadarConfig {
    pub carrier_frequency_hz: f64,
    pub chirp_time_s: f64,
    pub num_pulses: usize,
    /// Recorded for provenance; the steering model does not use it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bandwidth_hz: Option<f64>,
    #[serde(default = "default_c")]
    pub speed_of_light_m_s: f64,
    #[serde(default)]
    pub doppler_mode: DopplerChoice,
}

/// Uniform linear arrays along `axis`: receivers spaced λ/2 and
/// transmitters spaced M·λ/2 unless overridden.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UlaConfig {
    pub origin: Vec2,
    pub num_tx: usize,
    pub num_rx: usize,
    #[serde(default = "default_axis")]
    pub axis: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_spacing_m: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_spacing_m: Option<f64>,
}

fn default_axis() -> Vec2 {
    [1.0, 0.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleConfig {
    pub velocity: Vec2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ula: Option<UlaConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_positions: Option<Vec<Vec2>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rx_positions: Option<Vec<Vec2>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetConfig {
    pub position: Vec2,
    pub velocity: Vec2,
}

/// A real number or a `[re, im]` pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ComplexValue {
    Real(f64),
    Pair([f64; 2]),
}

impl ComplexValue {
    pub fn value(self) -> Complex64 {
        match self {
            ComplexValue::Real(r) => Complex64::new(r, 0.0),
            ComplexValue::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    pub position: Vec2,
    pub velocity: Vec2,
    /// Interference-to-noise ratio, linear.
    pub inr: f64,
}

fn default_noise_power() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseConfig {
    White {
        #[serde(default = "default_noise_power")]
        power: f64,
    },
    /// One K-block covariance in the sidecar text format; a relative path is
    /// resolved against the config file's directory.
    BlockDiagonal { file: PathBuf },
    Interference {
        #[serde(default = "default_noise_power")]
        power: f64,
        sources: Vec<SourceConfig>,
    },
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::White { power: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub epsilon: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            epsilon: 1e-6,
            max_iter: 100,
            restarts: 1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MonteCarloConfig {
    pub trials: usize,
    pub seed: u64,
    pub alpha_model: AlphaChoice,
    pub thresholds: usize,
    pub pfa_points: Vec<f64>,
}

impl Default for MonteCarloConfig {
    fn default() -> Self {
        MonteCarloConfig {
            trials: 10_000,
            seed: 1,
            alpha_model: AlphaChoice::Fluctuating,
            thresholds: tdm_core::roc::DEFAULT_THRESHOLDS,
            pfa_points: vec![0.05, 0.1, 0.2],
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub mode: Mode,
    pub radar: RadarConfig,
    pub vehicles: Vec<VehicleConfig>,
    pub target: TargetConfig,
    /// α_k per vehicle; 1.0 for every vehicle when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reflectivity: Option<Vec<ComplexValue>>,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
    #[serde(default)]
    pub monte_carlo: MonteCarloConfig,
    /// Transmitter column (0-based) fired on each pulse, `null` for a silent
    /// pulse. Used by evaluate and roc; defaults to sequential firing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<Vec<Option<usize>>>,
    /// Cooperating vehicle subsets (1-based) evaluated in compare mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subsets: Option<Vec<Vec<usize>>>,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
}

/// Parses JSON text into a config without semantic validation.
pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut de = serde_json::Deserializer::from_str(text);
    let parsed: Result<ExperimentConfig, _> = serde_path_to_error::deserialize(&mut de);
    let config = parsed.map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        ConfigError {
            path: if path == "." { String::new() } else { path },
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: strip_position(&inner.to_string()),
        }
    })?;
    de.end().map_err(|e| ConfigError {
        path: String::new(),
        line: Some(e.line()),
        column: Some(e.column()),
        message: strip_position(&e.to_string()),
    })?;
    Ok(config)
}

fn strip_position(msg: &str) -> String {
    match msg.rfind(" at line ") {
        Some(i) => msg[..i].to_string(),
        None => msg.to_string(),
    }
}

/// Reads and parses `path`; returns the config and the directory relative
/// paths inside it resolve against.
pub fn load_config(path: &Path) -> Result<(ExperimentConfig, PathBuf), ConfigError> {
    let text = fs::read_to_string(path)
        .map_err(|e| ConfigError::at("", format!("cannot read {}: {e}", path.display())))?;
    let config = parse_config_str(&text)?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok((config, base))
}

fn positive(path: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be positive and finite, got {value}")))
    }
}

fn finite_pair(path: &str, v: Vec2) -> Result<(), ConfigError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ConfigError::at(path, format!("must be finite, got {v:?}")))
    }
}

impl ExperimentConfig {
    /// Semantic checks that need no file access beyond the noise sidecar.
    pub fn validate(&self) -> Result<(), ConfigError> {
        positive("radar.carrier_frequency_hz", self.radar.carrier_frequency_hz)?;
        positive("radar.chirp_time_s", self.radar.chirp_time_s)?;
        positive("radar.speed_of_light_m_s", self.radar.speed_of_light_m_s)?;
        if let Some(b) = self.radar.bandwidth_hz {
            positive("radar.bandwidth_hz", b)?;
        }
        if self.radar.num_pulses == 0 {
            return Err(ConfigError::at("radar.num_pulses", "must be at least 1"));
        }
        if self.vehicles.is_empty() {
            return Err(ConfigError::at("vehicles", "at least one vehicle is required"));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            let p = format!("vehicles[{i}]");
            finite_pair(&format!("{p}.velocity"), v.velocity)?;
            match (&v.ula, &v.tx_positions, &v.rx_positions) {
                (Some(u), None, None) => {
                    finite_pair(&format!("{p}.ula.origin"), u.origin)?;
                    if u.num_tx == 0 || u.num_rx == 0 {
                        return Err(ConfigError::at(format!("{p}.ula"), "num_tx and num_rx must be at least 1"));
                    }
                    let norm = u.axis[0].hypot(u.axis[1]);
                    if !(norm.is_finite() && norm > 0.0) {
                        return Err(ConfigError::at(format!("{p}.ula.axis"), "must be a nonzero direction"));
                    }
                    for (key, s) in [("tx_spacing_m", u.tx_spacing_m), ("rx_spacing_m", u.rx_spacing_m)] {
                        if let Some(s) = s {
                            positive(&format!("{p}.ula.{key}"), s)?;
                        }
                    }
                }
                (None, Some(tx), Some(rx)) => {
                    for (key, list) in [("tx_positions", tx), ("rx_positions", rx)] {
                        if list.is_empty() {
                            return Err(ConfigError::at(format!("{p}.{key}"), "must not be empty"));
                        }
                        for (j, q) in list.iter().enumerate() {
                            finite_pair(&format!("{p}.{key}[{j}]"), *q)?;
                        }
                    }
                }
                _ => {
                    return Err(ConfigError::at(
                        &p,
                        "give either `ula` or both `tx_positions` and `rx_positions`",
                    ))
                }
            }
        }
        finite_pair("target.position", self.target.position)?;
        finite_pair("target.velocity", self.target.velocity)?;
        if let Some(r) = &self.reflectivity {
            if r.len() != self.vehicles.len() {
                return Err(ConfigError::at(
                    "reflectivity",
                    format!("needs one value per vehicle ({}), got {}", self.vehicles.len(), r.len()),
                ));
            }
            for (i, a) in r.iter().enumerate() {
                let z = a.value();
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(ConfigError::at(format!("reflectivity[{i}]"), "must be finite"));
                }
            }
        }
        match &self.noise {
            NoiseConfig::White { power } => positive("noise.power", *power)?,
            NoiseConfig::BlockDiagonal { .. } => {}
            NoiseConfig::Interference { power, sources } => {
                positive("noise.power", *power)?;
                for (i, s) in sources.iter().enumerate() {
                    finite_pair(&format!("noise.sources[{i}].position"), s.position)?;
                    finite_pair(&format!("noise.sources[{i}].velocity"), s.velocity)?;
                    if !(s.inr.is_finite() && s.inr >= 0.0) {
                        return Err(ConfigError::at(format!("noise.sources[{i}].inr"), "must be nonnegative"));
                    }
                }
            }
        }
        let o = &self.optimizer;
        positive("optimizer.epsilon", o.epsilon)?;
        if o.max_iter == 0 {
            return Err(ConfigError::at("optimizer.max_iter", "must be at least 1"));
        }
        if o.restarts == 0 {
            return Err(ConfigError::at("optimizer.restarts", "must be at least 1"));
        }
        let mc = &self.monte_carlo;
        if mc.trials == 0 {
            return Err(ConfigError::at("monte_carlo.trials", "must be at least 1"));
        }
        if mc.thresholds < 2 {
            return Err(ConfigError::at("monte_carlo.thresholds", "must be at least 2"));
        }
        for (i, p) in mc.pfa_points.iter().enumerate() {
            if !(*p > 0.0 && *p < 1.0) {
                return Err(ConfigError::at(format!("monte_carlo.pfa_points[{i}]"), format!("must lie in (0, 1), got {p}")));
            }
        }
        if let Some(subsets) = &self.subsets {
            for (i, s) in subsets.iter().enumerate() {
                if s.is_empty() {
                    return Err(ConfigError::at(format!("subsets[{i}]"), "must name at least one vehicle"));
                }
                for (j, &v) in s.iter().enumerate() {
                    if v == 0 || v > self.vehicles.len() {
                        return Err(ConfigError::at(
                            format!("subsets[{i}][{j}]"),
                            format!("vehicle {v} out of range 1..={}", self.vehicles.len()),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn dims_hint(&self) -> (usize, usize, usize, usize) {
        let first = &self.vehicles[0];
        let (n, m) = match (&first.ula, &first.tx_positions, &first.rx_positions) {
            (Some(u), _, _) => (u.num_tx, u.num_rx),
            (None, Some(tx), Some(rx)) => (tx.len(), rx.len()),
            _ => (0, 0),
        };
        (self.vehicles.len(), n, self.radar.num_pulses, m)
    }
}

fn build_vehicle(v: &VehicleConfig, wavelength: f64) -> Vehicle {
    match &v.ula {
        Some(u) => {
            let norm = u.axis[0].hypot(u.axis[1]);
            let axis = [u.axis[0] / norm, u.axis[1] / norm];
            let rx_step = u.rx_spacing_m.unwrap_or(wavelength / 2.0);
            let tx_step = u.tx_spacing_m.unwrap_or(u.num_rx as f64 * wavelength / 2.0);
            let line = |count: usize, step: f64| -> Vec<Vec2> {
                (0..count)
                    .map(|i| {
                        let d = i as f64 * step;
                        [u.origin[0] + d * axis[0], u.origin[1] + d * axis[1]]
                    })
                    .collect()
            };
            Vehicle {
                tx_positions: line(u.num_tx, tx_step),
                rx_positions: line(u.num_rx, rx_step),
                velocity: v.velocity,
            }
        }
        None => Vehicle {
            tx_positions: v.tx_positions.clone().unwrap_or_default(),
            rx_positions: v.rx_positions.clone().unwrap_or_default(),
            velocity: v.velocity,
        },
    }
}

/// Builds and validates the scenario. Relative sidecar paths resolve
/// against `base_dir`.
pub fn build_scenario(config: &ExperimentConfig, base_dir: &Path) -> Result<Scenario, ConfigError> {
    config.validate()?;
    let r = &config.radar;
    let mut radar = Radar::new(r.carrier_frequency_hz, r.chirp_time_s, r.num_pulses);
    radar.speed_of_light_m_s = r.speed_of_light_m_s;
    radar.bandwidth_hz = r.bandwidth_hz;
    let lambda = radar.wavelength();
    let reflectivity = match &config.reflectivity {
        Some(list) => list.iter().map(|a| a.value()).collect(),
        None => vec![Complex64::new(1.0, 0.0); config.vehicles.len()],
    };
    let mut scenario = Scenario {
        radar,
        doppler_mode: match r.doppler_mode {
            DopplerChoice::Literal => DopplerMode::Literal,
            DopplerChoice::Relative => DopplerMode::Relative,
        },
        vehicles: config.vehicles.iter().map(|v| build_vehicle(v, lambda)).collect(),
        target: Target {
            position: config.target.position,
            velocity: config.target.velocity,
        },
        covariance: CovarianceModel::white(1.0),
        reflectivity,
    };
    // Geometry is checked first; the interference covariance is built from
    // steering vectors and needs it.
    scenario
        .validate()
        .map_err(|e| ConfigError::at("vehicles", e.to_string()))?;
    scenario.covariance = match &config.noise {
        NoiseConfig::White { power } => CovarianceModel::white(*power),
        NoiseConfig::BlockDiagonal { file } => {
            let path = base_dir.join(file);
            let f = fs::File::open(&path)
                .map_err(|e| ConfigError::at("noise.file", format!("cannot open {}: {e}", path.display())))?;
            let blocks = matfile::read_blocks(std::io::BufReader::new(f))
                .map_err(|e| ConfigError::at("noise.file", format!("{}: {e}", path.display())))?;
            CovarianceModel::BlockDiagonal { blocks }
        }
        NoiseConfig::Interference { power, sources } => {
            let sources: Vec<InterferenceSource> = sources
                .iter()
                .map(|s| InterferenceSource {
                    position: s.position,
                    velocity: s.velocity,
                    inr: s.inr,
                })
                .collect();
            interference_covariance(&scenario, *power, &sources)
                .map_err(|e| ConfigError::at("noise.sources", e.to_string()))?
        }
    };
    scenario
        .covariance
        .validate(&scenario.dims())
        .map_err(|e| ConfigError::at("noise", e.to_string()))?;
    Ok(scenario)
}

/// Selection matrix for a per-pulse transmitter list.
pub fn schedule_from_pulses(pulses: &[Option<usize>], transmitters: usize) -> Result<SelectionMatrix, ConfigError> {
    let mut j = SelectionMatrix::zeros(pulses.len(), transmitters);
    for (p, slot) in pulses.iter().enumerate() {
        if let Some(c) = *slot {
            if c >= transmitters {
                return Err(ConfigError::at(
                    format!("schedule[{p}]"),
                    format!("transmitter {c} out of range 0..{transmitters}"),
                ));
            }
            j.set(p, c, true);
        }
    }
    Ok(j)
}

/// Per-pulse transmitter list of a selection matrix.
pub fn pulses_of(j: &SelectionMatrix) -> Vec<Option<usize>> {
    (0..j.rows()).map(|p| (0..j.cols()).find(|&c| j.get(p, c))).collect()
}

/// Transmitter c on pulse c, remaining pulses silent.
pub fn sequential_schedule(pulses: usize, transmitters: usize) -> SelectionMatrix {
    let mut j = SelectionMatrix::zeros(pulses, transmitters);
    for c in 0..transmitters.min(pulses) {
        j.set(c, c, true);
    }
    j
}
