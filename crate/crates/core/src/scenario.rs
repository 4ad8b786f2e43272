//! Scenario configuration: defaults, the `key = value` file format and
//! validation.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use thiserror::Error;

/// Lower and upper bounds of the density sweep (vehicles per meter per lane).
pub const DENSITY_RANGE: (f64, f64) = (0.01, 0.09);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NetworkMode {
    Conventional,
    Mec,
}

impl NetworkMode {
    pub fn as_str(self) -> &'static str {
        match self {
            NetworkMode::Conventional => "conventional",
            NetworkMode::Mec => "mec",
        }
    }
}

impl fmt::Display for NetworkMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for NetworkMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "conventional" => Ok(NetworkMode::Conventional),
            "mec" => Ok(NetworkMode::Mec),
            other => Err(format!("unknown network mode `{other}` (expected conventional|mec)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeliveryMode {
    /// Every vehicle within the transmission range of the eNodeB.
    Broadcast,
    /// The `k` vehicles closest to the VRU cluster.
    NearestK(usize),
}

impl fmt::Display for DeliveryMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DeliveryMode::Broadcast => f.write_str("broadcast"),
            DeliveryMode::NearestK(k) => write!(f, "nearest_k({k})"),
        }
    }
}

impl FromStr for DeliveryMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "broadcast" {
            return Ok(DeliveryMode::Broadcast);
        }
        let inner = s
            .strip_prefix("nearest_k(")
            .and_then(|r| r.strip_suffix(')'))
            .or_else(|| s.strip_prefix("nearest_k:"))
            .ok_or_else(|| format!("unknown delivery mode `{s}` (expected broadcast|nearest_k(K))"))?;
        inner
            .trim()
            .parse::<usize>()
            .map(DeliveryMode::NearestK)
            .map_err(|_| format!("invalid k in delivery mode `{s}`"))
    }
}

/// Every tunable of one simulation run. Defaults reproduce the reference
/// urban-intersection scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub road_length_m: f64,
    pub lane_count: usize,
    /// Vehicles per meter per lane.
    pub vehicle_density: f64,
    /// Permit densities outside [`DENSITY_RANGE`].
    pub allow_density_override: bool,
    pub vehicle_speed_range_kmh: (f64, f64),
    pub pedestrian_speed_kmh: f64,
    /// When false, VRUs wait at the curb instead of crossing.
    pub vru_moving: bool,
    pub vru_count: usize,
    pub vru_tx_power_dbm: f64,
    pub enb_tx_power_dbm: f64,
    pub bandwidth_mhz: f64,
    pub carrier_freq_ghz: f64,
    pub packet_size_bits: u64,
    pub transmission_range_m: f64,
    /// Poisson awareness-message rate per VRU.
    pub cam_rate_hz: f64,
    pub network_mode: NetworkMode,
    pub delivery_mode: DeliveryMode,
    pub harq_max_attempts: u32,
    pub sim_duration_s: f64,
    pub seed: u64,
    pub bler_k: f64,
    pub bler_s0: f64,
    /// Probability that an uplink transmission is lost to a collision.
    pub collision_prob: f64,
    /// Downlink assignments the control channel carries per subframe.
    pub dl_assignments_per_subframe: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            road_length_m: 1000.0,
            lane_count: 1,
            vehicle_density: 0.05,
            allow_density_override: false,
            vehicle_speed_range_kmh: (70.0, 110.0),
            pedestrian_speed_kmh: 3.0,
            vru_moving: true,
            vru_count: 80,
            vru_tx_power_dbm: 23.0,
            enb_tx_power_dbm: 46.0,
            bandwidth_mhz: 10.0,
            carrier_freq_ghz: 5.9,
            packet_size_bits: 10_000,
            transmission_range_m: 500.0,
            cam_rate_hz: 1.0,
            network_mode: NetworkMode::Conventional,
            delivery_mode: DeliveryMode::Broadcast,
            harq_max_attempts: 4,
            sim_duration_s: 10.0,
            seed: 0,
            bler_k: crate::linkphy::DEFAULT_BLER_K,
            bler_s0: crate::linkphy::DEFAULT_BLER_S0,
            collision_prob: 0.0,
            dl_assignments_per_subframe: 10,
        }
    }
}

/// One violated invariant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    RangeViolation { field: &'static str, bound: String },
    MissingField(&'static str),
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::RangeViolation { field, bound } => write!(f, "RangeViolation: {field} must be {bound}"),
            Violation::MissingField(field) => write!(f, "MissingField: {field}"),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("invalid configuration: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: invalid value `{value}` for `{key}`: {message}")]
    InvalidValue { line: usize, key: String, value: String, message: String },
}

impl ConfigError {
    pub fn name(&self) -> &'static str {
        match self {
            ConfigError::Invalid(v) => match v.first() {
                Some(Violation::MissingField(_)) => "MissingField",
                _ => "RangeViolation",
            },
            ConfigError::Syntax { .. } => "SyntaxError",
            ConfigError::UnknownKey { .. } => "UnknownKey",
            ConfigError::InvalidValue { .. } => "InvalidValue",
        }
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ")
}

/// A configuration that passed [`validate_config`]. Immutable.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedConfig(ScenarioConfig);

impl ValidatedConfig {
    pub fn into_inner(self) -> ScenarioConfig {
        self.0
    }

    /// Copy with a single field changed, re-validated.
    pub fn with(&self, edit: impl FnOnce(&mut ScenarioConfig)) -> Result<ValidatedConfig, ConfigError> {
        let mut cfg = self.0.clone();
        edit(&mut cfg);
        validate_config(cfg)
    }
}

impl Deref for ValidatedConfig {
    type Target = ScenarioConfig;

    fn deref(&self) -> &ScenarioConfig {
        &self.0
    }
}

impl From<ValidatedConfig> for ScenarioConfig {
    fn from(v: ValidatedConfig) -> Self {
        v.0
    }
}

/// Checks every invariant and reports all violations at once.
pub fn validate_config(cfg: impl Into<ScenarioConfig>) -> Result<ValidatedConfig, ConfigError> {
    let cfg = cfg.into();
    let mut v = Vec::new();
    let mut range = |ok: bool, field: &'static str, bound: &str| {
        if !ok {
            v.push(Violation::RangeViolation { field, bound: bound.to_string() });
        }
    };

    let pos = |x: f64| x.is_finite() && x > 0.0;
    range(pos(cfg.road_length_m), "road_length_m", "> 0");
    range(cfg.lane_count > 0, "lane_count", "> 0");
    if cfg.allow_density_override {
        range(pos(cfg.vehicle_density), "vehicle_density", "> 0");
    } else {
        let (lo, hi) = DENSITY_RANGE;
        range(
            cfg.vehicle_density.is_finite() && (lo..=hi).contains(&cfg.vehicle_density),
            "vehicle_density",
            &format!("within [{lo}, {hi}]"),
        );
    }
    let (smin, smax) = cfg.vehicle_speed_range_kmh;
    range(pos(smin) && pos(smax), "vehicle_speed_range_kmh", "> 0");
    range(smin <= smax, "vehicle_speed_range_kmh", "lower <= upper");
    range(cfg.pedestrian_speed_kmh.is_finite() && cfg.pedestrian_speed_kmh >= 0.0, "pedestrian_speed_kmh", ">= 0");
    range(cfg.vru_count > 0, "vru_count", "> 0");
    range(cfg.vru_tx_power_dbm.is_finite(), "vru_tx_power_dbm", "finite");
    range(cfg.enb_tx_power_dbm.is_finite(), "enb_tx_power_dbm", "finite");
    range(pos(cfg.bandwidth_mhz), "bandwidth_mhz", "> 0");
    range(pos(cfg.carrier_freq_ghz), "carrier_freq_ghz", "> 0");
    range(cfg.packet_size_bits > 0, "packet_size_bits", "> 0");
    range(pos(cfg.transmission_range_m), "transmission_range_m", "> 0");
    range(cfg.cam_rate_hz.is_finite() && cfg.cam_rate_hz >= 0.0, "cam_rate_hz", ">= 0");
    if let DeliveryMode::NearestK(k) = cfg.delivery_mode {
        range(k > 0, "delivery_mode", "nearest_k with k >= 1");
    }
    range(cfg.harq_max_attempts > 0, "harq_max_attempts", "> 0");
    range(pos(cfg.sim_duration_s), "sim_duration_s", "> 0");
    range(pos(cfg.bler_k), "bler_k", "> 0");
    range(cfg.bler_s0.is_finite(), "bler_s0", "finite");
    range((0.0..=1.0).contains(&cfg.collision_prob), "collision_prob", "within [0, 1]");
    range(cfg.dl_assignments_per_subframe > 0, "dl_assignments_per_subframe", "> 0");

    if v.is_empty() {
        Ok(ValidatedConfig(cfg))
    } else {
        Err(ConfigError::Invalid(v))
    }
}

/// `round(λ · road_length · lanes)`.
pub fn vehicle_count(cfg: &ValidatedConfig) -> usize {
    (cfg.vehicle_density * cfg.road_length_m * cfg.lane_count as f64).round() as usize
}

/// Density λ that yields `count` vehicles on the configured road.
pub fn density_for_count(cfg: &ScenarioConfig, count: usize) -> f64 {
    count as f64 / (cfg.road_length_m * cfg.lane_count as f64)
}

pub const CONFIG_KEYS: &[&str] = &[
    "road_length_m",
    "lane_count",
    "vehicle_density",
    "allow_density_override",
    "vehicle_speed_range_kmh",
    "pedestrian_speed_kmh",
    "vru_moving",
    "vru_count",
    "vru_tx_power_dbm",
    "enb_tx_power_dbm",
    "bandwidth_mhz",
    "carrier_freq_ghz",
    "packet_size_bits",
    "transmission_range_m",
    "cam_rate_hz",
    "network_mode",
    "delivery_mode",
    "harq_max_attempts",
    "sim_duration_s",
    "seed",
    "bler_k",
    "bler_s0",
    "collision_prob",
    "dl_assignments_per_subframe",
];

impl ScenarioConfig {
    /// Parses the `key = value` format. Keys not present keep their
    /// defaults; the result is not yet validated.
    pub fn parse(text: &str) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        let mut seen: Vec<&str> = Vec::new();
        let mut missing = Vec::new();

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: line_no,
                message: format!("expected `key = value`, found `{line}`"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            let Some(&known) = CONFIG_KEYS.iter().find(|k| **k == key) else {
                return Err(ConfigError::UnknownKey { line: line_no, key: key.to_string() });
            };
            if seen.contains(&known) {
                return Err(ConfigError::Syntax { line: line_no, message: format!("duplicate key `{key}`") });
            }
            seen.push(known);
            if value.is_empty() {
                missing.push(Violation::MissingField(known));
                continue;
            }
            cfg.set(known, value).map_err(|message| ConfigError::InvalidValue {
                line: line_no,
                key: key.to_string(),
                value: value.to_string(),
                message,
            })?;
        }
        if missing.is_empty() {
            Ok(cfg)
        } else {
            Err(ConfigError::Invalid(missing))
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: FromStr>(v: &str) -> Result<T, String> {
            v.parse::<T>().map_err(|_| "not a number".to_string())
        }
        fn flag(v: &str) -> Result<bool, String> {
            match v {
                "true" | "1" | "yes" => Ok(true),
                "false" | "0" | "no" => Ok(false),
                _ => Err("expected true|false".into()),
            }
        }
        match key {
            "road_length_m" => self.road_length_m = num(value)?,
            "lane_count" => self.lane_count = num(value)?,
            "vehicle_density" => self.vehicle_density = num(value)?,
            "allow_density_override" => self.allow_density_override = flag(value)?,
            "vehicle_speed_range_kmh" => {
                let inner = value.trim_start_matches('(').trim_end_matches(')');
                let (lo, hi) = inner.split_once(',').ok_or("expected `low, high`")?;
                self.vehicle_speed_range_kmh = (num(lo.trim())?, num(hi.trim())?);
            }
            "pedestrian_speed_kmh" => self.pedestrian_speed_kmh = num(value)?,
            "vru_moving" => self.vru_moving = flag(value)?,
            "vru_count" => self.vru_count = num(value)?,
            "vru_tx_power_dbm" => self.vru_tx_power_dbm = num(value)?,
            "enb_tx_power_dbm" => self.enb_tx_power_dbm = num(value)?,
            "bandwidth_mhz" => self.bandwidth_mhz = num(value)?,
            "carrier_freq_ghz" => self.carrier_freq_ghz = num(value)?,
            "packet_size_bits" => self.packet_size_bits = num(value)?,
            "transmission_range_m" => self.transmission_range_m = num(value)?,
            "cam_rate_hz" => self.cam_rate_hz = num(value)?,
            "network_mode" => self.network_mode = value.parse()?,
            "delivery_mode" => self.delivery_mode = value.parse()?,
            "harq_max_attempts" => self.harq_max_attempts = num(value)?,
            "sim_duration_s" => self.sim_duration_s = num(value)?,
            "seed" => self.seed = num(value)?,
            "bler_k" => self.bler_k = num(value)?,
            "bler_s0" => self.bler_s0 = num(value)?,
            "collision_prob" => self.collision_prob = num(value)?,
            "dl_assignments_per_subframe" => self.dl_assignments_per_subframe = num(value)?,
            _ => unreachable!("key list and setter out of sync: {key}"),
        }
        Ok(())
    }

    /// Renders every key; `parse(to_config_string())` reproduces `self`.
    pub fn to_config_string(&self) -> String {
        let (lo, hi) = self.vehicle_speed_range_kmh;
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            s.push_str(k);
            s.push_str(" = ");
            s.push_str(&v);
            s.push('\n');
        };
        kv("road_length_m", self.road_length_m.to_string());
        kv("lane_count", self.lane_count.to_string());
        kv("vehicle_density", self.vehicle_density.to_string());
        kv("allow_density_override", self.allow_density_override.to_string());
        kv("vehicle_speed_range_kmh", format!("{lo}, {hi}"));
        kv("pedestrian_speed_kmh", self.pedestrian_speed_kmh.to_string());
        kv("vru_moving", self.vru_moving.to_string());
        kv("vru_count", self.vru_count.to_string());
        kv("vru_tx_power_dbm", self.vru_tx_power_dbm.to_string());
        kv("enb_tx_power_dbm", self.enb_tx_power_dbm.to_string());
        kv("bandwidth_mhz", self.bandwidth_mhz.to_string());
        kv("carrier_freq_ghz", self.carrier_freq_ghz.to_string());
        kv("packet_size_bits", self.packet_size_bits.to_string());
        kv("transmission_range_m", self.transmission_range_m.to_string());
        kv("cam_rate_hz", self.cam_rate_hz.to_string());
        kv("network_mode", self.network_mode.to_string());
        kv("delivery_mode", self.delivery_mode.to_string());
        kv("harq_max_attempts", self.harq_max_attempts.to_string());
        kv("sim_duration_s", self.sim_duration_s.to_string());
        kv("seed", self.seed.to_string());
        kv("bler_k", self.bler_k.to_string());
        kv("bler_s0", self.bler_s0.to_string());
        kv("collision_prob", self.collision_prob.to_string());
        kv("dl_assignments_per_subframe", self.dl_assignments_per_subframe.to_string());
        s
    }
}
