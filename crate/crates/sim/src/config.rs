//! Scenario configuration. Every key is optional; omitted keys take the
//! reference setup values (M = N = 1024, 5 GHz, 4.4 ms frame, users at 7 and 15 m).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Delay bins (subcarriers).
    pub m: usize,
    /// Doppler bins (symbols).
    pub n: usize,
    pub frame_duration_ms: f64,
    pub carrier_ghz: f64,
    /// Guard region reserved by pilot-based variants: Doppler rows, delay columns.
    pub guard: [usize; 2],
    /// Time between consecutive slots of one user.
    pub slot_s: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            m: 1024,
            n: 1024,
            frame_duration_ms: 4.4,
            carrier_ghz: 5.0,
            guard: [30, 60],
            slot_s: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArrayConfig {
    pub nx: usize,
    pub ny: usize,
}

impl Default for ArrayConfig {
    fn default() -> Self {
        Self { nx: 4, ny: 4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersConfig {
    /// Initial UAV-to-user distances, metres.
    pub distances: [f64; 2],
    /// Height of the UAV above the ground plane, metres.
    pub height_m: f64,
}

impl Default for UsersConfig {
    fn default() -> Self {
        Self {
            distances: [7.0, 15.0],
            height_m: 5.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub g_tx_db: f64,
    pub g_rx_db: f64,
    /// Total transmit power, watts.
    pub pt: f64,
    pub rcs: f64,
    /// Skip estimation and hand every variant the true channel.
    pub perfect_csi: bool,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self {
            g_tx_db: 0.0,
            g_rx_db: 0.0,
            pt: 1.0,
            rcs: 1.0,
            perfect_csi: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NlosConfig {
    pub paths: usize,
    pub max_excess_samples: usize,
    pub doppler_fraction: f64,
}

impl Default for NlosConfig {
    fn default() -> Self {
        Self {
            paths: 2,
            max_excess_samples: 16,
            doppler_fraction: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QosConfig {
    pub r1_min: f64,
    pub r2_min: f64,
}

impl Default for QosConfig {
    fn default() -> Self {
        Self { r1_min: 0.5, r2_min: 0.0 }
    }
}

/// A sweep axis: `"start:step:stop"`, a list, or a single value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AxisSpec {
    Range(String),
    List(Vec<f64>),
    Single(f64),
}

impl AxisSpec {
    pub fn values(&self, key: &'static str) -> Result<Vec<f64>, ConfigError> {
        match self {
            Self::Single(v) => Ok(vec![*v]),
            Self::List(v) => Ok(v.clone()),
            Self::Range(s) => parse_range(s).ok_or_else(|| ConfigError::Invalid {
                key,
                reason: format!("expected start:step:stop, got {s:?}"),
            }),
        }
    }
}

/// `"0:5:40"` gives `[0, 5, ..., 40]`; the stop value is included when it
/// lands on the step within rounding.
pub fn parse_range(s: &str) -> Option<Vec<f64>> {
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse().ok()).collect::<Option<_>>()?;
    let [start, step, stop] = parts[..] else {
        return None;
    };
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return None;
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    // Multiply rather than accumulate so 0:0.02:0.1 hits 0.1 exactly.
    Some((0..count).map(|i| round_grid(start + i as f64 * step)).collect())
}

fn round_grid(x: f64) -> f64 {
    (x * 1e9).round() / 1e9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub snr: AxisSpec,
    pub e: AxisSpec,
    pub speed: AxisSpec,
    /// Values held fixed while another axis is swept.
    pub snr_ref: f64,
    pub e_ref: f64,
    pub speed_ref: f64,
    pub trials: usize,
    pub sensing_slots: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            snr: AxisSpec::Range("0:5:40".into()),
            e: AxisSpec::Range("0:0.02:0.1".into()),
            speed: AxisSpec::Range("30:10:60".into()),
            snr_ref: 10.0,
            e_ref: 0.02,
            speed_ref: 30.0,
            trials: 200,
            sensing_slots: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub frame: FrameConfig,
    pub arrays: ArrayConfig,
    pub users: UsersConfig,
    pub link: LinkConfig,
    pub nlos: NlosConfig,
    pub qos: QosConfig,
    pub sweep: SweepConfig,
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse {
            line: e.span().map_or(0, |s| line_of(text, s.start)),
            message: e.message().to_string(),
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Frame shrunk to 64 x 64 with the same sample interval, guard scaled
    /// with the grid.
    pub fn desk_scale(mut self) -> Self {
        let full = FrameConfig::default();
        let (m, n) = (64usize, 64usize);
        self.frame.frame_duration_ms = full.frame_duration_ms * (m * n) as f64 / (full.m * full.n) as f64;
        self.frame.guard = [
            (full.guard[0] as f64 * n as f64 / full.n as f64).round() as usize,
            (full.guard[1] as f64 * m as f64 / full.m as f64).round() as usize,
        ];
        self.frame.m = m;
        self.frame.n = n;
        self
    }

    pub fn paper_scale(mut self) -> Self {
        let full = FrameConfig::default();
        self.frame.m = full.m;
        self.frame.n = full.n;
        self.frame.frame_duration_ms = full.frame_duration_ms;
        self.frame.guard = full.guard;
        self
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |key: &'static str, reason: &str| ConfigError::Invalid { key, reason: reason.to_string() };
        let positive = [
            ("frame.frame_duration_ms", self.frame.frame_duration_ms),
            ("frame.carrier_ghz", self.frame.carrier_ghz),
            ("frame.slot_s", self.frame.slot_s),
            ("users.height_m", self.users.height_m),
            ("link.pt", self.link.pt),
            ("link.rcs", self.link.rcs),
        ];
        for (key, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(key, &format!("must be positive, got {v}")));
            }
        }
        if self.frame.m < 2 || self.frame.n < 2 {
            return Err(invalid("frame.m", "grid needs at least 2 x 2 bins"));
        }
        let [rows, cols] = self.frame.guard;
        if rows >= self.frame.n || cols >= self.frame.m {
            return Err(invalid("frame.guard", "guard must leave part of the grid free"));
        }
        if self.arrays.nx == 0 || self.arrays.ny == 0 || self.arrays.nx * self.arrays.ny < 2 {
            return Err(invalid("arrays.nx", "array needs at least two elements"));
        }
        if self.users.distances.iter().any(|d| !(*d > self.users.height_m && d.is_finite())) {
            return Err(invalid("users.distances", "distances must exceed the UAV height"));
        }
        if self.nlos.paths == 0 {
            return Err(invalid("nlos.paths", "need at least one path"));
        }
        if self.nlos.max_excess_samples == 0 {
            return Err(invalid("nlos.max_excess_samples", "must be at least 1"));
        }
        if !(self.nlos.doppler_fraction >= 0.0 && self.nlos.doppler_fraction <= 1.0) {
            return Err(invalid("nlos.doppler_fraction", "must lie in [0, 1]"));
        }
        for (key, v) in [("qos.r1_min", self.qos.r1_min), ("qos.r2_min", self.qos.r2_min)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(invalid(key, "must be non-negative"));
            }
        }
        if self.sweep.trials == 0 {
            return Err(invalid("sweep.trials", "need at least one trial"));
        }
        if self.sweep.sensing_slots < 2 {
            return Err(invalid("sweep.sensing_slots", "need at least two slots to fit a heading"));
        }
        let axes = self.axes()?;
        for v in axes.e.iter().chain([&self.sweep.e_ref]) {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(invalid("sweep.e", "NLOS strength must be non-negative"));
            }
        }
        for v in axes.speed.iter().chain([&self.sweep.speed_ref]) {
            if !(*v >= 0.0 && v.is_finite()) {
                return Err(invalid("sweep.speed", "speed must be non-negative"));
            }
        }
        for v in axes.snr.iter().chain([&self.sweep.snr_ref]) {
            if !v.is_finite() {
                return Err(invalid("sweep.snr", "SNR must be finite"));
            }
        }
        Ok(())
    }

    pub fn axes(&self) -> Result<SweepAxes, ConfigError> {
        let axes = SweepAxes {
            snr: self.sweep.snr.values("sweep.snr")?,
            e: self.sweep.e.values("sweep.e")?,
            speed: self.sweep.speed.values("sweep.speed")?,
        };
        for (key, v) in [("sweep.snr", &axes.snr), ("sweep.e", &axes.e), ("sweep.speed", &axes.speed)] {
            if v.is_empty() {
                return Err(ConfigError::Invalid { key, reason: "axis is empty".into() });
            }
        }
        Ok(axes)
    }

    /// Usable fraction of the grid once the guard region is reserved.
    pub fn pilot_overhead(&self) -> f64 {
        let (m, n) = (self.frame.m as f64, self.frame.n as f64);
        let [rows, cols] = self.frame.guard;
        let (rows, cols) = (rows as f64, cols as f64);
        1.0 - (rows * m + cols * n - rows * cols) / (m * n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepAxes {
    pub snr: Vec<f64>,
    pub e: Vec<f64>,
    pub speed: Vec<f64>,
}

pub fn load_config(path: &Path) -> Result<ScenarioConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    ScenarioConfig::from_toml(&text)
}
