//! Scenario description, loaded from TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::baselines::StrategyKind;
use crate::energy::{GslPowerMode, LifetimeModel, PowerParams};
use crate::nettopo::LinkSharing;
use crate::orbital::{ConstellationSpec, GroundStation, GroundStationSet, DEFAULT_MIN_ELEVATION_DEG};
use crate::world::{DEFAULT_GSL_CAPACITY_BPS, DEFAULT_ISL_CAPACITY_BPS};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
}

impl ConfigError {
    pub fn invalid(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError::Invalid { path: path.into(), message: message.into() }
    }

    /// Dotted path of the offending field, if known.
    pub fn field(&self) -> Option<&str> {
        match self {
            ConfigError::Invalid { path, .. } => Some(path),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TaskKind {
    /// Ship detection: short inference, frequent imaging.
    Ship,
    /// Wildfire segmentation: long inference, sparser imaging.
    Wildfire,
}

impl TaskKind {
    /// Inference time in seconds at the three reference power levels.
    pub fn compute_seconds(self, power_level_w: f64) -> Option<f64> {
        let table: [(f64, f64); 3] = match self {
            TaskKind::Ship => [(30.0, 10.0), (50.0, 5.0), (60.0, 3.0)],
            TaskKind::Wildfire => [(30.0, 120.0), (50.0, 67.0), (60.0, 51.0)],
        };
        table.iter().find(|(w, _)| *w == power_level_w).map(|&(_, s)| s)
    }

    pub fn imaging_interval_s(self) -> f64 {
        match self {
            TaskKind::Ship => 1.0,
            TaskKind::Wildfire => 5.0,
        }
    }
}

/// Latitude/longitude rectangle; `lon_min > lon_max` wraps across 180°.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    #[serde(default)]
    pub name: String,
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl Region {
    pub fn contains(&self, lat: f64, lon: f64) -> bool {
        let lat_ok = lat >= self.lat_min && lat <= self.lat_max;
        let lon_ok = if self.lon_min <= self.lon_max {
            lon >= self.lon_min && lon <= self.lon_max
        } else {
            lon >= self.lon_min || lon <= self.lon_max
        };
        lat_ok && lon_ok
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadConfig {
    pub task: TaskKind,
    /// Processing power; selects the inference time from the task table.
    pub power_level_w: f64,
    /// Overrides the table lookup.
    #[serde(default)]
    pub compute_seconds: Option<f64>,
    #[serde(default)]
    pub imaging_interval_s: Option<f64>,
    #[serde(default = "default_deadline")]
    pub deadline_s: f64,
    #[serde(default = "default_pixels")]
    pub image_pixels: f64,
    #[serde(default = "default_bpp")]
    pub bits_per_pixel: f64,
    #[serde(default = "default_compression")]
    pub compression_ratio: f64,
    /// Chance that an image taken over a region becomes a task.
    #[serde(default = "default_capture")]
    pub capture_probability: f64,
    pub regions: Vec<Region>,
}

fn default_deadline() -> f64 {
    300.0
}
fn default_pixels() -> f64 {
    1.0e8
}
fn default_bpp() -> f64 {
    8.0
}
fn default_compression() -> f64 {
    10.0
}
fn default_capture() -> f64 {
    1.0
}

impl WorkloadConfig {
    pub fn compute_seconds(&self) -> Option<f64> {
        self.compute_seconds.or_else(|| self.task.compute_seconds(self.power_level_w))
    }

    pub fn interval_s(&self) -> f64 {
        self.imaging_interval_s.unwrap_or_else(|| self.task.imaging_interval_s())
    }

    pub fn image_bits(&self) -> f64 {
        self.image_pixels * self.bits_per_pixel / self.compression_ratio
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundConfig {
    #[serde(default = "default_elevation")]
    pub min_elevation_deg: f64,
    /// CSV with `id,lat,lon`, relative to the config file.
    #[serde(default)]
    pub stations_file: Option<PathBuf>,
    #[serde(default)]
    pub stations: Vec<GroundStation>,
}

fn default_elevation() -> f64 {
    DEFAULT_MIN_ELEVATION_DEG
}

impl Default for GroundConfig {
    fn default() -> Self {
        GroundConfig { min_elevation_deg: default_elevation(), stations_file: None, stations: Vec::new() }
    }
}

/// Platform power; the processing draw comes from the workload.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    #[serde(default = "d_solar")]
    pub solar_w: f64,
    #[serde(default = "d_basic")]
    pub basic_w: f64,
    #[serde(default = "d_isl")]
    pub isl_w: f64,
    #[serde(default = "d_gsl")]
    pub gsl_w: f64,
    #[serde(default = "d_battery")]
    pub battery_wh: f64,
}

fn d_solar() -> f64 {
    PowerParams::default().solar_w
}
fn d_basic() -> f64 {
    PowerParams::default().basic_w
}
fn d_isl() -> f64 {
    PowerParams::default().isl_w
}
fn d_gsl() -> f64 {
    PowerParams::default().gsl_w
}
fn d_battery() -> f64 {
    PowerParams::default().battery_wh
}

impl Default for PowerConfig {
    fn default() -> Self {
        let p = PowerParams::default();
        PowerConfig { solar_w: p.solar_w, basic_w: p.basic_w, isl_w: p.isl_w, gsl_w: p.gsl_w, battery_wh: p.battery_wh }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    #[serde(default = "d_isl_cap")]
    pub isl_capacity_bps: f64,
    #[serde(default = "d_gsl_cap")]
    pub gsl_capacity_bps: f64,
    #[serde(default)]
    pub link_sharing: LinkSharing,
    #[serde(default)]
    pub gsl_power: GslPowerMode,
}

fn d_isl_cap() -> f64 {
    DEFAULT_ISL_CAPACITY_BPS
}
fn d_gsl_cap() -> f64 {
    DEFAULT_GSL_CAPACITY_BPS
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            isl_capacity_bps: DEFAULT_ISL_CAPACITY_BPS,
            gsl_capacity_bps: DEFAULT_GSL_CAPACITY_BPS,
            link_sharing: LinkSharing::default(),
            gsl_power: GslPowerMode::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "d_slot")]
    pub slot_seconds: f64,
    #[serde(default)]
    pub horizon_slots: Option<usize>,
    /// Horizon in orbital periods, used when `horizon_slots` is absent.
    #[serde(default)]
    pub horizon_periods: Option<f64>,
    #[serde(default = "d_strategy")]
    pub strategy: StrategyKind,
    pub constellation: ConstellationSpec,
    #[serde(default)]
    pub ground: GroundConfig,
    #[serde(default)]
    pub power: PowerConfig,
    #[serde(default)]
    pub network: NetworkConfig,
    pub workload: WorkloadConfig,
    #[serde(default)]
    pub lifetime: LifetimeModel,
    /// Directory for relative paths; set by [`ScenarioConfig::load`].
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

fn d_slot() -> f64 {
    1.0
}
fn d_strategy() -> StrategyKind {
    StrategyKind::SunlightAware
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Ok(cfg)
    }

    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text =
            std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        let mut cfg = Self::from_toml(&text)?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn power_params(&self) -> PowerParams {
        let p = &self.power;
        PowerParams {
            solar_w: p.solar_w,
            basic_w: p.basic_w,
            isl_w: p.isl_w,
            gsl_w: p.gsl_w,
            cp_w: self.workload.power_level_w,
            battery_wh: p.battery_wh,
        }
    }

    pub fn stations(&self) -> Result<GroundStationSet, ConfigError> {
        let g = &self.ground;
        let mut list = g.stations.clone();
        if let Some(file) = &g.stations_file {
            let path = match &self.base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file.clone(),
            };
            let set = GroundStationSet::from_csv_path(&path, g.min_elevation_deg)
                .map_err(|e| ConfigError::invalid("ground.stations_file", e.to_string()))?;
            list.extend(set.stations);
        }
        GroundStationSet::new(list, g.min_elevation_deg).map_err(|e| ConfigError::invalid("ground", e.to_string()))
    }

    /// Checks every field, reporting the first problem with its path.
    pub fn validate(&self) -> Result<(), ConfigError> {
        fn bad(path: impl Into<String>, message: impl Into<String>) -> ConfigError {
            ConfigError::invalid(path, message)
        }
        let positive = |path: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(bad(path, format!("must be positive, got {v}")))
            }
        };
        let non_negative = |path: &str, v: f64| {
            if v.is_finite() && v >= 0.0 {
                Ok(())
            } else {
                Err(bad(path, format!("must be non-negative, got {v}")))
            }
        };
        positive("slot_seconds", self.slot_seconds)?;
        match (self.horizon_slots, self.horizon_periods) {
            (Some(0), _) => return Err(bad("horizon_slots", "must be at least 1")),
            (Some(_), _) => {}
            (None, Some(p)) => positive("horizon_periods", p)?,
            (None, None) => return Err(bad("horizon_slots", "set horizon_slots or horizon_periods")),
        }

        let c = &self.constellation;
        if !(1..=366).contains(&c.epoch_day_of_year) {
            return Err(bad("constellation.epoch_day_of_year", "must be in 1..=366"));
        }
        if c.shells.is_empty() {
            return Err(bad("constellation.shells", "at least one shell is required"));
        }
        for (i, s) in c.shells.iter().enumerate() {
            let p = |f: &str| format!("constellation.shells[{i}].{f}");
            positive(&p("altitude_km"), s.altitude_km)?;
            if !(0.0..=180.0).contains(&s.inclination_deg) {
                return Err(bad(p("inclination_deg"), "must be within [0, 180]"));
            }
            if s.num_planes == 0 {
                return Err(bad(p("num_planes"), "must be at least 1"));
            }
            if s.sats_per_plane == 0 {
                return Err(bad(p("sats_per_plane"), "must be at least 1"));
            }
        }
        c.validate().map_err(|e| bad("constellation", e.to_string()))?;

        let g = &self.ground;
        if !(g.min_elevation_deg > 0.0 && g.min_elevation_deg < 90.0) {
            return Err(bad("ground.min_elevation_deg", "must be within (0, 90)"));
        }
        for (i, st) in g.stations.iter().enumerate() {
            if st.latitude_deg.abs() > 90.0 {
                return Err(bad(format!("ground.stations[{i}].lat"), "must be within [-90, 90]"));
            }
            if !(-180.0..180.0).contains(&st.longitude_deg) {
                return Err(bad(format!("ground.stations[{i}].lon"), "must be within [-180, 180)"));
            }
        }
        self.stations()?;

        let p = &self.power;
        non_negative("power.solar_w", p.solar_w)?;
        non_negative("power.basic_w", p.basic_w)?;
        non_negative("power.isl_w", p.isl_w)?;
        non_negative("power.gsl_w", p.gsl_w)?;
        positive("power.battery_wh", p.battery_wh)?;

        positive("network.isl_capacity_bps", self.network.isl_capacity_bps)?;
        positive("network.gsl_capacity_bps", self.network.gsl_capacity_bps)?;

        let w = &self.workload;
        positive("workload.power_level_w", w.power_level_w)?;
        let Some(cp) = w.compute_seconds() else {
            return Err(bad(
                "workload.power_level_w",
                format!(
                    "no reference inference time at {} W; use 30, 50 or 60, or set compute_seconds",
                    w.power_level_w
                ),
            ));
        };
        positive("workload.compute_seconds", cp)?;
        positive("workload.imaging_interval_s", w.interval_s())?;
        positive("workload.deadline_s", w.deadline_s)?;
        if cp > w.deadline_s {
            return Err(bad("workload.deadline_s", "shorter than the inference time"));
        }
        positive("workload.image_pixels", w.image_pixels)?;
        positive("workload.bits_per_pixel", w.bits_per_pixel)?;
        positive("workload.compression_ratio", w.compression_ratio)?;
        if !(0.0..=1.0).contains(&w.capture_probability) {
            return Err(bad("workload.capture_probability", "must be within [0, 1]"));
        }
        for (i, r) in w.regions.iter().enumerate() {
            let path = |f: &str| format!("workload.regions[{i}].{f}");
            if !(-90.0..=90.0).contains(&r.lat_min) || !(-90.0..=90.0).contains(&r.lat_max) || r.lat_min > r.lat_max {
                return Err(bad(path("lat_min"), "latitudes must satisfy -90 <= lat_min <= lat_max <= 90"));
            }
            for (f, v) in [("lon_min", r.lon_min), ("lon_max", r.lon_max)] {
                if !(-180.0..=180.0).contains(&v) {
                    return Err(bad(path(f), "must be within [-180, 180]"));
                }
            }
        }
        self.lifetime.validate().map_err(|e| bad("lifetime", e.to_string()))?;
        Ok(())
    }
}
