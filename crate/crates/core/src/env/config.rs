use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Canny,
    Cnn,
    Oracle,
}

impl DetectorKind {
    /// Nominal per-scan latency charged to simulated time. Fixed values keep
    /// episode metrics reproducible; measured latencies come from the
    /// detector benchmark instead.
    pub fn nominal_latency_ms(self) -> f64 {
        match self {
            DetectorKind::Canny => 22.0,
            DetectorKind::Cnn => 60.0,
            DetectorKind::Oracle => 0.0,
        }
    }
}

impl FromStr for DetectorKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "canny" => Ok(DetectorKind::Canny),
            "cnn" => Ok(DetectorKind::Cnn),
            "oracle" => Ok(DetectorKind::Oracle),
            other => Err(Error::Config(format!("unknown detector `{other}`"))),
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DetectorKind::Canny => "canny",
            DetectorKind::Cnn => "cnn",
            DetectorKind::Oracle => "oracle",
        })
    }
}

/// Environment parameters for one survey scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub length_m: f64,
    pub breadth_m: f64,
    /// Grid cell side; equal to the UAV scanning range.
    pub cell_m: f64,
    pub uav_height_m: f64,
    pub uav_speed_mps: f64,
    pub n_cracks: usize,
    pub n_false_cracks: usize,
    pub n_cars: usize,
    /// Maximum consecutive pause steps.
    pub pause_limit: u32,
    pub max_steps: u32,
    pub seed: u64,
    pub detector: DetectorKind,
    /// Charge the temporal penalty on pause steps as well as moves.
    pub temporal_penalty_on_pause: bool,
    /// Subtracted from the crack reward whenever the detector fires on a cell
    /// with no true crack.
    pub false_positive_penalty: i64,
    /// Label flip probability of the oracle detector.
    pub oracle_flip: f64,
    /// Overrides the detector's nominal per-scan latency.
    pub detector_latency_ms: Option<f64>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            length_m: 800.0,
            breadth_m: 600.0,
            cell_m: 100.0,
            uav_height_m: 50.0,
            uav_speed_mps: 25.0,
            n_cracks: 5,
            n_false_cracks: 0,
            n_cars: 2,
            pause_limit: 200,
            max_steps: 500,
            seed: 0,
            detector: DetectorKind::Canny,
            temporal_penalty_on_pause: true,
            false_positive_penalty: 0,
            oracle_flip: 0.0,
            detector_latency_ms: None,
        }
    }
}

/// Keys understood by [`ScenarioConfig`], in file order.
pub const SCENARIO_KEYS: &[&str] = &[
    "length_m",
    "breadth_m",
    "cell_m",
    "uav_height_m",
    "uav_speed_mps",
    "n_cracks",
    "n_false_cracks",
    "n_cars",
    "pause_limit",
    "max_steps",
    "seed",
    "detector",
    "temporal_penalty_on_pause",
    "false_positive_penalty",
    "oracle_flip",
    "detector_latency_ms",
];

impl ScenarioConfig {
    pub fn cols(&self) -> usize {
        (self.length_m / self.cell_m).round() as usize
    }

    pub fn rows(&self) -> usize {
        (self.breadth_m / self.cell_m).round() as usize
    }

    pub fn n_cells(&self) -> usize {
        self.cols() * self.rows()
    }

    /// Simulated seconds per step: one cell at maximum speed.
    pub fn tick_s(&self) -> f64 {
        self.cell_m / self.uav_speed_mps
    }

    pub fn latency_s(&self) -> f64 {
        self.detector_latency_ms
            .unwrap_or_else(|| self.detector.nominal_latency_ms())
            / 1000.0
    }

    pub fn validate(&self) -> Result<()> {
        let multiple = |v: f64| {
            let k = (v / self.cell_m).round();
            k >= 1.0 && (k * self.cell_m - v).abs() < 1e-9 * v.max(1.0)
        };
        if !(self.cell_m > 0.0 && self.cell_m.is_finite()) {
            return Err(Error::Config("cell_m must be positive".into()));
        }
        if !multiple(self.length_m) || !multiple(self.breadth_m) {
            return Err(Error::Config(format!(
                "deck {}x{} m is not a positive multiple of the {} m cell",
                self.length_m, self.breadth_m, self.cell_m
            )));
        }
        if self.n_cells() < 2 {
            return Err(Error::Config("grid needs at least two cells".into()));
        }
        if self.pause_limit < 1 {
            return Err(Error::Config("pause_limit must be at least 1".into()));
        }
        if self.max_steps < 1 {
            return Err(Error::Config("max_steps must be at least 1".into()));
        }
        if !(self.uav_speed_mps > 0.0) || !(self.uav_height_m > 0.0) {
            return Err(Error::Config("uav speed and height must be positive".into()));
        }
        if !(0.0..=0.5).contains(&self.oracle_flip) {
            return Err(Error::Config("oracle_flip must be in [0, 0.5]".into()));
        }
        if let Some(ms) = self.detector_latency_ms {
            if !(ms >= 0.0 && ms.is_finite()) {
                return Err(Error::Config("detector_latency_ms must be >= 0".into()));
            }
        }
        Ok(())
    }

    /// Parses a whole `key=value` file; unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = parse_kv(text)?;
        let cfg = ScenarioConfig::from_map(&mut map)?;
        if let Some(key) = map.keys().next() {
            return Err(Error::Config(format!("unknown key `{key}`")));
        }
        Ok(cfg)
    }

    /// Consumes the scenario keys from `map`, leaving any others in place.
    pub fn from_map(map: &mut BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = ScenarioConfig::default();
        for &key in SCENARIO_KEYS {
            let Some(v) = map.remove(key) else { continue };
            let bad = || Error::Config(format!("bad value `{v}` for `{key}`"));
            match key {
                "length_m" => cfg.length_m = v.parse().map_err(|_| bad())?,
                "breadth_m" => cfg.breadth_m = v.parse().map_err(|_| bad())?,
                "cell_m" => cfg.cell_m = v.parse().map_err(|_| bad())?,
                "uav_height_m" => cfg.uav_height_m = v.parse().map_err(|_| bad())?,
                "uav_speed_mps" => cfg.uav_speed_mps = v.parse().map_err(|_| bad())?,
                "n_cracks" => cfg.n_cracks = v.parse().map_err(|_| bad())?,
                "n_false_cracks" => cfg.n_false_cracks = v.parse().map_err(|_| bad())?,
                "n_cars" => cfg.n_cars = v.parse().map_err(|_| bad())?,
                "pause_limit" => cfg.pause_limit = v.parse().map_err(|_| bad())?,
                "max_steps" => cfg.max_steps = v.parse().map_err(|_| bad())?,
                "seed" => cfg.seed = v.parse().map_err(|_| bad())?,
                "detector" => cfg.detector = v.parse()?,
                "temporal_penalty_on_pause" => cfg.temporal_penalty_on_pause = parse_bool(&v).ok_or_else(bad)?,
                "false_positive_penalty" => cfg.false_positive_penalty = v.parse().map_err(|_| bad())?,
                "oracle_flip" => cfg.oracle_flip = v.parse().map_err(|_| bad())?,
                "detector_latency_ms" => cfg.detector_latency_ms = Some(v.parse().map_err(|_| bad())?),
                _ => unreachable!(),
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Serializes every key, one `key=value` per line.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.entries() {
            out.push_str(&format!("{k}={v}\n"));
        }
        out
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let mut e = vec![
            ("length_m", self.length_m.to_string()),
            ("breadth_m", self.breadth_m.to_string()),
            ("cell_m", self.cell_m.to_string()),
            ("uav_height_m", self.uav_height_m.to_string()),
            ("uav_speed_mps", self.uav_speed_mps.to_string()),
            ("n_cracks", self.n_cracks.to_string()),
            ("n_false_cracks", self.n_false_cracks.to_string()),
            ("n_cars", self.n_cars.to_string()),
            ("pause_limit", self.pause_limit.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("seed", self.seed.to_string()),
            ("detector", self.detector.to_string()),
            ("temporal_penalty_on_pause", self.temporal_penalty_on_pause.to_string()),
            ("false_positive_penalty", self.false_positive_penalty.to_string()),
            ("oracle_flip", self.oracle_flip.to_string()),
        ];
        if let Some(ms) = self.detector_latency_ms {
            e.push(("detector_latency_ms", ms.to_string()));
        }
        e
    }
}

fn parse_bool(v: &str) -> Option<bool> {
    match v {
        "true" | "1" | "yes" => Some(true),
        "false" | "0" | "no" => Some(false),
        _ => None,
    }
}

/// Flat `key=value` text: one pair per line, `#` comments, blank lines ignored.
pub fn parse_kv(text: &str) -> Result<BTreeMap<String, String>> {
    let mut map = BTreeMap::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap().trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
        let (k, v) = (k.trim(), v.trim());
        if map.insert(k.to_string(), v.to_string()).is_some() {
            return Err(Error::Config(format!("line {}: duplicate key `{k}`", n + 1)));
        }
    }
    Ok(map)
}
