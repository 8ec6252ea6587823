//! Network parameterization and config-file ingestion.
//!
//! Configs are flat `key = value` text files. Powers accept a `dBm` or `W`
//! suffix, energies `mJ` or `J`; bare numbers are watts and joules. Source
//! positions are given either explicitly (`source_positions`) or through the
//! canonical circular layout (`source_radius` together with `num_sources`).

// `!(x > 0.0)` is used throughout validation on purpose: unlike `x <= 0.0`
// it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::error::{Error, Result};
use std::fmt;
use std::path::Path;

/// Converts a power from dBm to watts; 30 dBm is 1 W.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Converts a power from watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// 2-D node coordinates in meters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl Position {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl fmt::Display for Position {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.x, self.y)
    }
}

/// Mapping from node distance to mean channel power gain.
///
/// `Bounded` is `1 / (1 + d^alpha)`; it stays finite at zero distance and is
/// the model behind the reference numbers reproduced by the golden tests.
/// `Unbounded` is the plain `d^(-alpha)` law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathLossModel {
    #[default]
    Bounded,
    Unbounded,
}

impl PathLossModel {
    pub fn mean_gain(&self, distance: f64, alpha: f64) -> f64 {
        match self {
            PathLossModel::Bounded => 1.0 / (1.0 + distance.powf(alpha)),
            PathLossModel::Unbounded => distance.powf(-alpha),
        }
    }
}

impl std::str::FromStr for PathLossModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bounded" => Ok(PathLossModel::Bounded),
            "unbounded" => Ok(PathLossModel::Unbounded),
            other => Err(Error::Config(format!(
                "unknown path_loss_model '{other}' (expected 'bounded' or 'unbounded')"
            ))),
        }
    }
}

/// Full parameterization of the network.
#[derive(Debug, Clone)]
pub struct NetworkConfig {
    /// Number of sources K.
    pub num_sources: usize,
    /// Battery discretization level L; each storage has L+1 levels.
    pub levels: u32,
    /// Battery capacity in joules.
    pub capacity_j: f64,
    /// Transmit energy threshold in joules.
    pub threshold_energy_j: f64,
    /// Actual transmit energy level l_S. `None` defaults to the threshold level.
    pub transmit_level: Option<u32>,
    /// Energy conversion efficiency, in (0, 1].
    pub efficiency: f64,
    /// Slot duration in seconds.
    pub slot_duration_s: f64,
    /// Beacon transmit power in watts.
    pub beacon_power_w: f64,
    /// Number of beacon antennas.
    pub beacon_antennas: usize,
    /// Destination noise power in watts.
    pub noise_power_w: f64,
    /// Path-loss exponent alpha.
    pub path_loss_exponent: f64,
    /// Rate threshold in bits/s/Hz.
    pub rate_threshold: f64,
    pub path_loss_model: PathLossModel,
    pub beacon_position: Position,
    pub destination_position: Position,
    pub source_positions: Vec<Position>,
    /// Radius of the canonical source layout, when the sources were
    /// auto-placed. Required for source-count and radius sweeps.
    pub source_radius: Option<f64>,
}

/// Canonical source placement on a circle of radius `r`: the first six
/// positions are fixed and the first K are taken in order.
pub fn auto_place_sources(count: usize, radius: f64) -> Result<Vec<Position>> {
    const H: f64 = std::f64::consts::FRAC_1_SQRT_2;
    let layout = [
        (-1.0, 0.0),
        (0.0, 1.0),
        (1.0, 0.0),
        (0.0, -1.0),
        (H, H),
        (-H, -H),
    ];
    if count == 0 || count > layout.len() {
        return Err(Error::Config(format!(
            "auto placement supports 1..={} sources, got {count}",
            layout.len()
        )));
    }
    Ok(layout[..count]
        .iter()
        .map(|&(x, y)| Position::new(x * radius, y * radius))
        .collect())
}

impl NetworkConfig {
    /// Validates all invariants, returning the first violation.
    pub fn validate(&self) -> Result<()> {
        let err = |msg: String| Err(Error::Config(msg));
        if self.num_sources < 1 {
            return err("num_sources must be at least 1".into());
        }
        if self.levels < 1 {
            return err("levels must be at least 1".into());
        }
        if !(self.capacity_j > 0.0) {
            return err(format!("capacity must be positive, got {}", self.capacity_j));
        }
        if !(self.threshold_energy_j > 0.0) {
            return err("threshold_energy must be positive".into());
        }
        if self.threshold_energy_j > self.capacity_j * (1.0 + 1e-12) {
            return err(format!(
                "threshold_energy {} J exceeds capacity {} J (threshold unreachable)",
                self.threshold_energy_j, self.capacity_j
            ));
        }
        if let Some(ls) = self.transmit_level {
            if ls < 1 || ls > self.levels {
                return err(format!(
                    "transmit_level {ls} outside 1..={}",
                    self.levels
                ));
            }
        }
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return err(format!("efficiency must be in (0,1], got {}", self.efficiency));
        }
        if !(self.slot_duration_s > 0.0) {
            return err("slot_duration must be positive".into());
        }
        if !(self.beacon_power_w > 0.0) {
            return err("beacon_power must be positive".into());
        }
        if self.beacon_antennas < 1 {
            return err("beacon_antennas must be at least 1".into());
        }
        if !(self.noise_power_w > 0.0) {
            return err("noise_power must be positive".into());
        }
        if !(self.path_loss_exponent > 0.0) {
            return err("path_loss_exponent must be positive".into());
        }
        if !(self.rate_threshold > 0.0) {
            return err("rate_threshold must be positive".into());
        }
        if self.source_positions.len() != self.num_sources {
            return err(format!(
                "expected {} source positions, got {}",
                self.num_sources,
                self.source_positions.len()
            ));
        }
        // Zero distances blow up the unbounded gain law; the bounded law is
        // finite everywhere so coincident nodes are allowed there (the
        // collapsed-geometry sweeps rely on it).
        if self.path_loss_model == PathLossModel::Unbounded {
            for (name, pair) in self.node_pairs() {
                if pair.0.distance_to(&pair.1) == 0.0 {
                    return err(format!(
                        "coincident node positions for pair {name} at {}",
                        pair.0
                    ));
                }
            }
        }
        Ok(())
    }

    fn node_pairs(&self) -> Vec<(String, (Position, Position))> {
        let mut pairs = vec![(
            "B-D".to_string(),
            (self.beacon_position, self.destination_position),
        )];
        for (k, &s) in self.source_positions.iter().enumerate() {
            pairs.push((format!("B-S{}", k + 1), (self.beacon_position, s)));
            pairs.push((format!("S{}-D", k + 1), (s, self.destination_position)));
            for (j, &t) in self.source_positions.iter().enumerate().skip(k + 1) {
                pairs.push((format!("S{}-S{}", k + 1, j + 1), (s, t)));
            }
        }
        pairs
    }

    /// Non-fatal notes about unusual but permitted configurations.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(ls) = self.transmit_level {
            let unit = self.capacity_j / self.levels as f64;
            if let Ok(th) = crate::energy::threshold_level(self.threshold_energy_j, unit, self.levels) {
                if ls > th {
                    out.push(format!(
                        "transmit_level {ls} exceeds threshold level {th}; eligibility, \
                         battery decrement and source power all use level {ls}"
                    ));
                }
            }
        }
        out
    }

    /// Parses a flat key=value config file.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_contents(&text)
    }

    /// Parses config text. Lines are `key = value`; `#` starts a comment.
    pub fn from_str_contents(text: &str) -> Result<Self> {
        let mut b = ConfigBuilder::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected 'key = value'", lineno + 1))
            })?;
            b.set(key.trim(), value.trim())
                .map_err(|e| Error::Config(format!("line {}: {e}", lineno + 1)))?;
        }
        b.build()
    }
}

#[derive(Default)]
struct ConfigBuilder {
    num_sources: Option<usize>,
    levels: Option<u32>,
    capacity_j: Option<f64>,
    threshold_energy_j: Option<f64>,
    transmit_level: Option<u32>,
    efficiency: Option<f64>,
    slot_duration_s: Option<f64>,
    beacon_power_w: Option<f64>,
    beacon_antennas: Option<usize>,
    noise_power_w: Option<f64>,
    path_loss_exponent: Option<f64>,
    rate_threshold: Option<f64>,
    path_loss_model: Option<PathLossModel>,
    beacon_position: Option<Position>,
    destination_position: Option<Position>,
    source_positions: Option<Vec<Position>>,
    source_radius: Option<f64>,
}

/// Parses a power value: `30 dBm`, `10 mW`, `1 W`, or bare watts.
pub fn parse_power(s: &str) -> Result<f64> {
    let s = s.trim();
    let lower = s.to_ascii_lowercase();
    let parse_num = |num: &str, what: &str| -> Result<f64> {
        num.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid {what} value '{s}'")))
    };
    if let Some(num) = lower.strip_suffix("dbm") {
        return Ok(dbm_to_watts(parse_num(num, "power")?));
    }
    if let Some(num) = lower.strip_suffix("mw") {
        return Ok(parse_num(num, "power")? * 1e-3);
    }
    if let Some(num) = lower.strip_suffix('w') {
        return parse_num(num, "power");
    }
    parse_num(&lower, "power")
}

/// Parses an energy value: `20 mJ`, `0.02 J`, or bare joules.
pub fn parse_energy(s: &str) -> Result<f64> {
    let s = s.trim();
    let lower = s.to_ascii_lowercase();
    let parse_num = |num: &str| -> Result<f64> {
        num.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid energy value '{s}'")))
    };
    if let Some(num) = lower.strip_suffix("mj") {
        return Ok(parse_num(num)? * 1e-3);
    }
    if let Some(num) = lower.strip_suffix('j') {
        return parse_num(num);
    }
    parse_num(&lower)
}

fn parse_position(s: &str) -> Result<Position> {
    let inner = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (x, y) = inner
        .split_once(',')
        .ok_or_else(|| Error::Config(format!("invalid position '{s}', expected 'x,y'")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<f64>()
            .map_err(|_| Error::Config(format!("invalid coordinate in position '{s}'")))
    };
    Ok(Position::new(parse(x)?, parse(y)?))
}

fn parse_positions(s: &str) -> Result<Vec<Position>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(parse_position)
        .collect()
}

impl ConfigBuilder {
    fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let int = |v: &str| -> Result<u64> {
            v.parse::<u64>()
                .map_err(|_| Error::Config(format!("key '{key}': invalid integer '{v}'")))
        };
        let float = |v: &str| -> Result<f64> {
            v.parse::<f64>()
                .map_err(|_| Error::Config(format!("key '{key}': invalid number '{v}'")))
        };
        match key {
            "num_sources" => self.num_sources = Some(int(value)? as usize),
            "levels" => self.levels = Some(int(value)? as u32),
            "capacity" => self.capacity_j = Some(parse_energy(value)?),
            "threshold_energy" => self.threshold_energy_j = Some(parse_energy(value)?),
            "transmit_level" => self.transmit_level = Some(int(value)? as u32),
            "efficiency" => self.efficiency = Some(float(value)?),
            "slot_duration" => self.slot_duration_s = Some(float(value)?),
            "beacon_power" => self.beacon_power_w = Some(parse_power(value)?),
            "beacon_antennas" => self.beacon_antennas = Some(int(value)? as usize),
            "noise_power" => self.noise_power_w = Some(parse_power(value)?),
            "path_loss_exponent" => self.path_loss_exponent = Some(float(value)?),
            "rate_threshold" => self.rate_threshold = Some(float(value)?),
            "path_loss_model" => self.path_loss_model = Some(value.parse()?),
            "beacon_position" => self.beacon_position = Some(parse_position(value)?),
            "destination_position" => self.destination_position = Some(parse_position(value)?),
            "source_positions" => self.source_positions = Some(parse_positions(value)?),
            "source_radius" => self.source_radius = Some(float(value)?),
            other => {
                return Err(Error::Config(format!("unknown key '{other}'")));
            }
        }
        Ok(())
    }

    fn build(self) -> Result<NetworkConfig> {
        let require = |name: &str| Error::Config(format!("missing required key '{name}'"));
        let num_sources = self.num_sources.ok_or_else(|| require("num_sources"))?;
        let source_positions = match (self.source_positions, self.source_radius) {
            (Some(pos), _) => pos,
            (None, Some(r)) => auto_place_sources(num_sources, r)?,
            (None, None) => {
                return Err(require("source_positions (or source_radius)"));
            }
        };
        let cfg = NetworkConfig {
            num_sources,
            levels: self.levels.ok_or_else(|| require("levels"))?,
            capacity_j: self.capacity_j.ok_or_else(|| require("capacity"))?,
            threshold_energy_j: self
                .threshold_energy_j
                .ok_or_else(|| require("threshold_energy"))?,
            transmit_level: self.transmit_level,
            efficiency: self.efficiency.ok_or_else(|| require("efficiency"))?,
            slot_duration_s: self.slot_duration_s.unwrap_or(1.0),
            beacon_power_w: self.beacon_power_w.ok_or_else(|| require("beacon_power"))?,
            beacon_antennas: self.beacon_antennas.unwrap_or(1),
            noise_power_w: self.noise_power_w.ok_or_else(|| require("noise_power"))?,
            path_loss_exponent: self
                .path_loss_exponent
                .ok_or_else(|| require("path_loss_exponent"))?,
            rate_threshold: self.rate_threshold.ok_or_else(|| require("rate_threshold"))?,
            path_loss_model: self.path_loss_model.unwrap_or_default(),
            beacon_position: self.beacon_position.ok_or_else(|| require("beacon_position"))?,
            destination_position: self
                .destination_position
                .ok_or_else(|| require("destination_position"))?,
            source_positions,
            source_radius: self.source_radius,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_conversion() {
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-80.0) - 1e-11).abs() < 1e-24);
        assert!((watts_to_dbm(1.0) - 30.0).abs() < 1e-12);
    }

    #[test]
    fn power_and_energy_suffixes() {
        assert_eq!(parse_power("30 dBm").unwrap(), 1.0);
        assert_eq!(parse_power("10 mW").unwrap(), 0.01);
        assert_eq!(parse_power("2W").unwrap(), 2.0);
        assert_eq!(parse_power("0.5").unwrap(), 0.5);
        assert_eq!(parse_energy("20 mJ").unwrap(), 0.02);
        assert_eq!(parse_energy("0.02 J").unwrap(), 0.02);
        assert!(parse_energy("fast J").is_err());
    }

    #[test]
    fn parses_full_config() {
        let text = "
            num_sources = 2
            levels = 2
            capacity = 20 mJ
            threshold_energy = 10 mJ
            efficiency = 0.8
            beacon_power = 30 dBm
            beacon_antennas = 5
            noise_power = -80 dBm
            path_loss_exponent = 3
            rate_threshold = 3
            beacon_position = (-3, 0)
            destination_position = (200, 0)
            source_positions = (-1,0); (0,1)
        ";
        let cfg = NetworkConfig::from_str_contents(text).unwrap();
        assert_eq!(cfg.num_sources, 2);
        assert_eq!(cfg.beacon_power_w, 1.0);
        assert_eq!(cfg.slot_duration_s, 1.0);
        assert_eq!(cfg.source_positions[1], Position::new(0.0, 1.0));
        cfg.validate().unwrap();
    }

    #[test]
    fn unknown_key_names_the_key() {
        let err = NetworkConfig::from_str_contents("bogus_key = 1").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus_key"), "{msg}");
        assert!(msg.contains("line 1"), "{msg}");
    }

    #[test]
    fn auto_placement_matches_canonical_layout() {
        let pos = auto_place_sources(6, 2.0).unwrap();
        assert_eq!(pos[0], Position::new(-2.0, 0.0));
        assert_eq!(pos[1], Position::new(0.0, 2.0));
        assert_eq!(pos[2], Position::new(2.0, 0.0));
        assert_eq!(pos[3], Position::new(0.0, -2.0));
        assert!((pos[4].x - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!((pos[5].y + std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(auto_place_sources(7, 1.0).is_err());
    }

    #[test]
    fn coincident_positions_rejected_under_unbounded_law() {
        let mut cfg = crate::golden::table1_config();
        cfg.source_positions[1] = cfg.source_positions[0];
        cfg.path_loss_model = PathLossModel::Unbounded;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("S1-S2"), "{msg}");
        cfg.path_loss_model = PathLossModel::Bounded;
        cfg.validate().unwrap();
    }

    #[test]
    fn threshold_above_capacity_rejected() {
        let mut cfg = crate::golden::table1_config();
        cfg.threshold_energy_j = 0.03;
        assert!(cfg.validate().is_err());
    }
}
