//! Parameter sweeps over the analytic model, with an optional simulation
//! cross-check per grid point. Output is long-format: one row per grid point
//! per metric (per source for the per-source metrics).

use crate::config::{auto_place_sources, dbm_to_watts, parse_energy, NetworkConfig};
use crate::error::{Error, Result};
use crate::scenario::Scenario;
use crate::sim::{run_simulation, SimulationOptions};
use std::fmt::Write as _;
use std::path::Path;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Which configuration knob a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    /// Beacon transmit power; grid values in dBm.
    BeaconPower,
    /// Battery capacity; grid values accept energy suffixes (default joules).
    /// The level count stays fixed, so the unit energy grows with capacity.
    Capacity,
    /// Battery level count at fixed capacity (unit energy shrinks).
    Levels,
    /// Source count; positions come from the canonical circular layout.
    NumSources,
    /// Destination x-coordinate in meters.
    DestinationX,
    /// Beacon x-coordinate in meters.
    BeaconX,
    /// Radius of the canonical source layout in meters.
    SourceRadius,
    /// Transmit level l_S.
    TransmitLevel,
    /// Energy conversion efficiency.
    Efficiency,
}

pub const PARAMETER_NAMES: [(&str, SweepParameter); 9] = [
    ("beacon_power", SweepParameter::BeaconPower),
    ("capacity", SweepParameter::Capacity),
    ("levels", SweepParameter::Levels),
    ("num_sources", SweepParameter::NumSources),
    ("destination_x", SweepParameter::DestinationX),
    ("beacon_x", SweepParameter::BeaconX),
    ("source_radius", SweepParameter::SourceRadius),
    ("transmit_level", SweepParameter::TransmitLevel),
    ("efficiency", SweepParameter::Efficiency),
];

impl SweepParameter {
    pub fn name(&self) -> &'static str {
        PARAMETER_NAMES
            .iter()
            .find(|(_, p)| p == self)
            .map(|(n, _)| *n)
            .unwrap()
    }
}

impl std::str::FromStr for SweepParameter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        PARAMETER_NAMES
            .iter()
            .find(|(n, _)| *n == key)
            .map(|(_, p)| *p)
            .ok_or_else(|| {
                let names: Vec<&str> = PARAMETER_NAMES.iter().map(|(n, _)| *n).collect();
                Error::Config(format!(
                    "unknown sweep parameter '{s}' (expected one of: {})",
                    names.join(", ")
                ))
            })
    }
}

/// Which metrics a sweep reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SweepOutputs {
    Eop,
    Cop,
    Atd,
    #[default]
    All,
}

impl std::str::FromStr for SweepOutputs {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eop" => Ok(SweepOutputs::Eop),
            "cop" => Ok(SweepOutputs::Cop),
            "atd" => Ok(SweepOutputs::Atd),
            "all" => Ok(SweepOutputs::All),
            other => Err(Error::Config(format!(
                "unknown outputs '{other}' (expected eop, cop, atd, or all)"
            ))),
        }
    }
}

/// A fully specified sweep: base configuration, swept knob, value grid, and
/// an optional per-point simulation cross-check.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub base: NetworkConfig,
    pub parameter: SweepParameter,
    pub grid: Vec<f64>,
    pub outputs: SweepOutputs,
    /// Simulated slots per grid point; `None` disables the cross-check.
    pub sim_slots: Option<u64>,
    pub sim_seed: u64,
}

/// Parses a grid: either comma-separated values or `start:stop:count`
/// (inclusive linspace). Values go through `parse` so units are per-knob.
fn parse_grid(s: &str, parse: impl Fn(&str) -> Result<f64>) -> Result<Vec<f64>> {
    let s = s.trim();
    let grid: Vec<f64> = if s.contains(':') {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(Error::Config(format!(
                "grid '{s}' must be 'start:stop:count' or comma-separated values"
            )));
        }
        let start = parse(parts[0])?;
        let stop = parse(parts[1])?;
        let count: usize = parts[2]
            .trim()
            .parse()
            .map_err(|_| Error::Config(format!("invalid grid count '{}'", parts[2])))?;
        if count < 2 {
            return Err(Error::Config("grid count must be at least 2".into()));
        }
        (0..count)
            .map(|i| start + (stop - start) * i as f64 / (count - 1) as f64)
            .collect()
    } else {
        s.split(',')
            .filter(|v| !v.trim().is_empty())
            .map(parse)
            .collect::<Result<_>>()?
    };
    if grid.is_empty() {
        return Err(Error::Config("grid must be nonempty".into()));
    }
    let increasing = grid.windows(2).all(|w| w[1] > w[0]);
    let decreasing = grid.windows(2).all(|w| w[1] < w[0]);
    if grid.len() > 1 && !increasing && !decreasing {
        return Err(Error::Config(format!("grid '{s}' must be strictly monotone")));
    }
    Ok(grid)
}

impl SweepSpec {
    /// Parses a sweep file: the base-config keys plus `parameter`, `grid`,
    /// and optionally `outputs`, `sim_slots`, `sim_seed`.
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_str_contents(&text)
    }

    pub fn from_str_contents(text: &str) -> Result<Self> {
        let mut parameter: Option<SweepParameter> = None;
        let mut grid_text: Option<String> = None;
        let mut outputs = SweepOutputs::default();
        let mut sim_slots = None;
        let mut sim_seed = 42u64;
        let mut config_lines = String::new();

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at_line = |e: Error| Error::Config(format!("line {}: {e}", lineno + 1));
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| at_line(Error::Config("expected 'key = value'".into())))?;
            match key.trim() {
                "parameter" => parameter = Some(value.parse().map_err(at_line)?),
                "grid" => grid_text = Some(value.to_string()),
                "outputs" => outputs = value.parse().map_err(at_line)?,
                "sim_slots" => {
                    sim_slots = Some(value.trim().parse::<u64>().map_err(|_| {
                        at_line(Error::Config(format!("invalid sim_slots '{value}'")))
                    })?)
                }
                "sim_seed" => {
                    sim_seed = value.trim().parse::<u64>().map_err(|_| {
                        at_line(Error::Config(format!("invalid sim_seed '{value}'")))
                    })?
                }
                _ => {
                    config_lines.push_str(raw);
                    config_lines.push('\n');
                }
            }
        }

        let parameter =
            parameter.ok_or_else(|| Error::Config("missing required key 'parameter'".into()))?;
        let grid_text =
            grid_text.ok_or_else(|| Error::Config("missing required key 'grid'".into()))?;
        let grid = match parameter {
            SweepParameter::Capacity => parse_grid(&grid_text, parse_energy)?,
            _ => parse_grid(&grid_text, |v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::Config(format!("invalid grid value '{v}'")))
            })?,
        };
        let base = NetworkConfig::from_str_contents(&config_lines)?;
        let spec = SweepSpec {
            base,
            parameter,
            grid,
            outputs,
            sim_slots,
            sim_seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Config("grid must be nonempty".into()));
        }
        if self.sim_slots == Some(0) {
            return Err(Error::Config("sim_slots must be positive".into()));
        }
        // Every grid point must yield a valid configuration.
        for &v in &self.grid {
            apply_parameter(&self.base, self.parameter, v)?;
        }
        Ok(())
    }
}

fn require_integer(value: f64, what: &str) -> Result<u64> {
    if value < 0.0 || value.fract() != 0.0 || value > u32::MAX as f64 {
        return Err(Error::Config(format!(
            "{what} grid values must be nonnegative integers, got {value}"
        )));
    }
    Ok(value as u64)
}

/// Builds the configuration for one grid point.
pub fn apply_parameter(
    base: &NetworkConfig,
    parameter: SweepParameter,
    value: f64,
) -> Result<NetworkConfig> {
    let mut cfg = base.clone();
    match parameter {
        SweepParameter::BeaconPower => cfg.beacon_power_w = dbm_to_watts(value),
        SweepParameter::Capacity => cfg.capacity_j = value,
        SweepParameter::Levels => cfg.levels = require_integer(value, "levels")? as u32,
        SweepParameter::NumSources => {
            let k = require_integer(value, "num_sources")? as usize;
            let radius = cfg.source_radius.ok_or_else(|| {
                Error::Config(
                    "num_sources sweeps need source_radius (canonical placement)".into(),
                )
            })?;
            cfg.num_sources = k;
            cfg.source_positions = auto_place_sources(k, radius)?;
        }
        SweepParameter::DestinationX => cfg.destination_position.x = value,
        SweepParameter::BeaconX => cfg.beacon_position.x = value,
        SweepParameter::SourceRadius => {
            cfg.source_radius = Some(value);
            cfg.source_positions = auto_place_sources(cfg.num_sources, value)?;
        }
        SweepParameter::TransmitLevel => {
            cfg.transmit_level = Some(require_integer(value, "transmit_level")? as u32)
        }
        SweepParameter::Efficiency => cfg.efficiency = value,
    }
    cfg.validate()?;
    Ok(cfg)
}

/// One output row: a single metric at a single grid point.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param_name: &'static str,
    pub param_value: f64,
    pub metric_name: &'static str,
    /// 1-based source index for the per-source metrics.
    pub source_index: Option<usize>,
    pub analytic_value: f64,
    pub empirical_value: Option<f64>,
    pub empirical_stderr: Option<f64>,
}

pub const SWEEP_CSV_HEADER: &str =
    "param_name,param_value,metric_name,source_index,analytic_value,empirical_value,empirical_stderr";

impl SweepRow {
    pub fn csv_row(&self) -> String {
        let mut s = format!("{},{},{},", self.param_name, self.param_value, self.metric_name);
        if let Some(i) = self.source_index {
            write!(s, "{i}").unwrap();
        }
        write!(s, ",{}", self.analytic_value).unwrap();
        match self.empirical_value {
            Some(v) => write!(s, ",{v}").unwrap(),
            None => s.push(','),
        }
        match self.empirical_stderr {
            Some(v) => write!(s, ",{v}").unwrap(),
            None => s.push(','),
        }
        s
    }
}

/// Standard error of a Bernoulli rate estimate.
fn rate_stderr(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

fn point_rows(spec: &SweepSpec, index: usize, value: f64) -> Result<Vec<SweepRow>> {
    let cfg = apply_parameter(&spec.base, spec.parameter, value)?;
    let sc = Scenario::build(cfg)?;
    let sd = sc.solve()?;
    let report = sc.metrics(&sd.pi)?;

    let sim = match spec.sim_slots {
        // Decorrelate the grid points while keeping the sweep reproducible.
        Some(slots) => Some(run_simulation(
            &sc,
            SimulationOptions::new(slots, spec.sim_seed.wrapping_add(index as u64)),
        )?),
        None => None,
    };

    let name = spec.parameter.name();
    let mut rows = Vec::new();
    let want = |o: SweepOutputs| spec.outputs == o || spec.outputs == SweepOutputs::All;

    if want(SweepOutputs::Eop) {
        let (emp, se) = match &sim {
            Some(s) => {
                let p = s.empirical_eop();
                (Some(p), Some(rate_stderr(p, s.options.slots)))
            }
            None => (None, None),
        };
        rows.push(SweepRow {
            param_name: name,
            param_value: value,
            metric_name: "eop",
            source_index: None,
            analytic_value: report.eop,
            empirical_value: emp,
            empirical_stderr: se,
        });
    }
    if want(SweepOutputs::Cop) {
        let (emp, se) = match &sim {
            Some(s) => {
                let p = s.empirical_cop();
                (Some(p), Some(rate_stderr(p, s.options.slots)))
            }
            None => (None, None),
        };
        rows.push(SweepRow {
            param_name: name,
            param_value: value,
            metric_name: "cop",
            source_index: None,
            analytic_value: report.cop_overall,
            empirical_value: emp,
            empirical_stderr: se,
        });
    }
    if want(SweepOutputs::Atd) {
        for i in 0..sc.config.num_sources {
            let (emp, se) = match &sim {
                Some(s) if s.gaps[i].count() >= 2 => {
                    (Some(s.gaps[i].mean()), Some(s.gaps[i].std_error()))
                }
                _ => (None, None),
            };
            rows.push(SweepRow {
                param_name: name,
                param_value: value,
                metric_name: "atd_slots",
                source_index: Some(i + 1),
                analytic_value: report.atd_slots[i],
                empirical_value: emp,
                empirical_stderr: se,
            });
        }
    }
    Ok(rows)
}

/// Evaluates every grid point (in parallel when the `parallel` feature is on)
/// and returns the rows in grid order.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let points: Vec<(usize, f64)> = spec.grid.iter().copied().enumerate().collect();

    #[cfg(feature = "parallel")]
    let per_point: Vec<Vec<SweepRow>> = points
        .par_iter()
        .map(|&(i, v)| point_rows(spec, i, v))
        .collect::<Result<_>>()?;

    #[cfg(not(feature = "parallel"))]
    let per_point: Vec<Vec<SweepRow>> = points
        .iter()
        .map(|&(i, v)| point_rows(spec, i, v))
        .collect::<Result<_>>()?;

    Ok(per_point.into_iter().flatten().collect())
}

/// Renders rows as a CSV document with header.
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_row());
        out.push('\n');
    }
    out
}
