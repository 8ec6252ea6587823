//! Battery energy quantization.

// `!(x > 0.0)` rejects NaN as well as nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

// Relative slack for level-boundary comparisons; the snapping rule is
// inclusive at exact multiples of the unit and must survive e.g. 0.03/0.01.
const REL_EPS: f64 = 1e-12;

/// Smallest level l in 1..=L whose energy l*unit reaches `threshold_energy`.
pub fn threshold_level(threshold_energy_j: f64, unit_j: f64, levels: u32) -> Result<u32> {
    if !(threshold_energy_j > 0.0) {
        return Err(Error::Config(format!(
            "transmit energy threshold must be positive, got {threshold_energy_j}"
        )));
    }
    if threshold_energy_j > unit_j * levels as f64 * (1.0 + REL_EPS) {
        return Err(Error::Config(format!(
            "transmit energy threshold {threshold_energy_j} J exceeds capacity {} J",
            unit_j * levels as f64
        )));
    }
    let l = (threshold_energy_j / unit_j * (1.0 - REL_EPS)).ceil().max(1.0) as u32;
    Ok(l.min(levels))
}

/// Discretization of a battery of capacity eps_T into L+1 levels of size
/// eps_Delta = eps_T / L, together with the transmit threshold level and the
/// actual transmit level l_S.
#[derive(Debug, Clone)]
pub struct EnergyQuantizer {
    /// Single unit of energy eps_Delta in joules.
    pub unit_j: f64,
    /// Discretization level L.
    pub levels: u32,
    /// Smallest level at which a source may transmit.
    pub threshold_level: u32,
    /// Level consumed (and required) by one transmission.
    pub transmit_level: u32,
}

impl EnergyQuantizer {
    pub fn from_config(config: &NetworkConfig) -> Result<Self> {
        config.validate()?;
        let unit_j = config.capacity_j / config.levels as f64;
        let th = threshold_level(config.threshold_energy_j, unit_j, config.levels)?;
        let transmit_level = config.transmit_level.unwrap_or(th);
        if transmit_level < th {
            return Err(Error::Config(format!(
                "transmit_level {transmit_level} is below the threshold level {th}"
            )));
        }
        Ok(Self {
            unit_j,
            levels: config.levels,
            threshold_level: th,
            transmit_level,
        })
    }

    /// Energy of level l in joules.
    pub fn level_energy(&self, level: u32) -> f64 {
        level as f64 * self.unit_j
    }

    /// Snaps a harvested energy down to the highest level it covers, clamped
    /// at capacity. The boundary is inclusive: exactly one unit is level 1.
    pub fn discretize(&self, energy_j: f64) -> Result<u32> {
        if energy_j < 0.0 {
            return Err(Error::Domain(format!(
                "cannot discretize negative energy {energy_j}"
            )));
        }
        let l = (energy_j / self.unit_j * (1.0 + REL_EPS)).floor() as u64;
        Ok(l.min(self.levels as u64) as u32)
    }

    /// Source transmit power P_S = l_S * eps_Delta / T_0.
    pub fn transmit_power(&self, slot_duration_s: f64) -> f64 {
        self.transmit_level as f64 * self.unit_j / slot_duration_s
    }
}
