//! Enumeration and indexing of the energy state space.
//!
//! A state is a K-vector of battery levels. Flat indices are 0-based and
//! mixed-radix with source 1 most significant, so for K=2, L=2 the order is
//! [0,0], [0,1], [0,2], [1,0], ..., [2,2]. (The reference tables number the
//! same sequence 1-based as s1..s9.)

use crate::config::NetworkConfig;
use crate::energy::EnergyQuantizer;
use crate::error::{Error, Result};

/// Hard cap on the number of states.
pub const MAX_STATES: u64 = 1_000_000;

/// A single energy state: one battery level per source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EnergyState {
    pub levels: Vec<u32>,
}

/// The full state space with its non-IT/IT partition and per-state
/// transmit-eligible sets.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub num_sources: usize,
    pub levels: u32,
    /// Level required for (and consumed by) a transmission.
    pub transmit_level: u32,
    states: Vec<EnergyState>,
    eligible: Vec<Vec<usize>>,
    full: Vec<Vec<usize>>,
    theta1: Vec<usize>,
    theta2: Vec<usize>,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, n: usize) -> &EnergyState {
        &self.states[n]
    }

    pub fn states(&self) -> impl Iterator<Item = (usize, &EnergyState)> {
        self.states.iter().enumerate()
    }

    /// Sources eligible to transmit at state n (level >= transmit level).
    pub fn eligible(&self, n: usize) -> &[usize] {
        &self.eligible[n]
    }

    /// Sources at full capacity in state n.
    pub fn full_set(&self, n: usize) -> &[usize] {
        &self.full[n]
    }

    /// States where no source can transmit (the non-IT partition).
    pub fn theta1(&self) -> &[usize] {
        &self.theta1
    }

    /// States with at least one eligible source (the IT partition).
    pub fn theta2(&self) -> &[usize] {
        &self.theta2
    }

    pub fn in_theta1(&self, n: usize) -> bool {
        self.eligible[n].is_empty()
    }

    /// Flat index of a level vector.
    pub fn state_index(&self, levels: &[u32]) -> Result<usize> {
        if levels.len() != self.num_sources {
            return Err(Error::Domain(format!(
                "expected {} levels, got {}",
                self.num_sources,
                levels.len()
            )));
        }
        let mut n = 0usize;
        for &l in levels {
            if l > self.levels {
                return Err(Error::Domain(format!(
                    "level {l} exceeds maximum {}",
                    self.levels
                )));
            }
            n = n * (self.levels as usize + 1) + l as usize;
        }
        Ok(n)
    }

    /// Level vector of a flat index.
    pub fn state_levels(&self, n: usize) -> Result<&[u32]> {
        self.states
            .get(n)
            .map(|s| s.levels.as_slice())
            .ok_or_else(|| Error::Domain(format!("state index {n} out of range 0..{}", self.len())))
    }
}

/// Enumerates all (L+1)^K states and their partition sets.
pub fn enumerate_states(config: &NetworkConfig, quantizer: &EnergyQuantizer) -> Result<StateSpace> {
    let k = config.num_sources;
    let base = config.levels as u64 + 1;
    let count = base.checked_pow(k as u32).filter(|&n| n <= MAX_STATES);
    let count = match count {
        Some(n) => n as usize,
        None => {
            return Err(Error::Capacity {
                states: (config.levels as u128 + 1).pow(k as u32),
                limit: MAX_STATES,
            })
        }
    };

    let transmit_level = quantizer.transmit_level;
    let mut states = Vec::with_capacity(count);
    let mut eligible = Vec::with_capacity(count);
    let mut full = Vec::with_capacity(count);
    let mut theta1 = Vec::new();
    let mut theta2 = Vec::new();

    let mut levels = vec![0u32; k];
    for n in 0..count {
        let elig: Vec<usize> = (0..k).filter(|&i| levels[i] >= transmit_level).collect();
        let full_set: Vec<usize> = (0..k).filter(|&i| levels[i] == config.levels).collect();
        if elig.is_empty() {
            theta1.push(n);
        } else {
            theta2.push(n);
        }
        states.push(EnergyState {
            levels: levels.clone(),
        });
        eligible.push(elig);
        full.push(full_set);

        // mixed-radix increment, last source least significant
        for i in (0..k).rev() {
            if levels[i] < config.levels {
                levels[i] += 1;
                break;
            }
            levels[i] = 0;
        }
    }

    Ok(StateSpace {
        num_sources: k,
        levels: config.levels,
        transmit_level,
        states,
        eligible,
        full,
        theta1,
        theta2,
    })
}
