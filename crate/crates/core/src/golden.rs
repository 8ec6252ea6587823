//! Embedded reference scenario (K=2, L=2) and its expected results, used by
//! the `table1` command and the acceptance suite.

use crate::config::{NetworkConfig, PathLossModel, Position};

/// The reference two-source configuration: P_B = 30 dBm, eps_T = 20 mJ,
/// eps_S^th = 10 mJ, eta = 0.8, R_t = 3, N_B = 5, N_0 = -80 dBm, alpha = 3,
/// B = (-3,0), D = (200,0), S1 = (-1,0), S2 = (0,1).
pub fn table1_config() -> NetworkConfig {
    NetworkConfig {
        num_sources: 2,
        levels: 2,
        capacity_j: 0.02,
        threshold_energy_j: 0.01,
        transmit_level: None,
        efficiency: 0.8,
        slot_duration_s: 1.0,
        beacon_power_w: 1.0,
        beacon_antennas: 5,
        noise_power_w: 1e-11,
        path_loss_exponent: 3.0,
        rate_threshold: 3.0,
        path_loss_model: PathLossModel::Bounded,
        beacon_position: Position::new(-3.0, 0.0),
        destination_position: Position::new(200.0, 0.0),
        source_positions: vec![Position::new(-1.0, 0.0), Position::new(0.0, 1.0)],
        source_radius: Some(1.0),
    }
}

/// Expected 9x9 transition matrix (4 decimals).
pub const GOLDEN_MATRIX: [[f64; 9]; 9] = [
    [0.0356, 0.0237, 0.0471, 0.0318, 0.0212, 0.0421, 0.2674, 0.1779, 0.3533],
    [0.0851, 0.0, 0.0, 0.0972, 0.0, 0.0, 0.8177, 0.0, 0.0],
    [0.0, 0.0851, 0.0, 0.0, 0.0972, 0.0, 0.0, 0.8177, 0.0],
    [0.2737, 0.2427, 0.4836, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.1358, 0.3604, 0.0429, 0.0, 0.0, 0.4609, 0.0, 0.0],
    [0.0, 0.0, 0.4963, 0.0, 0.0429, 0.0, 0.0, 0.4609, 0.0],
    [0.0, 0.0, 0.0, 0.2737, 0.2427, 0.4836, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.1358, 0.3604, 0.5037, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.4963, 0.0, 0.5037, 0.0],
];

/// Expected stationary distribution.
pub const GOLDEN_PI: [f64; 9] = [
    0.0220, 0.0434, 0.1587, 0.0640, 0.1022, 0.1811, 0.1998, 0.2210, 0.0078,
];

/// Expected per-state selection probabilities [p_1^n, p_2^n].
pub const GOLDEN_SELECTION: [[f64; 2]; 9] = [
    [0.0, 0.0],
    [0.0, 1.0],
    [0.0, 1.0],
    [1.0, 0.0],
    [0.4963, 0.5037],
    [0.4963, 0.5037],
    [1.0, 0.0],
    [0.4963, 0.5037],
    [0.4963, 0.5037],
];

/// Expected per-state connection outage probabilities (zero for the non-IT
/// state s1, where no transmission happens).
pub const GOLDEN_STATE_COP: [f64; 9] = [
    0.0, 0.0545, 0.0545, 0.0553, 0.0030, 0.0030, 0.0553, 0.0030, 0.0030,
];

pub const GOLDEN_EOP: f64 = 0.0220;
pub const GOLDEN_COP: f64 = 0.0271;
pub const GOLDEN_PT: [f64; 2] = [0.5179, 0.4601];
/// Average transmission delay in slots.
pub const GOLDEN_ATD: [f64; 2] = [1.9309, 2.1734];

/// Absolute tolerance for the 4-decimal reference values.
pub const GOLDEN_TOL: f64 = 1e-3;
/// Looser tolerance for the delay figures.
pub const GOLDEN_ATD_TOL: f64 = 5e-3;
