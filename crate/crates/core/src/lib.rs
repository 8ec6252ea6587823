//! Exact performance analysis of a power-beacon-assisted multi-source
//! wireless-powered network.
//!
//! The battery of every source is quantized into discrete energy levels; the
//! joint levels form a finite Markov chain whose transition matrix follows in
//! closed form from the channel statistics. From its stationary distribution
//! the library computes the energy outage probability (EOP), connection
//! outage probability (COP), per-source transmission probabilities, and
//! average transmission delays (ATD), and cross-checks them against a seeded
//! slot-level Monte Carlo simulator.
//!
//! Typical use goes through [`Scenario`]:
//!
//! ```
//! use wpt_markov::{golden, Scenario};
//!
//! let scenario = Scenario::build(golden::table1_config()).unwrap();
//! let stationary = scenario.solve().unwrap();
//! let report = scenario.metrics(&stationary.pi).unwrap();
//! assert!(report.eop < 0.05);
//! ```

pub mod channel;
pub mod config;
pub mod energy;
pub mod error;
pub mod golden;
pub mod metrics;
pub mod scenario;
pub mod sim;
pub mod state;
pub mod stationary;
pub mod sweep;
pub mod transition;

pub use channel::{build_channel_stats, ChannelStats};
pub use config::{dbm_to_watts, watts_to_dbm, NetworkConfig, PathLossModel, Position};
pub use energy::EnergyQuantizer;
pub use error::{Error, Result};
pub use metrics::{compute_metrics, MetricsReport};
pub use scenario::Scenario;
pub use sim::{
    empirical_cdf_check, run_simulation, HarvestMode, SimulationOptions, SimulationStats,
};
pub use state::{enumerate_states, EnergyState, StateSpace};
pub use stationary::{
    solve_stationary, validate_stationary, Certificate, SolveMethod, StationaryDistribution,
};
pub use sweep::{run_sweep, sweep_csv, SweepOutputs, SweepParameter, SweepRow, SweepSpec};
pub use transition::{
    build_transition_model, build_transition_model_sequential, TransitionModel,
};
