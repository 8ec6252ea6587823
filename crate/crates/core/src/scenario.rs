//! One-stop bundle: config -> quantizer, channel stats, state space and
//! transition model, plus convenience wrappers for the solver and metrics.

use crate::channel::{build_channel_stats, ChannelStats};
use crate::config::NetworkConfig;
use crate::energy::EnergyQuantizer;
use crate::error::Result;
use crate::metrics::{compute_metrics, MetricsReport};
use crate::state::{enumerate_states, StateSpace};
use crate::stationary::{solve_stationary, StationaryDistribution};
use crate::transition::{build_transition_model, TransitionModel};

/// A fully assembled analytic model for one network configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: NetworkConfig,
    pub quantizer: EnergyQuantizer,
    pub stats: ChannelStats,
    pub space: StateSpace,
    pub model: TransitionModel,
}

impl Scenario {
    pub fn build(config: NetworkConfig) -> Result<Self> {
        config.validate()?;
        let quantizer = EnergyQuantizer::from_config(&config)?;
        let stats = build_channel_stats(&config)?;
        let space = enumerate_states(&config, &quantizer)?;
        let model = build_transition_model(&space, &stats, &config, &quantizer)?;
        Ok(Self {
            config,
            quantizer,
            stats,
            space,
            model,
        })
    }

    pub fn solve(&self) -> Result<StationaryDistribution> {
        solve_stationary(&self.model)
    }

    pub fn metrics(&self, pi: &[f64]) -> Result<MetricsReport> {
        compute_metrics(
            pi,
            &self.model,
            &self.space,
            &self.stats,
            &self.config,
            &self.quantizer,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;

    #[test]
    fn golden_matrix_reproduced() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        assert_eq!(sc.model.matrix.nrows(), 9);
        for i in 0..9 {
            for j in 0..9 {
                let got = sc.model.matrix[(i, j)];
                let want = golden::GOLDEN_MATRIX[i][j];
                assert!(
                    (got - want).abs() < golden::GOLDEN_TOL,
                    "entry ({i},{j}): got {got}, want {want}"
                );
            }
        }
    }

    #[test]
    fn golden_stationary_reproduced() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        let sd = sc.solve().unwrap();
        for (n, (&got, &want)) in sd.pi.iter().zip(&golden::GOLDEN_PI).enumerate() {
            assert!(
                (got - want).abs() < golden::GOLDEN_TOL,
                "pi[{n}]: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn golden_selection_reproduced() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        for n in 0..9 {
            for i in 0..2 {
                let got = sc.model.selection[n][i];
                let want = golden::GOLDEN_SELECTION[n][i];
                assert!(
                    (got - want).abs() < golden::GOLDEN_TOL,
                    "selection[{n}][{i}]: got {got}, want {want}"
                );
            }
        }
    }
}
