//! Outage and delay metrics derived from the stationary distribution.

use crate::channel::ChannelStats;
use crate::config::NetworkConfig;
use crate::energy::EnergyQuantizer;
use crate::error::{Error, Result};
use crate::state::StateSpace;
use crate::transition::TransitionModel;
use std::fmt::Write as _;

/// SNR threshold for the rate target: 2^R_t - 1.
pub fn snr_threshold(rate_threshold: f64) -> f64 {
    2f64.powf(rate_threshold) - 1.0
}

/// Stationary probability mass of the all-insufficient states.
pub fn energy_outage_probability(pi: &[f64], space: &StateSpace) -> f64 {
    space.theta1().iter().map(|&n| pi[n]).sum()
}

/// Connection outage probability conditioned on being in IT state n; it does
/// not depend on which eligible source wins the selection.
pub fn connection_outage_state(
    n: usize,
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<f64> {
    if space.in_theta1(n) {
        return Err(Error::Domain(format!(
            "state {n} is a non-IT state; no transmission occurs"
        )));
    }
    let gamma_th = snr_threshold(config.rate_threshold);
    let p_s = quantizer.transmit_power(config.slot_duration_s);
    let mut p = 1.0;
    for &k in space.eligible(n) {
        p *= -(-config.noise_power_w * gamma_th / (stats.source_dest[k] * p_s)).exp_m1();
    }
    Ok(p)
}

/// Overall COP, weighted over all slots (IT states only contribute; the sum
/// is deliberately not renormalized by 1 - EOP).
pub fn connection_outage_overall(
    pi: &[f64],
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<f64> {
    let mut total = 0.0;
    for &n in space.theta2() {
        total += pi[n] * connection_outage_state(n, space, stats, config, quantizer)?;
    }
    Ok(total)
}

/// Long-run probability that source i transmits in a slot.
pub fn transmission_probability(
    i: usize,
    pi: &[f64],
    model: &TransitionModel,
    space: &StateSpace,
) -> f64 {
    space
        .theta2()
        .iter()
        .map(|&n| pi[n] * model.selection[n][i])
        .sum()
}

/// Mean slots between consecutive selections of source i, in seconds.
/// Infinite when the source never transmits.
pub fn average_transmission_delay(
    i: usize,
    pi: &[f64],
    model: &TransitionModel,
    space: &StateSpace,
    config: &NetworkConfig,
) -> f64 {
    let p = transmission_probability(i, pi, model, space);
    if p > 0.0 {
        config.slot_duration_s / p
    } else {
        f64::INFINITY
    }
}

/// Analytic metrics for one network configuration.
#[derive(Debug, Clone)]
pub struct MetricsReport {
    pub eop: f64,
    /// Overall COP weighted over all slots.
    pub cop_overall: f64,
    /// Auxiliary: COP conditioned on a transmission taking place.
    pub cop_conditional: f64,
    /// Per-state COP; `None` for non-IT states.
    pub cop_per_state: Vec<Option<f64>>,
    pub transmission_prob: Vec<f64>,
    pub atd_seconds: Vec<f64>,
    pub atd_slots: Vec<f64>,
    pub snr_threshold: f64,
    pub source_power_w: f64,
}

pub fn compute_metrics(
    pi: &[f64],
    model: &TransitionModel,
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<MetricsReport> {
    let eop = energy_outage_probability(pi, space);
    let mut cop_per_state = vec![None; space.len()];
    let mut cop_overall = 0.0;
    for &n in space.theta2() {
        let c = connection_outage_state(n, space, stats, config, quantizer)?;
        cop_overall += pi[n] * c;
        cop_per_state[n] = Some(c);
    }
    let cop_conditional = if eop < 1.0 {
        cop_overall / (1.0 - eop)
    } else {
        0.0
    };
    let transmission_prob: Vec<f64> = (0..space.num_sources)
        .map(|i| transmission_probability(i, pi, model, space))
        .collect();
    let atd_seconds: Vec<f64> = transmission_prob
        .iter()
        .map(|&p| {
            if p > 0.0 {
                config.slot_duration_s / p
            } else {
                f64::INFINITY
            }
        })
        .collect();
    let atd_slots = atd_seconds
        .iter()
        .map(|t| t / config.slot_duration_s)
        .collect();
    Ok(MetricsReport {
        eop,
        cop_overall,
        cop_conditional,
        cop_per_state,
        transmission_prob,
        atd_seconds,
        atd_slots,
        snr_threshold: snr_threshold(config.rate_threshold),
        source_power_w: quantizer.transmit_power(config.slot_duration_s),
    })
}

impl MetricsReport {
    pub fn csv_header(&self) -> String {
        let mut h = String::from("eop,cop_overall,cop_conditional,snr_threshold,source_power_w");
        for i in 1..=self.transmission_prob.len() {
            write!(h, ",p_t_{i},atd_slots_{i},atd_seconds_{i}").unwrap();
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut r = format!(
            "{},{},{},{},{}",
            self.eop, self.cop_overall, self.cop_conditional, self.snr_threshold, self.source_power_w
        );
        for i in 0..self.transmission_prob.len() {
            write!(
                r,
                ",{},{},{}",
                self.transmission_prob[i], self.atd_slots[i], self.atd_seconds[i]
            )
            .unwrap();
        }
        r
    }

    /// Human-readable table in the reference layout: one row per state with
    /// its stationary probability, selection probabilities and state COP,
    /// then the derived network metrics.
    pub fn render_table(&self, pi: &[f64], model: &TransitionModel, space: &StateSpace) -> String {
        let mut out = String::new();
        writeln!(out, "state  levels      pi      selection          state COP").unwrap();
        for (n, state) in space.states() {
            let levels: Vec<String> = state.levels.iter().map(|l| l.to_string()).collect();
            let sel: Vec<String> = model.selection[n].iter().map(|p| format!("{p:.4}")).collect();
            let cop = match self.cop_per_state[n] {
                Some(c) => format!("{c:.4}"),
                None => "-".to_string(),
            };
            writeln!(
                out,
                "s{:<5} [{}]  {:.4}  [{}]  {}",
                n + 1,
                levels.join(","),
                pi[n],
                sel.join(","),
                cop
            )
            .unwrap();
        }
        writeln!(out, "EOP          {:.4}", self.eop).unwrap();
        writeln!(
            out,
            "Overall COP  {:.4}  (conditioned on transmission: {:.4})",
            self.cop_overall, self.cop_conditional
        )
        .unwrap();
        let pt: Vec<String> = self.transmission_prob.iter().map(|p| format!("{p:.4}")).collect();
        writeln!(out, "p_T          [{}]", pt.join(",")).unwrap();
        let atd: Vec<String> = self.atd_slots.iter().map(|t| format!("{t:.4}")).collect();
        writeln!(out, "ATD (slots)  [{}]", atd.join(",")).unwrap();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::golden;
    use crate::scenario::Scenario;

    #[test]
    fn table1_metrics_match_reference_values() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        let sd = sc.solve().unwrap();
        let report = sc.metrics(&sd.pi).unwrap();

        assert!((report.eop - golden::GOLDEN_EOP).abs() < golden::GOLDEN_TOL);
        assert!((report.cop_overall - golden::GOLDEN_COP).abs() < golden::GOLDEN_TOL);
        for i in 0..2 {
            assert!(
                (report.transmission_prob[i] - golden::GOLDEN_PT[i]).abs() < golden::GOLDEN_TOL
            );
            assert!((report.atd_slots[i] - golden::GOLDEN_ATD[i]).abs() < golden::GOLDEN_ATD_TOL);
        }
        // s2 = [0,1]: only source 2 eligible; s5 = [1,1]: both eligible.
        assert!((report.cop_per_state[1].unwrap() - 0.0545).abs() < 1e-4);
        assert!((report.cop_per_state[4].unwrap() - 0.0030).abs() < 1e-4);
        assert!(report.cop_per_state[0].is_none());
    }

    #[test]
    fn transmission_mass_accounts_for_it_states() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        let sd = sc.solve().unwrap();
        let report = sc.metrics(&sd.pi).unwrap();
        let total: f64 = report.transmission_prob.iter().sum();
        assert!((total - (1.0 - report.eop)).abs() < 1e-9);
    }

    #[test]
    fn cop_state_rejects_non_it_states() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        assert!(connection_outage_state(0, &sc.space, &sc.stats, &sc.config, &sc.quantizer).is_err());
    }

    #[test]
    fn zero_rate_threshold_never_outages() {
        let mut cfg = golden::table1_config();
        cfg.rate_threshold = 1e-12;
        let sc = Scenario::build(cfg).unwrap();
        let c = connection_outage_state(1, &sc.space, &sc.stats, &sc.config, &sc.quantizer).unwrap();
        assert!(c < 1e-10);
    }

    #[test]
    fn single_source_always_selected() {
        // K=1 with a chain that never sits in Theta1 does not exist (half
        // duplex drains the battery), but the per-state selection is 1.
        let mut cfg = golden::table1_config();
        cfg.num_sources = 1;
        cfg.source_positions.truncate(1);
        let sc = Scenario::build(cfg).unwrap();
        for &n in sc.space.theta2() {
            assert_eq!(sc.model.selection[n], vec![1.0]);
        }
    }

    #[test]
    fn symmetric_sources_share_transmissions() {
        let mut cfg = golden::table1_config();
        // Mirror geometry about the line through B and D.
        cfg.source_positions = vec![
            crate::config::Position::new(0.0, 1.0),
            crate::config::Position::new(0.0, -1.0),
        ];
        let sc = Scenario::build(cfg).unwrap();
        let sd = sc.solve().unwrap();
        let report = sc.metrics(&sd.pi).unwrap();
        assert!((report.transmission_prob[0] - report.transmission_prob[1]).abs() < 1e-9);
    }

    #[test]
    fn delay_is_reciprocal_transmission_probability() {
        let sc = Scenario::build(golden::table1_config()).unwrap();
        let sd = sc.solve().unwrap();
        let p = transmission_probability(0, &sd.pi, &sc.model, &sc.space);
        let t = average_transmission_delay(0, &sd.pi, &sc.model, &sc.space, &sc.config);
        assert!((t - 1.0 / p).abs() < 1e-12);
        // p = 0 reports an infinite delay explicitly.
        let zero_model = TransitionModel {
            matrix: sc.model.matrix.clone(),
            selection: vec![vec![0.0; 2]; 9],
        };
        assert!(average_transmission_delay(0, &sd.pi, &zero_model, &sc.space, &sc.config)
            .is_infinite());
    }
}
