//! Closed-form harvest CDFs, source-selection probabilities, and assembly of
//! the energy-state transition matrix.

use crate::channel::ChannelStats;
use crate::config::NetworkConfig;
use crate::energy::EnergyQuantizer;
use crate::error::{Error, Result};
use crate::state::StateSpace;
use nalgebra::DMatrix;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Row-sum tolerance for the assembled matrix.
pub const ROW_SUM_TOL: f64 = 1e-9;
/// Tolerance for per-state selection probabilities summing to one.
pub const SELECTION_SUM_TOL: f64 = 1e-12;
/// Relative rate-parameter gap below which the IT harvest CDF switches to its
/// Erlang-2 limit.
pub const ERLANG_SWITCH_TOL: f64 = 1e-9;
/// Exhaustive-sum guard for the selection probability (2^(K-1) terms).
pub const MAX_SELECTION_SOURCES: usize = 16;

/// The N x N row-stochastic transition matrix together with the cached
/// per-state selection probabilities.
#[derive(Debug, Clone)]
pub struct TransitionModel {
    /// Row n holds the one-step probabilities out of state n.
    pub matrix: DMatrix<f64>,
    /// `selection[n][i]` is the probability that source i is picked for
    /// transmission at state n; zero for ineligible sources and for all of
    /// the non-IT states.
    pub selection: Vec<Vec<f64>>,
}

fn check_source(k: usize, count: usize) -> Result<()> {
    if k >= count {
        return Err(Error::Domain(format!(
            "source index {k} out of range 0..{count}"
        )));
    }
    Ok(())
}

/// CDF of the energy harvested by source k in a non-IT slot: exponential with
/// mean eta*T0*P_B*gain(B,S_k). Independent of the antenna count because the
/// equal-weight beamformer leaves the effective gain distribution unchanged.
pub fn cdf_harvest_nonit(
    x: f64,
    k: usize,
    stats: &ChannelStats,
    config: &NetworkConfig,
) -> Result<f64> {
    check_source(k, stats.beacon_source.len())?;
    if x < 0.0 {
        return Err(Error::Domain(format!("CDF argument must be >= 0, got {x}")));
    }
    let mean = config.efficiency * config.slot_duration_s * config.beacon_power_w
        * stats.beacon_source[k];
    Ok(-(-x / mean).exp_m1())
}

/// CDF of the energy harvested by source k while source i transmits: the sum
/// of two independent exponentials (source-to-source plus zero-forced beacon
/// leakage), with an Erlang-2 limit when the two rates coincide.
pub fn cdf_harvest_it(
    x: f64,
    k: usize,
    i: usize,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<f64> {
    check_source(k, stats.beacon_source.len())?;
    check_source(i, stats.beacon_source.len())?;
    if k == i {
        return Err(Error::Domain(format!(
            "source {k} cannot harvest while it transmits"
        )));
    }
    if x < 0.0 {
        return Err(Error::Domain(format!("CDF argument must be >= 0, got {x}")));
    }
    let eta_t0 = config.efficiency * config.slot_duration_s;
    let p_s = quantizer.transmit_power(config.slot_duration_s);
    let a = eta_t0 * config.beacon_power_w * stats.beacon_source[k];
    let b = eta_t0 * p_s * stats.source_source[i][k];
    if (a - b).abs() <= ERLANG_SWITCH_TOL * a.max(b) {
        // Erlang-2 limit at the mu_1 = 0 singularity.
        let m = a;
        return Ok(1.0 - (-x / m).exp() * (1.0 + x / m));
    }
    Ok(1.0 - (a * (-x / a).exp() - b * (-x / b).exp()) / (a - b))
}

/// Probability that eligible source i has the largest source-to-destination
/// channel power gain at state n.
pub fn selection_probability(
    space: &StateSpace,
    n: usize,
    i: usize,
    stats: &ChannelStats,
) -> Result<f64> {
    let eligible = space.eligible(n);
    if !eligible.contains(&i) {
        return Err(Error::Domain(format!(
            "source {i} is not eligible at state {n}"
        )));
    }
    if eligible.len() > MAX_SELECTION_SOURCES {
        return Err(Error::Capacity {
            states: 1u128 << (eligible.len() - 1),
            limit: 1 << (MAX_SELECTION_SOURCES - 1),
        });
    }
    let competitors: Vec<usize> = eligible.iter().copied().filter(|&k| k != i).collect();
    let gamma_i = stats.source_dest[i];
    let mut total = 0.0;
    // Inclusion-exclusion over the competitor subsets.
    for mask in 0u32..(1u32 << competitors.len()) {
        let mut inv_sum = 0.0;
        for (bit, &k) in competitors.iter().enumerate() {
            if mask & (1 << bit) != 0 {
                inv_sum += 1.0 / stats.source_dest[k];
            }
        }
        let sign = if mask.count_ones() % 2 == 0 { 1.0 } else { -1.0 };
        total += sign / (gamma_i * inv_sum + 1.0);
    }
    Ok(total)
}

/// One-source transition probability in a non-IT slot: the probability of
/// harvesting exactly `delta_l` whole units, or at least that many when the
/// target level is full.
pub fn per_source_transition_nonit(
    k: usize,
    delta_l: u32,
    reaches_full: bool,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<f64> {
    let lo = cdf_harvest_nonit(quantizer.level_energy(delta_l), k, stats, config)?;
    if reaches_full {
        Ok(1.0 - lo)
    } else {
        let hi = cdf_harvest_nonit(quantizer.level_energy(delta_l + 1), k, stats, config)?;
        Ok(hi - lo)
    }
}

/// One-source transition probability while source i transmits. Both branch
/// endpoints use the IT-mode harvest CDF.
pub fn per_source_transition_it(
    k: usize,
    i: usize,
    delta_l: u32,
    reaches_full: bool,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<f64> {
    let lo = cdf_harvest_it(quantizer.level_energy(delta_l), k, i, stats, config, quantizer)?;
    if reaches_full {
        Ok(1.0 - lo)
    } else {
        let hi = cdf_harvest_it(
            quantizer.level_energy(delta_l + 1),
            k,
            i,
            stats,
            config,
            quantizer,
        )?;
        Ok(hi - lo)
    }
}

/// One-step transition probability from state n to state n_prime.
pub fn state_transition_probability(
    n: usize,
    n_prime: usize,
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<f64> {
    let selection: Vec<f64> = space
        .eligible(n)
        .iter()
        .map(|&i| selection_probability(space, n, i, stats))
        .collect::<Result<_>>()?;
    transition_entry(n, n_prime, space, stats, config, quantizer, &selection)
}

/// `selection` holds p_i^n for the eligible sources of n, in eligible order.
fn transition_entry(
    n: usize,
    n_prime: usize,
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
    selection: &[f64],
) -> Result<f64> {
    let from = &space.state(n).levels;
    let to = &space.state(n_prime).levels;
    let l_max = space.levels;
    let l_s = space.transmit_level as i64;

    if space.in_theta1(n) {
        let mut p = 1.0;
        for k in 0..space.num_sources {
            let delta = to[k] as i64 - from[k] as i64;
            if delta < 0 {
                return Ok(0.0);
            }
            p *= per_source_transition_nonit(
                k,
                delta as u32,
                to[k] == l_max,
                stats,
                config,
                quantizer,
            )?;
        }
        return Ok(p);
    }

    // IT mode: exactly one eligible transmitter drops by l_S, everyone else
    // can only rise. Two distinct transmitters cannot explain the same pair
    // because both would need a negative increment; assert rather than assume.
    let mut total = 0.0;
    let mut matches = 0;
    for (pos, &i) in space.eligible(n).iter().enumerate() {
        if to[i] as i64 - from[i] as i64 != -l_s {
            continue;
        }
        if (0..space.num_sources).any(|k| k != i && to[k] < from[k]) {
            continue;
        }
        matches += 1;
        let mut p = selection[pos];
        for k in 0..space.num_sources {
            if k == i {
                continue;
            }
            let delta = to[k] - from[k];
            p *= per_source_transition_it(
                k,
                i,
                delta,
                to[k] == l_max,
                stats,
                config,
                quantizer,
            )?;
        }
        total += p;
    }
    if matches > 1 {
        return Err(Error::Numerical(format!(
            "{matches} transmitters explain the transition {n} -> {n_prime}"
        )));
    }
    Ok(total)
}

fn build_row(
    n: usize,
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let eligible = space.eligible(n);
    let selection: Vec<f64> = eligible
        .iter()
        .map(|&i| selection_probability(space, n, i, stats))
        .collect::<Result<_>>()?;
    if !eligible.is_empty() {
        let sum: f64 = selection.iter().sum();
        if (sum - 1.0).abs() > SELECTION_SUM_TOL {
            return Err(Error::Numerical(format!(
                "selection probabilities at state {n} sum to {sum}"
            )));
        }
    }
    let mut row = vec![0.0; space.len()];
    for (n_prime, slot) in row.iter_mut().enumerate() {
        *slot = transition_entry(n, n_prime, space, stats, config, quantizer, &selection)?;
    }
    let mut by_source = vec![0.0; space.num_sources];
    for (pos, &i) in eligible.iter().enumerate() {
        by_source[i] = selection[pos];
    }
    Ok((row, by_source))
}

fn assemble(rows: Vec<(Vec<f64>, Vec<f64>)>, n: usize) -> Result<TransitionModel> {
    let mut worst = (0usize, 0.0f64);
    for (idx, (row, _)) in rows.iter().enumerate() {
        let dev = (row.iter().sum::<f64>() - 1.0).abs();
        if dev > worst.1 {
            worst = (idx, dev);
        }
    }
    if worst.1 > ROW_SUM_TOL {
        return Err(Error::Numerical(format!(
            "row {} sums to 1{:+e}",
            worst.0, worst.1
        )));
    }
    let mut selection = Vec::with_capacity(n);
    let mut matrix = DMatrix::zeros(n, n);
    for (idx, (row, sel)) in rows.into_iter().enumerate() {
        for (j, v) in row.into_iter().enumerate() {
            matrix[(idx, j)] = v;
        }
        selection.push(sel);
    }
    Ok(TransitionModel { matrix, selection })
}

/// Builds the full transition matrix, one independent row per state.
/// Parallel over rows when the `parallel` feature is enabled; the result is
/// deterministic regardless of schedule.
pub fn build_transition_model(
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<TransitionModel> {
    #[cfg(feature = "parallel")]
    {
        let rows = (0..space.len())
            .into_par_iter()
            .map(|n| build_row(n, space, stats, config, quantizer))
            .collect::<Result<Vec<_>>>()?;
        assemble(rows, space.len())
    }
    #[cfg(not(feature = "parallel"))]
    {
        build_transition_model_sequential(space, stats, config, quantizer)
    }
}

/// Single-threaded matrix assembly; same result as [`build_transition_model`].
pub fn build_transition_model_sequential(
    space: &StateSpace,
    stats: &ChannelStats,
    config: &NetworkConfig,
    quantizer: &EnergyQuantizer,
) -> Result<TransitionModel> {
    let rows = (0..space.len())
        .map(|n| build_row(n, space, stats, config, quantizer))
        .collect::<Result<Vec<_>>>()?;
    assemble(rows, space.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::build_channel_stats;
    use crate::config::{PathLossModel, Position};
    use crate::golden;
    use crate::state::enumerate_states;
    use proptest::prelude::*;

    struct Fixture {
        config: NetworkConfig,
        quantizer: EnergyQuantizer,
        stats: ChannelStats,
        space: StateSpace,
    }

    fn fixture_for(config: NetworkConfig) -> Fixture {
        let quantizer = EnergyQuantizer::from_config(&config).unwrap();
        let stats = build_channel_stats(&config).unwrap();
        let space = enumerate_states(&config, &quantizer).unwrap();
        Fixture {
            config,
            quantizer,
            stats,
            space,
        }
    }

    fn fixture() -> Fixture {
        fixture_for(golden::table1_config())
    }

    #[test]
    fn golden_first_row() {
        let f = fixture();
        for (j, &want) in golden::GOLDEN_MATRIX[0].iter().enumerate() {
            let got =
                state_transition_probability(0, j, &f.space, &f.stats, &f.config, &f.quantizer)
                    .unwrap();
            assert!(
                (got - want).abs() < golden::GOLDEN_TOL,
                "entry (1,{}): got {got}, want {want}",
                j + 1
            );
        }
    }

    #[test]
    fn golden_spot_entries() {
        let f = fixture();
        // 1-based (2,7) = 0.8177: from [0,1], source 2 transmits and source 1
        // fills up.
        let got = state_transition_probability(1, 6, &f.space, &f.stats, &f.config, &f.quantizer)
            .unwrap();
        assert!((got - 0.8177).abs() < golden::GOLDEN_TOL, "{got}");
        // Forbidden battery drop without a matching transmitter.
        let got = state_transition_probability(3, 2, &f.space, &f.stats, &f.config, &f.quantizer)
            .unwrap();
        assert!((got - 0.4836).abs() < golden::GOLDEN_TOL, "{got}");
        let zero = state_transition_probability(8, 0, &f.space, &f.stats, &f.config, &f.quantizer)
            .unwrap();
        assert_eq!(zero, 0.0);
    }

    #[test]
    fn selection_probabilities_for_two_eligible_sources() {
        let f = fixture();
        // State [1,1] (index 4): both sources eligible.
        let p1 = selection_probability(&f.space, 4, 0, &f.stats).unwrap();
        let p2 = selection_probability(&f.space, 4, 1, &f.stats).unwrap();
        assert!((p1 - 0.4963).abs() < 1e-4, "{p1}");
        assert!((p2 - 0.5037).abs() < 1e-4, "{p2}");
        assert!((p1 + p2 - 1.0).abs() < SELECTION_SUM_TOL);
        // Ineligible source is a domain error.
        assert!(selection_probability(&f.space, 1, 0, &f.stats).is_err());
        // Sole eligible source is always picked.
        assert_eq!(selection_probability(&f.space, 1, 1, &f.stats).unwrap(), 1.0);
    }

    #[test]
    fn nonit_cdf_matches_closed_form_and_ignores_antennas() {
        let f = fixture();
        // Mean harvest for source 1: eta*T0*P_B/(1+2^3) = 0.8/9.
        let mean = 0.8 / 9.0;
        let x = 0.01f64;
        let want = 1.0 - (-x / mean).exp();
        let got = cdf_harvest_nonit(x, 0, &f.stats, &f.config).unwrap();
        assert!((got - want).abs() < 1e-15);
        for antennas in [1usize, 5, 32] {
            let mut cfg = golden::table1_config();
            cfg.beacon_antennas = antennas;
            let g = fixture_for(cfg);
            let v = cdf_harvest_nonit(x, 0, &g.stats, &g.config).unwrap();
            assert_eq!(v, got);
        }
        assert!(cdf_harvest_nonit(-0.1, 0, &f.stats, &f.config).is_err());
        assert!(cdf_harvest_nonit(0.1, 9, &f.stats, &f.config).is_err());
    }

    /// Geometry that makes the two IT-mode rate parameters exactly equal:
    /// P_B*gain(B,Sk) == P_S*gain(Si,Sk).
    fn erlang_config() -> NetworkConfig {
        let mut cfg = golden::table1_config();
        cfg.path_loss_model = PathLossModel::Unbounded;
        // P_S = 0.01 W, P_B = 1 W: need gain(B,S2) = 0.01*gain(S1,S2).
        // With alpha = 3: d(S1,S2) = 1, d(B,S2) = 100^(1/3).
        cfg.source_positions = vec![Position::new(0.0, 0.0), Position::new(1.0, 0.0)];
        cfg.beacon_position = Position::new(1.0 - 100f64.powf(1.0 / 3.0), 0.0);
        cfg
    }

    #[test]
    fn it_cdf_erlang_limit() {
        let f = fixture_for(erlang_config());
        let m = 0.8 * 1.0 * f.stats.beacon_source[1];
        let b = 0.8 * 0.01 * f.stats.source_source[0][1];
        assert!((m - b).abs() <= ERLANG_SWITCH_TOL * m.max(b));
        // At x = m the Erlang-2 CDF is 1 - 2/e.
        let got = cdf_harvest_it(m, 1, 0, &f.stats, &f.config, &f.quantizer).unwrap();
        let want = 1.0 - 2.0 / std::f64::consts::E;
        assert!((got - want).abs() < 1e-12, "{got}");
        assert!((want - 0.26424).abs() < 1e-5);
    }

    #[test]
    fn it_cdf_rejects_self_harvest() {
        let f = fixture();
        assert!(cdf_harvest_it(0.01, 1, 1, &f.stats, &f.config, &f.quantizer).is_err());
        assert!(cdf_harvest_it(-1.0, 1, 0, &f.stats, &f.config, &f.quantizer).is_err());
    }

    #[test]
    fn it_harvest_dominates_nonit_harvest() {
        // The transmitting source only adds energy, so the IT-mode harvest is
        // stochastically larger: F_it(x) <= F_nonit(x) everywhere.
        let f = fixture();
        for step in 0..200 {
            let x = step as f64 * 0.001;
            let quiet = cdf_harvest_nonit(x, 1, &f.stats, &f.config).unwrap();
            let busy = cdf_harvest_it(x, 1, 0, &f.stats, &f.config, &f.quantizer).unwrap();
            assert!(busy <= quiet + 1e-12, "x={x}: {busy} > {quiet}");
        }
    }

    #[test]
    fn parallel_and_sequential_builds_agree() {
        let f = fixture();
        let a = build_transition_model(&f.space, &f.stats, &f.config, &f.quantizer).unwrap();
        let b =
            build_transition_model_sequential(&f.space, &f.stats, &f.config, &f.quantizer).unwrap();
        assert_eq!(a.matrix, b.matrix);
        assert_eq!(a.selection, b.selection);
    }

    #[test]
    fn rows_are_stochastic() {
        let f = fixture();
        let model = build_transition_model(&f.space, &f.stats, &f.config, &f.quantizer).unwrap();
        for i in 0..f.space.len() {
            let sum: f64 = (0..f.space.len()).map(|j| model.matrix[(i, j)]).sum();
            assert!((sum - 1.0).abs() <= ROW_SUM_TOL, "row {i} sums to {sum}");
            for j in 0..f.space.len() {
                assert!(model.matrix[(i, j)] >= 0.0);
            }
        }
    }

    #[test]
    fn too_many_competitors_rejected() {
        // 17 eligible sources exceeds the inclusion-exclusion cap.
        let mut cfg = golden::table1_config();
        cfg.num_sources = 17;
        cfg.levels = 1;
        cfg.capacity_j = 0.01;
        cfg.source_positions = (0..17)
            .map(|i| {
                let angle = i as f64 * std::f64::consts::TAU / 17.0;
                Position::new(angle.cos(), angle.sin())
            })
            .collect();
        let f = fixture_for(cfg);
        let all_ones = f.space.state_index(&[1u32; 17]).unwrap();
        assert_eq!(f.space.eligible(all_ones).len(), 17);
        let err = selection_probability(&f.space, all_ones, 0, &f.stats).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }), "{err:?}");
        // 16 eligible sources is still allowed.
        let mut levels = [1u32; 17];
        levels[16] = 0;
        let sixteen = f.space.state_index(&levels).unwrap();
        assert!(selection_probability(&f.space, sixteen, 0, &f.stats).is_ok());
    }

    proptest! {
        #[test]
        fn cdfs_are_monotone(a in 0.0..0.2f64, b in 0.0..0.2f64) {
            let f = fixture();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let f_lo = cdf_harvest_nonit(lo, 0, &f.stats, &f.config).unwrap();
            let f_hi = cdf_harvest_nonit(hi, 0, &f.stats, &f.config).unwrap();
            prop_assert!(f_lo <= f_hi + 1e-15);
            prop_assert!((0.0..=1.0).contains(&f_lo));
            let g_lo = cdf_harvest_it(lo, 1, 0, &f.stats, &f.config, &f.quantizer).unwrap();
            let g_hi = cdf_harvest_it(hi, 1, 0, &f.stats, &f.config, &f.quantizer).unwrap();
            prop_assert!(g_lo <= g_hi + 1e-15);
            prop_assert!((0.0..=1.0).contains(&g_lo));
        }
    }
}
