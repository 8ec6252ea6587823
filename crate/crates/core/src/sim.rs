//! Slot-level Monte Carlo simulator used to cross-check the analytic chain.
//!
//! The simulator draws per-link channel realizations each slot, applies the
//! level-quantized battery update and the max-gain source selection, and
//! tallies state occupancy, state transitions, transmissions, connection
//! outages, and inter-transmission gaps. With a fixed seed every run is
//! reproducible bit for bit.

use crate::error::{Error, Result};
use crate::scenario::Scenario;
use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Exp, StandardNormal};

/// Slots discarded before tallying starts.
pub const DEFAULT_BURN_IN: u64 = 1_000;
/// Transition rows with fewer visits than this are flagged low-confidence.
pub const MIN_ROW_VISITS: u64 = 100;

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    /// Measured slots (after burn-in).
    pub slots: u64,
    pub burn_in: u64,
    pub seed: u64,
}

impl SimulationOptions {
    pub fn new(slots: u64, seed: u64) -> Self {
        Self {
            slots,
            burn_in: DEFAULT_BURN_IN,
            seed,
        }
    }
}

/// Streaming mean/variance accumulator (Welford).
#[derive(Debug, Clone, Default)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean.
    pub fn std_error(&self) -> f64 {
        (self.variance() / self.count as f64).sqrt()
    }
}

/// Raw tallies from one simulation run.
#[derive(Debug, Clone)]
pub struct SimulationStats {
    pub options: SimulationOptions,
    /// Slot-start visits per state over the measured window.
    pub occupancy: Vec<u64>,
    /// `transitions[n][m]` counts measured slots that moved n -> m.
    pub transitions: Vec<Vec<u64>>,
    /// Slots in which source i transmitted.
    pub transmissions: Vec<u64>,
    /// Transmissions of source i whose destination SNR fell below threshold.
    pub outages: Vec<u64>,
    /// Measured slots with no eligible source.
    pub non_it_slots: u64,
    /// Inter-transmission gap (in slots) per source.
    pub gaps: Vec<Welford>,
}

impl SimulationStats {
    pub fn empirical_pi(&self) -> Vec<f64> {
        let total = self.options.slots as f64;
        self.occupancy.iter().map(|&c| c as f64 / total).collect()
    }

    pub fn empirical_eop(&self) -> f64 {
        self.non_it_slots as f64 / self.options.slots as f64
    }

    /// Outage events per measured slot (matches the unconditioned COP).
    pub fn empirical_cop(&self) -> f64 {
        self.outages.iter().sum::<u64>() as f64 / self.options.slots as f64
    }

    /// Outage events per transmission.
    pub fn empirical_cop_conditional(&self) -> f64 {
        let t: u64 = self.transmissions.iter().sum();
        if t == 0 {
            return f64::NAN;
        }
        self.outages.iter().sum::<u64>() as f64 / t as f64
    }

    pub fn empirical_transmission_prob(&self) -> Vec<f64> {
        let total = self.options.slots as f64;
        self.transmissions
            .iter()
            .map(|&c| c as f64 / total)
            .collect()
    }

    /// Mean slots between transmissions, from the rate of transmissions.
    pub fn empirical_atd_slots(&self) -> Vec<f64> {
        self.empirical_transmission_prob()
            .iter()
            .map(|&p| if p > 0.0 { 1.0 / p } else { f64::INFINITY })
            .collect()
    }

    /// Row-normalized transition counts, with a per-row low-confidence flag
    /// for rows visited fewer than [`MIN_ROW_VISITS`] times. Unvisited rows
    /// are left as zeros.
    pub fn empirical_transition_matrix(&self) -> (DMatrix<f64>, Vec<bool>) {
        let n = self.occupancy.len();
        let mut m = DMatrix::zeros(n, n);
        let mut low = vec![false; n];
        for i in 0..n {
            let visits: u64 = self.transitions[i].iter().sum();
            low[i] = visits < MIN_ROW_VISITS;
            if visits == 0 {
                continue;
            }
            for j in 0..n {
                m[(i, j)] = self.transitions[i][j] as f64 / visits as f64;
            }
        }
        (m, low)
    }
}

fn exp_draw(rng: &mut ChaCha12Rng, mean: f64) -> f64 {
    // Exp::new takes the rate.
    Exp::new(1.0 / mean).unwrap().sample(rng)
}

/// Runs the slot-level simulation from the all-empty state.
pub fn run_simulation(sc: &Scenario, options: SimulationOptions) -> Result<SimulationStats> {
    if options.slots == 0 {
        return Err(Error::Config("simulation needs at least one slot".into()));
    }
    let k_count = sc.config.num_sources;
    let n_states = sc.space.len();
    let l_max = sc.config.levels;
    let l_s = sc.quantizer.transmit_level;
    let eta_t0 = sc.config.efficiency * sc.config.slot_duration_s;
    let p_b = sc.config.beacon_power_w;
    let p_s = sc.quantizer.transmit_power(sc.config.slot_duration_s);
    let gamma_th = crate::metrics::snr_threshold(sc.config.rate_threshold);
    let snr_scale = p_s / sc.config.noise_power_w;

    let mut rng = ChaCha12Rng::seed_from_u64(options.seed);
    let mut stats = SimulationStats {
        options,
        occupancy: vec![0; n_states],
        transitions: vec![vec![0; n_states]; n_states],
        transmissions: vec![0; k_count],
        outages: vec![0; k_count],
        non_it_slots: 0,
        gaps: vec![Welford::default(); k_count],
    };
    // Slot index of each source's latest measured transmission.
    let mut last_tx: Vec<Option<u64>> = vec![None; k_count];

    let mut levels = vec![0u32; k_count];
    for slot in 0..(options.burn_in + options.slots) {
        let measured = slot >= options.burn_in;
        let n = sc.space.state_index(&levels)?;
        if measured {
            stats.occupancy[n] += 1;
        }

        let eligible = sc.space.eligible(n);
        if eligible.is_empty() {
            if measured {
                stats.non_it_slots += 1;
            }
            for (k, level) in levels.iter_mut().enumerate() {
                let energy = eta_t0 * p_b * exp_draw(&mut rng, sc.stats.beacon_source[k]);
                *level = (*level + sc.quantizer.discretize(energy)?).min(l_max);
            }
        } else {
            // Max source-to-destination gain wins; strict comparison keeps
            // the lowest index on (measure-zero) ties.
            let mut winner = eligible[0];
            let mut best = f64::NEG_INFINITY;
            for &k in eligible {
                let g = exp_draw(&mut rng, sc.stats.source_dest[k]);
                if g > best {
                    best = g;
                    winner = k;
                }
            }
            if measured {
                stats.transmissions[winner] += 1;
                if snr_scale * best < gamma_th {
                    stats.outages[winner] += 1;
                }
                if let Some(prev) = last_tx[winner] {
                    stats.gaps[winner].push((slot - prev) as f64);
                }
                last_tx[winner] = Some(slot);
            }
            levels[winner] -= l_s;
            for (k, level) in levels.iter_mut().enumerate() {
                if k == winner {
                    continue;
                }
                let energy = eta_t0
                    * (p_b * exp_draw(&mut rng, sc.stats.beacon_source[k])
                        + p_s * exp_draw(&mut rng, sc.stats.source_source[winner][k]));
                *level = (*level + sc.quantizer.discretize(energy)?).min(l_max);
            }
        }

        if measured {
            let m = sc.space.state_index(&levels)?;
            stats.transitions[n][m] += 1;
        }
    }
    Ok(stats)
}

/// Which harvest-energy distribution to sample in [`empirical_cdf_check`].
#[derive(Debug, Clone, Copy)]
pub enum HarvestMode {
    /// Source k harvesting in a slot with no transmission.
    NonIt { k: usize },
    /// Source k harvesting while source i transmits.
    It { k: usize, i: usize },
}

fn complex_gaussian(rng: &mut ChaCha12Rng, mean_power: f64, n: usize) -> Vec<(f64, f64)> {
    let s = (mean_power / 2.0).sqrt();
    (0..n)
        .map(|_| {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            (re * s, im * s)
        })
        .collect()
}

fn inner_product(w: &[(f64, f64)], h: &[(f64, f64)]) -> (f64, f64) {
    // w^H h
    let mut acc = (0.0, 0.0);
    for (&(wr, wi), &(hr, hi)) in w.iter().zip(h) {
        acc.0 += wr * hr + wi * hi;
        acc.1 += wr * hi - wi * hr;
    }
    acc
}

fn norm2(v: &[(f64, f64)]) -> f64 {
    v.iter().map(|&(r, i)| r * r + i * i).sum()
}

/// One harvested-energy sample from the explicit multi-antenna construction:
/// equal-gain beamforming toward the sources in quiet slots, and a random
/// beam zero-forced at the destination (plus the transmitter's own signal)
/// during a transmission.
fn draw_harvest_energy(sc: &Scenario, mode: HarvestMode, rng: &mut ChaCha12Rng) -> Result<f64> {
    let nb = sc.config.beacon_antennas;
    let eta_t0 = sc.config.efficiency * sc.config.slot_duration_s;
    let p_b = sc.config.beacon_power_w;
    match mode {
        HarvestMode::NonIt { k } => {
            let h = complex_gaussian(rng, sc.stats.beacon_source[k], nb);
            let w = 1.0 / (nb as f64).sqrt();
            let (re, im) = h.iter().fold((0.0, 0.0), |a, &(r, i)| (a.0 + r, a.1 + i));
            let gain = (re * w).powi(2) + (im * w).powi(2);
            Ok(eta_t0 * p_b * gain)
        }
        HarvestMode::It { k, i } => {
            if k == i {
                return Err(Error::Domain(format!(
                    "source {k} cannot harvest while it transmits"
                )));
            }
            if nb < 2 {
                return Err(Error::Config(
                    "zero-forcing toward the destination needs at least 2 beacon antennas".into(),
                ));
            }
            // Random unit beam orthogonal to the beacon-destination channel.
            let h_bd = complex_gaussian(rng, sc.stats.beacon_dest, nb);
            let w = loop {
                let mut v = complex_gaussian(rng, 1.0, nb);
                let proj = inner_product(&h_bd, &v);
                let hd2 = norm2(&h_bd);
                for (idx, b) in h_bd.iter().enumerate() {
                    // v -= (h_bd^H v / |h_bd|^2) h_bd
                    let c = (proj.0 / hd2, proj.1 / hd2);
                    v[idx].0 -= c.0 * b.0 - c.1 * b.1;
                    v[idx].1 -= c.0 * b.1 + c.1 * b.0;
                }
                let n2 = norm2(&v);
                if n2 > 1e-12 {
                    let s = n2.sqrt();
                    for e in &mut v {
                        e.0 /= s;
                        e.1 /= s;
                    }
                    break v;
                }
            };
            let h_bk = complex_gaussian(rng, sc.stats.beacon_source[k], nb);
            let leak = {
                let (re, im) = inner_product(&w, &h_bk);
                re * re + im * im
            };
            let h_ik = complex_gaussian(rng, sc.stats.source_source[i][k], 1);
            let g_ik = h_ik[0].0 * h_ik[0].0 + h_ik[0].1 * h_ik[0].1;
            let p_s = sc.quantizer.transmit_power(sc.config.slot_duration_s);
            Ok(eta_t0 * (p_b * leak + p_s * g_ik))
        }
    }
}

/// Kolmogorov-Smirnov distance between the analytic harvest CDF and the
/// empirical CDF of `samples` draws from the explicit antenna construction.
pub fn empirical_cdf_check(
    sc: &Scenario,
    mode: HarvestMode,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    if samples == 0 {
        return Err(Error::Config("need at least one sample".into()));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut draws = Vec::with_capacity(samples);
    for _ in 0..samples {
        draws.push(draw_harvest_energy(sc, mode, &mut rng)?);
    }
    draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let cdf = |x: f64| -> Result<f64> {
        match mode {
            HarvestMode::NonIt { k } => {
                crate::transition::cdf_harvest_nonit(x, k, &sc.stats, &sc.config)
            }
            HarvestMode::It { k, i } => crate::transition::cdf_harvest_it(
                x,
                k,
                i,
                &sc.stats,
                &sc.config,
                &sc.quantizer,
            ),
        }
    };
    let n = samples as f64;
    let mut ks: f64 = 0.0;
    for (idx, &x) in draws.iter().enumerate() {
        let f = cdf(x)?;
        let lo = idx as f64 / n;
        let hi = (idx + 1) as f64 / n;
        ks = ks.max((f - lo).abs()).max((f - hi).abs());
    }
    Ok(ks)
}
