//! Independent numerical oracles for the closed-form results: each check
//! recomputes a quantity by brute force (quadrature, Monte Carlo, or matrix
//! powers) and compares it with the analytic implementation.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use wpt_markov::config::auto_place_sources;
use wpt_markov::transition::{cdf_harvest_it, selection_probability};
use wpt_markov::{golden, Scenario};

/// The IT-mode harvest is the sum of two independent exponentials. Its CDF
/// must equal the convolution integral
///   F(x) = \int_0^x (1/a) e^{-t/a} (1 - e^{-(x-t)/b}) dt,
/// evaluated here with Simpson quadrature.
#[test]
fn it_harvest_cdf_matches_numerical_convolution() {
    let sc = Scenario::build(golden::table1_config()).unwrap();
    let eta_t0 = sc.config.efficiency * sc.config.slot_duration_s;
    let a = eta_t0 * sc.config.beacon_power_w * sc.stats.beacon_source[1];
    let b = eta_t0
        * sc.quantizer.transmit_power(sc.config.slot_duration_s)
        * sc.stats.source_source[0][1];

    let convolution = |x: f64| -> f64 {
        let steps = 20_000usize; // even
        let h = x / steps as f64;
        let integrand =
            |t: f64| (1.0 / a) * (-t / a).exp() * (1.0 - (-(x - t) / b).exp());
        let mut sum = integrand(0.0) + integrand(x);
        for i in 1..steps {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * integrand(i as f64 * h);
        }
        sum * h / 3.0
    };

    for &x in &[0.002, 0.005, 0.01, 0.02, 0.05, 0.1] {
        let analytic = cdf_harvest_it(x, 1, 0, &sc.stats, &sc.config, &sc.quantizer).unwrap();
        let numeric = convolution(x);
        assert!(
            (analytic - numeric).abs() < 1e-9,
            "x={x}: analytic {analytic}, quadrature {numeric}"
        );
    }
}

/// The selection probability is P(source i has the max of K independent
/// exponential gains). Check the inclusion-exclusion formula against a
/// direct Monte Carlo argmax with three asymmetric sources.
#[test]
fn selection_probability_matches_monte_carlo_argmax() {
    let mut cfg = golden::table1_config();
    cfg.num_sources = 3;
    cfg.source_positions = auto_place_sources(3, 1.0).unwrap();
    let sc = Scenario::build(cfg).unwrap();
    let all_full = sc.space.state_index(&[2, 2, 2]).unwrap();

    let analytic: Vec<f64> = (0..3)
        .map(|i| selection_probability(&sc.space, all_full, i, &sc.stats).unwrap())
        .collect();
    assert!((analytic.iter().sum::<f64>() - 1.0).abs() < 1e-12);

    let mut rng = ChaCha12Rng::seed_from_u64(2024);
    let trials = 2_000_000usize;
    let mut wins = [0u64; 3];
    for _ in 0..trials {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (k, &mean) in sc.stats.source_dest.iter().enumerate() {
            let u: f64 = rng.gen::<f64>();
            let g = -mean * (1.0 - u).ln();
            if g > best.1 {
                best = (k, g);
            }
        }
        wins[best.0] += 1;
    }
    for i in 0..3 {
        let emp = wins[i] as f64 / trials as f64;
        let se = (analytic[i] * (1.0 - analytic[i]) / trials as f64).sqrt();
        assert!(
            (emp - analytic[i]).abs() < 4.0 * se,
            "source {i}: analytic {}, empirical {emp} (se {se})",
            analytic[i]
        );
    }
}

/// The stationary distribution must agree with the rows of A^m for large m
/// (the chain is aperiodic and irreducible in the reference scenario).
#[test]
fn stationary_matches_matrix_power() {
    let sc = Scenario::build(golden::table1_config()).unwrap();
    let sd = sc.solve().unwrap();

    let mut power = sc.model.matrix.clone();
    for _ in 0..10 {
        power = &power * &power; // A^(2^10)
    }
    for i in 0..sc.space.len() {
        let row = power.row(i);
        for (j, &pi_j) in sd.pi.iter().enumerate() {
            assert!(
                (row[j] - pi_j).abs() < 1e-12,
                "row {i}, state {j}: {} vs {pi_j}",
                row[j]
            );
        }
    }

    // And it is a genuine fixed point: pi A = pi.
    let pi = DVector::from_column_slice(&sd.pi);
    let residual = (sc.model.matrix.transpose() * &pi - &pi).amax();
    assert!(residual <= 1e-12, "residual {residual}");
}
