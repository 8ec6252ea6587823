//! Geometry-to-channel-statistics mapping.

use crate::config::NetworkConfig;
use crate::error::{Error, Result};

/// Mean channel power gains for every link in the network.
///
/// All gains are dimensionless means of exponentially distributed
/// instantaneous power gains (quasi-static Rayleigh fading).
#[derive(Debug, Clone)]
pub struct ChannelStats {
    /// Beacon to source k.
    pub beacon_source: Vec<f64>,
    /// Source k to destination.
    pub source_dest: Vec<f64>,
    /// Source i to source k; symmetric, diagonal is NaN (undefined).
    pub source_source: Vec<Vec<f64>>,
    /// Beacon to destination.
    pub beacon_dest: f64,
}

/// Computes mean gains from node geometry via the configured path-loss law.
pub fn build_channel_stats(config: &NetworkConfig) -> Result<ChannelStats> {
    config.validate()?;
    let alpha = config.path_loss_exponent;
    let model = config.path_loss_model;
    let gain = |d: f64, pair: &str| -> Result<f64> {
        let g = model.mean_gain(d, alpha);
        if !g.is_finite() || g <= 0.0 {
            return Err(Error::Config(format!(
                "coincident node positions for pair {pair} (distance {d})"
            )));
        }
        Ok(g)
    };

    let k_count = config.num_sources;
    let mut beacon_source = Vec::with_capacity(k_count);
    let mut source_dest = Vec::with_capacity(k_count);
    for (k, s) in config.source_positions.iter().enumerate() {
        beacon_source.push(gain(
            config.beacon_position.distance_to(s),
            &format!("B-S{}", k + 1),
        )?);
        source_dest.push(gain(
            s.distance_to(&config.destination_position),
            &format!("S{}-D", k + 1),
        )?);
    }
    let mut source_source = vec![vec![f64::NAN; k_count]; k_count];
    #[allow(clippy::needless_range_loop)] // symmetric fill of (i, k) pairs
    for i in 0..k_count {
        for k in (i + 1)..k_count {
            let g = gain(
                config.source_positions[i].distance_to(&config.source_positions[k]),
                &format!("S{}-S{}", i + 1, k + 1),
            )?;
            source_source[i][k] = g;
            source_source[k][i] = g;
        }
    }
    let beacon_dest = gain(
        config.beacon_position.distance_to(&config.destination_position),
        "B-D",
    )?;

    Ok(ChannelStats {
        beacon_source,
        source_dest,
        source_source,
        beacon_dest,
    })
}
