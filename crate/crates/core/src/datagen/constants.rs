//! Default synthetic machine profiles.
//!
//! Values were tuned so that, after z-scoring the default feature set, the
//! six state centroids sit at comparable mutual distances (about 6 to 10
//! units) with tight clusters, which puts the WSS knee at six clusters.
//! `normal_a` and `normal_b` differ only in DC offset, so their spreads are
//! identical in distribution.

use super::{ChannelProfile, Harmonic, MachineState, MachineStateSpec};
use crate::features::{BandSpec, FeatureConfig, Taper};

pub const BASE_FREQ_HZ: f64 = 26.1;
pub const SAMPLING_RATE_HZ: f64 = 2048.0;
pub const WINDOW_LEN: usize = 2048;
pub const OBSERVATION_SPACING_S: i64 = 600;

/// Broadband noise on every running channel.
pub const NOISE_SIGMA: f64 = 0.1;
/// Power-off sensor floor, 0.05x the running noise.
pub const POWER_OFF_SIGMA: f64 = 0.005;
pub const AMPLITUDE_JITTER: f64 = 0.2;
pub const SHAFT_FAULT_JITTER: f64 = 0.16;

/// Band features at 0.5x, 1x, 2x and 3x running speed.
pub const BAND_ORDERS: [f64; 4] = [0.5, 1.0, 2.0, 3.0];
pub const BAND_HALFWIDTH_HZ: f64 = 1.5;

pub fn default_feature_config() -> FeatureConfig {
    FeatureConfig {
        bands: BAND_ORDERS
            .iter()
            .map(|&o| BandSpec { center_hz: o * BASE_FREQ_HZ, halfwidth_hz: BAND_HALFWIDTH_HZ })
            .collect(),
        taper: Taper::None,
    }
}

fn h(order: f64, amplitude: f64) -> Harmonic {
    Harmonic { order, amplitude, phase_offset: 0.0 }
}

fn hp(order: f64, amplitude: f64, phase_offset: f64) -> Harmonic {
    Harmonic { order, amplitude, phase_offset }
}

fn channel(id: &str, dc_offset: f64, harmonics: Vec<Harmonic>, noise_sigma: f64, amplitude_jitter: f64) -> ChannelProfile {
    ChannelProfile { channel_id: id.to_string(), dc_offset, harmonics, noise_sigma, amplitude_jitter }
}

/// Two-axis profiles (`x`, `y`) for each state.
pub fn default_spec(state: MachineState) -> MachineStateSpec {
    use std::f64::consts::PI;
    let (s, j) = (NOISE_SIGMA, AMPLITUDE_JITTER);
    let normal = |dc_x: f64, dc_y: f64| {
        vec![
            channel("x", dc_x, vec![h(1.0, 1.0), hp(2.0, 0.25, 1.2)], s, j),
            channel("y", dc_y, vec![h(1.0, 0.3), hp(2.0, 0.2, 1.2)], s, j),
        ]
    };
    let channels = match state {
        MachineState::NormalA => normal(0.3, 0.0),
        MachineState::NormalB => normal(-0.9, -1.5),
        MachineState::Imbalance => vec![
            channel("x", 0.0, vec![h(1.0, 2.9), h(2.0, 0.25)], s, j),
            channel("y", 0.0, vec![h(1.0, 0.7), h(2.0, 0.2)], s, j),
        ],
        MachineState::ShaftFault => vec![
            channel("x", 0.0, vec![h(0.5, 0.8), h(1.0, 1.0), h(2.0, 0.25)], s, SHAFT_FAULT_JITTER),
            channel("y", 0.3, vec![h(0.5, 2.0), h(1.0, 0.3), h(2.0, 0.2)], s, SHAFT_FAULT_JITTER),
        ],
        MachineState::PowerOff => vec![
            channel("x", 0.0, vec![], POWER_OFF_SIGMA, 0.0),
            channel("y", 0.0, vec![], POWER_OFF_SIGMA, 0.0),
        ],
        MachineState::Repaired => vec![
            channel("x", -0.1, vec![h(1.0, 1.0)], s, j),
            channel("y", 1.5, vec![h(1.0, 0.3), hp(2.0, 0.2, PI), h(3.0, 0.6)], s, j),
        ],
    };
    MachineStateSpec { state, base_freq_hz: BASE_FREQ_HZ, channels }
}
