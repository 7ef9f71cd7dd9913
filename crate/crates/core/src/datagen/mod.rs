//! Synthetic machine-state vibration data.
//!
//! Each state is a set of per-channel profiles. A window on one channel is
//!
//! ```text
//! x(t) = dc + sum_h A_h (1 + j e_h) sin(2 pi h f0 t + h phi + theta_h) + sigma n(t)
//! ```
//!
//! with `phi` a random shaft phase shared by all harmonics (so the waveform
//! shape is stable from window to window), `e_h` and `n(t)` standard normal
//! draws and `j` the per-window amplitude jitter. Default profiles live in
//! [`constants`].

pub mod constants;

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::{write_manifest, write_waveform_csv, FeatureMatrix, ManifestEntry, Observation, TimeSeriesWindow};
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MachineState {
    NormalA,
    NormalB,
    Imbalance,
    ShaftFault,
    PowerOff,
    Repaired,
}

impl MachineState {
    pub const ALL: [MachineState; 6] = [
        MachineState::NormalA,
        MachineState::NormalB,
        MachineState::Imbalance,
        MachineState::ShaftFault,
        MachineState::PowerOff,
        MachineState::Repaired,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::NormalA => "normal_a",
            Self::NormalB => "normal_b",
            Self::Imbalance => "imbalance",
            Self::ShaftFault => "shaft_fault",
            Self::PowerOff => "power_off",
            Self::Repaired => "repaired",
        }
    }
}

impl fmt::Display for MachineState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for MachineState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown machine state `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    /// Multiple of the base frequency (0.5 for a subharmonic).
    pub order: f64,
    pub amplitude: f64,
    /// Phase relative to the shaft, radians.
    #[serde(default)]
    pub phase_offset: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProfile {
    pub channel_id: String,
    #[serde(default)]
    pub dc_offset: f64,
    #[serde(default)]
    pub harmonics: Vec<Harmonic>,
    pub noise_sigma: f64,
    /// Relative standard deviation of each harmonic amplitude per window.
    #[serde(default)]
    pub amplitude_jitter: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineStateSpec {
    pub state: MachineState,
    pub base_freq_hz: f64,
    pub channels: Vec<ChannelProfile>,
}

impl MachineStateSpec {
    /// Default profile for `state` at the default base frequency.
    pub fn default_for(state: MachineState) -> Self {
        constants::default_spec(state)
    }

    /// Highest harmonic frequency in the spec.
    pub fn max_frequency_hz(&self) -> f64 {
        self.channels
            .iter()
            .flat_map(|c| c.harmonics.iter())
            .filter(|h| h.amplitude > 0.0)
            .map(|h| h.order * self.base_freq_hz)
            .fold(0.0, f64::max)
    }

    /// Same spec with every channel's amplitude jitter multiplied by `factor`.
    pub fn with_jitter_scaled(mut self, factor: f64) -> Self {
        for c in &mut self.channels {
            c.amplitude_jitter *= factor;
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_freq_hz > 0.0 && self.base_freq_hz.is_finite()) {
            return Err(Error::InvalidParams(format!("base frequency must be positive, got {}", self.base_freq_hz)));
        }
        if self.channels.is_empty() {
            return Err(Error::InvalidParams(format!("state `{}` has no channels", self.state)));
        }
        for c in &self.channels {
            let bad_h = c
                .harmonics
                .iter()
                .any(|h| !(h.amplitude >= 0.0 && h.order > 0.0 && h.phase_offset.is_finite()));
            if bad_h || !(c.noise_sigma >= 0.0) || !(c.amplitude_jitter >= 0.0) || !c.dc_offset.is_finite() {
                return Err(Error::InvalidParams(format!(
                    "state `{}` channel `{}`: amplitudes, noise and jitter must be non-negative",
                    self.state, c.channel_id
                )));
            }
            if self.state == MachineState::PowerOff && c.harmonics.iter().any(|h| h.amplitude != 0.0) {
                return Err(Error::InvalidParams("power_off must not carry harmonic content".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticDataset {
    pub observations: Vec<Observation>,
    pub labels: Vec<MachineState>,
}

fn synth_window(
    profile: &ChannelProfile,
    base_freq_hz: f64,
    shaft_phase: f64,
    fs: f64,
    window_len: usize,
    timestamp: i64,
    rng: &mut ChaCha8Rng,
) -> Result<TimeSeriesWindow> {
    let tones: Vec<(f64, f64, f64)> = profile
        .harmonics
        .iter()
        .map(|h| {
            let e: f64 = rng.sample(StandardNormal);
            let amp = h.amplitude * (1.0 + profile.amplitude_jitter * e);
            (amp, TAU * h.order * base_freq_hz / fs, h.order * shaft_phase + h.phase_offset)
        })
        .collect();
    let samples = (0..window_len)
        .map(|i| {
            let n: f64 = rng.sample(StandardNormal);
            let s: f64 = tones.iter().map(|&(a, w, ph)| a * (w * i as f64 + ph).sin()).sum();
            profile.dc_offset + s + profile.noise_sigma * n
        })
        .collect();
    TimeSeriesWindow::new(samples, fs, profile.channel_id.clone(), timestamp)
}

/// Generate `count` observations for each listed state, in order, spaced
/// [`constants::OBSERVATION_SPACING_S`] seconds apart. Observation `i` of a
/// state draws from a stream keyed on `(seed, state, i)`.
pub fn synth_dataset(
    states: &[(MachineStateSpec, usize)],
    sampling_rate_hz: f64,
    window_len: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    if window_len < 256 {
        return Err(Error::InvalidParams(format!("window_len must be at least 256, got {window_len}")));
    }
    for (spec, _) in states {
        spec.validate()?;
        let max_f = spec.max_frequency_hz();
        if !(sampling_rate_hz > 2.0 * max_f) {
            return Err(Error::AliasError { fs: sampling_rate_hz, max_freq: max_f });
        }
    }

    // (spec, state-local index) for every observation in output order
    let mut plan = Vec::new();
    let mut seen = std::collections::HashMap::new();
    for (spec, count) in states {
        let next = seen.entry(spec.state).or_insert(0usize);
        for _ in 0..*count {
            plan.push((spec, *next));
            *next += 1;
        }
    }

    let observations: Vec<Observation> = plan
        .par_iter()
        .enumerate()
        .map(|(pos, &(spec, idx))| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[spec.state as u64, idx as u64]));
            let timestamp = pos as i64 * constants::OBSERVATION_SPACING_S;
            let shaft_phase = rng.random_range(0.0..TAU);
            let windows = spec
                .channels
                .iter()
                .map(|c| synth_window(c, spec.base_freq_hz, shaft_phase, sampling_rate_hz, window_len, timestamp, &mut rng))
                .collect::<Result<Vec<_>>>()?;
            Ok(Observation { sample_id: format!("{}_{:03}", spec.state, idx + 1), timestamp, windows })
        })
        .collect::<Result<_>>()?;

    Ok(SyntheticDataset {
        labels: plan.iter().map(|(s, _)| s.state).collect(),
        observations,
    })
}

/// The six default states with `per_state` observations each.
pub fn default_dataset(per_state: usize, seed: u64) -> Result<SyntheticDataset> {
    let states: Vec<_> = MachineState::ALL
        .into_iter()
        .map(|s| (MachineStateSpec::default_for(s), per_state))
        .collect();
    synth_dataset(&states, constants::SAMPLING_RATE_HZ, constants::WINDOW_LEN, seed)
}

/// Write one waveform CSV per observation under `dir/waveforms`, plus
/// `manifest.csv` and `labels.csv` (`sample_id,state`).
pub fn write_dataset(dir: &Path, data: &SyntheticDataset) -> Result<()> {
    let wave_dir = dir.join("waveforms");
    std::fs::create_dir_all(&wave_dir)?;
    let mut entries = Vec::with_capacity(data.observations.len());
    for obs in &data.observations {
        let rel = Path::new("waveforms").join(format!("{}.csv", obs.sample_id));
        write_waveform_csv(&dir.join(&rel), &obs.windows)?;
        entries.push(ManifestEntry { sample_id: obs.sample_id.clone(), timestamp: obs.timestamp, file_path: rel });
    }
    write_manifest(&dir.join("manifest.csv"), &entries)?;

    let mut wtr = csv::Writer::from_path(dir.join("labels.csv"))?;
    wtr.write_record(["sample_id", "state"])?;
    for (obs, label) in data.observations.iter().zip(&data.labels) {
        wtr.write_record([obs.sample_id.as_str(), label.name()])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Isotropic Gaussian blobs, `per_center` points around each center, rows
/// grouped by center. Panics if `centers` is empty or ragged.
pub fn gaussian_blobs(centers: &[Vec<f64>], per_center: usize, sigma: f64, seed: u64) -> (FeatureMatrix, Vec<usize>) {
    assert!(!centers.is_empty() && per_center > 0, "need at least one center and one point");
    let p = centers[0].len();
    assert!(centers.iter().all(|c| c.len() == p), "centers differ in dimension");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(centers.len() * per_center);
    let mut labels = Vec::with_capacity(rows.capacity());
    for (g, c) in centers.iter().enumerate() {
        for _ in 0..per_center {
            rows.push(c.iter().map(|&m| m + sigma * rng.sample::<f64, _>(StandardNormal)).collect());
            labels.push(g);
        }
    }
    (FeatureMatrix::from_rows(&rows).expect("finite blob data"), labels)
}

/// Vertices of a regular simplex: `k` points in `k` dimensions, pairwise
/// distance `scale`.
pub fn simplex_centers(k: usize, scale: f64) -> Vec<Vec<f64>> {
    let s = scale / std::f64::consts::SQRT_2;
    (0..k)
        .map(|i| (0..k).map(|j| if i == j { s } else { 0.0 }).collect())
        .collect()
}
