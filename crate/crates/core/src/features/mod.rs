//! Vibration feature extraction.
//!
//! Each observation contributes one row: nine time-domain statistics per
//! channel followed by the configured band amplitudes for that channel.
//! Columns are channel-major so all features of one axis sit together.

mod io;
mod spectrum;

use std::collections::HashSet;
use std::fmt::Display;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use io::{
    load_observations, read_feature_csv, read_manifest, read_waveform_csv, write_feature_csv,
    write_manifest, write_waveform_csv, ManifestEntry,
};
pub use spectrum::{band_amplitude, spectrum, Spectrum, Taper};

use crate::{Error, Result};

/// Names of the per-channel time-domain features, in column order.
pub const TIME_FEATURE_NAMES: [&str; 9] = [
    "mean", "median", "min", "max", "kurtosis", "skewness", "std", "rms", "range",
];

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeriesWindow {
    samples: Vec<f64>,
    sampling_rate_hz: f64,
    channel_id: String,
    timestamp: i64,
}

impl TimeSeriesWindow {
    pub fn new(
        samples: Vec<f64>,
        sampling_rate_hz: f64,
        channel_id: impl Into<String>,
        timestamp: i64,
    ) -> Result<Self> {
        if samples.len() < 4 {
            return Err(Error::TooFewSamples { needed: 4, got: samples.len() });
        }
        if !(sampling_rate_hz > 0.0 && sampling_rate_hz.is_finite()) {
            return Err(Error::invalid(format!("sampling rate must be positive, got {sampling_rate_hz}")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("window samples".into()));
        }
        Ok(Self { samples, sampling_rate_hz, channel_id: channel_id.into(), timestamp })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sampling_rate_hz(&self) -> f64 {
        self.sampling_rate_hz
    }

    pub fn channel_id(&self) -> &str {
        &self.channel_id
    }

    pub fn timestamp(&self) -> i64 {
        self.timestamp
    }
}

/// The nine statistics of one window. Kurtosis and skewness are `None` when
/// the window has zero variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeFeatures {
    pub mean: f64,
    pub median: f64,
    pub min: f64,
    pub max: f64,
    /// Bias-adjusted sample excess kurtosis (G2).
    pub kurtosis: Option<f64>,
    /// Adjusted Fisher-Pearson skewness (G1).
    pub skewness: Option<f64>,
    /// Sample standard deviation, divisor n - 1.
    pub std_dev: f64,
    pub rms: f64,
    pub range: f64,
}

impl TimeFeatures {
    /// Values in [`TIME_FEATURE_NAMES`] order, substituting `undefined` for a
    /// missing kurtosis or skewness.
    pub fn to_array(&self, undefined: f64) -> [f64; 9] {
        [
            self.mean,
            self.median,
            self.min,
            self.max,
            self.kurtosis.unwrap_or(undefined),
            self.skewness.unwrap_or(undefined),
            self.std_dev,
            self.rms,
            self.range,
        ]
    }

    pub fn is_degenerate(&self) -> bool {
        self.kurtosis.is_none()
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

pub fn time_domain_features(window: &TimeSeriesWindow) -> TimeFeatures {
    let x = window.samples();
    let n = x.len() as f64;

    let mean = x.iter().sum::<f64>() / n;
    let (min, max) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let (mut m2, mut m3, mut m4, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for &v in x {
        let d = v - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
        sq += v * v;
    }
    let std_dev = (m2 / (n - 1.0)).sqrt();
    let rms = (sq / n).sqrt();
    m2 /= n;
    m3 /= n;
    m4 /= n;

    let (kurtosis, skewness) = if min == max || m2 == 0.0 {
        (None, None)
    } else {
        let g1 = m3 / m2.powf(1.5);
        let g2 = m4 / (m2 * m2) - 3.0;
        let skew = g1 * (n * (n - 1.0)).sqrt() / (n - 2.0);
        let kurt = (n - 1.0) / ((n - 2.0) * (n - 3.0)) * ((n + 1.0) * g2 + 6.0);
        (Some(kurt), Some(skew))
    };

    TimeFeatures {
        mean,
        median: median(x),
        min,
        max,
        kurtosis,
        skewness,
        std_dev,
        rms,
        range: max - min,
    }
}

/// Rows = observations, columns = named features. All entries finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    values: DMatrix<f64>,
    feature_names: Vec<String>,
    sample_ids: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(values: DMatrix<f64>, feature_names: Vec<String>, sample_ids: Vec<String>) -> Result<Self> {
        let (n, p) = values.shape();
        if n == 0 || p == 0 {
            return Err(Error::invalid("feature matrix must have at least one row and column"));
        }
        if feature_names.len() != p {
            return Err(Error::DimensionMismatch { expected: p, got: feature_names.len() });
        }
        if sample_ids.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sample_ids.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        let mut seen = HashSet::new();
        for name in &feature_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::DuplicateFeature(name.clone()));
            }
        }
        Ok(Self { values, feature_names, sample_ids })
    }

    /// Build from row-major data with generated names (`f1..fp`, `s1..sn`).
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let p = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != p) {
            return Err(Error::invalid("ragged rows"));
        }
        let values = DMatrix::from_fn(n, p, |i, j| rows[i][j]);
        Self::new(
            values,
            (1..=p).map(|j| format!("f{j}")).collect(),
            (1..=n).map(|i| format!("s{i}")).collect(),
        )
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    pub fn nrows(&self) -> usize {
        self.values.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        self.values.row(i).iter().copied().collect()
    }

    /// Row-major copy, convenient for distance-heavy loops.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.nrows()).map(|i| self.row(i)).collect()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let values = self.values.select_rows(indices);
        let ids = indices.iter().map(|&i| self.sample_ids[i].clone()).collect();
        Self::new(values, self.feature_names.clone(), ids)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSpec {
    pub center_hz: f64,
    pub halfwidth_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct FeatureConfig {
    #[serde(default)]
    pub bands: Vec<BandSpec>,
    #[serde(default)]
    pub taper: Taper,
}

/// One acquisition: a window per channel.
#[derive(Debug, Clone)]
pub struct Observation {
    pub sample_id: String,
    pub timestamp: i64,
    pub windows: Vec<TimeSeriesWindow>,
}

#[derive(Debug, Clone)]
pub struct FeatureExtraction {
    pub matrix: FeatureMatrix,
    pub timestamps: Vec<i64>,
    pub warnings: Vec<String>,
}

/// Centers print with at most six decimals so `3 * 26.1` reads `78.3`.
fn band_column_name(channel: &str, band: &BandSpec) -> String {
    let fixed = format!("{:.6}", band.center_hz);
    let center = fixed.trim_end_matches('0').trim_end_matches('.');
    format!("{channel}_band_{center}hz")
}

pub fn build_feature_matrix(observations: &[Observation], cfg: &FeatureConfig) -> Result<FeatureExtraction> {
    let first = observations
        .first()
        .ok_or_else(|| Error::invalid("no observations"))?;
    let channels: Vec<&str> = first.windows.iter().map(|w| w.channel_id()).collect();
    let channel_set: HashSet<&str> = channels.iter().copied().collect();
    if channels.is_empty() || channel_set.len() != channels.len() {
        return Err(Error::ChannelMismatch { sample_id: first.sample_id.clone() });
    }

    let mut names = Vec::new();
    for ch in &channels {
        names.extend(TIME_FEATURE_NAMES.iter().map(|f| format!("{ch}_{f}")));
        names.extend(cfg.bands.iter().map(|b| band_column_name(ch, b)));
    }

    // (row values, list of degenerate channels)
    let rows: Vec<Result<(Vec<f64>, Vec<String>)>> = observations
        .par_iter()
        .map(|obs| {
            let ids: HashSet<&str> = obs.windows.iter().map(|w| w.channel_id()).collect();
            if ids != channel_set || obs.windows.len() != channels.len() {
                return Err(Error::ChannelMismatch { sample_id: obs.sample_id.clone() });
            }
            let mut row = Vec::with_capacity(names.len());
            let mut degenerate = Vec::new();
            for ch in &channels {
                let w = obs.windows.iter().find(|w| w.channel_id() == *ch).expect("checked above");
                let tf = time_domain_features(w);
                if tf.is_degenerate() {
                    degenerate.push(ch.to_string());
                }
                row.extend(tf.to_array(0.0));
                if !cfg.bands.is_empty() {
                    let spec = spectrum(w, cfg.taper);
                    for b in &cfg.bands {
                        row.push(band_amplitude(&spec, b.center_hz, b.halfwidth_hz)?);
                    }
                }
            }
            Ok((row, degenerate))
        })
        .collect();

    let mut data = Vec::with_capacity(observations.len());
    let mut warnings = Vec::new();
    for (obs, r) in observations.iter().zip(rows) {
        let (row, degenerate) = r?;
        for ch in degenerate {
            warnings.push(format!(
                "zero-variance window in `{}` channel `{ch}`: kurtosis/skewness undefined, set to 0",
                obs.sample_id
            ));
        }
        data.push(row);
    }

    let p = names.len();
    let values = DMatrix::from_fn(data.len(), p, |i, j| data[i][j]);
    let matrix = FeatureMatrix::new(
        values,
        names,
        observations.iter().map(|o| o.sample_id.clone()).collect(),
    )?;
    Ok(FeatureExtraction {
        matrix,
        timestamps: observations.iter().map(|o| o.timestamp).collect(),
        warnings,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Normalization {
    #[default]
    Zscore,
    Minmax,
}

impl std::str::FromStr for Normalization {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "zscore" => Ok(Self::Zscore),
            "minmax" => Ok(Self::Minmax),
            other => Err(Error::Config(format!("unknown normalization `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Normalized {
    pub matrix: FeatureMatrix,
    /// Names of columns that were constant and mapped to zero.
    pub constant_columns: Vec<String>,
}

pub fn normalize_features(fm: &FeatureMatrix, method: Normalization) -> Result<Normalized> {
    let n = fm.nrows();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let mut values = fm.values().clone();
    let mut constant_columns = Vec::new();
    for (j, mut col) in values.column_iter_mut().enumerate() {
        let (lo, hi) = col
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        if lo == hi {
            col.fill(0.0);
            constant_columns.push(fm.feature_names()[j].clone());
            continue;
        }
        match method {
            Normalization::Zscore => {
                let mean = col.sum() / n as f64;
                let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
                let sd = var.sqrt();
                col.apply(|v| *v = (*v - mean) / sd);
            }
            Normalization::Minmax => {
                let span = hi - lo;
                col.apply(|v| *v = ((*v - lo) / span).clamp(0.0, 1.0));
            }
        }
    }
    Ok(Normalized {
        matrix: FeatureMatrix::new(values, fm.feature_names().to_vec(), fm.sample_ids().to_vec())?,
        constant_columns,
    })
}

/// Indicator matrix: row `i` has a single 1 in the column of `labels[i]`.
pub fn one_hot_encode<T: PartialEq + Display>(labels: &[T], categories: &[T]) -> Result<Vec<Vec<u8>>> {
    labels
        .iter()
        .map(|label| {
            let pos = categories
                .iter()
                .position(|c| c == label)
                .ok_or_else(|| Error::UnknownLabel(label.to_string()))?;
            let mut row = vec![0u8; categories.len()];
            row[pos] = 1;
            Ok(row)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn win(samples: Vec<f64>) -> TimeSeriesWindow {
        TimeSeriesWindow::new(samples, 2048.0, "x", 0).unwrap()
    }

    /// Straightforward two-pass reference for the nine statistics.
    fn naive(x: &[f64]) -> [f64; 9] {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let mut s = x.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let med = if s.len() % 2 == 1 { s[s.len() / 2] } else { (s[s.len() / 2 - 1] + s[s.len() / 2]) / 2.0 };
        let moment = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        let (m2, m3, m4) = (moment(2), moment(3), moment(4));
        let skew = (m3 / m2.powf(1.5)) * (n * (n - 1.0)).sqrt() / (n - 2.0);
        let kurt = ((n + 1.0) * (m4 / m2.powi(2) - 3.0) + 6.0) * (n - 1.0) / ((n - 2.0) * (n - 3.0));
        let sd = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
        let rms = (x.iter().map(|v| v * v).sum::<f64>() / n).sqrt();
        [mean, med, s[0], s[s.len() - 1], kurt, skew, sd, rms, s[s.len() - 1] - s[0]]
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-300) || (a - b).abs() < 1e-14
    }

    #[test]
    fn one_to_five() {
        let tf = time_domain_features(&win(vec![1.0, 2.0, 3.0, 4.0, 5.0]));
        assert_eq!(tf.mean, 3.0);
        assert_eq!(tf.median, 3.0);
        assert_eq!((tf.min, tf.max, tf.range), (1.0, 5.0, 4.0));
        assert!(tf.skewness.unwrap().abs() < 1e-15);
        assert!((tf.rms - 11f64.sqrt()).abs() < 1e-15);
        assert!((tf.std_dev - 2.5f64.sqrt()).abs() < 1e-15);
        // G2 for a discrete uniform on 5 points: g2 = -1.3, G2 = 4/6 * (6 * -1.3 + 6) = -1.2
        assert!((tf.kurtosis.unwrap() + 1.2).abs() < 1e-12);
    }

    #[test]
    fn constant_window_marks_shape_undefined() {
        let tf = time_domain_features(&win(vec![2.5; 4]));
        assert!(tf.kurtosis.is_none() && tf.skewness.is_none());
        assert_eq!(tf.std_dev, 0.0);
        assert_eq!(tf.range, 0.0);
        assert_eq!(tf.mean, 2.5);
        assert_eq!(tf.rms, 2.5);
    }

    #[test]
    fn window_invariants() {
        assert!(matches!(
            TimeSeriesWindow::new(vec![1.0; 3], 10.0, "x", 0),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(TimeSeriesWindow::new(vec![1.0; 4], 0.0, "x", 0).is_err());
        assert!(TimeSeriesWindow::new(vec![1.0, f64::NAN, 1.0, 1.0], 1.0, "x", 0).is_err());
    }

    #[test]
    fn agrees_with_naive_reference() {
        use rand::Rng;
        let mut rng = crate::rng::stream_rng(5, 0);
        for _ in 0..1000 {
            let n = rng.random_range(4..200);
            let shift: f64 = rng.random_range(-10.0..10.0);
            let x: Vec<f64> = (0..n).map(|_| shift + rng.random::<f64>().powi(3) * 4.0).collect();
            let got = time_domain_features(&win(x.clone())).to_array(f64::NAN);
            let want = naive(&x);
            for (g, w) in got.iter().zip(want) {
                assert!(rel_close(*g, w, 1e-10), "{g} vs {w}");
            }
        }
    }

    fn obs(id: &str, channels: &[&str], fill: f64) -> Observation {
        Observation {
            sample_id: id.into(),
            timestamp: 0,
            windows: channels
                .iter()
                .enumerate()
                .map(|(c, ch)| {
                    let x = (0..64).map(|i| fill + (i as f64 * (c + 1) as f64).sin()).collect();
                    TimeSeriesWindow::new(x, 64.0, *ch, 0).unwrap()
                })
                .collect(),
        }
    }

    #[test]
    fn matrix_shapes_and_order() {
        let cfg = FeatureConfig {
            bands: vec![BandSpec { center_hz: 10.0, halfwidth_hz: 1.0 }],
            taper: Taper::None,
        };
        let data = vec![obs("a", &["x", "y"], 0.0), obs("b", &["y", "x"], 1.0)];
        let fx = build_feature_matrix(&data, &cfg).unwrap();
        assert_eq!((fx.matrix.nrows(), fx.matrix.ncols()), (2, 20));
        assert_eq!(fx.matrix.feature_names()[0], "x_mean");
        assert_eq!(fx.matrix.feature_names()[9], "x_band_10hz");
        let odd = BandSpec { center_hz: 3.0 * 26.1, halfwidth_hz: 1.0 };
        assert_eq!(band_column_name("y", &odd), "y_band_78.3hz");
        assert_eq!(fx.matrix.feature_names()[10], "y_mean");
        // channel order follows the first observation even when the second lists y first,
        // so row b's x column holds the sin(2i) signal
        let xmean_b = fx.matrix.values()[(1, 0)];
        let ymean_b = fx.matrix.values()[(1, 10)];
        assert!((xmean_b - (1.0 + (0..64).map(|i| (2.0 * i as f64).sin()).sum::<f64>() / 64.0)).abs() < 1e-12);
        assert!((ymean_b - (1.0 + (0..64).map(|i| (i as f64).sin()).sum::<f64>() / 64.0)).abs() < 1e-12);

        let single = build_feature_matrix(&[obs("a", &["x"], 0.0)], &FeatureConfig::default()).unwrap();
        assert_eq!((single.matrix.nrows(), single.matrix.ncols()), (1, 9));
    }

    #[test]
    fn channel_mismatch() {
        let data = vec![obs("a", &["x", "y"], 0.0), obs("b", &["x", "z"], 0.0)];
        assert!(matches!(
            build_feature_matrix(&data, &FeatureConfig::default()),
            Err(Error::ChannelMismatch { sample_id }) if sample_id == "b"
        ));
        let data = vec![obs("a", &["x", "y"], 0.0), obs("b", &["x"], 0.0)];
        assert!(build_feature_matrix(&data, &FeatureConfig::default()).is_err());
    }

    #[test]
    fn constant_window_produces_warning() {
        let mut o = obs("a", &["x"], 0.0);
        o.windows[0] = TimeSeriesWindow::new(vec![1.0; 8], 8.0, "x", 0).unwrap();
        let fx = build_feature_matrix(&[o], &FeatureConfig::default()).unwrap();
        assert_eq!(fx.warnings.len(), 1);
        assert_eq!(fx.matrix.values()[(0, 4)], 0.0);
    }

    #[test]
    fn feature_matrix_invariants() {
        let m = DMatrix::from_row_slice(1, 2, &[1.0, 2.0]);
        assert!(matches!(
            FeatureMatrix::new(m.clone(), vec!["a".into(), "a".into()], vec!["s".into()]),
            Err(Error::DuplicateFeature(_))
        ));
        let bad = DMatrix::from_row_slice(1, 2, &[1.0, f64::INFINITY]);
        assert!(FeatureMatrix::new(bad, vec!["a".into(), "b".into()], vec!["s".into()]).is_err());
        assert!(FeatureMatrix::new(m, vec!["a".into()], vec!["s".into()]).is_err());
    }

    #[test]
    fn normalization_examples() {
        let fm = FeatureMatrix::from_rows(&[vec![1.0, 2.0, 5.0], vec![2.0, 4.0, 5.0], vec![3.0, 6.0, 5.0]]).unwrap();
        let z = normalize_features(&fm, Normalization::Zscore).unwrap();
        assert_eq!(z.matrix.column(0), vec![-1.0, 0.0, 1.0]);
        assert_eq!(z.matrix.column(2), vec![0.0; 3]);
        assert_eq!(z.constant_columns, vec!["f3".to_string()]);
        let mm = normalize_features(&fm, Normalization::Minmax).unwrap();
        assert_eq!(mm.matrix.column(1), vec![0.0, 0.5, 1.0]);
        assert_eq!(mm.matrix.column(2), vec![0.0; 3]);
        assert_eq!(mm.constant_columns.len(), 1);

        let one = FeatureMatrix::from_rows(&[vec![1.0]]).unwrap();
        assert!(normalize_features(&one, Normalization::Zscore).is_err());
    }

    #[test]
    fn one_hot_examples() {
        let rows = one_hot_encode(&[1, 3, 2], &[1, 2, 3]).unwrap();
        assert_eq!(rows, vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 0]]);
        assert_eq!(one_hot_encode(&["a"], &["a"]).unwrap(), vec![vec![1]]);
        assert!(matches!(one_hot_encode(&[4], &[1, 2]), Err(Error::UnknownLabel(l)) if l == "4"));
    }

    proptest! {
        #[test]
        fn zscore_columns_are_standardized(rows in prop::collection::vec(prop::collection::vec(-1e3f64..1e3, 3), 3..30)) {
            let fm = FeatureMatrix::from_rows(&rows).unwrap();
            let z = normalize_features(&fm, Normalization::Zscore).unwrap();
            let n = fm.nrows() as f64;
            for j in 0..3 {
                if z.constant_columns.contains(&fm.feature_names()[j]) { continue; }
                let col = z.matrix.column(j);
                let mean = col.iter().sum::<f64>() / n;
                let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
                prop_assert!(mean.abs() < 1e-10);
                prop_assert!((sd - 1.0).abs() < 1e-10);
            }
        }

        #[test]
        fn one_hot_sums(labels in prop::collection::vec(0usize..5, 1..40)) {
            let cats: Vec<usize> = (0..5).collect();
            let m = one_hot_encode(&labels, &cats).unwrap();
            for row in &m {
                prop_assert_eq!(row.iter().map(|&v| v as usize).sum::<usize>(), 1);
            }
            for c in 0..5 {
                let col: usize = m.iter().map(|r| r[c] as usize).sum();
                prop_assert_eq!(col, labels.iter().filter(|&&l| l == c).count());
            }
        }
    }
}
