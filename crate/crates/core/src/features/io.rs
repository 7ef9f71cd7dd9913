//! CSV formats for raw waveforms, manifests and feature tables.
//!
//! Waveform file: header `t_s,<channel>...`, one row per sample.
//! Manifest: `sample_id,timestamp,file_path`, paths relative to the manifest.
//! Feature table: `sample_id,<feature>...`.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{FeatureMatrix, Observation, TimeSeriesWindow};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub sample_id: String,
    pub timestamp: i64,
    pub file_path: PathBuf,
}

fn parse_err(path: &Path, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), msg: msg.into() }
}

fn parse_f64(path: &Path, field: &str, line: usize) -> Result<f64> {
    field
        .trim()
        .parse::<f64>()
        .map_err(|e| parse_err(path, format!("line {line}: `{field}`: {e}")))
}

/// Read a waveform file. `sampling_rate_hz` overrides the rate implied by the
/// `t_s` column; `window_len` keeps only the leading samples.
pub fn read_waveform_csv(
    path: &Path,
    timestamp: i64,
    sampling_rate_hz: Option<f64>,
    window_len: Option<usize>,
) -> Result<Vec<TimeSeriesWindow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 || headers.get(0).map(str::trim) != Some("t_s") {
        return Err(parse_err(path, "expected header `t_s,<channel>...`"));
    }
    let channels: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut times = Vec::new();
    let mut columns = vec![Vec::new(); channels.len()];
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != channels.len() + 1 {
            return Err(parse_err(path, format!("line {}: expected {} fields", line + 2, channels.len() + 1)));
        }
        times.push(parse_f64(path, &rec[0], line + 2)?);
        for (c, col) in columns.iter_mut().enumerate() {
            col.push(parse_f64(path, &rec[c + 1], line + 2)?);
        }
        if window_len.is_some_and(|w| times.len() >= w) {
            break;
        }
    }
    if let Some(w) = window_len {
        if times.len() < w {
            return Err(parse_err(path, format!("window needs {w} samples, file has {}", times.len())));
        }
    }

    let fs = match sampling_rate_hz {
        Some(fs) => fs,
        None => {
            if times.len() < 2 {
                return Err(parse_err(path, "cannot infer sampling rate from fewer than two samples"));
            }
            let span = times[times.len() - 1] - times[0];
            if !(span > 0.0) {
                return Err(parse_err(path, "t_s must be increasing"));
            }
            let fs = (times.len() - 1) as f64 / span;
            // absorb the rounding of printed timestamps
            if (fs - fs.round()).abs() < 1e-6 * fs { fs.round() } else { fs }
        }
    };

    channels
        .into_iter()
        .zip(columns)
        .map(|(ch, samples)| TimeSeriesWindow::new(samples, fs, ch, timestamp))
        .collect()
}

/// Write windows sharing one sampling rate and length as a waveform file.
pub fn write_waveform_csv(path: &Path, windows: &[TimeSeriesWindow]) -> Result<()> {
    let first = windows.first().ok_or_else(|| Error::invalid("no windows to write"))?;
    let n = first.samples().len();
    let fs = first.sampling_rate_hz();
    if windows.iter().any(|w| w.samples().len() != n || w.sampling_rate_hz() != fs) {
        return Err(Error::invalid("windows differ in length or sampling rate"));
    }
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["t_s".to_string()];
    header.extend(windows.iter().map(|w| w.channel_id().to_string()));
    wtr.write_record(&header)?;
    for i in 0..n {
        let mut rec = vec![format!("{}", i as f64 / fs)];
        rec.extend(windows.iter().map(|w| format!("{}", w.samples()[i])));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let entry: ManifestEntry = rec.map_err(|e| parse_err(path, e.to_string()))?;
        out.push(entry);
    }
    if out.is_empty() {
        return Err(parse_err(path, "manifest lists no observations"));
    }
    Ok(out)
}

pub fn write_manifest(path: &Path, entries: &[ManifestEntry]) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    for e in entries {
        wtr.serialize(e)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Load every observation listed in a manifest, resolving relative paths
/// against the manifest's directory.
pub fn load_observations(
    manifest: &Path,
    sampling_rate_hz: Option<f64>,
    window_len: Option<usize>,
) -> Result<Vec<Observation>> {
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    read_manifest(manifest)?
        .into_iter()
        .map(|e| {
            let file = if e.file_path.is_absolute() { e.file_path.clone() } else { base.join(&e.file_path) };
            let windows = read_waveform_csv(&file, e.timestamp, sampling_rate_hz, window_len)?;
            Ok(Observation { sample_id: e.sample_id, timestamp: e.timestamp, windows })
        })
        .collect()
}

pub fn write_feature_csv(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec!["sample_id".to_string()];
    header.extend(fm.feature_names().iter().cloned());
    wtr.write_record(&header)?;
    for (i, id) in fm.sample_ids().iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(fm.values().row(i).iter().map(|v| format!("{v}")));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_feature_csv(path: &Path) -> Result<FeatureMatrix> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.get(0).map(str::trim) != Some("sample_id") || headers.len() < 2 {
        return Err(parse_err(path, "expected header `sample_id,<feature>...`"));
    }
    let names: Vec<String> = headers.iter().skip(1).map(|h| h.trim().to_string()).collect();
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() != names.len() + 1 {
            return Err(parse_err(path, format!("line {}: expected {} fields", line + 2, names.len() + 1)));
        }
        ids.push(rec[0].trim().to_string());
        for field in rec.iter().skip(1) {
            data.push(parse_f64(path, field, line + 2)?);
        }
    }
    if ids.is_empty() {
        return Err(parse_err(path, "no rows"));
    }
    let values = DMatrix::from_row_slice(ids.len(), names.len(), &data);
    FeatureMatrix::new(values, names, ids)
}
