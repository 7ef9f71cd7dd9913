//! Dissimilarity matrices and Gower double-centering.

use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    #[default]
    Euclidean,
    Manhattan,
    Braycurtis,
}

impl Metric {
    pub fn name(self) -> &'static str {
        match self {
            Metric::Euclidean => "euclidean",
            Metric::Manhattan => "manhattan",
            Metric::Braycurtis => "braycurtis",
        }
    }

    fn eval(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Euclidean => a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt(),
            Metric::Manhattan => a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum(),
            Metric::Braycurtis => {
                let (num, den) = a
                    .iter()
                    .zip(b)
                    .fold((0.0, 0.0), |(n, d), (x, y)| (n + (x - y).abs(), d + x + y));
                if den == 0.0 { 0.0 } else { num / den }
            }
        }
    }
}

impl FromStr for Metric {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "euclidean" => Ok(Metric::Euclidean),
            "manhattan" => Ok(Metric::Manhattan),
            "braycurtis" | "bray-curtis" | "bray" => Ok(Metric::Braycurtis),
            other => Err(Error::Config(format!("unknown metric `{other}`"))),
        }
    }
}

/// Symmetric, zero-diagonal, non-negative dissimilarities.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    d: DMatrix<f64>,
    metric_name: String,
    sample_ids: Vec<String>,
}

impl DistanceMatrix {
    pub fn new(d: DMatrix<f64>, metric_name: impl Into<String>, sample_ids: Vec<String>) -> Result<Self> {
        let n = d.nrows();
        if d.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: d.ncols() });
        }
        if sample_ids.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: sample_ids.len() });
        }
        for i in 0..n {
            if d[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = d[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite("distance matrix".into()));
                }
                if v < 0.0 {
                    return Err(Error::invalid(format!("negative dissimilarity at ({i}, {j})")));
                }
                if v != d[(j, i)] {
                    return Err(Error::invalid(format!("asymmetric entry at ({i}, {j})")));
                }
            }
        }
        Ok(Self { d, metric_name: metric_name.into(), sample_ids })
    }

    /// Convenience constructor with generated ids.
    pub fn from_matrix(d: DMatrix<f64>, metric_name: impl Into<String>) -> Result<Self> {
        let ids = (1..=d.nrows()).map(|i| format!("s{i}")).collect();
        Self::new(d, metric_name, ids)
    }

    pub fn len(&self) -> usize {
        self.d.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.d.nrows() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn sample_ids(&self) -> &[String] {
        &self.sample_ids
    }

    /// Sub-matrix on `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let d = DMatrix::from_fn(indices.len(), indices.len(), |a, b| self.d[(indices[a], indices[b])]);
        let ids = indices.iter().map(|&i| self.sample_ids[i].clone()).collect();
        Self { d, metric_name: self.metric_name.clone(), sample_ids: ids }
    }

    /// Scale every entry by `c > 0`.
    pub fn scaled(&self, c: f64) -> Self {
        Self { d: &self.d * c, metric_name: self.metric_name.clone(), sample_ids: self.sample_ids.clone() }
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut wtr = csv::Writer::from_path(path)?;
        let mut header = vec!["sample_id".to_string()];
        header.extend(self.sample_ids.iter().cloned());
        wtr.write_record(&header)?;
        for (i, id) in self.sample_ids.iter().enumerate() {
            let mut rec = vec![id.clone()];
            rec.extend(self.d.row(i).iter().map(|v| format!("{v}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path, metric_name: &str) -> Result<Self> {
        let perr = |msg: String| Error::Parse { path: path.to_path_buf(), msg };
        let mut rdr = csv::Reader::from_path(path)?;
        let ids: Vec<String> = rdr.headers()?.iter().skip(1).map(|s| s.trim().to_string()).collect();
        let n = ids.len();
        let mut data = Vec::with_capacity(n * n);
        let mut rows = 0;
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != n + 1 || rec[0].trim() != ids.get(rows).map_or("", String::as_str) {
                return Err(perr(format!("row {} does not match the header", rows + 1)));
            }
            for f in rec.iter().skip(1) {
                data.push(f.trim().parse::<f64>().map_err(|e| perr(format!("`{f}`: {e}")))?);
            }
            rows += 1;
        }
        if rows != n {
            return Err(perr(format!("expected {n} rows, found {rows}")));
        }
        Self::new(DMatrix::from_row_slice(n, n, &data), metric_name, ids)
    }
}

pub fn distance_matrix(fm: &FeatureMatrix, metric: Metric) -> Result<DistanceMatrix> {
    if metric == Metric::Braycurtis && fm.values().iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeInput);
    }
    let rows = fm.rows();
    let n = rows.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| metric.eval(&rows[i], &rows[j])).collect())
        .collect();
    let mut d = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + 1 + off;
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    DistanceMatrix::new(d, metric.name(), fm.sample_ids().to_vec())
}

/// `G = J A J` with `A = -d^2 / 2` and `J = I - 11'/n`.
pub fn gower_center(dm: &DistanceMatrix) -> DMatrix<f64> {
    let n = dm.len();
    let a = dm.matrix().map(|v| -0.5 * v * v);
    let row_means: Vec<f64> = (0..n).map(|i| a.row(i).sum() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut g = DMatrix::from_fn(n, n, |i, j| a[(i, j)] - row_means[i] - row_means[j] + grand);
    // exact symmetry regardless of summation order
    for i in 0..n {
        for j in 0..i {
            let v = 0.5 * (g[(i, j)] + g[(j, i)]);
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    g
}
