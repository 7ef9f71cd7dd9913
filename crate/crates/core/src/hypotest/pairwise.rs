//! Pairwise comparison of group dispersions: observed (Welch t) p-values
//! below the diagonal, permutation p-values above it.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::dist::{dist_sf, DistKind};
use super::perm::permutation_test;
use super::GroupLabels;
use crate::rng::derive_seed;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTable {
    pub groups: Vec<String>,
    /// `a x a`; `None` on the diagonal.
    pub values: Vec<Vec<Option<f64>>>,
    pub permutations: usize,
    pub seed: u64,
}

impl PairwiseTable {
    /// Observed p for a pair, read from the lower triangle (`row > col`).
    pub fn observed(&self, row: usize, col: usize) -> Option<f64> {
        if row > col { self.values[row][col] } else { None }
    }

    /// Permuted p for a pair, read from the upper triangle (`row < col`).
    pub fn permuted(&self, row: usize, col: usize) -> Option<f64> {
        if row < col { self.values[row][col] } else { None }
    }

    /// `(observed, permuted)` for groups `i` and `j` in either order.
    pub fn pair(&self, i: usize, j: usize) -> Option<(f64, f64)> {
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        Some((self.values[hi][lo]?, self.values[lo][hi]?))
    }
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}

/// Welch two-sample t and its Satterthwaite degrees of freedom.
pub fn welch_t(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mx, vx) = mean_var(x);
    let (my, vy) = mean_var(y);
    let (nx, ny) = (x.len() as f64, y.len() as f64);
    let (sx, sy) = (vx / nx, vy / ny);
    let se2 = sx + sy;
    let diff = mx - my;
    if se2 == 0.0 {
        let t = if diff == 0.0 { 0.0 } else { diff.signum() * f64::INFINITY };
        return (t, nx + ny - 2.0);
    }
    let df = se2 * se2 / (sx * sx / (nx - 1.0) + sy * sy / (ny - 1.0));
    (diff / se2.sqrt(), df)
}

/// Two-sided p of a Welch t. Values that underflow are reported as the
/// smallest positive double so every entry stays in (0, 1].
fn welch_p(x: &[f64], y: &[f64]) -> Result<f64> {
    let (t, df) = welch_t(x, y);
    let p = 2.0 * dist_sf(DistKind::StudentT { df }, t.abs())?;
    Ok(p.clamp(f64::MIN_POSITIVE, 1.0))
}

/// Build the table from per-observation centroid distances. The permutation
/// stream for pair `(i, j)` is keyed on `(seed, i, j)`.
pub fn pairwise_dispersion_table(distances: &[f64], groups: &GroupLabels, permutations: usize, seed: u64) -> Result<PairwiseTable> {
    if distances.len() != groups.len() {
        return Err(Error::DimensionMismatch { expected: groups.len(), got: distances.len() });
    }
    groups.require_min_size(2)?;
    let a = groups.n_groups();
    let members = groups.members();
    let mut values = vec![vec![None; a]; a];
    for i in 0..a {
        for j in i + 1..a {
            let xi: Vec<f64> = members[i].iter().map(|&k| distances[k]).collect();
            let xj: Vec<f64> = members[j].iter().map(|&k| distances[k]).collect();
            values[j][i] = Some(welch_p(&xi, &xj)?);

            let pooled: Vec<f64> = xi.iter().chain(&xj).copied().collect();
            let labels: Vec<usize> = (0..pooled.len()).map(|k| usize::from(k >= xi.len())).collect();
            let abs_t = |lab: &[usize]| {
                let (mut a_vals, mut b_vals) = (Vec::with_capacity(xi.len()), Vec::with_capacity(xj.len()));
                for (&v, &l) in pooled.iter().zip(lab) {
                    if l == 0 { a_vals.push(v) } else { b_vals.push(v) }
                }
                welch_t(&a_vals, &b_vals).0.abs()
            };
            let pair_seed = derive_seed(seed, &[i as u64, j as u64]);
            let r = permutation_test(abs_t(&labels), &labels, permutations, pair_seed, abs_t);
            values[i][j] = Some(r.p_value);
        }
    }
    Ok(PairwiseTable { groups: groups.names().to_vec(), values, permutations, seed })
}

/// CSV with group names as header row and first column; empty diagonal.
pub fn write_pairwise_csv(path: &Path, table: &PairwiseTable) -> Result<()> {
    let mut wtr = csv::Writer::from_path(path)?;
    let mut header = vec![String::new()];
    header.extend(table.groups.iter().cloned());
    wtr.write_record(&header)?;
    for (name, row) in table.groups.iter().zip(&table.values) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|v| v.map(|p| format!("{p}")).unwrap_or_default()));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}
