//! One-way PERMANOVA on a dissimilarity matrix.

use serde::{Deserialize, Serialize};

use super::perm::{permutation_test, PermTestResult};
use super::GroupLabels;
use crate::distance::DistanceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermanovaResult {
    pub ss_total: f64,
    pub ss_among: f64,
    pub ss_within: f64,
    pub df_among: usize,
    pub df_within: usize,
    pub pseudo_f: f64,
    pub test: PermTestResult,
}

/// Within-group sum of squares: sum over groups of the group's summed
/// squared pairwise distances divided by its size.
fn ss_within(d2: &[f64], n: usize, codes: &[usize], a: usize) -> f64 {
    let mut members = vec![Vec::new(); a];
    for (i, &c) in codes.iter().enumerate() {
        members[c].push(i);
    }
    members
        .iter()
        .filter(|m| !m.is_empty())
        .map(|m| {
            let mut s = 0.0;
            for (x, &i) in m.iter().enumerate() {
                let row = &d2[i * n..(i + 1) * n];
                for &j in &m[..x] {
                    s += row[j];
                }
            }
            s / m.len() as f64
        })
        .sum()
}

fn pseudo_f(ss_total: f64, ss_w: f64, df_among: usize, df_within: usize) -> f64 {
    ((ss_total - ss_w) / df_among as f64) / (ss_w / df_within as f64)
}

pub fn permanova(dm: &DistanceMatrix, groups: &GroupLabels, permutations: usize, seed: u64) -> Result<PermanovaResult> {
    let n = dm.len();
    if groups.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: groups.len() });
    }
    groups.require_groups()?;
    if permutations == 0 {
        return Err(Error::InvalidParams("at least one permutation is required".into()));
    }
    let a = groups.n_groups();
    if n <= a {
        return Err(Error::TooFewSamples { needed: a + 1, got: n });
    }
    let m = dm.matrix();
    let d2: Vec<f64> = (0..n).flat_map(|i| (0..n).map(move |j| m[(i, j)] * m[(i, j)])).collect();
    let mut total = 0.0;
    for i in 0..n {
        for j in 0..i {
            total += d2[i * n + j];
        }
    }
    let ss_total = total / n as f64;
    if !(ss_total > 0.0) {
        return Err(Error::ZeroTotalVariation);
    }
    let (df_among, df_within) = (a - 1, n - a);
    let ss_w = ss_within(&d2, n, groups.codes(), a);
    let f = pseudo_f(ss_total, ss_w, df_among, df_within);
    let test = permutation_test(f, groups.codes(), permutations, seed, |labels| {
        pseudo_f(ss_total, ss_within(&d2, n, labels, a), df_among, df_within)
    });
    Ok(PermanovaResult {
        ss_total,
        ss_among: ss_total - ss_w,
        ss_within: ss_w,
        df_among,
        df_within,
        pseudo_f: f,
        test,
    })
}
