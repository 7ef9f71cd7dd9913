//! Bartlett's test for equal variances.

use serde::{Deserialize, Serialize};

use super::dist::{dist_sf, DistKind};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BartlettResult {
    pub k_squared: f64,
    pub df: usize,
    pub p_value: f64,
}

fn sample_variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

pub fn bartlett_test<S: AsRef<[f64]>>(groups: &[S]) -> Result<BartlettResult> {
    let a = groups.len();
    if a < 2 {
        return Err(Error::SingleGroup);
    }
    let mut variances = Vec::with_capacity(a);
    for (g, x) in groups.iter().enumerate() {
        let x = x.as_ref();
        if x.len() < 2 {
            return Err(Error::invalid(format!("group {g} has {} values, need at least 2", x.len())));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("group {g}")));
        }
        let v = sample_variance(x);
        if !(v > 0.0) {
            return Err(Error::ZeroVariance { group: g.to_string() });
        }
        variances.push((x.len() as f64 - 1.0, v));
    }
    let dof: f64 = variances.iter().map(|(d, _)| d).sum();
    let pooled = variances.iter().map(|(d, v)| d * v).sum::<f64>() / dof;
    let numerator = dof * pooled.ln() - variances.iter().map(|(d, v)| d * v.ln()).sum::<f64>();
    let c = 1.0 + (variances.iter().map(|(d, _)| 1.0 / d).sum::<f64>() - 1.0 / dof) / (3.0 * (a - 1) as f64);
    // equal variances can leave a rounding-level negative numerator
    let k_squared = (numerator / c).max(0.0);
    let df = a - 1;
    Ok(BartlettResult { k_squared, df, p_value: dist_sf(DistKind::ChiSquared { df: df as f64 }, k_squared)? })
}
