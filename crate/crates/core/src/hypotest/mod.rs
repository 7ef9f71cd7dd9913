//! Cluster-difference tests: Shapiro-Wilk, Bartlett, PERMANOVA and the
//! multivariate dispersion test with its pairwise table.

mod bartlett;
mod dist;
mod pairwise;
mod perm;
mod permanova;
mod permdisp;
mod shapiro;

use serde::{Deserialize, Serialize};

pub use bartlett::{bartlett_test, BartlettResult};
pub use dist::{dist_sf, normal_quantile, DistKind};
pub use pairwise::{pairwise_dispersion_table, welch_t, write_pairwise_csv, PairwiseTable};
pub use perm::{permutation, permutation_stream, permutation_test, PermTestResult};
pub use permanova::{permanova, PermanovaResult};
pub use permdisp::{permdisp, DispersionResult};
pub use shapiro::{shapiro_wilk, ShapiroResult};

use crate::{Error, Result};

/// Group membership of `n` observations. Groups are kept in sorted order
/// and `codes[i]` indexes into them.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupLabels {
    codes: Vec<usize>,
    names: Vec<String>,
    sizes: Vec<usize>,
}

impl GroupLabels {
    /// Numeric labels; groups ordered by value.
    pub fn from_ids(labels: &[usize]) -> Self {
        let mut uniq = labels.to_vec();
        uniq.sort_unstable();
        uniq.dedup();
        let codes = labels.iter().map(|l| uniq.binary_search(l).expect("present")).collect();
        Self::build(codes, uniq.iter().map(|u| u.to_string()).collect())
    }

    /// String labels; groups ordered lexicographically.
    pub fn from_names<S: AsRef<str>>(labels: &[S]) -> Self {
        let mut uniq: Vec<&str> = labels.iter().map(AsRef::as_ref).collect();
        uniq.sort_unstable();
        uniq.dedup();
        let codes = labels.iter().map(|l| uniq.binary_search(&l.as_ref()).expect("present")).collect();
        let names = uniq.iter().map(|s| s.to_string()).collect();
        Self::build(codes, names)
    }

    fn build(codes: Vec<usize>, names: Vec<String>) -> Self {
        let mut sizes = vec![0; names.len()];
        for &c in &codes {
            sizes[c] += 1;
        }
        Self { codes, names, sizes }
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn n_groups(&self) -> usize {
        self.names.len()
    }

    pub fn codes(&self) -> &[usize] {
        &self.codes
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Indices of the members of each group.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_groups()];
        for (i, &c) in self.codes.iter().enumerate() {
            out[c].push(i);
        }
        out
    }

    pub(crate) fn require_groups(&self) -> Result<()> {
        if self.n_groups() < 2 {
            return Err(Error::SingleGroup);
        }
        Ok(())
    }

    pub(crate) fn require_min_size(&self, min: usize) -> Result<()> {
        self.require_groups()?;
        if let Some((g, &s)) = self.sizes.iter().enumerate().find(|(_, &s)| s < min) {
            return Err(Error::invalid(format!("group `{}` has {s} members, need at least {min}", self.names[g])));
        }
        Ok(())
    }
}

/// One-way ANOVA F of `values` under `codes` (a groups). Returns
/// `(F, ss_between, ss_within)`; F is infinite when the within part is zero.
pub(crate) fn anova_f(values: &[f64], codes: &[usize], a: usize) -> (f64, f64, f64) {
    let n = values.len();
    let mut sums = vec![0.0; a];
    let mut counts = vec![0usize; a];
    for (&v, &c) in values.iter().zip(codes) {
        sums[c] += v;
        counts[c] += 1;
    }
    let grand = values.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = sums.iter().zip(&counts).map(|(s, &c)| s / c as f64).collect();
    let ss_within: f64 = values.iter().zip(codes).map(|(&v, &c)| (v - means[c]).powi(2)).sum();
    let ss_between: f64 = means.iter().zip(&counts).map(|(m, &c)| c as f64 * (m - grand).powi(2)).sum();
    let f = (ss_between / (a - 1) as f64) / (ss_within / (n - a) as f64);
    (f, ss_between, ss_within)
}

/// JSON record for any test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestRecord {
    pub test: String,
    pub statistic: f64,
    pub df: Vec<f64>,
    pub permutations: Option<usize>,
    pub exceedances: Option<usize>,
    pub p_value: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub parametric_p: Option<f64>,
    pub seed: Option<u64>,
    pub warnings: Vec<String>,
}

impl TestRecord {
    pub fn classical(test: &str, statistic: f64, df: Vec<f64>, p_value: f64) -> Self {
        Self {
            test: test.into(),
            statistic,
            df,
            permutations: None,
            exceedances: None,
            p_value,
            parametric_p: None,
            seed: None,
            warnings: Vec::new(),
        }
    }

    pub fn permutational(test: &str, df: Vec<f64>, r: &PermTestResult) -> Self {
        Self {
            test: test.into(),
            statistic: r.statistic,
            df,
            permutations: Some(r.permutations),
            exceedances: Some(r.exceedances),
            p_value: r.p_value,
            parametric_p: r.parametric_p,
            seed: Some(r.seed),
            warnings: Vec::new(),
        }
    }
}
