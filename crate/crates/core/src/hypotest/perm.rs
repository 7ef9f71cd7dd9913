//! Seeded label permutations and the exceedance counter.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::stream_rng;

/// Relative slack under which a permuted statistic counts as tying the
/// observed one. Absorbs summation-order rounding between equivalent
/// labelings.
const TIE_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermTestResult {
    pub statistic: f64,
    pub permutations: usize,
    pub exceedances: usize,
    pub p_value: f64,
    pub seed: u64,
    pub parametric_p: Option<f64>,
}

/// Permutation `b` of `0..n`: Fisher-Yates driven by the stream `(seed, b)`.
pub fn permutation(seed: u64, n: usize, b: u64) -> Vec<usize> {
    let mut rng = stream_rng(seed, b);
    let mut p: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        p.swap(i, j);
    }
    p
}

/// Permutations `0..b_count` in index order.
pub fn permutation_stream(seed: u64, n: usize, b_count: usize) -> Vec<Vec<usize>> {
    (0..b_count as u64).map(|b| permutation(seed, n, b)).collect()
}

fn ties_or_exceeds(perm: f64, observed: f64) -> bool {
    if perm >= observed {
        return true;
    }
    observed.is_finite() && perm >= observed - TIE_RTOL * observed.abs()
}

/// Count permuted statistics at least as large as `observed`. `stat` gets
/// the permuted labels `labels[perm[i]]`. Work is split by permutation
/// index, so the count does not depend on the thread pool.
pub fn permutation_test<F>(observed: f64, labels: &[usize], permutations: usize, seed: u64, stat: F) -> PermTestResult
where
    F: Fn(&[usize]) -> f64 + Sync,
{
    let n = labels.len();
    let exceedances = (0..permutations as u64)
        .into_par_iter()
        .map_init(
            || vec![0usize; n],
            |buf, b| {
                let perm = permutation(seed, n, b);
                for (slot, &p) in buf.iter_mut().zip(&perm) {
                    *slot = labels[p];
                }
                usize::from(ties_or_exceeds(stat(buf), observed))
            },
        )
        .sum::<usize>();
    PermTestResult {
        statistic: observed,
        permutations,
        exceedances,
        p_value: (1 + exceedances) as f64 / (1 + permutations) as f64,
        seed,
        parametric_p: None,
    }
}
