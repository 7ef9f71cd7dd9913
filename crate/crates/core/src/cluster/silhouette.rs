use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::distance::DistanceMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Silhouette {
    pub widths: Vec<f64>,
    pub average: f64,
}

/// `s_i = (b_i - a_i) / max(a_i, b_i)`. Singletons and points with
/// `a_i = b_i = 0` get 0.
pub fn silhouette_widths(dm: &DistanceMatrix, labels: &[usize]) -> Result<Silhouette> {
    let n = dm.len();
    if labels.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: labels.len() });
    }
    let mut index: BTreeMap<usize, usize> = BTreeMap::new();
    for &l in labels {
        let next = index.len();
        index.entry(l).or_insert(next);
    }
    let k = index.len();
    if k < 2 {
        return Err(Error::SingleCluster);
    }
    let group: Vec<usize> = labels.iter().map(|l| index[l]).collect();
    let mut sizes = vec![0usize; k];
    for &g in &group {
        sizes[g] += 1;
    }

    let widths: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let own = group[i];
            if sizes[own] == 1 {
                return 0.0;
            }
            let mut sums = vec![0.0; k];
            for j in 0..n {
                if j != i {
                    sums[group[j]] += dm.get(i, j);
                }
            }
            let a = sums[own] / (sizes[own] - 1) as f64;
            let b = (0..k)
                .filter(|&g| g != own)
                .map(|g| sums[g] / sizes[g] as f64)
                .fold(f64::INFINITY, f64::min);
            let denom = a.max(b);
            if denom == 0.0 { 0.0 } else { (b - a) / denom }
        })
        .collect();
    let average = widths.iter().sum::<f64>() / n as f64;
    Ok(Silhouette { widths, average })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{distance_matrix, Metric};
    use crate::features::FeatureMatrix;
    use nalgebra::DMatrix;
    use rand::Rng;

    #[test]
    fn coincident_pairs_far_apart() {
        let fm = FeatureMatrix::from_rows(&[vec![0.0], vec![0.0], vec![10.0], vec![10.0]]).unwrap();
        let dm = distance_matrix(&fm, Metric::Euclidean).unwrap();
        let s = silhouette_widths(&dm, &[0, 0, 1, 1]).unwrap();
        assert_eq!(s.widths, vec![1.0; 4]);
        assert_eq!(s.average, 1.0);
    }

    #[test]
    fn all_coincident_is_zero() {
        let dm = DistanceMatrix::from_matrix(DMatrix::zeros(4, 4), "x").unwrap();
        let s = silhouette_widths(&dm, &[0, 1, 0, 1]).unwrap();
        assert_eq!(s.widths, vec![0.0; 4]);
    }

    #[test]
    fn single_cluster_and_singletons() {
        let dm = DistanceMatrix::from_matrix(DMatrix::zeros(3, 3), "x").unwrap();
        assert!(matches!(silhouette_widths(&dm, &[2, 2, 2]), Err(Error::SingleCluster)));
        let fm = FeatureMatrix::from_rows(&[vec![0.0], vec![1.0], vec![5.0]]).unwrap();
        let dm = distance_matrix(&fm, Metric::Euclidean).unwrap();
        let s = silhouette_widths(&dm, &[0, 0, 1]).unwrap();
        assert_eq!(s.widths[2], 0.0);
    }

    #[test]
    fn matches_brute_force() {
        let mut rng = crate::rng::stream_rng(21, 0);
        let rows: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random_range(0.0..5.0), rng.random_range(0.0..5.0)]).collect();
        let labels: Vec<usize> = (0..20).map(|i| (i * 7) % 3).collect();
        let dm = distance_matrix(&FeatureMatrix::from_rows(&rows).unwrap(), Metric::Euclidean).unwrap();
        let s = silhouette_widths(&dm, &labels).unwrap();
        let d = |i: usize, j: usize| ((rows[i][0] - rows[j][0]).powi(2) + (rows[i][1] - rows[j][1]).powi(2)).sqrt();
        let mut total = 0.0;
        for i in 0..20 {
            let mean_to = |c: usize| {
                let members: Vec<usize> = (0..20).filter(|&j| labels[j] == c && j != i).collect();
                members.iter().map(|&j| d(i, j)).sum::<f64>() / members.len() as f64
            };
            let a = mean_to(labels[i]);
            let b = (0..3).filter(|&c| c != labels[i]).map(mean_to).fold(f64::INFINITY, f64::min);
            let want = (b - a) / a.max(b);
            assert!((s.widths[i] - want).abs() <= 1e-12);
            total += want;
        }
        assert!((s.average - total / 20.0).abs() <= 1e-12);
        assert!((-1.0..=1.0).contains(&s.average));
    }
}
