//! Homogeneity of multivariate dispersions: distances to group centroids in
//! principal-coordinate space, compared across groups by ANOVA F.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::dist::{dist_sf, DistKind};
use super::pairwise::{pairwise_dispersion_table, PairwiseTable};
use super::perm::{permutation_test, PermTestResult};
use super::{anova_f, GroupLabels};
use crate::distance::DistanceMatrix;
use crate::ordination::pcoa;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionResult {
    pub centroid_distances: Vec<f64>,
    pub group_mean_distances: Vec<f64>,
    pub anova_f: f64,
    pub df_among: usize,
    pub df_within: usize,
    pub test: PermTestResult,
    pub pairwise: PairwiseTable,
    /// Observations whose squared centroid distance came out negative and
    /// was set to zero.
    pub clamped_count: usize,
}

/// Squared distances of each row to its group mean.
fn sq_to_centroid(coords: &DMatrix<f64>, members: &[Vec<usize>], out: &mut [f64], sign: f64) {
    let m = coords.ncols();
    for group in members {
        let mut c = vec![0.0; m];
        for &i in group {
            for (k, ck) in c.iter_mut().enumerate() {
                *ck += coords[(i, k)];
            }
        }
        c.iter_mut().for_each(|v| *v /= group.len() as f64);
        for &i in group {
            let d: f64 = (0..m).map(|k| (coords[(i, k)] - c[k]).powi(2)).sum();
            out[i] += sign * d;
        }
    }
}

pub fn permdisp(dm: &DistanceMatrix, groups: &GroupLabels, permutations: usize, seed: u64) -> Result<DispersionResult> {
    let n = dm.len();
    if groups.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: groups.len() });
    }
    groups.require_min_size(2)?;
    if permutations == 0 {
        return Err(Error::InvalidParams("at least one permutation is required".into()));
    }
    let a = groups.n_groups();
    let members = groups.members();

    let ord = pcoa(dm)?;
    let mut z2 = vec![0.0; n];
    sq_to_centroid(&ord.coords, &members, &mut z2, 1.0);
    if let Some(im) = &ord.imaginary_coords {
        sq_to_centroid(im, &members, &mut z2, -1.0);
    }
    let mut clamped_count = 0;
    let z: Vec<f64> = z2
        .into_iter()
        .map(|v| {
            if v < 0.0 {
                clamped_count += 1;
                0.0
            } else {
                v.sqrt()
            }
        })
        .collect();

    let (f, _, ss_w) = anova_f(&z, groups.codes(), a);
    if !(ss_w > 0.0) {
        return Err(Error::ZeroResidual);
    }
    let (df_among, df_within) = (a - 1, n - a);
    let mut test = permutation_test(f, groups.codes(), permutations, seed, |labels| anova_f(&z, labels, a).0);
    test.parametric_p = Some(dist_sf(DistKind::F { df1: df_among as f64, df2: df_within as f64 }, f)?);

    let group_mean_distances = members
        .iter()
        .map(|m| m.iter().map(|&i| z[i]).sum::<f64>() / m.len() as f64)
        .collect();
    let pairwise = pairwise_dispersion_table(&z, groups, permutations, seed)?;
    Ok(DispersionResult {
        centroid_distances: z,
        group_mean_distances,
        anova_f: f,
        df_among,
        df_within,
        test,
        pairwise,
        clamped_count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{distance_matrix, Metric};
    use crate::FeatureMatrix;
    use std::f64::consts::TAU;

    fn dm_of(rows: &[Vec<f64>]) -> DistanceMatrix {
        distance_matrix(&FeatureMatrix::from_rows(rows).unwrap(), Metric::Euclidean).unwrap()
    }

    fn circles(r_a: f64, r_b: f64, each: usize) -> (DistanceMatrix, GroupLabels) {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (g, r) in [r_a, r_b].into_iter().enumerate() {
            for k in 0..each {
                let t = TAU * (k as f64 + 0.25 * g as f64) / each as f64;
                // small radial wobble keeps the within-group spread non-zero
                let rr = r * (1.0 + 0.05 * (2.3 * k as f64).sin());
                rows.push(vec![rr * t.cos(), rr * t.sin()]);
                labels.push(g);
            }
        }
        (dm_of(&rows), GroupLabels::from_ids(&labels))
    }

    /// Two groups of four, mirror images through the origin, each with
    /// unequal member distances so the residual is non-zero.
    fn mirrored() -> (DistanceMatrix, GroupLabels) {
        let a = [vec![1.0, 0.5], vec![2.0, -1.0], vec![-0.5, 1.5], vec![0.3, -2.2]];
        let mut rows: Vec<Vec<f64>> = a.to_vec();
        rows.extend(a.iter().map(|p| vec![-p[0] + 6.0, -p[1]]));
        (dm_of(&rows), GroupLabels::from_ids(&[0, 0, 0, 0, 1, 1, 1, 1]))
    }

    #[test]
    fn mirrored_groups_have_equal_dispersion() {
        let (dm, g) = mirrored();
        let r = permdisp(&dm, &g, 999, 4).unwrap();
        assert!((r.group_mean_distances[0] - r.group_mean_distances[1]).abs() < 1e-9);
        assert!(r.anova_f < 1e-12);
        assert!(r.test.p_value > 0.9);
        assert!(r.test.parametric_p.unwrap() > 0.9);
        let (obs, perm) = (r.pairwise.observed(1, 0).unwrap(), r.pairwise.permuted(0, 1).unwrap());
        assert!(obs > 0.5 && perm > 0.5);
    }

    #[test]
    fn circle_radius_contrast() {
        let (dm, g) = circles(1.0, 5.0, 10);
        let r = permdisp(&dm, &g, 999, 11).unwrap();
        assert_eq!(r.clamped_count, 0);
        assert!((r.group_mean_distances[0] - 1.0).abs() < 0.1);
        assert!((r.group_mean_distances[1] - 5.0).abs() < 0.5);
        assert!(r.test.p_value <= 0.01);
        assert!(r.pairwise.observed(1, 0).unwrap() <= 0.01);
        assert!(r.pairwise.permuted(0, 1).unwrap() <= 0.01);
    }

    #[test]
    fn centroid_distances_match_feature_space() {
        // for euclidean input the PCoA detour reproduces plain distances to group means
        let rows: Vec<Vec<f64>> = (0..12).map(|i| vec![(i * i % 7) as f64, (i % 5) as f64 * 0.5, i as f64 * 0.1]).collect();
        let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
        let r = permdisp(&dm_of(&rows), &GroupLabels::from_ids(&labels), 9, 0).unwrap();
        for g in 0..3 {
            let idx: Vec<usize> = (0..12).filter(|i| i % 3 == g).collect();
            let c: Vec<f64> = (0..3).map(|k| idx.iter().map(|&i| rows[i][k]).sum::<f64>() / 4.0).collect();
            for &i in &idx {
                let d: f64 = (0..3).map(|k| (rows[i][k] - c[k]).powi(2)).sum::<f64>().sqrt();
                assert!((r.centroid_distances[i] - d).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scale_invariant_p_value() {
        let (dm, g) = circles(1.0, 1.6, 9);
        let base = permdisp(&dm, &g, 199, 3).unwrap();
        for c in [0.01, 3.0, 250.0] {
            let r = permdisp(&dm.scaled(c), &g, 199, 3).unwrap();
            assert_eq!(r.test.p_value, base.test.p_value);
            assert!((r.anova_f - base.anova_f).abs() <= 1e-8 * base.anova_f);
            for (x, y) in r.centroid_distances.iter().zip(&base.centroid_distances) {
                assert!((x - c * y).abs() <= 1e-8 * c);
            }
        }
    }

    #[test]
    fn non_euclidean_input_clamps() {
        // groups built so the imaginary axes dominate a point's centroid distance
        let d = DMatrix::from_row_slice(6, 6, &[
            0.0, 1.0, 9.0, 4.0, 4.0, 4.0,
            1.0, 0.0, 1.0, 4.0, 4.0, 4.0,
            9.0, 1.0, 0.0, 4.0, 4.0, 4.0,
            4.0, 4.0, 4.0, 0.0, 2.0, 3.0,
            4.0, 4.0, 4.0, 2.0, 0.0, 2.5,
            4.0, 4.0, 4.0, 3.0, 2.5, 0.0,
        ]);
        let dm = DistanceMatrix::from_matrix(d, "custom").unwrap();
        let r = permdisp(&dm, &GroupLabels::from_ids(&[0, 0, 0, 1, 1, 1]), 99, 0).unwrap();
        assert!(r.centroid_distances.iter().all(|&v| v >= 0.0));
        assert!(r.clamped_count <= 6);
    }

    #[test]
    fn errors() {
        let (dm, _) = circles(1.0, 2.0, 3);
        assert!(permdisp(&dm, &GroupLabels::from_ids(&[0, 0, 0, 0, 0, 1]), 9, 0).is_err());
        // every point at its centroid distance of zero
        let rows = vec![vec![0.0], vec![0.0], vec![1.0], vec![1.0]];
        assert!(matches!(
            permdisp(&dm_of(&rows), &GroupLabels::from_ids(&[0, 0, 1, 1]), 9, 0),
            Err(Error::ZeroResidual)
        ));
    }
}
