//! PCA for visualization and PCoA for dispersion analysis.

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::distance::{gower_center, DistanceMatrix};
use crate::features::FeatureMatrix;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrdinationKind {
    Pca,
    Pcoa,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrdinationResult {
    pub kind: OrdinationKind,
    /// Descending. For PCA all `min(n, p)` variances; for PCoA the retained
    /// axes, positive ones first, then the negative (imaginary) ones.
    pub eigenvalues: Vec<f64>,
    /// n x m. PCoA columns satisfy `sum(coords[., j]^2) = eigenvalue_j`.
    pub coords: DMatrix<f64>,
    /// Share of the positive eigenvalue total, one entry per positive axis.
    pub variance_fraction: Vec<f64>,
    /// PCoA only: n x m' coordinates of the negative-eigenvalue axes,
    /// scaled by `sqrt(-eigenvalue)`.
    pub imaginary_coords: Option<DMatrix<f64>>,
    /// PCA only: p x m loadings.
    pub loadings: Option<DMatrix<f64>>,
    pub sample_ids: Vec<String>,
}

impl OrdinationResult {
    pub fn n_real_axes(&self) -> usize {
        self.coords.ncols()
    }

    pub fn n_imaginary_axes(&self) -> usize {
        self.imaginary_coords.as_ref().map_or(0, |m| m.ncols())
    }
}

/// Flip `v` so its largest-magnitude entry (first on ties) is positive.
fn sign_fix(v: &mut [f64]) {
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[idx].abs() {
            idx = i;
        }
    }
    if v[idx] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn positive_fractions(eigenvalues: &[f64]) -> Vec<f64> {
    let total: f64 = eigenvalues.iter().filter(|&&v| v > 0.0).sum();
    eigenvalues
        .iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v / total)
        .collect()
}

/// PCA through the SVD of the column-centered data.
pub fn pca(fm: &FeatureMatrix, n_components: usize) -> Result<OrdinationResult> {
    let (n, p) = (fm.nrows(), fm.ncols());
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let max_comp = (n - 1).min(p);
    if n_components == 0 || n_components > max_comp {
        return Err(Error::invalid(format!("n_components must be in 1..={max_comp}, got {n_components}")));
    }
    let mut x = fm.values().clone();
    for mut col in x.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }

    let svd = x.clone().svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]).then(a.cmp(&b)));

    let eigenvalues: Vec<f64> = order
        .iter()
        .map(|&i| (svd.singular_values[i].powi(2) / (n - 1) as f64).max(0.0))
        .collect();

    let mut loadings = DMatrix::zeros(p, n_components);
    for (c, &i) in order.iter().take(n_components).enumerate() {
        let mut v: Vec<f64> = v_t.row(i).iter().copied().collect();
        sign_fix(&mut v);
        for (d, val) in v.into_iter().enumerate() {
            loadings[(d, c)] = val;
        }
    }
    let coords = &x * &loadings;
    let variance_fraction = positive_fractions(&eigenvalues);

    Ok(OrdinationResult {
        kind: OrdinationKind::Pca,
        eigenvalues,
        coords,
        variance_fraction,
        imaginary_coords: None,
        loadings: Some(loadings),
        sample_ids: fm.sample_ids().to_vec(),
    })
}

/// Principal coordinates of the Gower-centered matrix. Axes with
/// `|lambda| <= 1e-9 * max|lambda|` are dropped; negative ones are kept as
/// imaginary coordinates.
pub fn pcoa(dm: &DistanceMatrix) -> Result<OrdinationResult> {
    let n = dm.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    let g = gower_center(dm);
    let eig = SymmetricEigen::new(g);
    let max_abs = eig.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tau = 1e-9 * max_abs;

    let mut order: Vec<usize> = (0..n).filter(|&i| eig.eigenvalues[i].abs() > tau).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let axis = |i: usize| -> Vec<f64> {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        sign_fix(&mut v);
        let s = eig.eigenvalues[i].abs().sqrt();
        v.iter_mut().for_each(|x| *x *= s);
        v
    };

    let real: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    let imag: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i] < 0.0).collect();
    let build = |axes: &[usize]| {
        let cols: Vec<Vec<f64>> = axes.iter().map(|&i| axis(i)).collect();
        DMatrix::from_fn(n, axes.len(), |r, c| cols[c][r])
    };
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();

    Ok(OrdinationResult {
        kind: OrdinationKind::Pcoa,
        variance_fraction: positive_fractions(&eigenvalues),
        eigenvalues,
        coords: build(&real),
        imaginary_coords: if imag.is_empty() { None } else { Some(build(&imag)) },
        loadings: None,
        sample_ids: dm.sample_ids().to_vec(),
    })
}

/// Variance fractions aligned with `eigenvalues`; negative axes are excluded
/// (`None`) and listed in `negative_axes`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scree {
    pub eigenvalues: Vec<f64>,
    pub fractions: Vec<Option<f64>>,
    pub negative_axes: Vec<usize>,
}

pub fn scree(ord: &OrdinationResult) -> Scree {
    let total: f64 = ord.eigenvalues.iter().filter(|&&v| v > 0.0).sum();
    let fractions = ord
        .eigenvalues
        .iter()
        .map(|&v| {
            if v < 0.0 {
                None
            } else if total > 0.0 {
                Some(v / total)
            } else {
                Some(0.0)
            }
        })
        .collect();
    let negative_axes = ord
        .eigenvalues
        .iter()
        .enumerate()
        .filter(|(_, &v)| v < 0.0)
        .map(|(i, _)| i)
        .collect();
    Scree { eigenvalues: ord.eigenvalues.clone(), fractions, negative_axes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distance::{distance_matrix, Metric};
    use rand::Rng;

    fn random_fm(seed: u64, n: usize, p: usize) -> FeatureMatrix {
        let mut rng = crate::rng::stream_rng(seed, 3);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        FeatureMatrix::from_rows(&rows).unwrap()
    }

    fn bare(kind: OrdinationKind, eigenvalues: Vec<f64>) -> OrdinationResult {
        OrdinationResult {
            kind,
            variance_fraction: positive_fractions(&eigenvalues),
            eigenvalues,
            coords: DMatrix::zeros(0, 0),
            imaginary_coords: None,
            loadings: None,
            sample_ids: vec![],
        }
    }

    #[test]
    fn rank_one_data() {
        let rows: Vec<Vec<f64>> = (1..=5).map(|t| vec![t as f64, 2.0 * t as f64]).collect();
        let fm = FeatureMatrix::from_rows(&rows).unwrap();
        let ord = pca(&fm, 1).unwrap();
        // column variances 2.5 and 10
        assert!((ord.eigenvalues[0] - 12.5).abs() < 1e-12);
        assert!(ord.eigenvalues[1].abs() < 1e-12);
        assert!((ord.variance_fraction[0] - 1.0).abs() < 1e-12);
        let load = ord.loadings.as_ref().unwrap();
        assert!(load[(1, 0)] > 0.0);
    }

    #[test]
    fn trace_identity_and_reconstruction() {
        let fm = random_fm(1, 30, 6);
        let ord = pca(&fm, 6).unwrap();
        let var_sum: f64 = (0..6)
            .map(|j| {
                let c = fm.column(j);
                let m = c.iter().sum::<f64>() / 30.0;
                c.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 29.0
            })
            .sum();
        let eig_sum: f64 = ord.eigenvalues.iter().sum();
        assert!((eig_sum - var_sum).abs() <= 1e-10 * var_sum);

        let recon = &ord.coords * ord.loadings.as_ref().unwrap().transpose();
        for j in 0..6 {
            let c = fm.column(j);
            let m = c.iter().sum::<f64>() / 30.0;
            for i in 0..30 {
                assert!((recon[(i, j)] - (c[i] - m)).abs() <= 1e-9);
            }
        }
        // scores are mutually orthogonal
        let gram = ord.coords.transpose() * &ord.coords;
        for a in 0..6 {
            for b in 0..a {
                assert!(gram[(a, b)].abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn pca_preconditions() {
        let fm = random_fm(2, 1, 3);
        assert!(matches!(pca(&fm, 1), Err(Error::TooFewSamples { .. })));
        let fm = random_fm(2, 4, 5);
        assert!(pca(&fm, 4).is_err());
        assert!(pca(&fm, 3).is_ok());
    }

    #[test]
    fn scree_examples() {
        let s = scree(&bare(OrdinationKind::Pca, vec![3.0, 1.0]));
        assert_eq!(s.fractions, vec![Some(0.75), Some(0.25)]);
        let s = scree(&bare(OrdinationKind::Pca, vec![5.0, 0.0, 0.0]));
        assert_eq!(s.fractions, vec![Some(1.0), Some(0.0), Some(0.0)]);
        let s = scree(&bare(OrdinationKind::Pcoa, vec![4.0, 2.0, -1.0]));
        assert_eq!(s.fractions, vec![Some(4.0 / 6.0), Some(2.0 / 6.0), None]);
        assert_eq!(s.negative_axes, vec![2]);
        let total: f64 = s.fractions.iter().flatten().sum();
        assert!((total - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn pcoa_triangle() {
        let fm = FeatureMatrix::from_rows(&[vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let dm = distance_matrix(&fm, Metric::Euclidean).unwrap();
        let co = pcoa(&dm).unwrap();
        let pc = pca(&fm, 2).unwrap();
        assert_eq!(co.n_real_axes(), 2);
        assert_eq!(co.n_imaginary_axes(), 0);
        for a in 0..2 {
            assert!((co.eigenvalues[a] - 2.0 * pc.eigenvalues[a]).abs() <= 1e-9 * co.eigenvalues[a]);
        }
        for i in 0..3 {
            for j in 0..3 {
                let d: f64 = (0..2).map(|a| (co.coords[(i, a)] - co.coords[(j, a)]).powi(2)).sum::<f64>().sqrt();
                assert!((d - dm.get(i, j)).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn pcoa_two_points_and_zero() {
        let dm = DistanceMatrix::from_matrix(DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 2.0, 0.0]), "x").unwrap();
        let co = pcoa(&dm).unwrap();
        assert_eq!(co.eigenvalues.len(), 1);
        assert!((co.eigenvalues[0] - 2.0).abs() < 1e-12);
        let mut c: Vec<f64> = co.coords.column(0).iter().copied().collect();
        c.sort_by(f64::total_cmp);
        assert!((c[0] + 1.0).abs() < 1e-12 && (c[1] - 1.0).abs() < 1e-12);

        let zero = DistanceMatrix::from_matrix(DMatrix::zeros(4, 4), "x").unwrap();
        let co = pcoa(&zero).unwrap();
        assert!(co.eigenvalues.is_empty());
        assert_eq!(co.n_real_axes(), 0);
    }

    #[test]
    fn non_euclidean_gets_imaginary_axes() {
        // violates the triangle inequality: d(0,2) > d(0,1) + d(1,2)
        let d = DMatrix::from_row_slice(4, 4, &[
            0.0, 1.0, 5.0, 1.0,
            1.0, 0.0, 1.0, 1.0,
            5.0, 1.0, 0.0, 1.0,
            1.0, 1.0, 1.0, 0.0,
        ]);
        let dm = DistanceMatrix::from_matrix(d, "x").unwrap();
        let co = pcoa(&dm).unwrap();
        assert!(co.n_imaginary_axes() > 0);
        let g = gower_center(&dm);
        let im = co.imaginary_coords.as_ref().unwrap();
        for i in 0..4 {
            let re: f64 = co.coords.row(i).iter().map(|v| v * v).sum();
            let ims: f64 = im.row(i).iter().map(|v| v * v).sum();
            assert!((re - ims - g[(i, i)]).abs() <= 1e-8);
        }
        assert!(co.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn deterministic_signs() {
        let fm = random_fm(4, 15, 3);
        let dm = distance_matrix(&fm, Metric::Euclidean).unwrap();
        assert_eq!(pcoa(&dm).unwrap(), pcoa(&dm).unwrap());
        assert_eq!(pca(&fm, 3).unwrap(), pca(&fm, 3).unwrap());
    }

    #[test]
    fn euclidean_pcoa_round_trip() {
        for seed in 0..100 {
            let n = 5 + seed as usize % 20;
            let p = 1 + seed as usize % 6;
            let fm = random_fm(100 + seed, n, p);
            let dm = distance_matrix(&fm, Metric::Euclidean).unwrap();
            let co = pcoa(&dm).unwrap();
            assert_eq!(co.n_imaginary_axes(), 0, "seed {seed}");
            let mut num = 0.0;
            let mut den = 0.0;
            for i in 0..n {
                for j in 0..n {
                    let d: f64 = co.coords.row(i).iter().zip(co.coords.row(j).iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                    num += (d - dm.get(i, j)).powi(2);
                    den += dm.get(i, j).powi(2);
                }
            }
            assert!((num / den).sqrt() <= 1e-8);
        }
    }
}
