use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::sq_dist;
use crate::features::FeatureMatrix;
use crate::rng::stream_rng;
use crate::{Error, Result};

const MAX_LLOYD_ITER: usize = 300;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub labels: Vec<usize>,
    /// k x p
    pub centroids: DMatrix<f64>,
    pub wss: f64,
    /// WSS of the k-means++ seeding before any Lloyd step.
    pub initial_wss: f64,
    pub n_iter: usize,
}

/// k-means++ seeding: first centre uniform, the rest by D^2 sampling.
pub(crate) fn kmeans_pp(rows: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = rows.len();
    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centers = vec![rows[first].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &rows[first])).collect();

    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave target just above the final sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("total > 0"))
        } else {
            // every remaining point coincides with a centre
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[pick] = true;
        centers.push(rows[pick].clone());
        for (i, r) in rows.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(r, &rows[pick]));
        }
    }
    centers
}

fn nearest(row: &[f64], centers: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, center) in centers.iter().enumerate() {
        let d = sq_dist(row, center);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// One Lloyd run from the given centres.
pub(crate) fn lloyd(rows: &[Vec<f64>], mut centers: Vec<Vec<f64>>) -> KMeansFit {
    let n = rows.len();
    let k = centers.len();
    let p = rows[0].len();
    let initial_wss: f64 = rows.iter().map(|r| nearest(r, &centers).1).sum();
    let mut labels = vec![usize::MAX; n];
    let mut n_iter = 0;

    loop {
        let mut changed = false;
        let mut dists = vec![0.0; n];
        for (i, r) in rows.iter().enumerate() {
            let (c, d) = nearest(r, &centers);
            dists[i] = d;
            if labels[i] != c {
                labels[i] = c;
                changed = true;
            }
        }

        // refill empty clusters with the point farthest from its centre
        let mut counts = vec![0usize; k];
        for &l in &labels {
            counts[l] += 1;
        }
        for c in 0..k {
            if counts[c] == 0 {
                let far = (0..n)
                    .filter(|&i| counts[labels[i]] > 1)
                    .max_by(|&a, &b| dists[a].total_cmp(&dists[b]).then(b.cmp(&a)))
                    .expect("k <= n leaves a donor cluster");
                counts[labels[far]] -= 1;
                labels[far] = c;
                counts[c] = 1;
                dists[far] = 0.0;
                changed = true;
            }
        }

        let mut sums = vec![vec![0.0; p]; k];
        for (r, &l) in rows.iter().zip(&labels) {
            for (s, v) in sums[l].iter_mut().zip(r) {
                *s += v;
            }
        }
        for (c, s) in sums.into_iter().enumerate() {
            centers[c] = s.into_iter().map(|v| v / counts[c] as f64).collect();
        }
        n_iter += 1;
        if !changed || n_iter >= MAX_LLOYD_ITER {
            break;
        }
    }

    let wss = rows.iter().zip(&labels).map(|(r, &l)| sq_dist(r, &centers[l])).sum();
    let centroids = DMatrix::from_fn(k, p, |c, j| centers[c][j]);
    KMeansFit { labels, centroids, wss, initial_wss, n_iter }
}

/// Lloyd's algorithm with k-means++ seeding; best of `restarts` runs, restart
/// `r` drawing from stream `r` of `seed`.
pub fn kmeans_fit(fm: &FeatureMatrix, k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    kmeans_rows(&fm.rows(), k, seed, restarts)
}

pub(crate) fn kmeans_rows(rows: &[Vec<f64>], k: usize, seed: u64, restarts: usize) -> Result<KMeansFit> {
    let n = rows.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let restarts = restarts.max(1);
    let fits: Vec<KMeansFit> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            lloyd(rows, kmeans_pp(rows, k, &mut rng))
        })
        .collect();
    // lowest WSS, earliest restart on ties
    Ok(fits
        .into_iter()
        .reduce(|best, f| if f.wss < best.wss { f } else { best })
        .expect("restarts >= 1"))
}
