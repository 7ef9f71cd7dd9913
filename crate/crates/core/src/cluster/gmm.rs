use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::kmeans::{kmeans_pp, lloyd};
use crate::features::FeatureMatrix;
use crate::rng::stream_rng;
use crate::{Error, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_3;
const MIN_WEIGHT: f64 = 1e-12;
const JITTER_RETRIES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GmmOptions {
    pub seed: u64,
    pub restarts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub reg: f64,
}

impl Default for GmmOptions {
    fn default() -> Self {
        Self { seed: 0, restarts: 5, max_iter: 500, rel_tol: 1e-8, reg: 1e-6 }
    }
}

impl GmmOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }
}

/// Full-covariance Gaussian mixture.
#[derive(Debug, Clone)]
pub struct GmmModel {
    pub k: usize,
    pub weights: Vec<f64>,
    /// k x p
    pub means: DMatrix<f64>,
    pub covariances: Vec<DMatrix<f64>>,
    pub log_likelihood: f64,
    pub bic: f64,
    pub aic: f64,
    pub n_iter: usize,
    pub converged: bool,
    /// Log-likelihood after every E-step of the winning restart.
    pub history: Vec<f64>,
    chol: Vec<Cholesky<f64, Dyn>>,
}

#[derive(Debug, Clone)]
pub struct GmmPrediction {
    /// n x k, rows sum to one.
    pub responsibilities: DMatrix<f64>,
    pub labels: Vec<usize>,
}

impl GmmModel {
    pub fn dim(&self) -> usize {
        self.means.ncols()
    }

    /// Free parameters: k-1 weights, k*p means, k*p(p+1)/2 covariance entries.
    pub fn n_parameters(&self) -> usize {
        let (k, p) = (self.k, self.dim());
        k - 1 + k * p + k * p * (p + 1) / 2
    }

    /// log(w_j) + log N(x | mu_j, Sigma_j) for every component.
    fn log_joint(&self, x: &[f64], out: &mut [f64]) {
        let p = self.dim();
        for (j, slot) in out.iter_mut().enumerate() {
            let diff = DVector::from_fn(p, |d, _| x[d] - self.means[(j, d)]);
            let l = self.chol[j].l_dirty();
            let y = l
                .solve_lower_triangular(&diff)
                .expect("cholesky factor has a positive diagonal");
            let half_logdet: f64 = (0..p).map(|d| l[(d, d)].ln()).sum();
            *slot = self.weights[j].ln() - 0.5 * (p as f64 * LN_2PI + y.norm_squared()) - half_logdet;
        }
    }
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// E-step: responsibilities (row-major n x k) and total log-likelihood.
fn e_step(model: &GmmModel, rows: &[Vec<f64>]) -> (Vec<Vec<f64>>, f64) {
    let k = model.k;
    let per_row: Vec<(Vec<f64>, f64)> = rows
        .par_iter()
        .map(|x| {
            let mut lj = vec![0.0; k];
            model.log_joint(x, &mut lj);
            let lse = log_sum_exp(&lj);
            let mut r: Vec<f64> = lj.iter().map(|v| (v - lse).exp()).collect();
            let s: f64 = r.iter().sum();
            r.iter_mut().for_each(|v| *v /= s);
            (r, lse)
        })
        .collect();
    let ll = per_row.iter().map(|(_, l)| l).sum();
    (per_row.into_iter().map(|(r, _)| r).collect(), ll)
}

/// M-step with ridge `reg * trace(S_j) / p` on each covariance diagonal.
/// `fallback_scale` stands in for `trace(S_j)/p` when a component has no spread.
fn m_step(rows: &[Vec<f64>], resp: &[Vec<f64>], k: usize, reg: f64, fallback_scale: f64) -> Result<GmmModel> {
    let p = rows[0].len();
    let mut nk = vec![0.0; k];
    for r in resp {
        for (a, v) in nk.iter_mut().zip(r) {
            *a += v;
        }
    }
    let total: f64 = nk.iter().sum();
    let weights: Vec<f64> = nk.iter().map(|v| v / total).collect();
    if let Some(j) = weights.iter().position(|&w| w < MIN_WEIGHT) {
        return Err(Error::DegenerateComponent { component: j });
    }

    let mut means = DMatrix::zeros(k, p);
    for (x, r) in rows.iter().zip(resp) {
        for j in 0..k {
            for d in 0..p {
                means[(j, d)] += r[j] * x[d];
            }
        }
    }
    for j in 0..k {
        for d in 0..p {
            means[(j, d)] /= nk[j];
        }
    }

    let mut covariances = Vec::with_capacity(k);
    let mut chol = Vec::with_capacity(k);
    for j in 0..k {
        let mut s = DMatrix::zeros(p, p);
        let mut diff = DVector::zeros(p);
        for (x, r) in rows.iter().zip(resp) {
            let w = r[j];
            if w == 0.0 {
                continue;
            }
            for d in 0..p {
                diff[d] = x[d] - means[(j, d)];
            }
            s.ger(w, &diff, &diff, 1.0);
        }
        s /= nk[j];
        s = 0.5 * (&s + s.transpose());
        let scale = s.trace() / p as f64;
        let base = if scale > 0.0 { scale } else { fallback_scale };

        let mut factor = None;
        for attempt in 0..=JITTER_RETRIES {
            let ridge = reg * base * 10f64.powi(attempt as i32);
            let mut c = s.clone();
            for d in 0..p {
                c[(d, d)] += ridge;
            }
            if let Some(f) = Cholesky::new(c.clone()) {
                if (0..p).all(|d| f.l_dirty()[(d, d)] > 0.0) {
                    factor = Some((c, f));
                    break;
                }
            }
        }
        let (c, f) = factor.ok_or(Error::DegenerateComponent { component: j })?;
        covariances.push(c);
        chol.push(f);
    }

    Ok(GmmModel {
        k,
        weights,
        means,
        covariances,
        log_likelihood: f64::NAN,
        bic: f64::NAN,
        aic: f64::NAN,
        n_iter: 0,
        converged: false,
        history: Vec::new(),
        chol,
    })
}

fn fit_once(rows: &[Vec<f64>], k: usize, opts: &GmmOptions, restart: usize, fallback_scale: f64) -> Result<GmmModel> {
    let mut rng = stream_rng(opts.seed, restart as u64);
    let init = lloyd(rows, kmeans_pp(rows, k, &mut rng));
    let hard: Vec<Vec<f64>> = init
        .labels
        .iter()
        .map(|&l| (0..k).map(|j| if j == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut model = m_step(rows, &hard, k, opts.reg, fallback_scale)?;

    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut iter = 0;
    loop {
        let (resp, ll) = e_step(&model, rows);
        if !ll.is_finite() {
            return Err(Error::NonFinite("mixture log-likelihood".into()));
        }
        if let Some(&prev) = history.last() {
            if ((ll - prev) / ll.abs().max(f64::MIN_POSITIVE)).abs() < opts.rel_tol {
                converged = true;
            }
        }
        history.push(ll);
        if converged || iter >= opts.max_iter {
            break;
        }
        model = m_step(rows, &resp, k, opts.reg, fallback_scale)?;
        iter += 1;
    }

    let n = rows.len() as f64;
    let ll = *history.last().expect("at least one E-step");
    let m = model.n_parameters() as f64;
    model.log_likelihood = ll;
    model.bic = -2.0 * ll + m * n.ln();
    model.aic = -2.0 * ll + 2.0 * m;
    model.n_iter = iter;
    model.converged = converged;
    model.history = history;
    Ok(model)
}

/// EM for a full-covariance mixture; best log-likelihood over `opts.restarts`
/// k-means++/Lloyd initializations.
pub fn gmm_fit(fm: &FeatureMatrix, k: usize, opts: &GmmOptions) -> Result<GmmModel> {
    let rows = fm.rows();
    let n = rows.len();
    if k == 0 {
        return Err(Error::invalid("k must be at least 1"));
    }
    if k > n {
        return Err(Error::KTooLarge { k, n });
    }
    let p = fm.ncols();
    let fallback_scale = {
        let total: f64 = (0..p)
            .map(|j| {
                let col = fm.column(j);
                let mean = col.iter().sum::<f64>() / n as f64;
                col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64
            })
            .sum();
        if total > 0.0 { total / p as f64 } else { 1.0 }
    };

    let fits: Vec<Result<GmmModel>> = (0..opts.restarts.max(1))
        .into_par_iter()
        .map(|r| fit_once(&rows, k, opts, r, fallback_scale))
        .collect();

    let mut best: Option<GmmModel> = None;
    let mut first_err = None;
    for fit in fits {
        match fit {
            Ok(m) => {
                if best.as_ref().is_none_or(|b| m.log_likelihood > b.log_likelihood) {
                    best = Some(m);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.expect("some restart ran"))
}

pub fn gmm_predict(model: &GmmModel, fm: &FeatureMatrix) -> Result<GmmPrediction> {
    if fm.ncols() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: fm.ncols() });
    }
    let (resp, _) = e_step(model, &fm.rows());
    let labels = resp
        .iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (j, &v)| if v > best.1 { (j, v) } else { best })
                .0
        })
        .collect();
    let responsibilities = DMatrix::from_fn(resp.len(), model.k, |i, j| resp[i][j]);
    Ok(GmmPrediction { responsibilities, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::gaussian_blobs;
    use rand::Rng;

    #[test]
    fn single_component_closed_form() {
        let (fm, _) = gaussian_blobs(&[vec![1.0, -2.0, 0.5]], 40, 1.3, 4);
        let model = gmm_fit(&fm, 1, &GmmOptions::with_seed(1)).unwrap();
        assert_eq!(model.weights, vec![1.0]);
        let rows = fm.rows();
        let n = rows.len() as f64;
        let mean: Vec<f64> = (0..3).map(|d| rows.iter().map(|r| r[d]).sum::<f64>() / n).collect();
        let mut s = DMatrix::zeros(3, 3);
        for r in &rows {
            for a in 0..3 {
                for b in 0..3 {
                    s[(a, b)] += (r[a] - mean[a]) * (r[b] - mean[b]) / n;
                }
            }
        }
        let ridge = 1e-6 * s.trace() / 3.0;
        for d in 0..3 {
            assert!((model.means[(0, d)] - mean[d]).abs() < 1e-12);
            s[(d, d)] += ridge;
        }
        assert!((&model.covariances[0] - &s).amax() < 1e-12);
        let pred = gmm_predict(&model, &fm).unwrap();
        assert!(pred.responsibilities.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn separated_blobs_recovered() {
        let (fm, truth) = gaussian_blobs(&[vec![0.0, 0.0], vec![10.0, 10.0]], 40, 1.0, 8);
        let model = gmm_fit(&fm, 2, &GmmOptions::with_seed(3)).unwrap();
        let pred = gmm_predict(&model, &fm).unwrap();
        let first = pred.labels[0];
        for (l, t) in pred.labels.iter().zip(&truth) {
            assert_eq!(*l == first, *t == truth[0]);
        }
        let w: f64 = model.weights.iter().sum();
        assert!((w - 1.0).abs() <= 1e-12);
        assert!(model.converged);
        // a point at component 0's mean belongs to component 0
        let at_mean = FeatureMatrix::from_rows(&[vec![model.means[(0, 0)], model.means[(0, 1)]]]).unwrap();
        assert_eq!(gmm_predict(&model, &at_mean).unwrap().labels, vec![0]);
    }

    #[test]
    fn em_is_monotone() {
        for seed in 0..50u64 {
            let k = 2 + (seed % 2) as usize;
            let p = if seed % 4 < 2 { 2 } else { 6 };
            let mut rng = stream_rng(seed, 7);
            let centers: Vec<Vec<f64>> = (0..k).map(|_| (0..p).map(|_| rng.random_range(-3.0..3.0)).collect()).collect();
            let (fm, _) = gaussian_blobs(&centers, 25, 1.0, seed);
            let model = gmm_fit(&fm, k, &GmmOptions::with_seed(seed)).unwrap();
            for w in model.history.windows(2) {
                assert!(w[1] - w[0] >= -1e-8, "seed {seed}: {} -> {}", w[0], w[1]);
            }
        }
    }

    /// Responsibilities from explicit Gaussian densities.
    #[test]
    fn responsibilities_match_density_ratio() {
        let (fm, _) = gaussian_blobs(&[vec![0.0, 0.0], vec![2.0, 1.0]], 30, 1.0, 12);
        let model = gmm_fit(&fm, 2, &GmmOptions::with_seed(2)).unwrap();
        let mut rng = stream_rng(77, 0);
        let pts: Vec<Vec<f64>> = (0..20).map(|_| vec![rng.random_range(-2.0..4.0), rng.random_range(-2.0..3.0)]).collect();
        let pred = gmm_predict(&model, &FeatureMatrix::from_rows(&pts).unwrap()).unwrap();
        for (i, x) in pts.iter().enumerate() {
            let dens: Vec<f64> = (0..2)
                .map(|j| {
                    let c = &model.covariances[j];
                    let det = c[(0, 0)] * c[(1, 1)] - c[(0, 1)] * c[(1, 0)];
                    let dx = x[0] - model.means[(j, 0)];
                    let dy = x[1] - model.means[(j, 1)];
                    // inverse of a 2x2
                    let q = (c[(1, 1)] * dx * dx - 2.0 * c[(0, 1)] * dx * dy + c[(0, 0)] * dy * dy) / det;
                    model.weights[j] * (-0.5 * q).exp() / (2.0 * std::f64::consts::PI * det.sqrt())
                })
                .collect();
            let total = dens[0] + dens[1];
            for j in 0..2 {
                assert!((pred.responsibilities[(i, j)] - dens[j] / total).abs() <= 1e-10);
            }
            let row_sum: f64 = pred.responsibilities.row(i).sum();
            assert!((row_sum - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn information_criteria() {
        let (fm, _) = gaussian_blobs(&[vec![0.0, 0.0, 0.0]], 20, 1.0, 1);
        let model = gmm_fit(&fm, 2, &GmmOptions::with_seed(0)).unwrap();
        let m = (1 + 2 * 3 + 2 * 6) as f64;
        assert_eq!(model.n_parameters(), 19);
        assert!((model.bic - (-2.0 * model.log_likelihood + m * 20f64.ln())).abs() < 1e-9);
        assert!((model.aic - (-2.0 * model.log_likelihood + 2.0 * m)).abs() < 1e-9);
    }

    #[test]
    fn errors() {
        let (fm, _) = gaussian_blobs(&[vec![0.0]], 3, 1.0, 1);
        assert!(matches!(gmm_fit(&fm, 4, &GmmOptions::default()), Err(Error::KTooLarge { .. })));
        let model = gmm_fit(&fm, 1, &GmmOptions::default()).unwrap();
        let wrong = FeatureMatrix::from_rows(&[vec![0.0, 1.0]]).unwrap();
        assert!(matches!(gmm_predict(&model, &wrong), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let (fm, _) = gaussian_blobs(&[vec![0.0, 0.0], vec![3.0, 0.0], vec![0.0, 3.0]], 20, 1.0, 5);
        let a = gmm_fit(&fm, 3, &GmmOptions::with_seed(9)).unwrap();
        let b = gmm_fit(&fm, 3, &GmmOptions::with_seed(9)).unwrap();
        assert_eq!(a.history, b.history);
        assert_eq!(a.means, b.means);
    }
}
