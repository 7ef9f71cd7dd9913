use serde::{Deserialize, Serialize};

use super::gmm::{gmm_fit, GmmOptions};
use super::kmeans::{kmeans_rows, KMeansFit};
use super::silhouette::silhouette_widths;
use crate::distance::DistanceMatrix;
use crate::features::FeatureMatrix;
use crate::rng::derive_seed;
use crate::{Error, Result};

/// Selection curves over k = 1..=k_max.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSelection {
    pub k_values: Vec<usize>,
    pub wss: Vec<f64>,
    /// `None` at k = 1, where the silhouette is undefined.
    pub avg_silhouette: Vec<Option<f64>>,
    pub bic: Vec<Option<f64>>,
    pub aic: Vec<Option<f64>>,
    pub recommended_k: usize,
    pub low_confidence: bool,
    pub method: String,
    #[serde(skip)]
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct WssCurve {
    pub k_values: Vec<usize>,
    pub wss: Vec<f64>,
    pub fits: Vec<KMeansFit>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Knee {
    pub k: usize,
    /// Set when no point lies below the chord, i.e. the curve has no elbow.
    pub low_confidence: bool,
}

/// WSS for k = 1..=k_max; k-means for each k is seeded from `(seed, k)`.
pub fn wss_curve(fm: &FeatureMatrix, k_max: usize, seed: u64, restarts: usize) -> Result<WssCurve> {
    let n = fm.nrows();
    if k_max == 0 {
        return Err(Error::invalid("k_max must be at least 1"));
    }
    if k_max > n {
        return Err(Error::KTooLarge { k: k_max, n });
    }
    let rows = fm.rows();
    let fits = (1..=k_max)
        .map(|k| kmeans_rows(&rows, k, derive_seed(seed, &[k as u64]), restarts))
        .collect::<Result<Vec<_>>>()?;
    Ok(WssCurve {
        k_values: (1..=k_max).collect(),
        wss: fits.iter().map(|f| f.wss).collect(),
        fits,
    })
}

/// Knee of a decreasing curve: the interior point farthest below the chord
/// joining the first and last points. Perpendicular distance to a fixed line
/// is proportional to the vertical gap, so axis scaling does not matter.
pub fn recommend_k(k_values: &[usize], wss: &[f64]) -> Result<Knee> {
    let m = k_values.len();
    if m < 3 || wss.len() != m {
        return Err(Error::TooFewPoints { needed: 3, got: m.min(wss.len()) });
    }
    let (x0, y0) = (k_values[0] as f64, wss[0]);
    let (x1, y1) = (k_values[m - 1] as f64, wss[m - 1]);
    let slope = (y1 - y0) / (x1 - x0);
    let mut best: Option<(usize, f64)> = None;
    for i in 1..m - 1 {
        let chord = y0 + slope * (k_values[i] as f64 - x0);
        let gap = chord - wss[i];
        if best.is_none_or(|(_, g)| gap > g) {
            best = Some((i, gap));
        }
    }
    let (idx, gap) = best.expect("m >= 3");
    let scale = y0.abs().max(y1.abs()).max(f64::MIN_POSITIVE);
    if gap <= 1e-9 * scale {
        Ok(Knee { k: k_values[1], low_confidence: true })
    } else {
        Ok(Knee { k: k_values[idx], low_confidence: false })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub k_max: usize,
    pub seed: u64,
    pub kmeans_restarts: usize,
    /// Mixture fits for the BIC/AIC curves; `None` skips them.
    pub gmm: Option<GmmOptions>,
}

/// WSS, silhouette and information-criterion curves. The WSS knee decides;
/// the other curves are reported alongside.
pub fn select_k(fm: &FeatureMatrix, dm: &DistanceMatrix, opts: &SelectionOptions) -> Result<ClusterSelection> {
    let curve = wss_curve(fm, opts.k_max, opts.seed, opts.kmeans_restarts)?;
    let knee = recommend_k(&curve.k_values, &curve.wss)?;
    let mut warnings = Vec::new();
    if knee.low_confidence {
        warnings.push("WSS curve has no elbow; recommended k is low-confidence".to_string());
    }

    let avg_silhouette = curve
        .fits
        .iter()
        .map(|fit| match silhouette_widths(dm, &fit.labels) {
            Ok(s) => Some(s.average),
            Err(_) => None,
        })
        .collect();

    let mut bic = Vec::with_capacity(curve.k_values.len());
    let mut aic = Vec::with_capacity(curve.k_values.len());
    for &k in &curve.k_values {
        match opts.gmm {
            None => {
                bic.push(None);
                aic.push(None);
            }
            Some(g) => {
                let g = GmmOptions { seed: derive_seed(g.seed, &[k as u64]), ..g };
                match gmm_fit(fm, k, &g) {
                    Ok(model) => {
                        bic.push(Some(model.bic));
                        aic.push(Some(model.aic));
                    }
                    Err(e) => {
                        warnings.push(format!("mixture fit for k = {k} failed: {e}"));
                        bic.push(None);
                        aic.push(None);
                    }
                }
            }
        }
    }

    Ok(ClusterSelection {
        k_values: curve.k_values,
        wss: curve.wss,
        avg_silhouette,
        bic,
        aic,
        recommended_k: knee.k,
        low_confidence: knee.low_confidence,
        method: "wss-knee".to_string(),
        warnings,
    })
}
