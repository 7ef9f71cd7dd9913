//! Clustering: k-means (WSS engine and EM initializer), Gaussian mixtures fit
//! by EM, silhouette widths, and cluster-count selection.

mod gmm;
mod kmeans;
mod selection;
mod silhouette;

pub use gmm::{gmm_fit, gmm_predict, GmmModel, GmmOptions, GmmPrediction};
pub use kmeans::{kmeans_fit, KMeansFit};
pub use selection::{recommend_k, select_k, wss_curve, ClusterSelection, Knee, SelectionOptions, WssCurve};
pub use silhouette::{silhouette_widths, Silhouette};

pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
