//! Unsupervised fault diagnosis for rotating machinery.
//!
//! The crate covers the whole workflow: vibration feature extraction,
//! Gaussian-mixture clustering with cluster-count selection, PCA/PCoA
//! ordination, and permutation-based validation of the resulting clusters
//! (PERMANOVA, multivariate dispersion homogeneity, pairwise tables) next to
//! the classical Shapiro-Wilk and Bartlett assumption checks.
//!
//! Every randomized routine takes an explicit seed; given the same inputs and
//! seed the results are bit-identical regardless of thread count.

pub mod cluster;
pub mod datagen;
pub mod distance;
pub mod error;
pub mod features;
pub mod hypotest;
pub mod ordination;
pub mod pipeline;
pub mod plot;
pub mod rng;

pub use error::{Error, ErrorKind, Result};
pub use features::FeatureMatrix;
pub use distance::DistanceMatrix;
