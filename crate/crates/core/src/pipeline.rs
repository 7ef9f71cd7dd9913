//! End-to-end diagnosis pipeline.
//!
//! Stages run in a fixed order and each randomized stage draws its seed from
//! the configured seed and a stage tag. A failing stage stops the run; the
//! report keeps every section computed so far plus an error section.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::{gmm_fit, gmm_predict, select_k, ClusterSelection, GmmOptions, SelectionOptions};
use crate::datagen::constants::default_feature_config;
use crate::distance::{distance_matrix, Metric};
use crate::features::{
    build_feature_matrix, load_observations, normalize_features, BandSpec, FeatureConfig, Normalization, Observation,
    Taper,
};
use crate::hypotest::{
    bartlett_test, permanova, permdisp, shapiro_wilk, GroupLabels, PairwiseTable, TestRecord,
};
use crate::ordination::{pca, pcoa, scree, Scree};
use crate::rng::{derive_seed, stream_rng};
use crate::{Error, FeatureMatrix, Result};

const STAGE_SELECT: u64 = 1;
const STAGE_CLUSTER: u64 = 2;
const STAGE_SAMPLE: u64 = 3;
const STAGE_PERMANOVA: u64 = 4;
const STAGE_PERMDISP: u64 = 5;

/// Number of highest-variance features that get their own normality line.
const TOP_VARIANCE_FEATURES: usize = 5;

fn default_bands() -> Vec<BandSpec> {
    default_feature_config().bands
}
fn default_k_max() -> usize {
    10
}
fn default_permutations() -> usize {
    999
}
fn default_sample_per_cluster() -> usize {
    30
}
fn default_restarts() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Waveform manifest; relative file paths resolve against its directory.
    #[serde(default)]
    pub input: Option<PathBuf>,
    #[serde(default)]
    pub window_len: Option<usize>,
    #[serde(default)]
    pub sampling_rate_hz: Option<f64>,
    #[serde(default = "default_bands")]
    pub bands: Vec<BandSpec>,
    #[serde(default)]
    pub taper: Taper,
    #[serde(default)]
    pub normalization: Normalization,
    #[serde(default)]
    pub metric: Metric,
    /// Fixed cluster count; the selection curves are still reported.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default = "default_k_max")]
    pub k_max: usize,
    #[serde(default = "default_permutations")]
    pub permutations: usize,
    pub seed: u64,
    #[serde(default = "default_sample_per_cluster")]
    pub sample_per_cluster: usize,
    #[serde(default = "default_restarts")]
    pub kmeans_restarts: usize,
    #[serde(default)]
    pub gmm: GmmSettings,
    /// Fit mixtures for every k on the selection curve to report BIC/AIC.
    #[serde(default)]
    pub information_criteria: bool,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
}

/// Mixture options without the seed, which comes from the pipeline seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GmmSettings {
    pub restarts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub reg: f64,
}

impl Default for GmmSettings {
    fn default() -> Self {
        let d = GmmOptions::default();
        Self { restarts: d.restarts, max_iter: d.max_iter, rel_tol: d.rel_tol, reg: d.reg }
    }
}

impl GmmSettings {
    fn with_seed(self, seed: u64) -> GmmOptions {
        GmmOptions { seed, restarts: self.restarts, max_iter: self.max_iter, rel_tol: self.rel_tol, reg: self.reg }
    }
}

impl PipelineConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            input: None,
            window_len: None,
            sampling_rate_hz: None,
            bands: default_bands(),
            taper: Taper::default(),
            normalization: Normalization::default(),
            metric: Metric::default(),
            k: None,
            k_max: default_k_max(),
            permutations: default_permutations(),
            seed,
            sample_per_cluster: default_sample_per_cluster(),
            kmeans_restarts: default_restarts(),
            gmm: GmmSettings::default(),
            information_criteria: false,
            output_dir: None,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.permutations == 0 {
            return bad("permutations must be at least 1".into());
        }
        if self.k_max < 3 {
            return bad(format!("k_max must be at least 3, got {}", self.k_max));
        }
        if let Some(k) = self.k {
            if k < 2 {
                return bad(format!("k must be at least 2, got {k}"));
            }
        }
        if self.sample_per_cluster < 2 {
            return bad(format!("sample_per_cluster must be at least 2, got {}", self.sample_per_cluster));
        }
        if self.kmeans_restarts == 0 || self.gmm.restarts == 0 {
            return bad("restart counts must be at least 1".into());
        }
        if let Some(fs) = self.sampling_rate_hz {
            if !(fs > 0.0 && fs.is_finite()) {
                return bad(format!("sampling_rate_hz must be positive, got {fs}"));
            }
        }
        for b in &self.bands {
            if !(b.center_hz.is_finite() && b.halfwidth_hz.is_finite() && b.halfwidth_hz >= 0.0) {
                return bad(format!("bad band {} ± {} Hz", b.center_hz, b.halfwidth_hz));
            }
        }
        Ok(())
    }

    pub fn feature_config(&self) -> FeatureConfig {
        FeatureConfig { bands: self.bands.clone(), taper: self.taper }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub seed: u64,
    pub permutations: usize,
    pub metric: Metric,
    pub normalization: Normalization,
    pub sample_per_cluster: usize,
    pub k_max: usize,
    pub fixed_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSection {
    pub feature_names: Vec<String>,
    pub sample_ids: Vec<String>,
    pub timestamps: Vec<i64>,
    /// Normalized values, one row per observation.
    pub normalized: Vec<Vec<f64>>,
    pub constant_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assignment {
    pub sample_id: String,
    pub timestamp: i64,
    /// 1-based, numbered by first appearance.
    pub cluster: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSection {
    pub k: usize,
    pub assignments: Vec<Assignment>,
    pub cluster_sizes: Vec<usize>,
    /// Mixture weights in cluster order.
    pub weights: Vec<f64>,
    pub log_likelihood: f64,
    pub bic: f64,
    pub converged: bool,
    pub seed: u64,
    /// Scores on the first (up to three) principal components of the
    /// normalized features, for cluster plots.
    pub pc_scores: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingSection {
    pub sample_per_cluster: usize,
    pub seed: u64,
    /// Row indices into the feature matrix, ascending.
    pub indices: Vec<usize>,
    pub sample_ids: Vec<String>,
    pub clusters: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureNormality {
    pub feature: String,
    pub variance: f64,
    pub w: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalitySection {
    /// Shapiro-Wilk on first-principal-component scores of the sample.
    pub pc1: TestRecord,
    pub n: usize,
    pub features: Vec<FeatureNormality>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PermanovaSection {
    pub ss_total: f64,
    pub ss_among: f64,
    pub ss_within: f64,
    pub test: TestRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionSection {
    pub groups: Vec<String>,
    pub group_mean_distances: Vec<f64>,
    /// Per sampled observation, aligned with `sampling.sample_ids`.
    pub centroid_distances: Vec<f64>,
    pub clamped_count: usize,
    pub test: TestRecord,
    pub pairwise: PairwiseTable,
    /// First two principal coordinates of the sample.
    pub pcoa_coords: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrdinationSection {
    pub pca: Scree,
    pub pcoa: Scree,
    pub pcoa_imaginary_axes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageError {
    pub stage: String,
    /// `config`, `data` or `numeric`.
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosisReport {
    pub run: RunInfo,
    pub features: Option<FeatureSection>,
    pub selection: Option<ClusterSelection>,
    pub clustering: Option<ClusteringSection>,
    pub sampling: Option<SamplingSection>,
    pub normality: Option<NormalitySection>,
    pub bartlett: Option<TestRecord>,
    pub permanova: Option<PermanovaSection>,
    pub dispersion: Option<DispersionSection>,
    pub ordination: Option<OrdinationSection>,
    pub warnings: Vec<String>,
    pub error: Option<StageError>,
}

impl DiagnosisReport {
    fn empty(cfg: &PipelineConfig) -> Self {
        Self {
            run: RunInfo {
                seed: cfg.seed,
                permutations: cfg.permutations,
                metric: cfg.metric,
                normalization: cfg.normalization,
                sample_per_cluster: cfg.sample_per_cluster,
                k_max: cfg.k_max,
                fixed_k: cfg.k,
            },
            features: None,
            selection: None,
            clustering: None,
            sampling: None,
            normality: None,
            bartlett: None,
            permanova: None,
            dispersion: None,
            ordination: None,
            warnings: Vec::new(),
            error: None,
        }
    }

    fn warn(&mut self, w: impl Into<String>) {
        let w = w.into();
        if !self.warnings.contains(&w) {
            self.warnings.push(w);
        }
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The recorded stage failure as an error, if any.
    pub fn failure(&self) -> Option<Error> {
        self.error.as_ref().map(|e| {
            let msg = format!("stage `{}` failed: {}", e.stage, e.message);
            match e.kind.as_str() {
                "config" => Error::Config(msg),
                "numeric" => Error::NonFinite(msg),
                _ => Error::InvalidInput(msg),
            }
        })
    }
}

fn kind_name(e: &Error) -> &'static str {
    match e.kind() {
        crate::ErrorKind::Config => "config",
        crate::ErrorKind::Data => "data",
        crate::ErrorKind::Numeric => "numeric",
    }
}

/// Load the configured manifest and run every stage.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<DiagnosisReport> {
    cfg.validate()?;
    let input = cfg.input.as_ref().ok_or_else(|| Error::Config("no input manifest configured".into()))?;
    let observations = load_observations(input, cfg.sampling_rate_hz, cfg.window_len)?;
    run_pipeline_on(&observations, cfg)
}

/// Run every stage on observations already in memory.
pub fn run_pipeline_on(observations: &[Observation], cfg: &PipelineConfig) -> Result<DiagnosisReport> {
    cfg.validate()?;
    let mut report = DiagnosisReport::empty(cfg);
    if let Err((stage, e)) = run_stages(observations, cfg, &mut report) {
        report.error = Some(StageError { stage: stage.into(), kind: kind_name(&e).into(), message: e.to_string() });
    }
    Ok(report)
}

/// Write `report.json`, the pairwise table and the plots under `dir`.
/// Plots whose report section is absent are skipped.
pub fn write_outputs(report: &DiagnosisReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let json = dir.join("report.json");
    std::fs::write(&json, report.to_json()?)?;
    let mut written = vec![json];
    if let Some(d) = &report.dispersion {
        let path = dir.join("pairwise.csv");
        crate::hypotest::write_pairwise_csv(&path, &d.pairwise)?;
        written.push(path);
    }
    written.extend(crate::plot::emit_plots(report, &dir.join("plots"))?.written);
    Ok(written)
}

type StageResult = std::result::Result<(), (&'static str, Error)>;

fn tag<T>(stage: &'static str, r: Result<T>) -> std::result::Result<T, (&'static str, Error)> {
    r.map_err(|e| (stage, e))
}

/// Features, normalization and the selection curves. Exposed so the
/// cluster-count choice can be exercised on its own.
pub fn selection_stage(observations: &[Observation], cfg: &PipelineConfig) -> Result<(FeatureMatrix, ClusterSelection)> {
    let fx = build_feature_matrix(observations, &cfg.feature_config())?;
    let z = normalize_features(&fx.matrix, cfg.normalization)?.matrix;
    let dm = distance_matrix(&z, cfg.metric)?;
    let sel = select_k(&z, &dm, &selection_options(cfg, z.nrows()))?;
    Ok((z, sel))
}

fn selection_options(cfg: &PipelineConfig, n: usize) -> SelectionOptions {
    let seed = derive_seed(cfg.seed, &[STAGE_SELECT]);
    SelectionOptions {
        k_max: cfg.k_max.min(n),
        seed,
        kmeans_restarts: cfg.kmeans_restarts,
        gmm: cfg.information_criteria.then(|| cfg.gmm.with_seed(seed)),
    }
}

/// Renumber labels 1..k by order of first appearance.
fn relabel(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len() + 1;
                map.push((l, to));
                to
            }
        })
        .collect()
}

/// Seeded sample of `size` members per cluster, or the whole cluster when
/// it is smaller. Returns ascending row indices.
fn sample_clusters(clusters: &[usize], k: usize, size: usize, seed: u64, report: &mut DiagnosisReport) -> Vec<usize> {
    use rand::seq::SliceRandom;
    let mut chosen = Vec::new();
    for c in 1..=k {
        let mut members: Vec<usize> = (0..clusters.len()).filter(|&i| clusters[i] == c).collect();
        if members.len() < size {
            report.warn(format!(
                "cluster {c} has {} members, fewer than sample_per_cluster = {size}; using the whole cluster",
                members.len()
            ));
        } else {
            let mut rng = stream_rng(seed, c as u64);
            members.shuffle(&mut rng);
            members.truncate(size);
        }
        chosen.extend(members);
    }
    chosen.sort_unstable();
    chosen
}

fn variance(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0)
}

fn first_columns(m: &nalgebra::DMatrix<f64>, cols: usize) -> Vec<Vec<f64>> {
    let cols = cols.min(m.ncols());
    (0..m.nrows()).map(|i| (0..cols).map(|j| m[(i, j)]).collect()).collect()
}

fn run_stages(observations: &[Observation], cfg: &PipelineConfig, report: &mut DiagnosisReport) -> StageResult {
    let fx = tag("features", build_feature_matrix(observations, &cfg.feature_config()))?;
    for w in &fx.warnings {
        report.warn(w.clone());
    }
    let normalized = tag("normalize", normalize_features(&fx.matrix, cfg.normalization))?;
    for c in &normalized.constant_columns {
        report.warn(format!("feature `{c}` is constant and was set to zero"));
    }
    let z = normalized.matrix;
    report.features = Some(FeatureSection {
        feature_names: z.feature_names().to_vec(),
        sample_ids: z.sample_ids().to_vec(),
        timestamps: fx.timestamps.clone(),
        normalized: z.rows(),
        constant_columns: normalized.constant_columns.clone(),
    });

    let dm_all = tag("select-k", distance_matrix(&z, cfg.metric))?;
    let selection = tag("select-k", select_k(&z, &dm_all, &selection_options(cfg, z.nrows())))?;
    for w in &selection.warnings {
        report.warn(w.clone());
    }
    let k = cfg.k.unwrap_or(selection.recommended_k);
    report.selection = Some(selection);

    let cluster_seed = derive_seed(cfg.seed, &[STAGE_CLUSTER]);
    let model = tag("cluster", gmm_fit(&z, k, &cfg.gmm.with_seed(cluster_seed)))?;
    if !model.converged {
        report.warn(format!("mixture EM for k = {k} stopped at the iteration limit"));
    }
    let pred = tag("cluster", gmm_predict(&model, &z))?;
    let clusters = relabel(&pred.labels);
    let k_found = clusters.iter().copied().max().unwrap_or(0);
    if k_found < k {
        report.warn(format!("mixture with k = {k} left {} component(s) empty", k - k_found));
    }
    // mixture weights follow the 1..k renumbering; empty components drop out
    let mut weights = vec![0.0; k_found];
    for (&raw, &c) in pred.labels.iter().zip(&clusters) {
        weights[c - 1] = model.weights[raw];
    }
    let mut cluster_sizes = vec![0; k_found];
    clusters.iter().for_each(|&c| cluster_sizes[c - 1] += 1);
    let n_pc = 3.min(z.nrows() - 1).min(z.ncols());
    let viz = tag("cluster", pca(&z, n_pc))?;
    report.clustering = Some(ClusteringSection {
        k: k_found,
        assignments: z
            .sample_ids()
            .iter()
            .zip(&fx.timestamps)
            .zip(&clusters)
            .map(|((id, &t), &c)| Assignment { sample_id: id.clone(), timestamp: t, cluster: c })
            .collect(),
        cluster_sizes,
        weights,
        log_likelihood: model.log_likelihood,
        bic: model.bic,
        converged: model.converged,
        seed: cluster_seed,
        pc_scores: first_columns(&viz.coords, n_pc),
    });

    let sample_seed = derive_seed(cfg.seed, &[STAGE_SAMPLE]);
    let indices = sample_clusters(&clusters, k_found, cfg.sample_per_cluster, sample_seed, report);
    let sub = tag("sample", z.select_rows(&indices))?;
    let sub_clusters: Vec<usize> = indices.iter().map(|&i| clusters[i]).collect();
    report.sampling = Some(SamplingSection {
        sample_per_cluster: cfg.sample_per_cluster,
        seed: sample_seed,
        indices: indices.clone(),
        sample_ids: sub.sample_ids().to_vec(),
        clusters: sub_clusters.clone(),
    });
    let groups = GroupLabels::from_ids(&sub_clusters);

    let n_comp = (sub.nrows() - 1).min(sub.ncols());
    let sub_pca = tag("normality", if n_comp == 0 { Err(Error::TooFewSamples { needed: 2, got: sub.nrows() }) } else { pca(&sub, n_comp) })?;
    let pc1: Vec<f64> = sub_pca.coords.column(0).iter().copied().collect();
    let sw = tag("normality", shapiro_wilk(&pc1))?;
    // per-feature lines for the highest raw-variance features
    let raw_sub = tag("normality", fx.matrix.select_rows(&indices))?;
    let mut by_var: Vec<(usize, f64)> = (0..raw_sub.ncols()).map(|j| (j, variance(&raw_sub.column(j)))).collect();
    by_var.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut per_feature = Vec::new();
    for &(j, var) in by_var.iter().take(TOP_VARIANCE_FEATURES) {
        let name = raw_sub.feature_names()[j].clone();
        match shapiro_wilk(&raw_sub.column(j)) {
            Ok(r) => per_feature.push(FeatureNormality { feature: name, variance: var, w: r.w, p_value: r.p_value }),
            Err(e) => report.warn(format!("normality test skipped for `{name}`: {e}")),
        }
    }
    report.normality = Some(NormalitySection {
        pc1: TestRecord::classical("shapiro-wilk", sw.w, Vec::new(), sw.p_value),
        n: sw.n,
        features: per_feature,
    });

    let per_group: Vec<Vec<f64>> = groups.members().iter().map(|m| m.iter().map(|&i| pc1[i]).collect()).collect();
    let bt = tag("bartlett", bartlett_test(&per_group))?;
    report.bartlett = Some(TestRecord::classical("bartlett", bt.k_squared, vec![bt.df as f64], bt.p_value));

    let dm = tag("distance", distance_matrix(&sub, cfg.metric))?;
    let pm = tag("permanova", permanova(&dm, &groups, cfg.permutations, derive_seed(cfg.seed, &[STAGE_PERMANOVA])))?;
    report.permanova = Some(PermanovaSection {
        ss_total: pm.ss_total,
        ss_among: pm.ss_among,
        ss_within: pm.ss_within,
        test: TestRecord::permutational("permanova", vec![pm.df_among as f64, pm.df_within as f64], &pm.test),
    });

    let disp = tag("permdisp", permdisp(&dm, &groups, cfg.permutations, derive_seed(cfg.seed, &[STAGE_PERMDISP])))?;
    let mut disp_test = TestRecord::permutational("permdisp", vec![disp.df_among as f64, disp.df_within as f64], &disp.test);
    if disp.clamped_count > 0 {
        let w = format!("{} squared centroid distance(s) were negative and set to zero", disp.clamped_count);
        disp_test.warnings.push(w.clone());
        report.warn(w);
    }
    let coords = tag("ordination", pcoa(&dm))?;
    if coords.n_imaginary_axes() > 0 {
        report.warn(format!("dissimilarities are non-euclidean: {} negative eigenvalue(s)", coords.n_imaginary_axes()));
    }
    report.dispersion = Some(DispersionSection {
        groups: groups.names().to_vec(),
        group_mean_distances: disp.group_mean_distances,
        centroid_distances: disp.centroid_distances,
        clamped_count: disp.clamped_count,
        test: disp_test,
        pairwise: disp.pairwise,
        pcoa_coords: first_columns(&coords.coords, 2),
    });

    report.ordination = Some(OrdinationSection {
        pca: scree(&sub_pca),
        pcoa: scree(&coords),
        pcoa_imaginary_axes: coords.n_imaginary_axes(),
    });
    Ok(())
}
