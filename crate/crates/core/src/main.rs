use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use faultdiag::cluster::{gmm_fit, gmm_predict, select_k, GmmOptions, SelectionOptions};
use faultdiag::datagen::{default_dataset, write_dataset};
use faultdiag::distance::{distance_matrix, DistanceMatrix, Metric};
use faultdiag::features::{
    build_feature_matrix, load_observations, normalize_features, read_feature_csv, write_feature_csv, Normalization,
};
use faultdiag::hypotest::{bartlett_test, permanova, permdisp, shapiro_wilk, GroupLabels, TestRecord};
use faultdiag::ordination::{pca, pcoa};
use faultdiag::pipeline::{run_pipeline, write_outputs, DiagnosisReport, PipelineConfig};
use faultdiag::plot::emit_plots;
use faultdiag::{Error, ErrorKind, FeatureMatrix, Result};

#[derive(Parser)]
#[command(name = "faultdiag", version, about = "Unsupervised vibration fault diagnosis")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step. Required wherever randomness is used.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of permutations for permutation tests.
    #[arg(long, global = true)]
    permutations: Option<usize>,
    /// Dissimilarity metric: euclidean, manhattan or braycurtis.
    #[arg(long, global = true)]
    metric: Option<Metric>,
    /// Pipeline configuration (TOML). Command-line flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output file or directory, depending on the command.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the feature matrix from a waveform manifest.
    Features {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        sampling_rate: Option<f64>,
        #[arg(long)]
        window_len: Option<usize>,
        /// Normalize the columns before writing.
        #[arg(long)]
        normalize: Option<Normalization>,
    },
    /// WSS, silhouette and information-criterion curves with the WSS knee.
    SelectK {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, default_value_t = 10)]
        k_max: usize,
        #[arg(long, default_value_t = 10)]
        restarts: usize,
        /// Also fit mixtures for BIC/AIC.
        #[arg(long)]
        information_criteria: bool,
    },
    /// Fit a Gaussian mixture and write per-sample cluster labels.
    Cluster {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        k: usize,
    },
    /// PCA of a feature matrix or PCoA of its distances.
    Ordinate {
        #[arg(long)]
        features: PathBuf,
        #[arg(long, value_enum, default_value_t = Method::Pca)]
        method: Method,
        /// PCA components to keep (default: all).
        #[arg(long)]
        components: Option<usize>,
    },
    /// Cluster-difference tests.
    #[command(subcommand)]
    Test(TestCommand),
    /// Write a synthetic six-state dataset (waveforms, manifest, labels).
    Datagen {
        #[arg(long, default_value_t = 30)]
        per_state: usize,
    },
    /// Run the full diagnosis pipeline.
    Pipeline {
        /// Waveform manifest; overrides the config's `input`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Skip plot emission.
        #[arg(long)]
        no_plots: bool,
    },
    /// Emit plots from a saved report.
    Plot {
        #[arg(long)]
        report: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Pca,
    Pcoa,
}

#[derive(Args)]
struct GroupedInput {
    /// Feature CSV (`sample_id,<feature>...`).
    #[arg(long)]
    features: PathBuf,
    /// Label CSV (`sample_id,<label>`).
    #[arg(long)]
    labels: PathBuf,
}

#[derive(Subcommand)]
enum TestCommand {
    /// One-way PERMANOVA.
    Permanova(GroupedInput),
    /// Dispersion homogeneity with the pairwise table.
    Permdisp(GroupedInput),
    /// Shapiro-Wilk on one feature column.
    Normality {
        #[arg(long)]
        features: PathBuf,
        #[arg(long)]
        column: String,
    },
    /// Bartlett's test on one feature column across groups.
    Bartlett {
        #[command(flatten)]
        input: GroupedInput,
        #[arg(long)]
        column: String,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e.kind() {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numeric => 4,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn require_seed(g: &Global) -> Result<u64> {
    g.seed.ok_or_else(|| Error::Config("--seed is required for this command".into()))
}

/// Write to `--out` or stdout.
fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text)?,
        None => {
            use std::io::Write;
            match std::io::stdout().lock().write_all(text.as_bytes()) {
                Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => {}
                r => r?,
            }
        }
    }
    Ok(())
}

fn emit_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    emit(out, &s)
}

fn require_out(g: &Global) -> Result<&Path> {
    g.out.as_deref().ok_or_else(|| Error::Config("--out is required for this command".into()))
}

/// Labels aligned with the feature matrix rows.
fn read_labels(path: &Path, fm: &FeatureMatrix) -> Result<GroupLabels> {
    let mut rdr = csv::Reader::from_path(path)?;
    let mut map = std::collections::HashMap::new();
    for rec in rdr.records() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Parse { path: path.into(), msg: "expected `sample_id,label` rows".into() });
        }
        map.insert(rec[0].trim().to_string(), rec[1].trim().to_string());
    }
    let labels = fm
        .sample_ids()
        .iter()
        .map(|id| {
            map.get(id)
                .cloned()
                .ok_or_else(|| Error::Parse { path: path.into(), msg: format!("no label for `{id}`") })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GroupLabels::from_names(&labels))
}

fn column(fm: &FeatureMatrix, name: &str) -> Result<Vec<f64>> {
    let j = fm
        .feature_names()
        .iter()
        .position(|n| n == name)
        .ok_or_else(|| Error::Config(format!("no feature column `{name}`")))?;
    Ok(fm.column(j))
}

fn distances(g: &Global, fm: &FeatureMatrix) -> Result<DistanceMatrix> {
    distance_matrix(fm, g.metric.unwrap_or_default())
}

fn write_matrix_csv(out: Option<&Path>, ids: &[String], prefix: &str, m: &nalgebra::DMatrix<f64>) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["sample_id".to_string()];
    header.extend((1..=m.ncols()).map(|j| format!("{prefix}{j}")));
    wtr.write_record(&header)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(m.row(i).iter().map(|v| v.to_string()));
        wtr.write_record(&rec)?;
    }
    let bytes = wtr.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    emit(out, &String::from_utf8_lossy(&bytes))
}

fn pipeline_config(g: &Global, input: Option<PathBuf>) -> Result<PipelineConfig> {
    let mut table: toml::Table = match &g.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?
        }
        None => toml::Table::new(),
    };
    let base = g.config.as_deref().and_then(Path::parent).unwrap_or(Path::new(""));
    // relative paths inside the config resolve against the config's directory
    for key in ["input", "output_dir"] {
        if let Some(toml::Value::String(s)) = table.get(key) {
            let resolved = base.join(s).to_string_lossy().into_owned();
            table.insert(key.into(), toml::Value::String(resolved));
        }
    }
    if let Some(seed) = g.seed {
        let seed = i64::try_from(seed).map_err(|_| Error::Config("seed must fit in a signed 64-bit integer".into()))?;
        table.insert("seed".into(), toml::Value::Integer(seed));
    }
    if !table.contains_key("seed") {
        return Err(Error::Config("a seed is required (--seed or `seed` in the config)".into()));
    }
    if let Some(b) = g.permutations {
        table.insert("permutations".into(), toml::Value::Integer(b as i64));
    }
    if let Some(m) = g.metric {
        table.insert("metric".into(), toml::Value::String(m.name().into()));
    }
    if let Some(p) = input {
        table.insert("input".into(), toml::Value::String(p.to_string_lossy().into_owned()));
    }
    if let Some(p) = &g.out {
        table.insert("output_dir".into(), toml::Value::String(p.to_string_lossy().into_owned()));
    }
    PipelineConfig::from_toml_str(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?)
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let out = g.out.as_deref();
    match cli.command {
        Command::Features { manifest, sampling_rate, window_len, normalize } => {
            let obs = load_observations(&manifest, sampling_rate, window_len)?;
            let cfg = match &g.config {
                Some(p) => {
                    let mut table: toml::Table = std::fs::read_to_string(p)?
                        .parse()
                        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
                    table.entry("seed").or_insert(toml::Value::Integer(0));
                    PipelineConfig::from_toml_str(&toml::to_string(&table).map_err(|e| Error::Config(e.to_string()))?)?
                        .feature_config()
                }
                None => PipelineConfig::new(0).feature_config(),
            };
            let fx = build_feature_matrix(&obs, &cfg)?;
            for w in &fx.warnings {
                eprintln!("warning: {w}");
            }
            let fm = match normalize {
                Some(m) => normalize_features(&fx.matrix, m)?.matrix,
                None => fx.matrix,
            };
            write_feature_csv(require_out(g)?, &fm)
        }
        Command::SelectK { features, k_max, restarts, information_criteria } => {
            let seed = require_seed(g)?;
            let fm = read_feature_csv(&features)?;
            let dm = distances(g, &fm)?;
            let opts = SelectionOptions {
                k_max,
                seed,
                kmeans_restarts: restarts,
                gmm: information_criteria.then(|| GmmOptions::with_seed(seed)),
            };
            emit_json(out, &select_k(&fm, &dm, &opts)?)
        }
        Command::Cluster { features, k } => {
            let fm = read_feature_csv(&features)?;
            let model = gmm_fit(&fm, k, &GmmOptions::with_seed(require_seed(g)?))?;
            let pred = gmm_predict(&model, &fm)?;
            let mut text = String::from("sample_id,cluster\n");
            for (id, l) in fm.sample_ids().iter().zip(&pred.labels) {
                text.push_str(&format!("{id},{}\n", l + 1));
            }
            emit(out, &text)
        }
        Command::Ordinate { features, method, components } => {
            let fm = read_feature_csv(&features)?;
            let ord = match method {
                Method::Pca => {
                    let m = components.unwrap_or((fm.nrows().saturating_sub(1)).min(fm.ncols()));
                    pca(&fm, m)?
                }
                Method::Pcoa => pcoa(&distances(g, &fm)?)?,
            };
            let prefix = match method {
                Method::Pca => "pc",
                Method::Pcoa => "pco",
            };
            write_matrix_csv(out, fm.sample_ids(), prefix, &ord.coords)
        }
        Command::Test(t) => run_test(g, t),
        Command::Datagen { per_state } => {
            let data = default_dataset(per_state, require_seed(g)?)?;
            write_dataset(require_out(g)?, &data)
        }
        Command::Pipeline { input, no_plots } => {
            let cfg = pipeline_config(g, input)?;
            let dir = cfg
                .output_dir
                .clone()
                .ok_or_else(|| Error::Config("--out (or `output_dir` in the config) is required".into()))?;
            let report = run_pipeline(&cfg)?;
            if no_plots {
                std::fs::create_dir_all(&dir)?;
                std::fs::write(dir.join("report.json"), report.to_json()?)?;
            } else {
                write_outputs(&report, &dir)?;
            }
            for w in &report.warnings {
                eprintln!("warning: {w}");
            }
            match report.failure() {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Plot { report } => {
            let text = std::fs::read_to_string(&report)?;
            let report = DiagnosisReport::from_json(&text)?;
            let summary = emit_plots(&report, require_out(g)?)?;
            for m in &summary.missing {
                eprintln!("skipped: {m}");
            }
            Ok(())
        }
    }
}

fn run_test(g: &Global, t: TestCommand) -> Result<()> {
    let out = g.out.as_deref();
    let permutations = g.permutations.unwrap_or(999);
    match t {
        TestCommand::Permanova(input) => {
            let fm = read_feature_csv(&input.features)?;
            let groups = read_labels(&input.labels, &fm)?;
            let r = permanova(&distances(g, &fm)?, &groups, permutations, require_seed(g)?)?;
            emit_json(out, &r)
        }
        TestCommand::Permdisp(input) => {
            let fm = read_feature_csv(&input.features)?;
            let groups = read_labels(&input.labels, &fm)?;
            let r = permdisp(&distances(g, &fm)?, &groups, permutations, require_seed(g)?)?;
            emit_json(out, &r)
        }
        TestCommand::Normality { features, column: name } => {
            let fm = read_feature_csv(&features)?;
            let r = shapiro_wilk(&column(&fm, &name)?)?;
            emit_json(out, &TestRecord::classical("shapiro-wilk", r.w, Vec::new(), r.p_value))
        }
        TestCommand::Bartlett { input, column: name } => {
            let fm = read_feature_csv(&input.features)?;
            let groups = read_labels(&input.labels, &fm)?;
            let x = column(&fm, &name)?;
            let per_group: Vec<Vec<f64>> = groups.members().iter().map(|m| m.iter().map(|&i| x[i]).collect()).collect();
            let r = bartlett_test(&per_group)?;
            emit_json(out, &TestRecord::classical("bartlett", r.k_squared, vec![r.df as f64], r.p_value))
        }
    }
}
