//! SVG and CSV plot emission from a diagnosis report.
//!
//! Every plot is written as an SVG plus a CSV holding the plotted numbers.
//! Output contains no timestamps or other run-dependent text, so equal
//! reports give byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::pipeline::DiagnosisReport;
use crate::{Error, Result};

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 420.0;
const MARGIN: f64 = 56.0;
const PALETTE: [&str; 10] = [
    "#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf",
];

/// Files written and the plots skipped for lack of a report section.
#[derive(Debug, Default)]
pub struct PlotSummary {
    pub written: Vec<PathBuf>,
    pub missing: Vec<Error>,
}

/// Linear-interpolation quantile (type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

pub fn box_stats(values: &[f64]) -> BoxStats {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    BoxStats {
        min: v[0],
        q1: quantile_sorted(&v, 0.25),
        median: quantile_sorted(&v, 0.5),
        q3: quantile_sorted(&v, 0.75),
        max: v[v.len() - 1],
    }
}

fn color(i: usize) -> &'static str {
    PALETTE[i % PALETTE.len()]
}

/// Data range padded so flat data still gets a visible span.
fn span(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let (lo, hi) = values.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
    if !lo.is_finite() {
        return (0.0, 1.0);
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5 };
    (lo - pad, hi + pad)
}

struct Canvas {
    body: String,
    x: (f64, f64),
    y: (f64, f64),
}

impl Canvas {
    fn new(title: &str, x_label: &str, y_label: &str, x: (f64, f64), y: (f64, f64)) -> Self {
        let mut body = String::new();
        let _ = write!(
            body,
            "<rect x=\"{m}\" y=\"{m}\" width=\"{w:.1}\" height=\"{h:.1}\" fill=\"none\" stroke=\"#333\"/>\n\
             <text x=\"{cx:.1}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{title}</text>\n\
             <text x=\"{cx:.1}\" y=\"{xl:.1}\" text-anchor=\"middle\" font-size=\"12\">{x_label}</text>\n\
             <text x=\"16\" y=\"{cy:.1}\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 {cy:.1})\">{y_label}</text>\n",
            m = MARGIN,
            w = WIDTH - 2.0 * MARGIN,
            h = HEIGHT - 2.0 * MARGIN,
            cx = WIDTH / 2.0,
            cy = HEIGHT / 2.0,
            xl = HEIGHT - 14.0,
        );
        let mut c = Self { body, x, y };
        c.ticks();
        c
    }

    fn px(&self, v: f64) -> f64 {
        MARGIN + (v - self.x.0) / (self.x.1 - self.x.0) * (WIDTH - 2.0 * MARGIN)
    }

    fn py(&self, v: f64) -> f64 {
        HEIGHT - MARGIN - (v - self.y.0) / (self.y.1 - self.y.0) * (HEIGHT - 2.0 * MARGIN)
    }

    fn ticks(&mut self) {
        for i in 0..=4 {
            let f = i as f64 / 4.0;
            let xv = self.x.0 + f * (self.x.1 - self.x.0);
            let yv = self.y.0 + f * (self.y.1 - self.y.0);
            let (px, py) = (self.px(xv), self.py(yv));
            let _ = writeln!(
                self.body,
                "<text x=\"{px:.1}\" y=\"{:.1}\" text-anchor=\"middle\" font-size=\"10\">{}</text>",
                HEIGHT - MARGIN + 14.0,
                tick_label(xv)
            );
            let _ = writeln!(
                self.body,
                "<text x=\"{:.1}\" y=\"{py:.1}\" text-anchor=\"end\" font-size=\"10\">{}</text>",
                MARGIN - 4.0,
                tick_label(yv)
            );
        }
    }

    fn point(&mut self, x: f64, y: f64, fill: &str) {
        let _ = writeln!(self.body, "<circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"3\" fill=\"{fill}\"/>", self.px(x), self.py(y));
    }

    fn polyline(&mut self, pts: &[(f64, f64)], stroke: &str) {
        let coords: Vec<String> = pts.iter().map(|&(x, y)| format!("{:.2},{:.2}", self.px(x), self.py(y))).collect();
        let _ = writeln!(self.body, "<polyline points=\"{}\" fill=\"none\" stroke=\"{stroke}\"/>", coords.join(" "));
    }

    fn line(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, stroke: &str) {
        let _ = writeln!(
            self.body,
            "<line x1=\"{:.2}\" y1=\"{:.2}\" x2=\"{:.2}\" y2=\"{:.2}\" stroke=\"{stroke}\"/>",
            self.px(x0),
            self.py(y0),
            self.px(x1),
            self.py(y1)
        );
    }

    /// Box at horizontal position `x` (data units) with half-width `hw`.
    fn boxplot(&mut self, x: f64, hw: f64, s: &BoxStats, fill: &str) {
        self.line(x, s.min, x, s.q1, "#333");
        self.line(x, s.q3, x, s.max, "#333");
        self.line(x - hw / 2.0, s.min, x + hw / 2.0, s.min, "#333");
        self.line(x - hw / 2.0, s.max, x + hw / 2.0, s.max, "#333");
        let (l, r) = (self.px(x - hw), self.px(x + hw));
        let (top, bottom) = (self.py(s.q3), self.py(s.q1));
        let _ = writeln!(
            self.body,
            "<rect x=\"{l:.2}\" y=\"{top:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{fill}\" fill-opacity=\"0.5\" stroke=\"#333\"/>",
            r - l,
            (bottom - top).max(0.0)
        );
        self.line(x - hw, s.median, x + hw, s.median, "#000");
    }

    fn finish(self) -> String {
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

fn tick_label(v: f64) -> String {
    let s = if v.abs() >= 1e4 || (v != 0.0 && v.abs() < 1e-2) { format!("{v:.2e}") } else { format!("{v:.2}") };
    if s == "-0.00" { "0.00".into() } else { s }
}

struct Writer<'a> {
    dir: &'a Path,
    summary: PlotSummary,
}

impl Writer<'_> {
    fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.summary.written.push(path);
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
        self.summary.written.push(path);
        Ok(())
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Write every plot the report supports into `outdir`.
pub fn emit_plots(report: &DiagnosisReport, outdir: &Path) -> Result<PlotSummary> {
    std::fs::create_dir_all(outdir)?;
    let mut w = Writer { dir: outdir, summary: PlotSummary::default() };
    let plots: [(&str, fn(&DiagnosisReport, &mut Writer) -> Result<bool>); 8] = [
        ("features", feature_boxplots),
        ("selection", wss_plot),
        ("selection", silhouette_plot),
        ("ordination", scree_plot),
        ("clustering", pc_projections),
        ("clustering", timeline),
        ("dispersion", centroid_distance_boxplots),
        ("dispersion", pcoa_scatter),
    ];
    for (section, plot) in plots {
        if !plot(report, &mut w)? {
            w.summary.missing.push(Error::MissingSection(section.into()));
        }
    }
    Ok(w.summary)
}

fn feature_boxplots(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let Some(f) = &r.features else { return Ok(false) };
    if f.normalized.is_empty() {
        return Ok(false);
    }
    let stats: Vec<BoxStats> = (0..f.feature_names.len())
        .map(|j| box_stats(&f.normalized.iter().map(|row| row[j]).collect::<Vec<_>>()))
        .collect();
    let rows: Vec<Vec<String>> = f
        .feature_names
        .iter()
        .zip(&stats)
        .map(|(n, s)| vec![n.clone(), s.min.to_string(), s.q1.to_string(), s.median.to_string(), s.q3.to_string(), s.max.to_string()])
        .collect();
    w.csv("feature_boxplot.csv", &["feature", "min", "q1", "median", "q3", "max"], &rows)?;
    let p = stats.len() as f64;
    let mut c = Canvas::new(
        "Normalized features",
        "feature index",
        "value",
        (0.0, p + 1.0),
        span(stats.iter().flat_map(|s| [s.min, s.max])),
    );
    for (j, s) in stats.iter().enumerate() {
        c.boxplot(j as f64 + 1.0, 0.3, s, color(0));
    }
    w.file("feature_boxplot.svg", &c.finish())?;
    Ok(true)
}

fn wss_plot(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let Some(s) = &r.selection else { return Ok(false) };
    let rows: Vec<Vec<String>> = s.k_values.iter().zip(&s.wss).map(|(k, v)| vec![k.to_string(), v.to_string()]).collect();
    w.csv("wss.csv", &["k", "wss"], &rows)?;
    let pts: Vec<(f64, f64)> = s.k_values.iter().zip(&s.wss).map(|(&k, &v)| (k as f64, v)).collect();
    let mut c = Canvas::new(
        "Within-cluster sum of squares",
        "k",
        "WSS",
        span(pts.iter().map(|p| p.0)),
        span(pts.iter().map(|p| p.1)),
    );
    c.polyline(&pts, color(0));
    for (i, &(x, y)) in pts.iter().enumerate() {
        c.point(x, y, if s.k_values[i] == s.recommended_k { color(3) } else { color(0) });
    }
    w.file("wss.svg", &c.finish())?;
    Ok(true)
}

fn silhouette_plot(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let Some(s) = &r.selection else { return Ok(false) };
    let rows: Vec<Vec<String>> =
        s.k_values.iter().zip(&s.avg_silhouette).map(|(k, v)| vec![k.to_string(), opt(*v)]).collect();
    w.csv("silhouette.csv", &["k", "avg_silhouette"], &rows)?;
    let pts: Vec<(f64, f64)> =
        s.k_values.iter().zip(&s.avg_silhouette).filter_map(|(&k, v)| v.map(|v| (k as f64, v))).collect();
    let mut c = Canvas::new(
        "Average silhouette width",
        "k",
        "silhouette",
        span(s.k_values.iter().map(|&k| k as f64)),
        span(pts.iter().map(|p| p.1).chain([0.0])),
    );
    c.polyline(&pts, color(0));
    for &(x, y) in &pts {
        c.point(x, y, color(0));
    }
    w.file("silhouette.svg", &c.finish())?;
    Ok(true)
}

fn scree_plot(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let Some(o) = &r.ordination else { return Ok(false) };
    let mut rows = Vec::new();
    for (name, s) in [("pca", &o.pca), ("pcoa", &o.pcoa)] {
        for (i, (e, f)) in s.eigenvalues.iter().zip(&s.fractions).enumerate() {
            rows.push(vec![name.to_string(), (i + 1).to_string(), e.to_string(), opt(*f)]);
        }
    }
    w.csv("scree.csv", &["ordination", "axis", "eigenvalue", "fraction"], &rows)?;
    let pts: Vec<(f64, f64)> =
        o.pca.fractions.iter().enumerate().filter_map(|(i, f)| f.map(|f| (i as f64 + 1.0, f))).collect();
    let mut c = Canvas::new("Scree (PCA)", "component", "variance fraction", span(pts.iter().map(|p| p.0)), (0.0, 1.0));
    c.polyline(&pts, color(0));
    for &(x, y) in &pts {
        c.point(x, y, color(0));
    }
    w.file("scree.svg", &c.finish())?;
    Ok(true)
}

fn pc_projections(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let Some(cl) = &r.clustering else { return Ok(false) };
    let m = cl.pc_scores.first().map_or(0, |s| s.len());
    let mut header = vec!["sample_id", "cluster"];
    header.extend(["pc1", "pc2", "pc3"].iter().take(m));
    let rows: Vec<Vec<String>> = cl
        .assignments
        .iter()
        .zip(&cl.pc_scores)
        .map(|(a, s)| {
            let mut row = vec![a.sample_id.clone(), a.cluster.to_string()];
            row.extend(s.iter().map(|v| v.to_string()));
            row
        })
        .collect();
    w.csv("pc_scores.csv", &header, &rows)?;
    for a in 0..m {
        for b in a + 1..m {
            let mut c = Canvas::new(
                &format!("Clusters on PC{} vs PC{}", a + 1, b + 1),
                &format!("PC{}", a + 1),
                &format!("PC{}", b + 1),
                span(cl.pc_scores.iter().map(|s| s[a])),
                span(cl.pc_scores.iter().map(|s| s[b])),
            );
            for (s, asg) in cl.pc_scores.iter().zip(&cl.assignments) {
                c.point(s[a], s[b], color(asg.cluster - 1));
            }
            w.file(&format!("pc{}_pc{}.svg", a + 1, b + 1), &c.finish())?;
        }
    }
    Ok(true)
}

fn timeline(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let Some(cl) = &r.clustering else { return Ok(false) };
    let rows: Vec<Vec<String>> = cl
        .assignments
        .iter()
        .map(|a| vec![a.sample_id.clone(), a.timestamp.to_string(), a.cluster.to_string()])
        .collect();
    w.csv("timeline.csv", &["sample_id", "timestamp", "cluster"], &rows)?;
    let mut c = Canvas::new(
        "Cluster over time",
        "timestamp (s)",
        "cluster",
        span(cl.assignments.iter().map(|a| a.timestamp as f64)),
        (0.5, cl.k as f64 + 0.5),
    );
    for a in &cl.assignments {
        c.point(a.timestamp as f64, a.cluster as f64, color(a.cluster - 1));
    }
    w.file("timeline.svg", &c.finish())?;
    Ok(true)
}

fn centroid_distance_boxplots(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let (Some(d), Some(s)) = (&r.dispersion, &r.sampling) else { return Ok(false) };
    let rows: Vec<Vec<String>> = s
        .sample_ids
        .iter()
        .zip(&s.clusters)
        .zip(&d.centroid_distances)
        .map(|((id, c), v)| vec![id.clone(), c.to_string(), v.to_string()])
        .collect();
    w.csv("centroid_distance.csv", &["sample_id", "cluster", "distance"], &rows)?;
    let mut c = Canvas::new(
        "Distance to cluster centroid",
        "cluster",
        "distance",
        (0.0, d.groups.len() as f64 + 1.0),
        span(d.centroid_distances.iter().copied().chain([0.0])),
    );
    for (g, name) in d.groups.iter().enumerate() {
        let vals: Vec<f64> = s
            .clusters
            .iter()
            .zip(&d.centroid_distances)
            .filter(|(c, _)| c.to_string() == *name)
            .map(|(_, &v)| v)
            .collect();
        if !vals.is_empty() {
            c.boxplot(g as f64 + 1.0, 0.3, &box_stats(&vals), color(g));
        }
    }
    w.file("centroid_distance.svg", &c.finish())?;
    Ok(true)
}

fn pcoa_scatter(r: &DiagnosisReport, w: &mut Writer) -> Result<bool> {
    let (Some(d), Some(s)) = (&r.dispersion, &r.sampling) else { return Ok(false) };
    let m = d.pcoa_coords.first().map_or(0, |c| c.len());
    let mut header = vec!["sample_id", "cluster"];
    header.extend(["pco1", "pco2"].iter().take(m));
    let rows: Vec<Vec<String>> = s
        .sample_ids
        .iter()
        .zip(&s.clusters)
        .zip(&d.pcoa_coords)
        .map(|((id, c), xy)| {
            let mut row = vec![id.clone(), c.to_string()];
            row.extend(xy.iter().map(|v| v.to_string()));
            row
        })
        .collect();
    w.csv("pcoa.csv", &header, &rows)?;
    let at = |xy: &Vec<f64>, j: usize| xy.get(j).copied().unwrap_or(0.0);
    let mut c = Canvas::new(
        "Principal coordinates",
        "PCo1",
        "PCo2",
        span(d.pcoa_coords.iter().map(|xy| at(xy, 0))),
        span(d.pcoa_coords.iter().map(|xy| at(xy, 1))),
    );
    for (xy, &cl) in d.pcoa_coords.iter().zip(&s.clusters) {
        c.point(at(xy, 0), at(xy, 1), color(cl - 1));
    }
    w.file("pcoa.svg", &c.finish())?;
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datagen::default_dataset;
    use crate::pipeline::{run_pipeline_on, PipelineConfig};

    fn report() -> DiagnosisReport {
        let data = default_dataset(8, 2).unwrap();
        let mut cfg = PipelineConfig::new(2);
        cfg.permutations = 49;
        cfg.sample_per_cluster = 6;
        run_pipeline_on(&data.observations, &cfg).unwrap()
    }

    /// Sort-and-interpolate written out separately from `quantile_sorted`.
    fn naive_type7(values: &[f64], p: f64) -> f64 {
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pos = p * (v.len() as f64 - 1.0);
        let i = pos as usize;
        if i + 1 >= v.len() {
            return v[v.len() - 1];
        }
        v[i] * (1.0 - (pos - i as f64)) + v[i + 1] * (pos - i as f64)
    }

    #[test]
    fn quantiles_known_values() {
        let x = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&x, 0.25), 1.75);
        assert_eq!(quantile_sorted(&x, 0.5), 2.5);
        assert_eq!(quantile_sorted(&x, 1.0), 4.0);
        assert_eq!(quantile_sorted(&[7.0], 0.3), 7.0);
    }

    #[test]
    fn all_plots_written() {
        let r = report();
        let dir = tempfile::tempdir().unwrap();
        let s = emit_plots(&r, dir.path()).unwrap();
        assert!(s.missing.is_empty());
        for f in ["feature_boxplot", "wss", "silhouette", "scree", "pc1_pc2", "pc1_pc3", "pc2_pc3", "timeline", "centroid_distance", "pcoa"] {
            assert!(dir.path().join(format!("{f}.svg")).exists(), "{f}");
        }
        let wss = std::fs::read_to_string(dir.path().join("wss.csv")).unwrap();
        assert_eq!(wss.lines().count(), 1 + r.run.k_max);
    }

    #[test]
    fn missing_ordination_only_skips_scree() {
        let mut r = report();
        r.ordination = None;
        let dir = tempfile::tempdir().unwrap();
        let s = emit_plots(&r, dir.path()).unwrap();
        assert_eq!(s.missing.len(), 1);
        assert!(matches!(&s.missing[0], Error::MissingSection(n) if n == "ordination"));
        assert!(!dir.path().join("scree.svg").exists());
        assert!(dir.path().join("pcoa.svg").exists());
    }

    #[test]
    fn boxplot_quartiles_match_naive_oracle() {
        let r = report();
        let dir = tempfile::tempdir().unwrap();
        emit_plots(&r, dir.path()).unwrap();
        let f = r.features.as_ref().unwrap();
        let mut rdr = csv::Reader::from_path(dir.path().join("feature_boxplot.csv")).unwrap();
        for (j, rec) in rdr.records().enumerate() {
            let rec = rec.unwrap();
            let col: Vec<f64> = f.normalized.iter().map(|row| row[j]).collect();
            for (k, p) in [(2, 0.25), (3, 0.5), (4, 0.75)] {
                let got: f64 = rec[k].parse().unwrap();
                assert!((got - naive_type7(&col, p)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn output_is_byte_stable() {
        let r = report();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let sa = emit_plots(&r, a.path()).unwrap();
        emit_plots(&r, b.path()).unwrap();
        for p in &sa.written {
            let name = p.file_name().unwrap();
            assert_eq!(std::fs::read(p).unwrap(), std::fs::read(b.path().join(name)).unwrap());
        }
    }
}
