//! C ABI for `faultdiag`.
//!
//! Objects cross the boundary as opaque handles created by `*_new` style
//! functions and released with the matching `*_free`. Every fallible call
//! returns an [`FdStatus`]; on failure a message is kept per thread and can
//! be read with [`fd_last_error_message`]. Panics are caught at the boundary
//! and reported as `FD_STATUS_PANIC`.
//!
//! Matrices are passed row-major. Group labels are arbitrary `uint32_t`
//! values; groups are ordered by label value.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::slice;

use faultdiag::distance::{distance_matrix, Metric};
use faultdiag::hypotest::{bartlett_test, permanova, permdisp, shapiro_wilk, GroupLabels};
use faultdiag::pipeline::{run_pipeline, write_outputs, DiagnosisReport, PipelineConfig};
use faultdiag::{DistanceMatrix, ErrorKind, FeatureMatrix};
use nalgebra::DMatrix;

/// Status code. The numeric values of the error classes match the exit codes
/// of the command-line tool.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdStatus {
    Ok = 0,
    Config = 2,
    Data = 3,
    Numeric = 4,
    NullPointer = 5,
    InvalidUtf8 = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdMetric {
    Euclidean = 0,
    Manhattan = 1,
    Braycurtis = 2,
}

impl From<FdMetric> for Metric {
    fn from(m: FdMetric) -> Self {
        match m {
            FdMetric::Euclidean => Metric::Euclidean,
            FdMetric::Manhattan => Metric::Manhattan,
            FdMetric::Braycurtis => Metric::Braycurtis,
        }
    }
}

/// Opaque feature matrix handle.
pub struct FdFeatureMatrix(FeatureMatrix);

/// Opaque distance matrix handle.
pub struct FdDistanceMatrix(DistanceMatrix);

/// Opaque pipeline report handle.
pub struct FdReport(DiagnosisReport);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FdPermanovaResult {
    pub pseudo_f: f64,
    pub p_value: f64,
    pub ss_total: f64,
    pub ss_among: f64,
    pub ss_within: f64,
    pub df_among: usize,
    pub df_within: usize,
    pub permutations: usize,
    pub exceedances: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FdDispersionResult {
    pub anova_f: f64,
    pub p_value: f64,
    /// F-distribution p value; NaN when unavailable.
    pub parametric_p: f64,
    pub df_among: usize,
    pub df_within: usize,
    pub permutations: usize,
    pub exceedances: usize,
    pub clamped_count: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FdShapiroResult {
    pub w: f64,
    pub p_value: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct FdBartlettResult {
    pub k_squared: f64,
    pub df: usize,
    pub p_value: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

struct Failure(FdStatus, String);

impl From<faultdiag::Error> for Failure {
    fn from(e: faultdiag::Error) -> Self {
        let status = match e.kind() {
            ErrorKind::Config => FdStatus::Config,
            ErrorKind::Data => FdStatus::Data,
            ErrorKind::Numeric => FdStatus::Numeric,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(FdStatus::NullPointer, format!("`{what}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> FdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => FdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_last_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(format!("panic: {msg}"));
            FdStatus::Panic
        }
    }
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(FdStatus::InvalidUtf8, format!("`{what}` is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

unsafe fn labels_arg(labels: *const u32, n: usize) -> Result<GroupLabels, Failure> {
    let labels = slice_arg(labels, n, "labels")?;
    let ids: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
    Ok(GroupLabels::from_ids(&ids))
}

/// Message of the last failed call on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn fd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Release a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn fd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Feature matrix from `n_rows * n_cols` row-major values. Features are named
/// `f1..fp` and samples `s1..sn`.
#[no_mangle]
pub unsafe extern "C" fn fd_feature_matrix_new(
    values: *const f64,
    n_rows: usize,
    n_cols: usize,
    out: *mut *mut FdFeatureMatrix,
) -> FdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n_rows.checked_mul(n_cols).ok_or_else(|| Failure(FdStatus::Data, "matrix size overflows".into()))?;
        let values = slice_arg(values, len, "values")?;
        let rows: Vec<Vec<f64>> = values.chunks(n_cols.max(1)).map(<[f64]>::to_vec).collect();
        let fm = FeatureMatrix::from_rows(&rows)?;
        *out = Box::into_raw(Box::new(FdFeatureMatrix(fm)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fd_feature_matrix_free(fm: *mut FdFeatureMatrix) {
    if !fm.is_null() {
        drop(Box::from_raw(fm));
    }
}

/// Pairwise dissimilarities between the rows of `fm`.
#[no_mangle]
pub unsafe extern "C" fn fd_distance_matrix_from_features(
    fm: *const FdFeatureMatrix,
    metric: FdMetric,
    out: *mut *mut FdDistanceMatrix,
) -> FdStatus {
    guard(|| {
        let fm = ref_arg(fm, "fm")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let dm = distance_matrix(&fm.0, metric.into())?;
        *out = Box::into_raw(Box::new(FdDistanceMatrix(dm)));
        Ok(())
    })
}

/// Distance matrix from `n * n` row-major values. The matrix must be
/// symmetric, non-negative and zero on the diagonal.
#[no_mangle]
pub unsafe extern "C" fn fd_distance_matrix_new(values: *const f64, n: usize, out: *mut *mut FdDistanceMatrix) -> FdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let len = n.checked_mul(n).ok_or_else(|| Failure(FdStatus::Data, "matrix size overflows".into()))?;
        let values = slice_arg(values, len, "values")?;
        let dm = DistanceMatrix::from_matrix(DMatrix::from_row_slice(n, n, values), "precomputed")?;
        *out = Box::into_raw(Box::new(FdDistanceMatrix(dm)));
        Ok(())
    })
}

/// Number of observations, or 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn fd_distance_matrix_len(dm: *const FdDistanceMatrix) -> usize {
    dm.as_ref().map_or(0, |d| d.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn fd_distance_matrix_free(dm: *mut FdDistanceMatrix) {
    if !dm.is_null() {
        drop(Box::from_raw(dm));
    }
}

/// PERMANOVA with `permutations` label permutations drawn from `seed`.
/// `labels` holds one group label per observation.
#[no_mangle]
pub unsafe extern "C" fn fd_permanova(
    dm: *const FdDistanceMatrix,
    labels: *const u32,
    n_labels: usize,
    permutations: usize,
    seed: u64,
    out: *mut FdPermanovaResult,
) -> FdStatus {
    guard(|| {
        let dm = ref_arg(dm, "dm")?;
        let groups = labels_arg(labels, n_labels)?;
        let r = permanova(&dm.0, &groups, permutations, seed)?;
        let res = FdPermanovaResult {
            pseudo_f: r.pseudo_f,
            p_value: r.test.p_value,
            ss_total: r.ss_total,
            ss_among: r.ss_among,
            ss_within: r.ss_within,
            df_among: r.df_among,
            df_within: r.df_within,
            permutations: r.test.permutations,
            exceedances: r.test.exceedances,
        };
        write_out(out, res, "out")
    })
}

/// Homogeneity of multivariate dispersions around group centroids.
#[no_mangle]
pub unsafe extern "C" fn fd_permdisp(
    dm: *const FdDistanceMatrix,
    labels: *const u32,
    n_labels: usize,
    permutations: usize,
    seed: u64,
    out: *mut FdDispersionResult,
) -> FdStatus {
    guard(|| {
        let dm = ref_arg(dm, "dm")?;
        let groups = labels_arg(labels, n_labels)?;
        let r = permdisp(&dm.0, &groups, permutations, seed)?;
        let res = FdDispersionResult {
            anova_f: r.anova_f,
            p_value: r.test.p_value,
            parametric_p: r.test.parametric_p.unwrap_or(f64::NAN),
            df_among: r.df_among,
            df_within: r.df_within,
            permutations: r.test.permutations,
            exceedances: r.test.exceedances,
            clamped_count: r.clamped_count,
        };
        write_out(out, res, "out")
    })
}

#[no_mangle]
pub unsafe extern "C" fn fd_shapiro_wilk(x: *const f64, n: usize, out: *mut FdShapiroResult) -> FdStatus {
    guard(|| {
        let x = slice_arg(x, n, "x")?;
        let r = shapiro_wilk(x)?;
        write_out(out, FdShapiroResult { w: r.w, p_value: r.p_value }, "out")
    })
}

/// Bartlett's test on `values` split by `labels`, both of length `n`.
#[no_mangle]
pub unsafe extern "C" fn fd_bartlett(
    values: *const f64,
    labels: *const u32,
    n: usize,
    out: *mut FdBartlettResult,
) -> FdStatus {
    guard(|| {
        let values = slice_arg(values, n, "values")?;
        let groups = labels_arg(labels, n)?;
        let split: Vec<Vec<f64>> = groups.members().iter().map(|m| m.iter().map(|&i| values[i]).collect()).collect();
        let r = bartlett_test(&split)?;
        write_out(out, FdBartlettResult { k_squared: r.k_squared, df: r.df, p_value: r.p_value }, "out")
    })
}

/// Write the six-state synthetic dataset (`manifest.csv`, `labels.csv`,
/// `waveforms/`) under `dir`.
#[no_mangle]
pub unsafe extern "C" fn fd_datagen_write(dir: *const c_char, per_state: usize, seed: u64) -> FdStatus {
    guard(|| {
        let dir = str_arg(dir, "dir")?;
        let data = faultdiag::datagen::default_dataset(per_state, seed)?;
        faultdiag::datagen::write_dataset(Path::new(dir), &data)?;
        Ok(())
    })
}

/// Run the full pipeline from a TOML configuration. Relative paths in the
/// configuration resolve against the working directory.
///
/// A stage failure still yields a report; check it with
/// [`fd_report_status`].
#[no_mangle]
pub unsafe extern "C" fn fd_pipeline_run(config_toml: *const c_char, out: *mut *mut FdReport) -> FdStatus {
    guard(|| {
        let text = str_arg(config_toml, "config_toml")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let cfg = PipelineConfig::from_toml_str(text)?;
        let report = run_pipeline(&cfg)?;
        *out = Box::into_raw(Box::new(FdReport(report)));
        Ok(())
    })
}

/// `FD_STATUS_OK` if every stage ran, otherwise the class of the recorded
/// stage failure with its message available from [`fd_last_error_message`].
#[no_mangle]
pub unsafe extern "C" fn fd_report_status(report: *const FdReport) -> FdStatus {
    guard(|| {
        let report = ref_arg(report, "report")?;
        match report.0.failure() {
            Some(e) => Err(e.into()),
            None => Ok(()),
        }
    })
}

/// Selected number of clusters, or 0 if clustering did not run.
#[no_mangle]
pub unsafe extern "C" fn fd_report_cluster_count(report: *const FdReport) -> usize {
    report.as_ref().and_then(|r| r.0.clustering.as_ref()).map_or(0, |c| c.k)
}

/// The report as pretty-printed JSON. Free with [`fd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn fd_report_to_json(report: *const FdReport, out: *mut *mut c_char) -> FdStatus {
    guard(|| {
        let report = ref_arg(report, "report")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let json = report.0.to_json()?;
        *out = CString::new(json).expect("JSON has no nul bytes").into_raw();
        Ok(())
    })
}

/// Write `report.json`, the pairwise table and the plots under `dir`.
#[no_mangle]
pub unsafe extern "C" fn fd_report_write(report: *const FdReport, dir: *const c_char) -> FdStatus {
    guard(|| {
        let report = ref_arg(report, "report")?;
        let dir = str_arg(dir, "dir")?;
        write_outputs(&report.0, Path::new(dir))?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn fd_report_free(report: *mut FdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
