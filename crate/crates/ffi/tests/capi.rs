use std::ffi::{CStr, CString};
use std::ptr;

use faultdiag::distance::{distance_matrix, Metric};
use faultdiag::hypotest::{permanova, GroupLabels};
use faultdiag::FeatureMatrix;
use faultdiag_ffi::*;

fn last_error() -> String {
    let p = fd_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn two_groups() -> (Vec<f64>, Vec<u32>) {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..12 {
        let g = (i % 2) as u32;
        let t = i as f64;
        rows.extend([g as f64 * 3.0 + (t * 0.7).sin(), (t * 1.3).cos() * 0.5]);
        labels.push(g + 10);
    }
    (rows, labels)
}

#[test]
fn permanova_matches_library() {
    let (values, labels) = two_groups();
    unsafe {
        let mut fm = ptr::null_mut();
        assert_eq!(fd_feature_matrix_new(values.as_ptr(), 12, 2, &mut fm), FdStatus::Ok);
        let mut dm = ptr::null_mut();
        assert_eq!(fd_distance_matrix_from_features(fm, FdMetric::Euclidean, &mut dm), FdStatus::Ok);
        assert_eq!(fd_distance_matrix_len(dm), 12);

        let mut res = FdPermanovaResult::default();
        assert_eq!(fd_permanova(dm, labels.as_ptr(), labels.len(), 199, 7, &mut res), FdStatus::Ok);

        let rows: Vec<Vec<f64>> = values.chunks(2).map(<[f64]>::to_vec).collect();
        let lib_dm = distance_matrix(&FeatureMatrix::from_rows(&rows).unwrap(), Metric::Euclidean).unwrap();
        let ids: Vec<usize> = labels.iter().map(|&l| l as usize).collect();
        let want = permanova(&lib_dm, &GroupLabels::from_ids(&ids), 199, 7).unwrap();
        assert_eq!(res.pseudo_f, want.pseudo_f);
        assert_eq!(res.p_value, want.test.p_value);
        assert_eq!(res.exceedances, want.test.exceedances);
        assert_eq!((res.df_among, res.df_within), (1, 10));

        let mut disp = FdDispersionResult::default();
        assert_eq!(fd_permdisp(dm, labels.as_ptr(), labels.len(), 199, 7, &mut disp), FdStatus::Ok);
        assert!(disp.p_value > 0.0 && disp.p_value <= 1.0);
        assert!(disp.parametric_p.is_finite());

        fd_distance_matrix_free(dm);
        fd_feature_matrix_free(fm);
    }
}

#[test]
fn precomputed_distances_are_validated() {
    let asym = [0.0, 1.0, 2.0, 0.0];
    let mut dm = ptr::null_mut();
    let st = unsafe { fd_distance_matrix_new(asym.as_ptr(), 2, &mut dm) };
    assert_eq!(st, FdStatus::Data);
    assert!(dm.is_null());
    assert!(last_error().contains("asymmetric"));
}

#[test]
fn single_group_is_a_data_error() {
    let d = [0.0, 1.0, 2.0, 1.0, 0.0, 1.5, 2.0, 1.5, 0.0];
    let labels = [4u32; 3];
    unsafe {
        let mut dm = ptr::null_mut();
        assert_eq!(fd_distance_matrix_new(d.as_ptr(), 3, &mut dm), FdStatus::Ok);
        let mut res = FdPermanovaResult::default();
        assert_eq!(fd_permanova(dm, labels.as_ptr(), 3, 99, 1, &mut res), FdStatus::Data);
        fd_distance_matrix_free(dm);
    }
}

#[test]
fn null_handles_are_rejected() {
    let labels = [0u32, 1];
    let mut res = FdPermanovaResult::default();
    let st = unsafe { fd_permanova(ptr::null(), labels.as_ptr(), 2, 9, 1, &mut res) };
    assert_eq!(st, FdStatus::NullPointer);
    assert!(last_error().contains("dm"));
    assert_eq!(unsafe { fd_distance_matrix_len(ptr::null()) }, 0);
    unsafe {
        fd_distance_matrix_free(ptr::null_mut());
        fd_report_free(ptr::null_mut());
        fd_string_free(ptr::null_mut());
    }
}

#[test]
fn shapiro_and_bartlett() {
    let x: Vec<f64> = (0..20).map(|i| ((i as f64) * 0.37).sin() + i as f64 * 0.05).collect();
    let mut sw = FdShapiroResult::default();
    assert_eq!(unsafe { fd_shapiro_wilk(x.as_ptr(), x.len(), &mut sw) }, FdStatus::Ok);
    assert!(sw.w > 0.0 && sw.w <= 1.0);

    let labels: Vec<u32> = (0..20).map(|i| i % 3).collect();
    let mut b = FdBartlettResult::default();
    assert_eq!(unsafe { fd_bartlett(x.as_ptr(), labels.as_ptr(), x.len(), &mut b) }, FdStatus::Ok);
    assert_eq!(b.df, 2);
    assert!(b.p_value > 0.0 && b.p_value <= 1.0);

    let two = [1.0, 2.0];
    assert_eq!(unsafe { fd_shapiro_wilk(two.as_ptr(), 2, &mut sw) }, FdStatus::Data);
}

#[test]
fn bad_config_is_config_error() {
    let text = CString::new("seed = 1\nunknown_key = 3\n").unwrap();
    let mut report = ptr::null_mut();
    assert_eq!(unsafe { fd_pipeline_run(text.as_ptr(), &mut report) }, FdStatus::Config);
    assert!(report.is_null());

    let bad = [0xffu8, 0];
    let st = unsafe { fd_pipeline_run(bad.as_ptr().cast(), &mut report) };
    assert_eq!(st, FdStatus::InvalidUtf8);
}

#[test]
fn pipeline_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    let out = tmp.path().join("out");
    let cdata = CString::new(data.to_str().unwrap()).unwrap();
    assert_eq!(unsafe { fd_datagen_write(cdata.as_ptr(), 12, 3) }, FdStatus::Ok);

    let cfg = format!(
        "seed = 11\ninput = {:?}\npermutations = 99\nsample_per_cluster = 10\n",
        data.join("manifest.csv").to_str().unwrap()
    );
    let cfg = CString::new(cfg).unwrap();
    unsafe {
        let mut report = ptr::null_mut();
        assert_eq!(fd_pipeline_run(cfg.as_ptr(), &mut report), FdStatus::Ok, "{}", last_error());
        assert_eq!(fd_report_status(report), FdStatus::Ok);
        assert!(fd_report_cluster_count(report) >= 2);

        let mut json = ptr::null_mut();
        assert_eq!(fd_report_to_json(report, &mut json), FdStatus::Ok);
        let text = CStr::from_ptr(json).to_str().unwrap().to_owned();
        fd_string_free(json);
        assert!(text.contains("\"permanova\""));

        let cout = CString::new(out.to_str().unwrap()).unwrap();
        assert_eq!(fd_report_write(report, cout.as_ptr()), FdStatus::Ok);
        assert_eq!(std::fs::read_to_string(out.join("report.json")).unwrap(), text);
        fd_report_free(report);
    }
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/faultdiag.h")).unwrap();
    for name in [
        "fd_last_error_message",
        "fd_feature_matrix_new",
        "fd_distance_matrix_new",
        "fd_permanova",
        "fd_permdisp",
        "fd_shapiro_wilk",
        "fd_bartlett",
        "fd_pipeline_run",
        "fd_report_free",
        "FD_STATUS_NUMERIC = 4",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
    assert!(header.contains("typedef struct FdReport FdReport;"));
}
