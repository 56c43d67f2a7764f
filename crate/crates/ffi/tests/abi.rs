//! Drives the C ABI from Rust: a trained checkpoint embeds exactly as the
//! library does, and bad arguments come back as status codes.

use clap::Parser;
use iccn::cli::{self, Cli};
use iccn::data;
use iccn::iccn::load_model;
use iccn::{checkpoint, Tensor};
use iccn_ffi::*;
use std::ffi::{CStr, CString};
use std::path::Path;
use std::ptr;

fn train(dir: &Path) -> std::path::PathBuf {
    let mmf = dir.join("toy.mmf");
    let out = dir.join("run");
    let s = |p: &Path| p.to_str().unwrap().to_string();
    cli::run(Cli::parse_from(["iccn", "gen", "--preset", "toy", "--seed", "1", "-o", &s(&mmf)])).unwrap();
    cli::run(Cli::parse_from(["iccn", "train", &s(&mmf), "--epochs", "1", "--out", &s(&out)])).unwrap();
    out
}

fn last_error() -> String {
    let p = iccn_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

#[test]
fn embedding_matches_the_library() {
    let d = tempfile::tempdir().unwrap();
    let run = train(d.path());
    let ckpt = CString::new(run.join(cli::CHECKPOINT_FILE).to_str().unwrap()).unwrap();
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { iccn_model_load(ckpt.as_ptr(), ptr::null(), &mut model) }, IccnStatus::Ok);
    assert!(!model.is_null());

    let (mut dt, mut da, mut dv) = (0, 0, 0);
    assert_eq!(unsafe { iccn_model_dims(model, &mut dt, &mut da, &mut dv) }, IccnStatus::Ok);
    let ds = data::load(&d.path().join("toy.mmf")).unwrap();
    let rec = &ds.records[0];
    assert_eq!((dt, da, dv), (rec.text.len(), rec.audio.rows(), rec.video.rows()));

    let width = unsafe { iccn_model_embedding_width(model) };
    let mut got = vec![0.0; width];
    let status = unsafe {
        iccn_model_embed(
            model,
            rec.text.as_ptr(),
            rec.text.len(),
            rec.audio.data().as_ptr(),
            rec.audio.cols(),
            rec.video.data().as_ptr(),
            rec.video.cols(),
            got.as_mut_ptr(),
            width,
        )
    };
    assert_eq!(status, IccnStatus::Ok);

    let cfg = cli::read_model_config(&run.join(cli::CONFIG_FILE)).unwrap();
    let direct = load_model(&cfg, &checkpoint::load(&run.join(cli::CHECKPOINT_FILE)).unwrap()).unwrap();
    assert_eq!(got, direct.extract_embedding(rec).unwrap());

    let mut short = vec![0.0; width - 1];
    let status = unsafe {
        iccn_model_embed(
            model,
            rec.text.as_ptr(),
            rec.text.len(),
            rec.audio.data().as_ptr(),
            rec.audio.cols(),
            rec.video.data().as_ptr(),
            rec.video.cols(),
            short.as_mut_ptr(),
            width - 1,
        )
    };
    assert_eq!(status, IccnStatus::InvalidArgument);
    assert!(last_error().contains("embedding width"));
    unsafe { iccn_model_free(model) };
}

#[test]
fn load_failures_report_status_and_message() {
    let mut model = ptr::null_mut();
    assert_eq!(unsafe { iccn_model_load(ptr::null(), ptr::null(), &mut model) }, IccnStatus::NullPointer);
    assert_eq!(last_error(), "checkpoint is null");
    let missing = CString::new("/nonexistent/model.ckpt").unwrap();
    assert_eq!(unsafe { iccn_model_load(missing.as_ptr(), ptr::null(), &mut model) }, IccnStatus::Data);
    assert!(last_error().contains("/nonexistent/config.json"), "{}", last_error());
    assert!(model.is_null());
    assert_eq!(unsafe { iccn_model_embedding_width(ptr::null()) }, 0);
    unsafe { iccn_model_free(ptr::null_mut()) };
}

#[test]
fn cca_recovers_identical_views() {
    let (n, m) = (3, 50);
    let x: Vec<f64> = (0..n * m).map(|i| ((i * 7919) % 101) as f64 / 10.0).collect();
    let mut cca = ptr::null_mut();
    let status = unsafe { iccn_cca_fit(x.as_ptr(), n, x.as_ptr(), n, m, 2, 1e-8, &mut cca) };
    assert_eq!(status, IccnStatus::Ok);
    let k = unsafe { iccn_cca_components(cca) };
    assert_eq!(k, 2);
    let mut rho = vec![0.0; k];
    assert_eq!(unsafe { iccn_cca_correlations(cca, rho.as_mut_ptr(), k) }, IccnStatus::Ok);
    assert!(rho.iter().all(|&r| r > 0.999), "{rho:?}");
    let reference = iccn::cca::linear_cca(&Tensor::matrix(n, m, x.clone()), &Tensor::matrix(n, m, x), 2, 1e-8).unwrap();
    assert_eq!(rho, reference.correlations);
    assert_eq!(unsafe { iccn_cca_correlations(cca, rho.as_mut_ptr(), 1) }, IccnStatus::InvalidArgument);
    unsafe { iccn_cca_free(cca) };
}

#[test]
fn cca_rejects_too_many_components() {
    let x = [1.0, 2.0, 3.0, 4.0, 2.0, 1.0, 0.0, 5.0];
    let mut cca = ptr::null_mut();
    let status = unsafe { iccn_cca_fit(x.as_ptr(), 2, x.as_ptr(), 2, 4, 5, 1e-6, &mut cca) };
    assert_ne!(status, IccnStatus::Ok);
    assert!(cca.is_null());
    assert!(!last_error().is_empty());
}

#[test]
fn evaluate_matches_known_values() {
    let preds = [1.0, -1.0, 2.0, 0.5];
    let labels = [2.0, -2.0, 2.0, 0.0];
    let mut m = IccnRegressionMetrics::default();
    assert_eq!(unsafe { iccn_evaluate(preds.as_ptr(), labels.as_ptr(), 4, &mut m) }, IccnStatus::Ok);
    assert_eq!(m.n_excluded, 1);
    assert_eq!(m.acc2, 1.0);
    assert!((m.mae - 2.5 / 4.0).abs() < 1e-12);
    assert_eq!(unsafe { iccn_evaluate(preds.as_ptr(), ptr::null(), 4, &mut m) }, IccnStatus::NullPointer);
}

#[test]
fn header_is_generated() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/iccn.h")).unwrap();
    for sym in ["iccn_model_load", "iccn_model_embed", "iccn_cca_fit", "iccn_evaluate", "ICCN_STATUS_PANIC"] {
        assert!(h.contains(sym), "{sym}");
    }
}
