//! C ABI over the `iccn` crate.
//!
//! Handles are opaque and owned by the caller until passed to the matching
//! `*_free`. Every fallible call returns an [`IccnStatus`]; on failure the
//! message is available from [`iccn_last_error_message`] on the same thread
//! until the next failing call. Panics never cross the boundary.

use iccn::cca::{linear_cca, CcaSolution};
use iccn::data::UtteranceRecord;
use iccn::downstream::{evaluate_regression, FScoreMode};
use iccn::iccn::{load_model, IccnModel as Model};
use iccn::{checkpoint, cli, Error, Tensor};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IccnStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Config = 5,
    Data = 6,
    Numerical = 7,
    Evaluation = 8,
    Panic = 9,
}

/// Trained ICCN model.
pub struct IccnModel {
    inner: Model,
}

/// Fitted linear CCA.
pub struct IccnCca {
    inner: CcaSolution,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IccnRegressionMetrics {
    pub acc2: f64,
    pub f_score: f64,
    pub mae: f64,
    pub acc7: f64,
    pub corr: f64,
    pub n_excluded: usize,
    /// Non-zero when `corr` was forced to 0 by a zero-variance side.
    pub corr_degenerate: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> IccnStatus {
    match e {
        Error::Io(_) => IccnStatus::Io,
        Error::Parse { .. } | Error::Json(_) => IccnStatus::Parse,
        Error::Config(_) | Error::MinibatchTooSmall { .. } => IccnStatus::Config,
        Error::Data(_) | Error::DegenerateInput(_) | Error::DegenerateSample { .. } => IccnStatus::Data,
        Error::Contract(_) => IccnStatus::InvalidArgument,
        Error::Evaluation(_) => IccnStatus::Evaluation,
        Error::Numerical(_)
        | Error::Singular { .. }
        | Error::NonFiniteGradient { .. }
        | Error::NonFiniteLoss { .. } => IccnStatus::Numerical,
    }
}

/// Runs `f`, converting errors and panics into a status plus message.
fn guard(f: impl FnOnce() -> Result<(), (IccnStatus, String)>) -> IccnStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IccnStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("internal panic: {msg}"));
            IccnStatus::Panic
        }
    }
}

fn lib(e: Error) -> (IccnStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (IccnStatus, String) {
    (IccnStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> (IccnStatus, String) {
    (IccnStatus::InvalidArgument, msg.into())
}

unsafe fn path_arg<'a>(p: *const c_char, what: &str) -> Result<&'a Path, (IccnStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn slice_arg<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (IccnStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// Message of the last failure on this thread, or null. Owned by the library.
#[no_mangle]
pub extern "C" fn iccn_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Loads a checkpoint written by `iccn train`. `config` is the run's
/// config.json; null means config.json beside the checkpoint.
///
/// # Safety
/// `checkpoint` and `config` (if non-null) must be NUL-terminated strings;
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn iccn_model_load(
    checkpoint: *const c_char,
    config: *const c_char,
    out: *mut *mut IccnModel,
) -> IccnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let ckpt = path_arg(checkpoint, "checkpoint")?;
        let cfg_path = if config.is_null() {
            ckpt.parent().unwrap_or(Path::new(".")).join(cli::CONFIG_FILE)
        } else {
            path_arg(config, "config")?.to_path_buf()
        };
        let cfg = cli::read_model_config(&cfg_path).map_err(lib)?;
        let inner = load_model(&cfg, &checkpoint::load(ckpt).map_err(lib)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(IccnModel { inner }));
        Ok(())
    })
}

/// Width of one embedding row, [K_ta; H_t; K_tv]. 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle from [`iccn_model_load`].
#[no_mangle]
pub unsafe extern "C" fn iccn_model_embedding_width(model: *const IccnModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.config.output_width())
}

/// Input widths expected by the model.
///
/// # Safety
/// `model` must be a live handle; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn iccn_model_dims(
    model: *const IccnModel,
    d_t: *mut usize,
    d_a: *mut usize,
    d_v: *mut usize,
) -> IccnStatus {
    guard(|| {
        let m = model.as_ref().ok_or_else(|| null("model"))?;
        if d_t.is_null() || d_a.is_null() || d_v.is_null() {
            return Err(null("dims output"));
        }
        *d_t = m.inner.config.d_t;
        *d_a = m.inner.config.d_a;
        *d_v = m.inner.config.d_v;
        Ok(())
    })
}

/// Embeds one utterance. `audio` is d_a x audio_frames and `video` is
/// d_v x video_frames, both row-major (one row per feature).
///
/// # Safety
/// Every pointer must address at least the stated number of doubles.
#[no_mangle]
pub unsafe extern "C" fn iccn_model_embed(
    model: *const IccnModel,
    text: *const f64,
    text_len: usize,
    audio: *const f64,
    audio_frames: usize,
    video: *const f64,
    video_frames: usize,
    out: *mut f64,
    out_len: usize,
) -> IccnStatus {
    guard(|| {
        let m = &model.as_ref().ok_or_else(|| null("model"))?.inner;
        let c = &m.config;
        if text_len != c.d_t {
            return Err(invalid(format!("text has {text_len} values, model expects {}", c.d_t)));
        }
        let width = c.output_width();
        if out_len != width {
            return Err(invalid(format!("output buffer holds {out_len} values, embedding width is {width}")));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let text = slice_arg(text, text_len, "text")?.to_vec();
        let audio = slice_arg(audio, c.d_a * audio_frames, "audio")?.to_vec();
        let video = slice_arg(video, c.d_v * video_frames, "video")?.to_vec();
        let rec = UtteranceRecord {
            id: "ffi".into(),
            text,
            audio: Tensor::new(vec![c.d_a, audio_frames], audio).map_err(lib)?,
            video: Tensor::new(vec![c.d_v, video_frames], video).map_err(lib)?,
            label: vec![0.0],
        };
        let row = m.extract_embedding(&rec).map_err(lib)?;
        std::slice::from_raw_parts_mut(out, width).copy_from_slice(&row);
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iccn_model_free(model: *mut IccnModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Linear CCA of `x` (n1 x m) and `y` (n2 x m), row-major, one column per
/// sample, keeping `r` components with ridge `eps`.
///
/// # Safety
/// `x` and `y` must address n1*m and n2*m doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn iccn_cca_fit(
    x: *const f64,
    n1: usize,
    y: *const f64,
    n2: usize,
    m: usize,
    r: usize,
    eps: f64,
    out: *mut *mut IccnCca,
) -> IccnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let xs = slice_arg(x, n1 * m, "x")?;
        let ys = slice_arg(y, n2 * m, "y")?;
        let inner = linear_cca(
            &Tensor::matrix(n1, m, xs.to_vec()),
            &Tensor::matrix(n2, m, ys.to_vec()),
            r,
            eps,
        )
        .map_err(lib)?;
        *out = Box::into_raw(Box::new(IccnCca { inner }));
        Ok(())
    })
}

/// Number of retained components; 0 for a null handle.
///
/// # Safety
/// `cca` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn iccn_cca_components(cca: *const IccnCca) -> usize {
    cca.as_ref().map_or(0, |c| c.inner.correlations.len())
}

/// Copies the canonical correlations (descending) into `out`.
///
/// # Safety
/// `out` must address `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn iccn_cca_correlations(cca: *const IccnCca, out: *mut f64, len: usize) -> IccnStatus {
    guard(|| {
        let c = &cca.as_ref().ok_or_else(|| null("cca"))?.inner.correlations;
        if len != c.len() {
            return Err(invalid(format!("buffer holds {len} values, solution has {}", c.len())));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(c);
        Ok(())
    })
}

/// # Safety
/// `cca` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn iccn_cca_free(cca: *mut IccnCca) {
    if !cca.is_null() {
        drop(Box::from_raw(cca));
    }
}

/// Sentiment metrics for `n` predictions against labels in [-3, 3], with
/// support-weighted F1.
///
/// # Safety
/// `predictions` and `labels` must address `n` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn iccn_evaluate(
    predictions: *const f64,
    labels: *const f64,
    n: usize,
    out: *mut IccnRegressionMetrics,
) -> IccnStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = slice_arg(predictions, n, "predictions")?;
        let l = slice_arg(labels, n, "labels")?;
        let m = evaluate_regression(p, l, FScoreMode::Weighted).map_err(lib)?;
        *out = IccnRegressionMetrics {
            acc2: m.acc2,
            f_score: m.f_score,
            mae: m.mae,
            acc7: m.acc7,
            corr: m.corr,
            n_excluded: m.n_excluded,
            corr_degenerate: m.corr_degenerate,
        };
        Ok(())
    })
}
