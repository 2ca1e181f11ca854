//! C ABI over the `depdetect` toolkit.
//!
//! Models are opaque `DdModel` handles created by `dd_model_load` or
//! `dd_model_load_bytes` and released with `dd_model_free`. Every fallible
//! call returns a `DdStatus`; on failure `dd_last_error` gives a message for
//! the calling thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use depdetect::eval::{metrics, ConfusionMatrix};
use depdetect::persist::PersistError;
use depdetect::pipeline::{PipelineError, TrainedPipeline};
use depdetect::profiler;
use depdetect::Label;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    /// Not an artifact, or a malformed one.
    Format = 4,
    /// Truncated or corrupted artifact.
    Integrity = 5,
    UnsupportedVersion = 6,
    InvalidArgument = 7,
    Panic = 8,
}

/// Loaded model; only ever handled through a pointer.
pub struct DdModel {
    inner: TrainedPipeline,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdProfile {
    pub n_tweets: usize,
    pub n_depressive: usize,
    pub fraction: f64,
    pub threshold: f64,
    pub flagged: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DdMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
}

pub const DD_LABEL_NON_DEPRESSIVE: i32 = 0;
pub const DD_LABEL_DEPRESSIVE: i32 = 1;

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(DdStatus, String);

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Failure {
        let status = match &e {
            PipelineError::Io { .. } => DdStatus::Io,
            PipelineError::Persist(p) => match p {
                PersistError::Io(_) => DdStatus::Io,
                PersistError::Integrity(_) => DdStatus::Integrity,
                PersistError::UnsupportedVersion(_) => DdStatus::UnsupportedVersion,
                _ => DdStatus::Format,
            },
            PipelineError::Parity(_) => DdStatus::Integrity,
            _ => DdStatus::Format,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            DdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            DdStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(DdStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(DdStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn model_arg<'a>(m: *const DdModel) -> Result<&'a TrainedPipeline, Failure> {
    m.as_ref().map(|m| &m.inner).ok_or_else(|| null("model"))
}

/// Loads a `.ddm` file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_model_load(path: *const c_char, out: *mut *mut DdModel) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let inner = TrainedPipeline::load_file(Path::new(path))?;
        *out = Box::into_raw(Box::new(DdModel { inner }));
        Ok(())
    })
}

/// Loads an artifact from memory.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn dd_model_load_bytes(data: *const u8, len: usize, out: *mut *mut DdModel) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        if data.is_null() {
            return Err(null("data"));
        }
        let bytes = std::slice::from_raw_parts(data, len);
        let inner = TrainedPipeline::load(bytes)?;
        *out = Box::into_raw(Box::new(DdModel { inner }));
        Ok(())
    })
}

/// Releases a model. Null is ignored.
///
/// # Safety
/// `model` must come from a load call and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn dd_model_free(model: *mut DdModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Classifier name (`mnb`, `svm`, `rf`, `lstm`) as a static string.
///
/// # Safety
/// `model` and `out` must be valid pointers.
#[no_mangle]
pub unsafe extern "C" fn dd_model_kind(model: *const DdModel, out: *mut *const c_char) -> DdStatus {
    guard(|| {
        let m = model_arg(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let s: &'static CStr = match m.kind().as_str() {
            "mnb" => c"mnb",
            "svm" => c"svm",
            "rf" => c"rf",
            _ => c"lstm",
        };
        *out = s.as_ptr();
        Ok(())
    })
}

/// Classifies one text with the model's stored preprocessing. `out_label`
/// receives `DD_LABEL_DEPRESSIVE` or `DD_LABEL_NON_DEPRESSIVE`; `out_score`
/// may be null.
///
/// # Safety
/// `model`, `text` and `out_label` must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn dd_predict(model: *const DdModel, text: *const c_char, out_label: *mut i32, out_score: *mut f64) -> DdStatus {
    guard(|| {
        let m = model_arg(model)?;
        let text = str_arg(text, "text")?;
        if out_label.is_null() {
            return Err(null("out_label"));
        }
        let p = m.predict_text(text);
        *out_label = match p.label {
            Label::Depressive => DD_LABEL_DEPRESSIVE,
            Label::NonDepressive => DD_LABEL_NON_DEPRESSIVE,
        };
        if !out_score.is_null() {
            *out_score = p.score;
        }
        Ok(())
    })
}

/// Classifies `n` tweets of one user and applies the flag rule
/// `fraction > threshold`.
///
/// # Safety
/// `texts` must point to `n` NUL-terminated strings; `model` and `out` valid.
#[no_mangle]
pub unsafe extern "C" fn dd_profile(
    model: *const DdModel,
    texts: *const *const c_char,
    n: usize,
    threshold: f64,
    out: *mut DdProfile,
) -> DdStatus {
    guard(|| {
        let m = model_arg(model)?;
        if out.is_null() {
            return Err(null("out"));
        }
        if texts.is_null() && n > 0 {
            return Err(null("texts"));
        }
        let ptrs = if n == 0 { &[][..] } else { std::slice::from_raw_parts(texts, n) };
        let texts = ptrs.iter().map(|&p| str_arg(p, "tweet")).collect::<Result<Vec<&str>, _>>()?;
        let labels: Vec<Label> = m.predict_batch(&texts).into_iter().map(|p| p.label).collect();
        let r = profiler::profile_from_labels("", &labels, threshold).map_err(|e| Failure(DdStatus::InvalidArgument, e.to_string()))?;
        *out = DdProfile {
            n_tweets: r.n_tweets,
            n_depressive: r.n_depressive,
            fraction: r.fraction,
            threshold: r.threshold,
            flagged: r.flagged,
        };
        Ok(())
    })
}

/// Precision, recall, F1 and accuracy from confusion counts; undefined
/// ratios are 0.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn dd_metrics(tp: u64, fp: u64, fn_: u64, tn: u64, out: *mut DdMetrics) -> DdStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = metrics(&ConfusionMatrix { tp, fp, fn_, tn });
        *out = DdMetrics { precision: m.precision, recall: m.recall, f1: m.f1, accuracy: m.accuracy };
        Ok(())
    })
}

/// Message of the last failed call on this thread, empty after a success.
/// Valid until the next call from the same thread.
#[no_mangle]
pub extern "C" fn dd_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn dd_version() -> *const c_char {
    static VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}
