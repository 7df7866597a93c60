//! C ABI over the aggro classifier.
//!
//! Models are opaque `AggroModel` handles created by `aggro_model_load` and
//! released with `aggro_model_free`. Every fallible call returns an
//! `AggroStatus`; on failure the message is available from
//! `aggro_last_error_message` on the same thread. Strings crossing the
//! boundary are NUL-terminated UTF-8. Strings returned by this library are
//! owned by the caller and must be released with `aggro_string_free`.
//!
//! Panics never cross the boundary; they are reported as
//! `AGGRO_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use aggro::corpus::ClassLabel;
use aggro::eval::{confusion, weighted_f1};
use aggro::modelfile::ModelFileError;
use aggro::pipeline::TrainedModel;
use aggro::preprocess::{preprocess_text, PreprocessOptions};

/// Result codes shared by every fallible function.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggroStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    CorruptModel = 4,
    UnsupportedVersion = 5,
    InvalidArgument = 6,
    Panic = 7,
}

/// Class codes used for labels and probability slots.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AggroLabel {
    Nag = 0,
    Cag = 1,
    Oag = 2,
}

/// Number of classes; probability buffers must hold this many doubles.
pub const AGGRO_NUM_CLASSES: usize = 3;

/// A loaded model. Opaque to C.
pub struct AggroModel {
    inner: TrainedModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut msg = msg.into();
    msg.retain(|c| c != '\0');
    let c = CString::new(msg).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Failure(AggroStatus, String);

impl From<aggro::Error> for Failure {
    fn from(e: aggro::Error) -> Self {
        let status = match &e {
            aggro::Error::Io { .. } => AggroStatus::Io,
            aggro::Error::ModelFile(ModelFileError::UnsupportedVersion { .. }) => {
                AggroStatus::UnsupportedVersion
            }
            aggro::Error::ModelFile(ModelFileError::Io { .. }) => AggroStatus::Io,
            aggro::Error::ModelFile(_) => AggroStatus::CorruptModel,
            _ => AggroStatus::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> AggroStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            clear_error();
            AggroStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_error(format!("panic: {msg}"));
            AggroStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(AggroStatus::NullArgument, format!("{what} is null"))
}

/// Borrow a C string as UTF-8.
///
/// # Safety
/// `p` must be null or point to a NUL-terminated string that outlives `'a`.
unsafe fn utf8<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(AggroStatus::InvalidUtf8, format!("{what}: {e}")))
}

fn into_c_string(s: String) -> *mut c_char {
    let mut s = s;
    s.retain(|c| c != '\0');
    CString::new(s).expect("interior NULs removed").into_raw()
}

/// Load a model file. On success `*out` receives a handle to release with
/// `aggro_model_free`; on failure `*out` is set to null.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aggro_model_load(
    path: *const c_char,
    out: *mut *mut AggroModel,
) -> AggroStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let path = utf8(path, "path")?;
        let inner = TrainedModel::load(Path::new(path))?;
        *out = Box::into_raw(Box::new(AggroModel { inner }));
        Ok(())
    })
}

/// Release a model. Null is ignored.
///
/// # Safety
/// `model` must be null or a handle from `aggro_model_load` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aggro_model_free(model: *mut AggroModel) {
    if !model.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(model))));
    }
}

/// Classify one post. `out_label` receives an `AggroLabel` code and
/// `out_probs`, if not null, the three class probabilities in code order.
///
/// # Safety
/// `model` must be a live handle, `text` a NUL-terminated string,
/// `out_label` a valid pointer and `out_probs` null or room for three doubles.
#[no_mangle]
pub unsafe extern "C" fn aggro_model_predict(
    model: *const AggroModel,
    text: *const c_char,
    out_label: *mut i32,
    out_probs: *mut f64,
) -> AggroStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        if out_label.is_null() {
            return Err(null("out_label"));
        }
        let text = utf8(text, "text")?;
        let (label, probs) = model.inner.predict_text(text)?;
        *out_label = label.code() as i32;
        if !out_probs.is_null() {
            let dst = std::slice::from_raw_parts_mut(out_probs, AGGRO_NUM_CLASSES);
            dst.copy_from_slice(&probs.as_slice()[..AGGRO_NUM_CLASSES]);
        }
        Ok(())
    })
}

/// Vocabulary size of a loaded model, or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn aggro_model_vocab_size(model: *const AggroModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.vocab.len())
}

/// Preprocessed tokens of `text` as the model sees them, joined by single
/// spaces. With a null `model` the default pipeline is used (no spelling
/// correction, built-in lemmatizer). Release `*out` with `aggro_string_free`.
///
/// # Safety
/// `model` must be null or a live handle, `text` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn aggro_preprocess(
    model: *const AggroModel,
    text: *const c_char,
    out: *mut *mut c_char,
) -> AggroStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let text = utf8(text, "text")?;
        let tokens = match model.as_ref() {
            Some(m) => m.inner.tokens(text),
            None => preprocess_text(text, &PreprocessOptions::default()),
        };
        *out = into_c_string(tokens.join(" "));
        Ok(())
    })
}

/// Support-weighted F1 of `pred` against `gold`, both arrays of `n` label
/// codes.
///
/// # Safety
/// `gold` and `pred` must point to `n` readable values and `out` be valid.
#[no_mangle]
pub unsafe extern "C" fn aggro_weighted_f1(
    gold: *const i32,
    pred: *const i32,
    n: usize,
    out: *mut f64,
) -> AggroStatus {
    guard(|| {
        if gold.is_null() || pred.is_null() || out.is_null() {
            return Err(null("gold, pred or out"));
        }
        let labels = |p: *const i32, what: &str| -> Result<Vec<ClassLabel>, Failure> {
            std::slice::from_raw_parts(p, n)
                .iter()
                .map(|&c| {
                    usize::try_from(c)
                        .ok()
                        .and_then(ClassLabel::from_code)
                        .ok_or_else(|| {
                            Failure(
                                AggroStatus::InvalidArgument,
                                format!("{what}: invalid label code {c}"),
                            )
                        })
                })
                .collect()
        };
        let gold = labels(gold, "gold")?;
        let pred = labels(pred, "pred")?;
        let m = confusion(&gold, &pred)?;
        *out = weighted_f1(&m).weighted_f1;
        Ok(())
    })
}

/// Name ("NAG", "CAG", "OAG") of a label code, or null if out of range.
/// The string is static.
#[no_mangle]
pub extern "C" fn aggro_label_name(label: i32) -> *const c_char {
    match label {
        0 => c"NAG".as_ptr(),
        1 => c"CAG".as_ptr(),
        2 => c"OAG".as_ptr(),
        _ => ptr::null(),
    }
}

/// Message for the last failed call on this thread, or null. Valid until
/// the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn aggro_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must be null or a string from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn aggro_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string.
#[no_mangle]
pub extern "C" fn aggro_version() -> *const c_char {
    const V: &str = concat!(env!("CARGO_PKG_VERSION"), "\0");
    V.as_ptr().cast()
}
