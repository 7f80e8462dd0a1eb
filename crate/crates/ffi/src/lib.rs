//! C ABI over the skillparse library.
//!
//! Every call returns an [`SpStatus`]; on failure the message is available
//! from [`sp_last_error`] on the same thread until the next failing call.
//! Handles are opaque and owned by the caller, who releases them with the
//! matching `_free` function. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use skillparse::corpus::{split_annotated, Dataset, EvalAccess};
use skillparse::evaluation::{offline_subtask_accuracy, run_baseline, BaselineKind, OfflinePolicy, Policy, Trained};
use skillparse::gridworld::{generate_corpus, EnvConfig};
use skillparse::segmentation::segment_viterbi;
use skillparse::store::{load_policy, save_trained};
use skillparse::training::TrainConfig;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidArgument = 2,
    Io = 3,
    Training = 4,
    Evaluation = 5,
    BufferTooSmall = 6,
    Panic = 99,
}

/// A corpus of demonstrations.
pub struct SpDataset {
    inner: Dataset,
}

/// A trained policy.
pub struct SpModel {
    trained: Option<Trained>,
    policy: Policy,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

struct Fail(SpStatus, String);

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SpStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SpStatus::Ok,
        Ok(Err(Fail(code, msg))) => {
            set_error(msg);
            code
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal panic: {msg}"));
            SpStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Fail> {
    if p.is_null() {
        Err(Fail(SpStatus::NullArgument, format!("`{name}` is null")))
    } else {
        Ok(())
    }
}

unsafe fn string_arg(p: *const c_char, name: &str) -> Result<String, Fail> {
    non_null(p, name)?;
    CStr::from_ptr(p)
        .to_str()
        .map(str::to_owned)
        .map_err(|_| Fail(SpStatus::InvalidArgument, format!("`{name}` is not valid UTF-8")))
}

/// Message of the last failed call on this thread, or null. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn sp_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn sp_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generate `n` expert demonstrations with the default environment, seeds
/// `first_seed..first_seed + n`. `teleport` non-zero collapses navigation.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn sp_dataset_generate(n: usize, first_seed: u64, teleport: i32, out: *mut *mut SpDataset) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        let env = if teleport != 0 { EnvConfig::default().teleport() } else { EnvConfig::default() };
        let d = generate_corpus(&env, n, first_seed).map_err(|e| Fail(SpStatus::InvalidArgument, e.to_string()))?;
        *out = Box::into_raw(Box::new(SpDataset { inner: d }));
        Ok(())
    })
}

/// Load a JSON Lines corpus.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_dataset_load(path: *const c_char, out: *mut *mut SpDataset) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        let p = string_arg(path, "path")?;
        let d = Dataset::load(&PathBuf::from(p)).map_err(|e| Fail(SpStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(SpDataset { inner: d }));
        Ok(())
    })
}

/// # Safety
/// `ds` must come from this library; `path` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sp_dataset_save(ds: *const SpDataset, path: *const c_char) -> SpStatus {
    guard(|| {
        non_null(ds, "ds")?;
        let p = string_arg(path, "path")?;
        (*ds).inner.save(&PathBuf::from(p)).map_err(|e| Fail(SpStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `ds` must come from this library; `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_dataset_len(ds: *const SpDataset, out_len: *mut usize) -> SpStatus {
    guard(|| {
        non_null(ds, "ds")?;
        non_null(out_len, "out_len")?;
        *out_len = (*ds).inner.len();
        Ok(())
    })
}

/// Release a dataset; null is ignored.
///
/// # Safety
/// `ds` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_dataset_free(ds: *mut SpDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// Train an arm (`"sl3"`, `"seq2seq"`, `"seq2seq2seq"` or `"no_latent"`)
/// keeping `fraction` of the annotations. `iterations` of 0 keeps the default.
///
/// # Safety
/// `ds` must come from this library; `arm` must be a NUL-terminated string;
/// `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_train(
    ds: *const SpDataset,
    fraction: f64,
    seed: u64,
    arm: *const c_char,
    iterations: usize,
    out: *mut *mut SpModel,
) -> SpStatus {
    guard(|| {
        non_null(ds, "ds")?;
        non_null(out, "out")?;
        let kind: BaselineKind = string_arg(arm, "arm")?
            .parse()
            .map_err(|e: String| Fail(SpStatus::InvalidArgument, e))?;
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Fail(SpStatus::InvalidArgument, format!("fraction {fraction} outside (0, 1]")));
        }
        let mut cfg = TrainConfig {
            seed,
            ..TrainConfig::default()
        };
        if iterations > 0 {
            cfg.iterations = iterations;
        }
        let (ann, unann) = split_annotated(&(*ds).inner, fraction, seed);
        let t = run_baseline(kind, &unann, &ann, &cfg).map_err(|e| Fail(SpStatus::Training, e.to_string()))?;
        *out = Box::into_raw(Box::new(SpModel {
            policy: t.policy.clone(),
            trained: Some(t),
        }));
        Ok(())
    })
}

/// Write a trained model's checkpoints into `dir`.
///
/// # Safety
/// `model` must come from this library; `dir` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn sp_model_save(model: *const SpModel, dir: *const c_char) -> SpStatus {
    guard(|| {
        non_null(model, "model")?;
        let d = string_arg(dir, "dir")?;
        let Some(t) = &(*model).trained else {
            return Err(Fail(SpStatus::InvalidArgument, "loaded models are read-only".into()));
        };
        save_trained(&PathBuf::from(d), t).map_err(|e| Fail(SpStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `dir` must be a NUL-terminated string; `out` a valid handle slot.
#[no_mangle]
pub unsafe extern "C" fn sp_model_load(dir: *const c_char, out: *mut *mut SpModel) -> SpStatus {
    guard(|| {
        non_null(out, "out")?;
        let d = string_arg(dir, "dir")?;
        let (_, policy) = load_policy(&PathBuf::from(d)).map_err(|e| Fail(SpStatus::Io, e.to_string()))?;
        *out = Box::into_raw(Box::new(SpModel { trained: None, policy }));
        Ok(())
    })
}

/// Release a model; null is ignored.
///
/// # Safety
/// `model` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn sp_model_free(model: *mut SpModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Average offline subtask accuracy on a test corpus with ground truth.
///
/// # Safety
/// Handles must come from this library; `out_accuracy` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_eval_offline(model: *const SpModel, test: *const SpDataset, out_accuracy: *mut f64) -> SpStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(test, "test")?;
        non_null(out_accuracy, "out_accuracy")?;
        let r = offline_subtask_accuracy(OfflinePolicy::Learned(&(*model).policy), &(*test).inner, &EvalAccess::grant())
            .map_err(|e| Fail(SpStatus::Evaluation, e.to_string()))?;
        *out_accuracy = r.average.or_zero();
        Ok(())
    })
}

/// Segment demo `index` of an annotated corpus against its annotation with
/// the model's executor. Writes 1-based segment ordinals, one per action,
/// into `out` (capacity `cap`) and the action count into `out_len`; returns
/// `BufferTooSmall` with `out_len` set when `cap` is short.
///
/// # Safety
/// Handles must come from this library; `out` must hold `cap` elements and
/// `out_len` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sp_segment(
    model: *const SpModel,
    ds: *const SpDataset,
    index: usize,
    out: *mut usize,
    cap: usize,
    out_len: *mut usize,
) -> SpStatus {
    guard(|| {
        non_null(model, "model")?;
        non_null(ds, "ds")?;
        non_null(out_len, "out_len")?;
        let demos = &(*ds).inner.demos;
        let d = demos
            .get(index)
            .ok_or_else(|| Fail(SpStatus::InvalidArgument, format!("index {index} out of range")))?;
        let ann = d
            .annotation
            .as_ref()
            .ok_or_else(|| Fail(SpStatus::InvalidArgument, format!("demonstration {} is unannotated", d.id)))?;
        let (a, _) = segment_viterbi(d, ann, (*model).policy.executor())
            .map_err(|e| Fail(SpStatus::InvalidArgument, e.to_string()))?;
        *out_len = a.len();
        if cap < a.len() {
            return Err(Fail(SpStatus::BufferTooSmall, format!("need {} slots, got {cap}", a.len())));
        }
        non_null(out, "out")?;
        std::slice::from_raw_parts_mut(out, a.len()).copy_from_slice(&a.0);
        Ok(())
    })
}
