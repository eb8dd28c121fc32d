// SPDX-License-Identifier: Apache-2.0

//! C ABI for semno. The generated header lives at `include/semno.h`.
//!
//! Every fallible function returns a [`SemnoStatus`]; on failure the message
//! is available from [`semno_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function. Strings returned
//! through out-parameters are owned by the caller and released with
//! [`semno_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use semno::artifact;
use semno::cleanse::{clean_tokens, StopwordList};
use semno::config::{ConfigMap, PipelineConfig};
use semno::filter::{classify_sentence, encode_sentence, ConceptIndex};
use semno::infuse::infusion_frequency;
use semno::pipeline::{Pipeline, RunOptions, Stage};
use semno::semgraph::{select_anchored, RetainedCommunities};
use semno::Error;

/// Status codes. The nonzero values below `SEMNO_STATUS_INVALID_ARGUMENT`
/// match the command-line exit codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SemnoStatus {
    Ok = 0,
    /// Bad configuration, parameter or input file.
    Config = 2,
    /// Missing, malformed or mismatched artifact.
    Artifact = 3,
    /// Failure while running a stage.
    Runtime = 4,
    /// Null pointer or invalid UTF-8 argument.
    InvalidArgument = 5,
    /// A Rust panic was caught at the boundary.
    Panic = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(e: &Error) -> SemnoStatus {
    set_error(e.to_string());
    match e.exit_code() {
        2 => SemnoStatus::Config,
        3 => SemnoStatus::Artifact,
        _ => SemnoStatus::Runtime,
    }
}

struct Invalid(String);

/// Runs `f`, converting errors and panics to a status.
fn guard<F>(f: F) -> SemnoStatus
where
    F: FnOnce() -> Result<Result<(), Error>, Invalid>,
{
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(Ok(()))) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SemnoStatus::Ok
        }
        Ok(Ok(Err(e))) => fail(&e),
        Ok(Err(Invalid(msg))) => {
            set_error(msg);
            SemnoStatus::InvalidArgument
        }
        Err(_) => {
            set_error("internal panic");
            SemnoStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> Result<&'a str, Invalid> {
    if p.is_null() {
        return Err(Invalid(format!("`{name}` is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Invalid(format!("`{name}` is not valid UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, name: &str) -> Result<&'a T, Invalid> {
    p.as_ref().ok_or_else(|| Invalid(format!("`{name}` is null")))
}

fn out_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn semno_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn semno_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Anchors inserted into a clean sentence of `len` tokens.
#[no_mangle]
pub extern "C" fn semno_infusion_frequency(len: usize) -> usize {
    infusion_frequency(len)
}

/// Tokenizes `text` and removes stop words; `stopwords` is a builtin tag
/// (`english`, `none`) or a file path. `*out` receives the space-joined
/// tokens.
///
/// # Safety
/// `text` and `stopwords` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn semno_clean_text(
    text: *const c_char,
    stopwords: *const c_char,
    out: *mut *mut c_char,
) -> SemnoStatus {
    guard(|| {
        let text = str_arg(text, "text")?;
        let spec = str_arg(stopwords, "stopwords")?;
        if out.is_null() {
            return Err(Invalid("`out` is null".into()));
        }
        Ok(StopwordList::load(spec).map(|stops| {
            *out = out_string(clean_tokens(text, &stops).join(" "));
        }))
    })
}

/// Pipeline configuration: defaults, optionally a config file, plus
/// key/value overrides.
pub struct SemnoConfig {
    map: ConfigMap,
}

/// Creates a configuration from `path`, or from defaults when `path` is
/// null.
///
/// # Safety
/// `path` must be null or a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn semno_config_new(path: *const c_char, out: *mut *mut SemnoConfig) -> SemnoStatus {
    guard(|| {
        if out.is_null() {
            return Err(Invalid("`out` is null".into()));
        }
        let map = if path.is_null() {
            Ok(ConfigMap::default())
        } else {
            ConfigMap::load(Path::new(str_arg(path, "path")?))
        };
        Ok(map.map(|map| *out = Box::into_raw(Box::new(SemnoConfig { map }))))
    })
}

/// Sets a config key. Relative paths resolve against the working directory.
///
/// # Safety
/// `config` must be a live handle; `key` and `value` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn semno_config_set(
    config: *mut SemnoConfig,
    key: *const c_char,
    value: *const c_char,
) -> SemnoStatus {
    guard(|| {
        let config = config
            .as_mut()
            .ok_or_else(|| Invalid("`config` is null".into()))?;
        let key = str_arg(key, "key")?;
        let value = str_arg(value, "value")?;
        Ok(config.map.set(key, value, Path::new("")))
    })
}

/// # Safety
/// `config` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semno_config_free(config: *mut SemnoConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

fn pipeline(config: &SemnoConfig, threads: usize, force: bool) -> Result<Pipeline, Error> {
    let mut options = RunOptions {
        force,
        ..RunOptions::default()
    };
    if threads > 0 {
        options.threads = threads;
    }
    Pipeline::new(PipelineConfig::from_map(&config.map)?, options)
}

/// Runs one stage by name. `threads` 0 uses every core.
///
/// # Safety
/// `config` must be a live handle; `stage` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn semno_run_stage(
    config: *const SemnoConfig,
    stage: *const c_char,
    threads: usize,
    force: bool,
) -> SemnoStatus {
    guard(|| {
        let config = handle(config, "config")?;
        let stage = str_arg(stage, "stage")?;
        Ok(stage
            .parse::<Stage>()
            .and_then(|s| pipeline(config, threads, force)?.run_stage(s))
            .map(drop))
    })
}

/// Runs cleanse through filter, plus pip when `pip.enabled` is set.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn semno_run_all(config: *const SemnoConfig, threads: usize, force: bool) -> SemnoStatus {
    guard(|| {
        let config = handle(config, "config")?;
        Ok(pipeline(config, threads, force).and_then(|p| p.run_all()).map(drop))
    })
}

/// Anchored communities loaded from a hierarchy artifact, ready to classify
/// sentences.
pub struct SemnoFilter {
    index: ConceptIndex,
    stopwords: StopwordList,
}

/// Opens the hierarchy artifact at `path`; sentences passed to
/// [`semno_filter_classify`] are cleaned with `stopwords`.
///
/// # Safety
/// `path` and `stopwords` must be NUL-terminated strings; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn semno_filter_open(
    path: *const c_char,
    stopwords: *const c_char,
    out: *mut *mut SemnoFilter,
) -> SemnoStatus {
    guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        let spec = str_arg(stopwords, "stopwords")?;
        if out.is_null() {
            return Err(Invalid("`out` is null".into()));
        }
        let open = || -> Result<SemnoFilter, Error> {
            let (_, retained) = artifact::load::<RetainedCommunities>(path)?;
            Ok(SemnoFilter {
                index: ConceptIndex::new(&select_anchored(&retained)?),
                stopwords: StopwordList::load(spec)?,
            })
        };
        Ok(open().map(|f| *out = Box::into_raw(Box::new(f))))
    })
}

/// Number of anchored communities, the length of a sentence's encoding.
///
/// # Safety
/// `filter` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn semno_filter_community_count(filter: *const SemnoFilter) -> usize {
    filter.as_ref().map_or(0, |f| f.index.len())
}

/// Classifies one raw sentence; `*is_noise` is true when it shares no word
/// with any anchored community.
///
/// # Safety
/// `filter` must be a live handle, `sentence` a NUL-terminated string and
/// `is_noise` writable.
#[no_mangle]
pub unsafe extern "C" fn semno_filter_classify(
    filter: *const SemnoFilter,
    sentence: *const c_char,
    is_noise: *mut bool,
) -> SemnoStatus {
    guard(|| {
        let filter = handle(filter, "filter")?;
        let sentence = str_arg(sentence, "sentence")?;
        if is_noise.is_null() {
            return Err(Invalid("`is_noise` is null".into()));
        }
        let tokens = clean_tokens(sentence, &filter.stopwords);
        *is_noise = classify_sentence(&encode_sentence(&tokens, &filter.index));
        Ok(Ok(()))
    })
}

/// # Safety
/// `filter` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn semno_filter_free(filter: *mut SemnoFilter) {
    if !filter.is_null() {
        drop(Box::from_raw(filter));
    }
}
