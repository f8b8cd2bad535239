//! C ABI over `cocompact`.
//!
//! Objects are opaque heap handles released with their `*_free` function.
//! Every fallible call returns a [`CocoStatus`]; on failure the message is
//! available from [`coco_last_error`] on the same thread.
//!
//! # Safety
//!
//! Pointer arguments must be null or valid: handles come from this library
//! and are not used after being freed, strings are NUL-terminated, and output
//! pointers are writable.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cocompact::entropy::{entropy_estimate, entropy_sequence, EntropySequence};
use cocompact::interval::Extent;
use cocompact::lebesgue::lebesgue_number;
use cocompact::{Error, FiniteCover, PiecewiseAffineMap, Rational, Settings};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CocoStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    InvalidInput = 3,
    NotACover = 4,
    SpaceMismatch = 5,
    NotPerfect = 6,
    ResourceLimit = 7,
    Parse = 8,
    OutOfRange = 9,
    Other = 10,
    Panic = 99,
}

/// A piecewise-affine map of the line.
pub struct CocoMap(PiecewiseAffineMap);

/// A finite open cover of the line or of a compact interval.
pub struct CocoCover(FiniteCover);

/// The counts `N_n` of iterated joins, `n = 1..=n_max`.
pub struct CocoSequence(EntropySequence);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CocoStatus, msg: impl Into<String>) -> CocoStatus {
    set_error(msg.into());
    status
}

fn from_error(e: Error) -> CocoStatus {
    let status = match &e {
        Error::InvalidInput(_) | Error::NotInvariant(_) | Error::Resolution { .. } => CocoStatus::InvalidInput,
        Error::NotACover(_) => CocoStatus::NotACover,
        Error::SpaceMismatch(_) => CocoStatus::SpaceMismatch,
        Error::NotPerfect(_) => CocoStatus::NotPerfect,
        Error::ResourceLimit(_) => CocoStatus::ResourceLimit,
        Error::Parse(_) | Error::Json(_) => CocoStatus::Parse,
        _ => CocoStatus::Other,
    };
    fail(status, e.to_string())
}

fn guard(body: impl FnOnce() -> Result<(), CocoStatus>) -> CocoStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CocoStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(CocoStatus::Panic, msg)
        }
    }
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, CocoStatus> {
    if p.is_null() {
        return Err(fail(CocoStatus::NullPointer, "null string"));
    }
    CStr::from_ptr(p).to_str().map_err(|e| fail(CocoStatus::InvalidUtf8, e.to_string()))
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, CocoStatus> {
    p.as_ref().ok_or_else(|| fail(CocoStatus::NullPointer, "null handle"))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), CocoStatus> {
    if out.is_null() {
        return Err(fail(CocoStatus::NullPointer, "null output pointer"));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> Result<*mut c_char, CocoStatus> {
    CString::new(s).map(CString::into_raw).map_err(|e| fail(CocoStatus::Other, e.to_string()))
}

fn json<T: serde::de::DeserializeOwned>(s: &str) -> Result<T, CocoStatus> {
    serde_json::from_str(s).map_err(|e| from_error(e.into()))
}

/// Message for the last failing call on this thread, or null. Owned by the
/// library and valid until the next failing call.
#[no_mangle]
pub extern "C" fn coco_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn coco_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Static version string.
#[no_mangle]
pub extern "C" fn coco_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Named map: `doubling`, `identity`, `tent`, `tent-extended`, `abs`.
#[no_mangle]
pub unsafe extern "C" fn coco_map_preset(name: *const c_char, out: *mut *mut CocoMap) -> CocoStatus {
    guard(|| {
        let name = text(name)?;
        let f = PiecewiseAffineMap::preset(name)
            .ok_or_else(|| fail(CocoStatus::InvalidInput, format!("unknown preset {name:?}")))?;
        put(out, Box::into_raw(Box::new(CocoMap(f))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn coco_map_from_json(src: *const c_char, out: *mut *mut CocoMap) -> CocoStatus {
    guard(|| {
        let f: PiecewiseAffineMap = json(text(src)?)?;
        put(out, Box::into_raw(Box::new(CocoMap(f))))
    })
}

/// Serializes the map; free the result with `coco_string_free`.
#[no_mangle]
pub unsafe extern "C" fn coco_map_to_json(map: *const CocoMap, out: *mut *mut c_char) -> CocoStatus {
    guard(|| {
        let f = handle(map)?;
        let s = serde_json::to_string(&f.0).map_err(|e| from_error(e.into()))?;
        put(out, owned_string(s)?)
    })
}

/// Evaluates the map at a rational given as text (`p/q` or decimal), writing
/// the exact image as text.
#[no_mangle]
pub unsafe extern "C" fn coco_map_eval(map: *const CocoMap, x: *const c_char, out: *mut *mut c_char) -> CocoStatus {
    guard(|| {
        let f = handle(map)?;
        let x: Rational = text(x)?
            .parse()
            .map_err(|e: cocompact::rational::ParseRationalError| fail(CocoStatus::Parse, e.to_string()))?;
        put(out, owned_string(f.0.eval(&x).to_string())?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn coco_map_free(map: *mut CocoMap) {
    if !map.is_null() {
        drop(Box::from_raw(map));
    }
}

/// Parses `{"space": "R" | {"interval": [a, b]}, "elements": [{"intervals": [[l, r], ...]}, ...]}`.
#[no_mangle]
pub unsafe extern "C" fn coco_cover_from_json(src: *const c_char, out: *mut *mut CocoCover) -> CocoStatus {
    guard(|| {
        let u: FiniteCover = json(text(src)?)?;
        put(out, Box::into_raw(Box::new(CocoCover(u))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn coco_cover_len(cover: *const CocoCover, out: *mut usize) -> CocoStatus {
    guard(|| put(out, handle(cover)?.0.elements().len()))
}

/// Size of a smallest subcover. `exact_threshold` bounds the components
/// solved exactly; larger ones fall back to a greedy upper bound.
#[no_mangle]
pub unsafe extern "C" fn coco_cover_min_subcover(
    cover: *const CocoCover,
    exact_threshold: usize,
    size: *mut usize,
    exact: *mut bool,
) -> CocoStatus {
    guard(|| {
        let sub = handle(cover)?.0.minimal_subcover(exact_threshold).map_err(from_error)?;
        put(size, sub.size)?;
        put(exact, sub.exact)
    })
}

/// Writes the Lebesgue number, or positive infinity when some element is the
/// whole space.
#[no_mangle]
pub unsafe extern "C" fn coco_cover_lebesgue(cover: *const CocoCover, out: *mut f64) -> CocoStatus {
    guard(|| {
        let delta = match lebesgue_number(&handle(cover)?.0) {
            Extent::Finite(d) => d.to_f64(),
            Extent::Infinite => f64::INFINITY,
        };
        put(out, delta)
    })
}

#[no_mangle]
pub unsafe extern "C" fn coco_cover_free(cover: *mut CocoCover) {
    if !cover.is_null() {
        drop(Box::from_raw(cover));
    }
}

/// Computes `N_1..N_{n_max}` for `cover` under `map`. `settings_json` may be
/// null for defaults.
#[no_mangle]
pub unsafe extern "C" fn coco_sequence_compute(
    map: *const CocoMap,
    cover: *const CocoCover,
    n_max: usize,
    settings_json: *const c_char,
    out: *mut *mut CocoSequence,
) -> CocoStatus {
    guard(|| {
        let f = handle(map)?;
        let u = handle(cover)?;
        let settings: Settings =
            if settings_json.is_null() { Settings::default() } else { json(text(settings_json)?)? };
        let seq = entropy_sequence(&f.0, &u.0, n_max, &settings).map_err(from_error)?;
        put(out, Box::into_raw(Box::new(CocoSequence(seq))))
    })
}

#[no_mangle]
pub unsafe extern "C" fn coco_sequence_len(seq: *const CocoSequence, out: *mut usize) -> CocoStatus {
    guard(|| put(out, handle(seq)?.0.rows.len()))
}

/// `N_n` for `1 <= n <= len`.
#[no_mangle]
pub unsafe extern "C" fn coco_sequence_count(seq: *const CocoSequence, n: usize, out: *mut u64) -> CocoStatus {
    guard(|| {
        let rows = &handle(seq)?.0.rows;
        let row = n
            .checked_sub(1)
            .and_then(|i| rows.get(i))
            .ok_or_else(|| fail(CocoStatus::OutOfRange, format!("n = {n} outside 1..={}", rows.len())))?;
        put(out, row.big_n)
    })
}

/// Entropy estimate `min_n log N_n / n` with the given convergence tolerance.
#[no_mangle]
pub unsafe extern "C" fn coco_sequence_estimate(seq: *const CocoSequence, tolerance: f64, out: *mut f64) -> CocoStatus {
    guard(|| {
        let est = entropy_estimate(&handle(seq)?.0, tolerance).map_err(from_error)?;
        put(out, est.value)
    })
}

/// CSV text `n,N_n,a_n,rate,exact`; free with `coco_string_free`.
#[no_mangle]
pub unsafe extern "C" fn coco_sequence_to_csv(seq: *const CocoSequence, out: *mut *mut c_char) -> CocoStatus {
    guard(|| {
        let mut buf = Vec::new();
        handle(seq)?.0.write_csv(&mut buf).map_err(from_error)?;
        let s = String::from_utf8(buf).map_err(|e| fail(CocoStatus::Other, e.to_string()))?;
        put(out, owned_string(s)?)
    })
}

#[no_mangle]
pub unsafe extern "C" fn coco_sequence_free(seq: *mut CocoSequence) {
    if !seq.is_null() {
        drop(Box::from_raw(seq));
    }
}
