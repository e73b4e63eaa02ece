//! C ABI over the peakgan toolkit.
//!
//! Every fallible function returns a [`PgStatus`]; on failure the message is
//! available from [`pg_last_error`] on the same thread. Handles are opaque
//! and must be released with their `_free` function. Strings returned to the
//! caller are released with [`pg_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use peakgan::cgan::{generate, Cgan, Generator};
use peakgan::datastore::{RecordFilter, Store};
use peakgan::detector::Detector;
use peakgan::spectrum::{detect_peaks, ConditionLabel, PeakOptions, Spectrum};
use peakgan::{metrics, peak_attention, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PgStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Contract = 3,
    Config = 4,
    Data = 5,
    UndefinedMetric = 6,
    Query = 7,
    MissingFile = 8,
    Format = 9,
    Io = 10,
    BufferTooSmall = 11,
    Panic = 12,
}

impl From<&Error> for PgStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Contract(_) => PgStatus::Contract,
            Error::Config(_) => PgStatus::Config,
            Error::Data(_) => PgStatus::Data,
            Error::UndefinedMetric(_) => PgStatus::UndefinedMetric,
            Error::Query(_) => PgStatus::Query,
            Error::MissingFile(_) => PgStatus::MissingFile,
            Error::Format(_) | Error::Json(_) => PgStatus::Format,
            Error::Io(_) => PgStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(PgStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(PgStatus::from(&e), e.to_string())
    }
}

type FfiResult<T> = Result<T, Failure>;

fn guard(f: impl FnOnce() -> FfiResult<()>) -> PgStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PgStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            PgStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(PgStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> FfiResult<&'a [f64]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a>(p: *mut f64, len: usize, what: &str) -> FfiResult<&'a mut [f64]> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(PgStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T, what: &str) -> FfiResult<()> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("interior nul removed").into_raw()
}

/// Message of the most recent failure on this thread, or null.
///
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn pg_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn pg_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Successive differences `x[t+1] - x[t]`; `out` holds `len - 1` values.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to `len - 1` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pg_slopes(x: *const f64, len: usize, out: *mut f64) -> PgStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        let s = peak_attention::slopes(x)?;
        out_slice(out, s.len(), "out")?.copy_from_slice(&s);
        Ok(())
    })
}

/// Peak-attention weights of a profile; `out` holds `len` values summing to 1.
///
/// # Safety
/// `x` must point to `len` doubles and `out` to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pg_raw_attention(x: *const f64, len: usize, out: *mut f64) -> PgStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        let a = peak_attention::raw_attention(x)?;
        out_slice(out, a.len(), "out")?.copy_from_slice(&a);
        Ok(())
    })
}

/// # Safety
/// `a` and `b` must each point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_cosine_similarity(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> PgStatus {
    guard(|| {
        let v = metrics::cosine_similarity(slice(a, len, "a")?, slice(b, len, "b")?)?;
        put(out, v, "out")
    })
}

/// # Safety
/// `a` and `b` must each point to `len` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pg_pearson(a: *const f64, b: *const f64, len: usize, out: *mut f64) -> PgStatus {
    guard(|| {
        let v = metrics::pearson(slice(a, len, "a")?, slice(b, len, "b")?)?;
        put(out, v, "out")
    })
}

/// Apex indices of the peaks of `x` with the default options for its length.
///
/// `count` always receives the number of peaks; when it exceeds `capacity`
/// nothing is written to `indices` and `BufferTooSmall` is returned.
///
/// # Safety
/// `x` must point to `len` doubles, `indices` to `capacity` writable sizes.
#[no_mangle]
pub unsafe extern "C" fn pg_detect_peaks(
    x: *const f64,
    len: usize,
    indices: *mut usize,
    capacity: usize,
    count: *mut usize,
) -> PgStatus {
    guard(|| {
        let x = slice(x, len, "x")?;
        let peaks = detect_peaks(x, &PeakOptions::for_length(len.max(1)));
        put(count, peaks.peaks.len(), "count")?;
        if peaks.peaks.len() > capacity {
            return Err(Failure(
                PgStatus::BufferTooSmall,
                format!("{} peaks do not fit in {capacity} slots", peaks.peaks.len()),
            ));
        }
        if !peaks.peaks.is_empty() {
            if indices.is_null() {
                return Err(null("indices"));
            }
            for (i, p) in peaks.peaks.iter().enumerate() {
                indices.add(i).write(p.index);
            }
        }
        Ok(())
    })
}

/// Record store handle.
pub struct PgStore(Store);

/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_store_open(path: *const c_char, out: *mut *mut PgStore) -> PgStatus {
    guard(|| {
        let store = Store::open(&PathBuf::from(string(path, "path")?))?;
        put(out, Box::into_raw(Box::new(PgStore(store))), "out")
    })
}

/// # Safety
/// `store` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_store_len(store: *const PgStore, out: *mut usize) -> PgStatus {
    guard(|| {
        let s = store.as_ref().ok_or_else(|| null("store"))?;
        put(out, s.0.len(), "out")
    })
}

/// Records matching the optional filters as a JSON array. Null filters match all.
///
/// # Safety
/// `store` must be a live handle; non-null strings must be nul-terminated.
#[no_mangle]
pub unsafe extern "C" fn pg_store_query_json(
    store: *const PgStore,
    solvent: *const c_char,
    solute: *const c_char,
    out: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        let s = store.as_ref().ok_or_else(|| null("store"))?;
        let mut f = RecordFilter::default();
        if !solvent.is_null() {
            f = f.solvent(string(solvent, "solvent")?);
        }
        if !solute.is_null() {
            f = f.solute(string(solute, "solute")?);
        }
        let recs = s.0.query(&f)?;
        let json = serde_json::to_string(&recs).map_err(Error::from)?;
        put(out, owned_string(json), "out")
    })
}

/// # Safety
/// `store` must be null or a handle from [`pg_store_open`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_store_free(store: *mut PgStore) {
    if !store.is_null() {
        drop(Box::from_raw(store));
    }
}

/// Trained generator handle.
pub struct PgGenerator(Generator);

/// Loads the generator from a GAN checkpoint file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_generator_load(path: *const c_char, out: *mut *mut PgGenerator) -> PgStatus {
    guard(|| {
        let gan = Cgan::load(&PathBuf::from(string(path, "path")?))?;
        put(out, Box::into_raw(Box::new(PgGenerator(gan.generator))), "out")
    })
}

/// # Safety
/// `gen` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_generator_output_len(gen: *const PgGenerator, out: *mut usize) -> PgStatus {
    guard(|| {
        let g = gen.as_ref().ok_or_else(|| null("generator"))?;
        put(out, g.0.config.output_dim, "out")
    })
}

/// One generated chromatogram for `condition` (for example `"THF + DMMP"`).
///
/// # Safety
/// `gen` must be a live handle, `condition` nul-terminated and `out` must
/// point to `capacity` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pg_generator_generate(
    gen: *const PgGenerator,
    condition: *const c_char,
    seed: u64,
    out: *mut f64,
    capacity: usize,
) -> PgStatus {
    guard(|| {
        let g = gen.as_ref().ok_or_else(|| null("generator"))?;
        let label: ConditionLabel = string(condition, "condition")?.parse()?;
        let n = g.0.config.output_dim;
        if capacity < n {
            return Err(Failure(
                PgStatus::BufferTooSmall,
                format!("{n} samples do not fit in {capacity} slots"),
            ));
        }
        let s = generate(&g.0, &label, 1, seed).remove(0);
        out_slice(out, n, "out")?.copy_from_slice(&s.tic);
        Ok(())
    })
}

/// # Safety
/// `gen` must be null or a handle from [`pg_generator_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_generator_free(gen: *mut PgGenerator) {
    if !gen.is_null() {
        drop(Box::from_raw(gen));
    }
}

/// Trained detector handle.
pub struct PgDetector(Detector);

/// # Safety
/// `path` must be a nul-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_detector_load(path: *const c_char, out: *mut *mut PgDetector) -> PgStatus {
    guard(|| {
        let det = Detector::load(&PathBuf::from(string(path, "path")?))?;
        put(out, Box::into_raw(Box::new(PgDetector(det))), "out")
    })
}

/// Runs detection on a spectrum given as JSON and returns the result as JSON.
///
/// # Safety
/// `det` must be a live handle, `spectrum_json` nul-terminated and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pg_detector_detect_json(
    det: *const PgDetector,
    spectrum_json: *const c_char,
    out: *mut *mut c_char,
) -> PgStatus {
    guard(|| {
        let d = det.as_ref().ok_or_else(|| null("detector"))?;
        let spectrum = Spectrum::from_json(string(spectrum_json, "spectrum_json")?)?;
        let result = d.0.detect(&spectrum)?;
        let json = serde_json::to_string(&result).map_err(Error::from)?;
        put(out, owned_string(json), "out")
    })
}

/// # Safety
/// `det` must be null or a handle from [`pg_detector_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pg_detector_free(det: *mut PgDetector) {
    if !det.is_null() {
        drop(Box::from_raw(det));
    }
}
