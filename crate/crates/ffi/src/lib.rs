//! C interface to `erasure-sim`.
//!
//! Every fallible call returns an [`ErasureStatus`] and writes its value
//! through an out pointer. On failure the message is kept per thread and
//! read with [`erasure_last_error_message`]. Configurations and results are
//! opaque handles released with their `_free` functions; strings returned
//! to the caller are released with [`erasure_string_free`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use libc::{c_char, c_int, size_t};

use erasure_sim::acceptance::{self, Status};
use erasure_sim::config::{parse_config, RunConfig};
use erasure_sim::entropy::{binary_entropy_bits, landauer_min_heat};
use erasure_sim::model::{
    kramers_time, potential_energy, potential_force, two_state_relaxation, AttemptTime, BathParams,
    ControlState, PotentialSpec, TwoStateSpec,
};
use erasure_sim::protocols::{pi_bits, write_over_cost_bits};
use erasure_sim::records::{execute, to_csv, ResultRecord};
use erasure_sim::Error;

/// Outcome of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErasureStatus {
    Ok = 0,
    NullPointer = 1,
    Utf8 = 2,
    Domain = 3,
    Range = 4,
    Invalid = 5,
    Usage = 6,
    Precision = 7,
    Blowup = 8,
    Inconclusive = 9,
    Config = 10,
    Io = 11,
    BufferTooSmall = 12,
    OutOfBounds = 13,
    Panic = 14,
}

impl From<&Error> for ErasureStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Domain(_) => ErasureStatus::Domain,
            Error::Range { .. } => ErasureStatus::Range,
            Error::Invalid { .. } => ErasureStatus::Invalid,
            Error::Usage(_) => ErasureStatus::Usage,
            Error::Precision { .. } => ErasureStatus::Precision,
            Error::Blowup { .. } => ErasureStatus::Blowup,
            Error::Inconclusive(_) => ErasureStatus::Inconclusive,
            Error::Config { .. } => ErasureStatus::Config,
            Error::Io(_) => ErasureStatus::Io,
        }
    }
}

/// Parsed and validated run configuration.
pub struct ErasureConfig {
    inner: RunConfig,
}

/// Records produced by one run.
pub struct ErasureResult {
    records: Vec<ResultRecord>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: String) {
    let c = CString::new(message.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn fail(status: ErasureStatus, message: impl Into<String>) -> ErasureStatus {
    set_last_error(message.into());
    status
}

fn from_error(e: Error) -> ErasureStatus {
    let status = ErasureStatus::from(&e);
    fail(status, e.to_string())
}

/// Run `f`, turning errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), ErasureStatus>) -> ErasureStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => ErasureStatus::Ok,
        Ok(Err(status)) => status,
        Err(_) => fail(ErasureStatus::Panic, "internal panic"),
    }
}

fn lift<T>(r: erasure_sim::Result<T>) -> Result<T, ErasureStatus> {
    r.map_err(from_error)
}

unsafe fn out_ref<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, ErasureStatus> {
    p.as_mut()
        .ok_or_else(|| fail(ErasureStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn in_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, ErasureStatus> {
    p.as_ref()
        .ok_or_else(|| fail(ErasureStatus::NullPointer, format!("`{name}` is null")))
}

unsafe fn in_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, ErasureStatus> {
    if p.is_null() {
        return Err(fail(
            ErasureStatus::NullPointer,
            format!("`{name}` is null"),
        ));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(ErasureStatus::Utf8, format!("`{name}` is not valid UTF-8")))
}

fn owned_string(s: String) -> Result<*mut c_char, ErasureStatus> {
    CString::new(s)
        .map(CString::into_raw)
        .map_err(|_| fail(ErasureStatus::Utf8, "output contains a nul byte"))
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn erasure_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static, nul-terminated version string.
#[no_mangle]
pub extern "C" fn erasure_version() -> *const c_char {
    static VERSION: &str = concat!("erasure-sim ", env!("CARGO_PKG_VERSION"), "\0");
    VERSION.as_ptr().cast()
}

/// Release a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn erasure_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Double-well energy `U(x; b, a)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_potential_energy(
    barrier_height: f64,
    well_halfwidth: f64,
    barrier_scale: f64,
    tilt: f64,
    x: f64,
    out: *mut f64,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let spec = PotentialSpec {
            barrier_height,
            well_halfwidth,
        };
        let control = ControlState {
            barrier_scale,
            tilt,
        };
        *out = lift(potential_energy(&spec, control, x))?;
        Ok(())
    })
}

/// Force `-dU/dx`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_potential_force(
    barrier_height: f64,
    well_halfwidth: f64,
    barrier_scale: f64,
    tilt: f64,
    x: f64,
    out: *mut f64,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let spec = PotentialSpec {
            barrier_height,
            well_halfwidth,
        };
        let control = ControlState {
            barrier_scale,
            tilt,
        };
        *out = lift(potential_force(&spec, control, x))?;
        Ok(())
    })
}

/// Kramers waiting time `tau0 exp(E / kT)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_kramers_time(
    tau0: f64,
    barrier: f64,
    kbt: f64,
    out: *mut f64,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let tau0 = lift(AttemptTime::new(tau0))?;
        let bath = lift(BathParams::new(kbt, 1.0))?;
        *out = lift(kramers_time(tau0, barrier, &bath))?;
        Ok(())
    })
}

/// `p1(t)` for a symmetric two-state cell.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_two_state_relaxation(
    rate: f64,
    p1_initial: f64,
    t: f64,
    out: *mut f64,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let spec = lift(TwoStateSpec::new(rate, p1_initial))?;
        *out = lift(two_state_relaxation(&spec, t))?;
        Ok(())
    })
}

/// Binary entropy `H(p)` in bits.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_binary_entropy_bits(p: f64, out: *mut f64) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        if !(0.0..=1.0).contains(&p) {
            return Err(fail(
                ErasureStatus::Domain,
                format!("p = {p} outside [0, 1]"),
            ));
        }
        *out = binary_entropy_bits(p);
        Ok(())
    })
}

/// `-kT ln 2 ΔS` for an entropy change in bits.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_landauer_min_heat(
    delta_s_info_bits: f64,
    kbt: f64,
    out: *mut f64,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let bath = lift(BathParams::new(kbt, 1.0))?;
        if !delta_s_info_bits.is_finite() {
            return Err(fail(ErasureStatus::Domain, "entropy change must be finite"));
        }
        *out = landauer_min_heat(delta_s_info_bits, &bath);
        Ok(())
    })
}

/// Bits of the sequence-counting cost of overwriting a memory of size `n`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_write_over_cost_bits(n: u64, out: *mut f64) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = lift(write_over_cost_bits(n))?;
        Ok(())
    })
}

/// First `n` binary digits of the fractional part of pi, one bit per byte.
///
/// # Safety
/// `buf` must be valid for `len` byte writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_pi_bits(n: u64, buf: *mut u8, len: size_t) -> ErasureStatus {
    guard(|| {
        if buf.is_null() {
            return Err(fail(ErasureStatus::NullPointer, "`buf` is null"));
        }
        if (len as u64) < n {
            return Err(fail(
                ErasureStatus::BufferTooSmall,
                format!("buffer holds {len} bytes, need {n}"),
            ));
        }
        let bits = lift(pi_bits(n))?;
        std::slice::from_raw_parts_mut(buf, bits.len()).copy_from_slice(&bits);
        Ok(())
    })
}

/// Parse a TOML run configuration.
///
/// # Safety
/// `text` must be a nul-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_config_parse(
    text: *const c_char,
    out: *mut *mut ErasureConfig,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let inner = lift(parse_config(in_str(text, "text")?))?;
        *out = Box::into_raw(Box::new(ErasureConfig { inner }));
        Ok(())
    })
}

/// Override the master seed.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn erasure_config_set_seed(
    config: *mut ErasureConfig,
    seed: u64,
) -> ErasureStatus {
    guard(|| {
        out_ref(config, "config")?.inner.run.master_seed = seed;
        Ok(())
    })
}

/// Resolved configuration as JSON; free with [`erasure_string_free`].
///
/// # Safety
/// `config` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_config_to_json(
    config: *const ErasureConfig,
    out: *mut *mut c_char,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let cfg = in_ref(config, "config")?;
        let text = serde_json::to_string(&cfg.inner)
            .map_err(|e| fail(ErasureStatus::Io, e.to_string()))?;
        *out = owned_string(text)?;
        Ok(())
    })
}

/// Release a configuration. Null is ignored.
///
/// # Safety
/// `config` must come from [`erasure_config_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn erasure_config_free(config: *mut ErasureConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Run the configured experiment or sweep. `workers = 0` uses every core.
///
/// # Safety
/// `config` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_run(
    config: *const ErasureConfig,
    workers: size_t,
    out: *mut *mut ErasureResult,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        *out = ptr::null_mut();
        let cfg = in_ref(config, "config")?;
        let records = lift(execute(&cfg.inner, workers))?;
        *out = Box::into_raw(Box::new(ErasureResult { records }));
        Ok(())
    })
}

/// Number of records in a result.
///
/// # Safety
/// `result` must be a live handle or null (which yields 0).
#[no_mangle]
pub unsafe extern "C" fn erasure_result_len(result: *const ErasureResult) -> size_t {
    result.as_ref().map_or(0, |r| r.records.len())
}

/// Summary fields of record `index`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct ErasureSummary {
    pub n: u64,
    pub mean_work: f64,
    pub stderr_work: f64,
    pub mean_heat: f64,
    pub stderr_heat: f64,
    /// NaN when the backend has no bit readout.
    pub final_p1: f64,
    /// NaN when the experiment has no target bit.
    pub error_prob: f64,
    /// NaN when no entropy report applies.
    pub delta_s_info_bits: f64,
    pub landauer_min_heat: f64,
    /// NaN outside sweeps.
    pub axis_value: f64,
    /// 1 when the row lacks enough crossings.
    pub inconclusive: c_int,
}

/// Copy the numeric summary of record `index`.
///
/// # Safety
/// `result` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_result_summary(
    result: *const ErasureResult,
    index: size_t,
    out: *mut ErasureSummary,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let r = record(result, index)?;
        let nan = |v: Option<f64>| v.unwrap_or(f64::NAN);
        *out = ErasureSummary {
            n: r.n,
            mean_work: nan(r.mean_work),
            stderr_work: nan(r.stderr_work),
            mean_heat: nan(r.mean_heat),
            stderr_heat: nan(r.stderr_heat),
            final_p1: nan(r.final_p1),
            error_prob: nan(r.error_prob),
            delta_s_info_bits: nan(r.delta_s_info_bits),
            landauer_min_heat: nan(r.landauer_min_heat),
            axis_value: nan(r.axis_value),
            inconclusive: c_int::from(r.inconclusive),
        };
        Ok(())
    })
}

unsafe fn record<'a>(
    result: *const ErasureResult,
    index: size_t,
) -> Result<&'a ResultRecord, ErasureStatus> {
    let res = in_ref(result, "result")?;
    res.records.get(index).ok_or_else(|| {
        fail(
            ErasureStatus::OutOfBounds,
            format!("record {index} of {}", res.records.len()),
        )
    })
}

/// Record `index` as one JSON line; free with [`erasure_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_result_json(
    result: *const ErasureResult,
    index: size_t,
    out: *mut *mut c_char,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let line = lift(record(result, index)?.to_json_line())?;
        *out = owned_string(line)?;
        Ok(())
    })
}

/// All records as CSV with a header row; free with [`erasure_string_free`].
///
/// # Safety
/// `result` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_result_csv(
    result: *const ErasureResult,
    out: *mut *mut c_char,
) -> ErasureStatus {
    guard(|| {
        let out = out_ref(out, "out")?;
        let res = in_ref(result, "result")?;
        *out = owned_string(to_csv(&res.records))?;
        Ok(())
    })
}

/// Release a result. Null is ignored.
///
/// # Safety
/// `result` must come from [`erasure_run`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn erasure_result_free(result: *mut ErasureResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}

/// Run one acceptance criterion (`"A1"` to `"A8"`); `*passed` is 1 on PASS,
/// 0 on FAIL and -1 when inconclusive.
///
/// # Safety
/// `id` must be a nul-terminated string; `passed` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn erasure_run_criterion(
    id: *const c_char,
    seed: u64,
    workers: size_t,
    passed: *mut c_int,
) -> ErasureStatus {
    guard(|| {
        let passed = out_ref(passed, "passed")?;
        let id = in_str(id, "id")?;
        if id == "A9" {
            return Err(fail(
                ErasureStatus::Usage,
                "A9 compares other criteria; run it through the suite",
            ));
        }
        let r = lift(acceptance::run_criterion(id, seed, workers))?;
        *passed = match r.status {
            Status::Pass => 1,
            Status::Fail => 0,
            Status::Inconclusive => -1,
        };
        Ok(())
    })
}
