//! C interface to the pacing-equilibrium toolkit.
//!
//! Conventions:
//! - Scenario handles are opaque. Create one with `paceq_scenario_parse()`
//!   and release it with `paceq_scenario_free()`.
//! - Operations take and return JSON as NUL-terminated UTF-8. Returned
//!   strings are owned by the caller and released with
//!   `paceq_string_free()`.
//! - Every fallible call returns a `PaceqStatus` code. On failure a
//!   human-readable message is available from `paceq_last_error()` until
//!   the next failing call on the same thread.
//! - All functions tolerate null pointers (reported as
//!   `PACEQ_STATUS_NULL_POINTER`) and never unwind across the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use paceq_core::scenario::{execute, parse_scenario, Operation, Scenario};
use paceq_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PaceqStatus {
    /// The call succeeded.
    Ok = 0,
    /// Market data violates a structural invariant.
    InvalidInstance = 1,
    /// A query left the mathematical domain of an operation.
    Domain = 2,
    /// Tie-break shares do not match the realized ties.
    TieBreak = 3,
    /// An enumeration request exceeds the built-in size guard.
    SizeGuard = 4,
    /// JSON input could not be parsed.
    Parse = 5,
    /// The welfare linear program failed.
    LinearProgram = 6,
    /// A required pointer argument was null.
    NullPointer = 7,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 8,
    /// An internal invariant failed; the library state is still sound.
    Panic = 9,
}

/// Opaque parsed scenario.
pub struct PaceqScenario {
    inner: Scenario,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let owned = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn code_of(e: &Error) -> PaceqStatus {
    match e {
        Error::InvalidInstance(_) => PaceqStatus::InvalidInstance,
        Error::Domain(_) => PaceqStatus::Domain,
        Error::TieBreak(_) => PaceqStatus::TieBreak,
        Error::SizeGuard(_) => PaceqStatus::SizeGuard,
        Error::Parse(_) => PaceqStatus::Parse,
        Error::LinearProgram(_) => PaceqStatus::LinearProgram,
    }
}

fn fail(e: &Error) -> PaceqStatus {
    set_last_error(&e.to_string());
    code_of(e)
}

/// Runs `body` with panics converted into `PACEQ_STATUS_PANIC`.
fn guarded(body: impl FnOnce() -> PaceqStatus) -> PaceqStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(code) => code,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".to_string());
            set_last_error(&format!("internal panic: {msg}"));
            PaceqStatus::Panic
        }
    }
}

/// Reads a required C string argument.
///
/// # Safety
/// `ptr` must be null or point to a NUL-terminated buffer.
unsafe fn read_str<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, PaceqStatus> {
    if ptr.is_null() {
        set_last_error(&format!("{what} is null"));
        return Err(PaceqStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_last_error(&format!("{what} is not valid UTF-8"));
        PaceqStatus::InvalidUtf8
    })
}

fn give_string(text: String, out: *mut *mut c_char) -> PaceqStatus {
    let owned = match CString::new(text) {
        Ok(c) => c,
        Err(_) => {
            set_last_error("report contained an interior NUL byte");
            return PaceqStatus::Panic;
        }
    };
    unsafe { *out = owned.into_raw() };
    PaceqStatus::Ok
}

/// Message of the most recent failure on this thread, as a NUL-terminated
/// string. Empty when no failure has occurred. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn paceq_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Parses a scenario JSON document into an opaque handle.
///
/// On success writes the handle to `out` and returns `PACEQ_STATUS_OK`;
/// the caller owns the handle and releases it with
/// `paceq_scenario_free()`.
///
/// # Safety
/// `json` must be null or NUL-terminated; `out` must be null or valid for
/// a pointer write.
#[no_mangle]
pub unsafe extern "C" fn paceq_scenario_parse(
    json: *const c_char,
    out: *mut *mut PaceqScenario,
) -> PaceqStatus {
    guarded(|| {
        if out.is_null() {
            set_last_error("output handle pointer is null");
            return PaceqStatus::NullPointer;
        }
        *out = std::ptr::null_mut();
        let text = match read_str(json, "scenario JSON") {
            Ok(t) => t,
            Err(code) => return code,
        };
        match parse_scenario(text) {
            Ok(scenario) => {
                *out = Box::into_raw(Box::new(PaceqScenario { inner: scenario }));
                PaceqStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a scenario handle. Null is a no-op.
///
/// # Safety
/// `scenario` must be null or a handle produced by
/// `paceq_scenario_parse()` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn paceq_scenario_free(scenario: *mut PaceqScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Serializes the fully resolved configuration (defaults filled in) back
/// to JSON. The returned string is released with `paceq_string_free()`.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be valid for a pointer
/// write.
#[no_mangle]
pub unsafe extern "C" fn paceq_scenario_to_json(
    scenario: *const PaceqScenario,
    out: *mut *mut c_char,
) -> PaceqStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            set_last_error("scenario handle or output pointer is null");
            return PaceqStatus::NullPointer;
        }
        *out = std::ptr::null_mut();
        let text = paceq_core::scenario::scenario_text(&(*scenario).inner);
        give_string(text, out)
    })
}

fn operation_from_json(text: &str) -> Result<Operation, Error> {
    #[derive(serde::Deserialize)]
    #[serde(deny_unknown_fields)]
    struct OpDoc {
        command: String,
        #[serde(default)]
        buyer: Option<usize>,
    }
    let doc: OpDoc =
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("operation: {e}")))?;
    let op = match doc.command.as_str() {
        "validate" => Operation::Validate,
        "run" => Operation::Run,
        "frontier" => Operation::Frontier {
            buyer: doc.buyer.unwrap_or(0),
        },
        "solve" => Operation::Solve,
        "verify" => Operation::Verify,
        "enumerate" => Operation::Enumerate,
        "bounds" => Operation::Bounds,
        "posted-price" => Operation::PostedPrice,
        "expect" => Operation::Expect,
        other => {
            return Err(Error::Parse(format!(
                "operation: unknown command {other:?}"
            )))
        }
    };
    Ok(op)
}

/// Runs one operation against a scenario.
///
/// `operation_json` names the operation, e.g. `{"command": "solve"}` or
/// `{"command": "frontier", "buyer": 1}`. Commands match the CLI:
/// validate, run, frontier, solve, verify, enumerate, bounds,
/// posted-price, expect.
///
/// On success writes a JSON report to `out` (released with
/// `paceq_string_free()`). The report's `"passed"` field carries the
/// assertion-level verdict; a profile that fails verification is still a
/// successful call.
///
/// # Safety
/// `scenario` must be a live handle; `operation_json` must be null or
/// NUL-terminated; `out` must be valid for a pointer write.
#[no_mangle]
pub unsafe extern "C" fn paceq_execute(
    scenario: *const PaceqScenario,
    operation_json: *const c_char,
    out: *mut *mut c_char,
) -> PaceqStatus {
    guarded(|| {
        if scenario.is_null() || out.is_null() {
            set_last_error("scenario handle or output pointer is null");
            return PaceqStatus::NullPointer;
        }
        *out = std::ptr::null_mut();
        let op_text = match read_str(operation_json, "operation JSON") {
            Ok(t) => t,
            Err(code) => return code,
        };
        let op = match operation_from_json(op_text) {
            Ok(op) => op,
            Err(e) => return fail(&e),
        };
        match execute(&(*scenario).inner, &op) {
            Ok(exec) => {
                let mut report = exec.report;
                let tables: serde_json::Map<String, serde_json::Value> = exec
                    .tables
                    .into_iter()
                    .map(|(stem, text)| (stem, serde_json::Value::String(text)))
                    .collect();
                report["tables"] = serde_json::Value::Object(tables);
                give_string(report.to_string(), out)
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a string returned by this library. Null is a no-op.
///
/// # Safety
/// `text` must be null or a string produced by this library that has not
/// been freed.
#[no_mangle]
pub unsafe extern "C" fn paceq_string_free(text: *mut c_char) {
    if !text.is_null() {
        drop(CString::from_raw(text));
    }
}
