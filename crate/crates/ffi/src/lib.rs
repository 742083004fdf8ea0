//! C interface to `qlnc`.
//!
//! Objects are opaque handles created by `qlnc_*_new`/builder functions and
//! released with the matching `*_free`. Every fallible call returns a
//! [`QlncStatus`]; on failure [`qlnc_last_error`] describes what went wrong
//! on the calling thread. Strings returned through `char **` out-parameters
//! are owned by the caller and must be released with [`qlnc_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use qlnc::decomposition::{achieved_rate, find_decomposition_greedy};
use qlnc::network::{self, LinkKind, Network, Partition};
use qlnc::protocol::runs::{self, RunOptions};
use qlnc::protocol::{Latency, ProtocolError};
use qlnc::report::ThroughputReport;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QlncStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    InvariantViolation = 4,
    Panic = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QlncMode {
    Combined = 0,
    QlncOnly = 1,
    SuperdenseOnly = 2,
    Fig1Loop = 3,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QlncLinkKind {
    Classical = 0,
    Quantum = 1,
}

impl From<QlncLinkKind> for LinkKind {
    fn from(k: QlncLinkKind) -> Self {
        match k {
            QlncLinkKind::Classical => LinkKind::Classical,
            QlncLinkKind::Quantum => LinkKind::Quantum,
        }
    }
}

/// A mixed classical/quantum network.
pub struct QlncNetwork(Network);

/// A throughput report from one run.
pub struct QlncReport(ThroughputReport);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: QlncStatus, msg: impl Into<String>) -> QlncStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> QlncStatus) -> QlncStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(s) => {
            if s == QlncStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            s
        }
        Err(_) => fail(QlncStatus::Panic, "internal panic"),
    }
}

fn protocol_status(e: &ProtocolError) -> QlncStatus {
    if e.is_config_error() {
        QlncStatus::InvalidArgument
    } else {
        QlncStatus::InvariantViolation
    }
}

unsafe fn out_string(out: *mut *mut c_char, s: String) -> QlncStatus {
    match CString::new(s) {
        Ok(c) => {
            *out = c.into_raw();
            QlncStatus::Ok
        }
        Err(_) => fail(QlncStatus::InvariantViolation, "string contains NUL"),
    }
}

unsafe fn give<T>(out: *mut *mut T, value: T) -> QlncStatus {
    *out = Box::into_raw(Box::new(value));
    QlncStatus::Ok
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn qlnc_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qlnc_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds the separation network on `k >= 2` pairs.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_prop1(k: usize, out: *mut *mut QlncNetwork) -> QlncStatus {
    guard(|| {
        if out.is_null() {
            return fail(QlncStatus::NullPointer, "out is NULL");
        }
        match network::build_prop1(k) {
            Ok(n) => give(out, QlncNetwork(n)),
            Err(e) => fail(QlncStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Builds the two-node loop.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_two_node_loop(out: *mut *mut QlncNetwork) -> QlncStatus {
    guard(|| {
        if out.is_null() {
            return fail(QlncStatus::NullPointer, "out is NULL");
        }
        give(out, QlncNetwork(network::build_two_node_loop()))
    })
}

/// Builds the butterfly.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_butterfly(out: *mut *mut QlncNetwork) -> QlncStatus {
    guard(|| {
        if out.is_null() {
            return fail(QlncStatus::NullPointer, "out is NULL");
        }
        give(out, QlncNetwork(network::build_butterfly()))
    })
}

/// Parses a network description.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_from_json(
    json: *const c_char,
    out: *mut *mut QlncNetwork,
) -> QlncStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(QlncStatus::NullPointer, "json or out is NULL");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(QlncStatus::Parse, "network text is not UTF-8");
        };
        match Network::from_json(text) {
            Ok(n) => give(out, QlncNetwork(n)),
            Err(e) => fail(QlncStatus::Parse, e.to_string()),
        }
    })
}

/// Serializes a network; free the result with [`qlnc_string_free`].
///
/// # Safety
/// `net` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_to_json(
    net: *const QlncNetwork,
    out: *mut *mut c_char,
) -> QlncStatus {
    guard(|| {
        let (Some(net), false) = (net.as_ref(), out.is_null()) else {
            return fail(QlncStatus::NullPointer, "net or out is NULL");
        };
        out_string(out, net.0.to_json())
    })
}

/// Number of validation problems (0 means valid).
///
/// # Safety
/// `net` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_violations(
    net: *const QlncNetwork,
    out: *mut usize,
) -> QlncStatus {
    guard(|| {
        let (Some(net), false) = (net.as_ref(), out.is_null()) else {
            return fail(QlncStatus::NullPointer, "net or out is NULL");
        };
        *out = net.0.validate().len();
        QlncStatus::Ok
    })
}

/// Number of links of `kind`.
///
/// # Safety
/// `net` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_link_count(
    net: *const QlncNetwork,
    kind: QlncLinkKind,
    out: *mut usize,
) -> QlncStatus {
    guard(|| {
        let (Some(net), false) = (net.as_ref(), out.is_null()) else {
            return fail(QlncStatus::NullPointer, "net or out is NULL");
        };
        *out = net.0.count(kind.into());
        QlncStatus::Ok
    })
}

/// Capacity of `kind` links leaving the set of all transmitters, as
/// `numer / denom`.
///
/// # Safety
/// `net` must be a live handle; `numer` and `denom` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_transmitter_cut(
    net: *const QlncNetwork,
    kind: QlncLinkKind,
    numer: *mut u64,
    denom: *mut u64,
) -> QlncStatus {
    guard(|| {
        let (Some(net), false) = (net.as_ref(), numer.is_null() || denom.is_null()) else {
            return fail(QlncStatus::NullPointer, "NULL argument");
        };
        let p = Partition::new(net.0.transmitters());
        match net.0.cut_out_capacity(&p, &[kind.into()]) {
            Ok(r) => {
                *numer = *r.numer();
                *denom = *r.denom();
                QlncStatus::Ok
            }
            Err(e) => fail(QlncStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// Runs the heuristic decomposition. Writes the achieved rate and, if
/// `json` is not NULL, the decomposition file text.
///
/// # Safety
/// `net` must be a live handle; `numer`/`denom` valid for writes; `json`
/// NULL or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_decompose(
    net: *const QlncNetwork,
    numer: *mut u64,
    denom: *mut u64,
    json: *mut *mut c_char,
) -> QlncStatus {
    guard(|| {
        let (Some(net), false) = (net.as_ref(), numer.is_null() || denom.is_null()) else {
            return fail(QlncStatus::NullPointer, "NULL argument");
        };
        let d = find_decomposition_greedy(&net.0);
        let text = d.to_json();
        let validated = match d.validate(&net.0) {
            Ok(v) => v,
            Err(e) => return fail(QlncStatus::InvariantViolation, e.to_string()),
        };
        let s = achieved_rate(&validated);
        *numer = *s.achieved.numer();
        *denom = *s.achieved.denom();
        if json.is_null() {
            QlncStatus::Ok
        } else {
            out_string(json, text)
        }
    })
}

/// Releases a network. NULL is ignored.
///
/// # Safety
/// `net` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qlnc_network_free(net: *mut QlncNetwork) {
    if !net.is_null() {
        drop(Box::from_raw(net));
    }
}

/// Runs one throughput scenario. `k` is ignored for the two-node loop;
/// `latency` must be 3 or 4 and only affects the combined mode.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_run(
    mode: QlncMode,
    k: usize,
    n_b: u64,
    seed: u64,
    latency: u32,
    oracle: bool,
    out: *mut *mut QlncReport,
) -> QlncStatus {
    guard(|| {
        if out.is_null() {
            return fail(QlncStatus::NullPointer, "out is NULL");
        }
        if latency != 3 && latency != 4 {
            return fail(QlncStatus::InvalidArgument, "latency must be 3 or 4");
        }
        let o = RunOptions {
            seed,
            latency: Latency(latency as u64),
            oracle,
        };
        let run = match mode {
            QlncMode::Combined => runs::run_combined(k, n_b, o),
            QlncMode::QlncOnly => runs::run_qlnc_only(k, n_b, o),
            QlncMode::SuperdenseOnly => runs::run_superdense_only(k, n_b, o),
            QlncMode::Fig1Loop => runs::run_fig1_loop(n_b, o),
        };
        match run {
            Ok(r) => give(out, QlncReport(ThroughputReport::from_run(&r))),
            Err(e) => fail(protocol_status(&e), e.to_string()),
        }
    })
}

/// Parses a report previously written with [`qlnc_report_to_json`].
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_report_from_json(
    json: *const c_char,
    out: *mut *mut QlncReport,
) -> QlncStatus {
    guard(|| {
        if json.is_null() || out.is_null() {
            return fail(QlncStatus::NullPointer, "json or out is NULL");
        }
        let Ok(text) = CStr::from_ptr(json).to_str() else {
            return fail(QlncStatus::Parse, "report text is not UTF-8");
        };
        match ThroughputReport::from_json(text) {
            Ok(r) => give(out, QlncReport(r)),
            Err(e) => fail(QlncStatus::Parse, e.to_string()),
        }
    })
}

/// Elapsed time steps of the run.
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_report_elapsed(r: *const QlncReport, out: *mut u64) -> QlncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(QlncStatus::NullPointer, "report or out is NULL");
        };
        *out = r.0.elapsed_steps;
        QlncStatus::Ok
    })
}

/// Average per-pair bit rate as `numer / denom`.
///
/// # Safety
/// `r` must be a live handle; `numer` and `denom` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_report_avg_rate(
    r: *const QlncReport,
    numer: *mut u64,
    denom: *mut u64,
) -> QlncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), numer.is_null() || denom.is_null()) else {
            return fail(QlncStatus::NullPointer, "NULL argument");
        };
        *numer = *r.0.avg_rate.numer();
        *denom = *r.0.avg_rate.denom();
        QlncStatus::Ok
    })
}

/// Serializes a report; free the result with [`qlnc_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_report_to_json(
    r: *const QlncReport,
    out: *mut *mut c_char,
) -> QlncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(QlncStatus::NullPointer, "report or out is NULL");
        };
        out_string(out, r.0.to_json())
    })
}

/// Human-readable report; free the result with [`qlnc_string_free`].
///
/// # Safety
/// `r` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qlnc_report_to_table(
    r: *const QlncReport,
    out: *mut *mut c_char,
) -> QlncStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(QlncStatus::NullPointer, "report or out is NULL");
        };
        out_string(out, r.0.to_table())
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `r` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn qlnc_report_free(r: *mut QlncReport) {
    if !r.is_null() {
        drop(Box::from_raw(r));
    }
}
