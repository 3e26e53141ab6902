//! C bindings for the scan engine: opaque handles over the core types,
//! integer status codes aligned with the CLI exit codes, and a
//! `regscan.h` generated into `include/` at build time.
//!
//! Conventions: constructors write a handle through an out-pointer and
//! return a status; every handle type has a `_free` that ignores NULL;
//! `regscan_last_error` describes the most recent failure on the calling
//! thread. Handles are not synchronized and must not be mutated from two
//! threads at once, though concurrent reads are fine.

use std::cell::RefCell;
use std::ffi::{c_char, c_int, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use regscan::data::{load_regions, CsvSchema, RegionTable};
use regscan::inference::mc_test;
use regscan::scan::{scan, Direction, ScanOptions, ScanResult};
use regscan::stats::ModelSpec;
use regscan::zones::{circular_zones, CircularConfig, Metric, ZoneSet};
use regscan::Error;

/// Status of a fallible call. Values 1-3 match the process exit codes of
/// the `regscan` binary for the same failure.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegscanStatus {
    Ok = 0,
    /// Invalid configuration: unknown statistic, bad option value.
    Usage = 1,
    /// The data could not be read or fails validation.
    Data = 2,
    /// The computation degenerated numerically.
    Numeric = 3,
    /// A required pointer argument was NULL.
    NullArgument = 4,
    /// An internal panic was caught at the boundary.
    Panic = 5,
}

/// Opaque region table handle.
pub struct RegscanTable(RegionTable);

/// Opaque candidate zone family handle.
pub struct RegscanZones(ZoneSet);

/// Opaque scan result handle.
pub struct RegscanScan {
    result: ScanResult,
    mlc_members: Vec<usize>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: RegscanStatus, msg: &str) -> RegscanStatus {
    let clean = msg.replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(clean).unwrap());
    status
}

fn fail_error(e: &Error) -> RegscanStatus {
    let status = match e.exit_code() {
        1 => RegscanStatus::Usage,
        2 => RegscanStatus::Data,
        _ => RegscanStatus::Numeric,
    };
    fail(status, &e.to_string())
}

fn null_arg(name: &str) -> RegscanStatus {
    fail(RegscanStatus::NullArgument, &format!("{name} must not be NULL"))
}

fn guarded<T>(f: impl FnOnce() -> Result<T, Error>) -> Result<T, RegscanStatus> {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(v)) => Ok(v),
        Ok(Err(e)) => Err(fail_error(&e)),
        Err(_) => Err(fail(RegscanStatus::Panic, "internal panic")),
    }
}

unsafe fn parse_model(model: *const c_char) -> Result<ModelSpec, RegscanStatus> {
    if model.is_null() {
        return Err(null_arg("model"));
    }
    let s = CStr::from_ptr(model)
        .to_str()
        .map_err(|_| fail(RegscanStatus::Usage, "model is not valid UTF-8"))?;
    ModelSpec::parse(s).map_err(|e| fail_error(&e))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn regscan_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message for the most recent failure on this thread. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn regscan_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Load a region table from a CSV file using the same schema as the
/// command-line tool (columns id, x, y, outcome, and optionally
/// baseline, var and cov_ prefixed covariates).
#[no_mangle]
pub unsafe extern "C" fn regscan_table_load(
    path: *const c_char,
    out: *mut *mut RegscanTable,
) -> RegscanStatus {
    if path.is_null() {
        return null_arg("path");
    }
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        return fail(RegscanStatus::Usage, "path is not valid UTF-8");
    };
    match guarded(|| load_regions(path, &CsvSchema::default())) {
        Ok(table) => {
            *out = Box::into_raw(Box::new(RegscanTable(table)));
            RegscanStatus::Ok
        }
        Err(status) => status,
    }
}

/// Build a region table from parallel arrays of length `n`. Region ids
/// are synthesized as r0..r(n-1). `baseline` may be NULL for all-ones.
#[no_mangle]
pub unsafe extern "C" fn regscan_table_new(
    n: usize,
    x: *const f64,
    y: *const f64,
    outcome: *const f64,
    baseline: *const f64,
    out: *mut *mut RegscanTable,
) -> RegscanStatus {
    if x.is_null() {
        return null_arg("x");
    }
    if y.is_null() {
        return null_arg("y");
    }
    if outcome.is_null() {
        return null_arg("outcome");
    }
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let xs = std::slice::from_raw_parts(x, n);
    let ys = std::slice::from_raw_parts(y, n);
    let oc = std::slice::from_raw_parts(outcome, n).to_vec();
    let ids = (0..n).map(|i| format!("r{i}")).collect();
    let coords = xs.iter().zip(ys).map(|(&a, &b)| [a, b]).collect();
    let build = || {
        let table = RegionTable::new(ids, coords, oc)?;
        if baseline.is_null() {
            Ok(table)
        } else {
            table.with_baseline(std::slice::from_raw_parts(baseline, n).to_vec())
        }
    };
    match guarded(build) {
        Ok(table) => {
            *out = Box::into_raw(Box::new(RegscanTable(table)));
            RegscanStatus::Ok
        }
        Err(status) => status,
    }
}

/// Number of regions; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn regscan_table_len(table: *const RegscanTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn regscan_table_free(table: *mut RegscanTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Build the circular zone family: for every region as a center, all
/// nearest-neighbor prefixes by Euclidean centroid distance.
/// `max_fraction <= 0` lifts the baseline-share cap, `max_size == 0`
/// lifts the member-count cap.
#[no_mangle]
pub unsafe extern "C" fn regscan_zones_circular(
    table: *const RegscanTable,
    max_fraction: f64,
    max_size: usize,
    out: *mut *mut RegscanZones,
) -> RegscanStatus {
    if table.is_null() {
        return null_arg("table");
    }
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let config = CircularConfig {
        max_size: (max_size > 0).then_some(max_size),
        max_fraction: (max_fraction > 0.0).then_some(max_fraction),
        metric: Metric::Euclidean,
    };
    match guarded(|| circular_zones(&(*table).0, &config)) {
        Ok(zones) => {
            *out = Box::into_raw(Box::new(RegscanZones(zones)));
            RegscanStatus::Ok
        }
        Err(status) => status,
    }
}

/// Number of candidate zones; 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn regscan_zones_len(zones: *const RegscanZones) -> usize {
    zones.as_ref().map_or(0, |z| z.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn regscan_zones_free(zones: *mut RegscanZones) {
    if !zones.is_null() {
        drop(Box::from_raw(zones));
    }
}

/// Scan every candidate zone with the named statistic (for example
/// "poisson-pop", "gauss-unknown-exp" or "glm-poisson-pop" for the
/// covariate-adjusted route). `direction` is 0 for both effect signs,
/// 1 for elevated only, 2 for depressed only.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_run(
    table: *const RegscanTable,
    zones: *const RegscanZones,
    model: *const c_char,
    top: usize,
    direction: c_int,
    out: *mut *mut RegscanScan,
) -> RegscanStatus {
    if table.is_null() {
        return null_arg("table");
    }
    if zones.is_null() {
        return null_arg("zones");
    }
    if out.is_null() {
        return null_arg("out");
    }
    *out = ptr::null_mut();
    let spec = match parse_model(model) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let direction = match direction {
        0 => Direction::Both,
        1 => Direction::High,
        2 => Direction::Low,
        _ => return fail(RegscanStatus::Usage, "direction must be 0 (both), 1 (high) or 2 (low)"),
    };
    let table = &(*table).0;
    let zones = &(*zones).0;
    let options = ScanOptions { top_m: top, direction };
    match guarded(|| scan(table, zones, spec, &options)) {
        Ok(result) => {
            let mlc_members = result
                .mlc
                .as_ref()
                .and_then(|m| zones.zone(m.zone_id))
                .map(|z| z.members().to_vec())
                .unwrap_or_default();
            *out = Box::into_raw(Box::new(RegscanScan { result, mlc_members }));
            RegscanStatus::Ok
        }
        Err(status) => status,
    }
}

/// Zone id of the most likely cluster; 0 when no zone beats the null
/// or for NULL.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_mlc_id(scan: *const RegscanScan) -> usize {
    scan.as_ref().map_or(0, |s| s.result.mlc_id)
}

/// Maximized log-likelihood ratio; 0 when no cluster was found, NaN for
/// NULL.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_mlc_llr(scan: *const RegscanScan) -> f64 {
    scan.as_ref().map_or(f64::NAN, |s| s.result.mlc_llr())
}

/// Estimated effect of the most likely cluster on the link scale; NaN
/// when no cluster was found or for NULL.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_mlc_theta(scan: *const RegscanScan) -> f64 {
    scan.as_ref()
        .and_then(|s| s.result.mlc.as_ref())
        .map_or(f64::NAN, |m| m.theta)
}

/// Number of regions in the most likely cluster; 0 when none.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_mlc_size(scan: *const RegscanScan) -> usize {
    scan.as_ref().map_or(0, |s| s.mlc_members.len())
}

/// Row index of the k-th member of the most likely cluster, ascending;
/// -1 when out of range.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_mlc_member(scan: *const RegscanScan, k: usize) -> isize {
    scan.as_ref()
        .and_then(|s| s.mlc_members.get(k))
        .map_or(-1, |&i| i as isize)
}

/// Number of zones evaluated successfully.
#[no_mangle]
pub unsafe extern "C" fn regscan_scan_evaluated(scan: *const RegscanScan) -> usize {
    scan.as_ref().map_or(0, |s| s.result.evaluated)
}

#[no_mangle]
pub unsafe extern "C" fn regscan_scan_free(scan: *mut RegscanScan) {
    if !scan.is_null() {
        drop(Box::from_raw(scan));
    }
}

/// Monte Carlo test of the most likely cluster: `replicates` null
/// datasets are scanned with the fixed seed and the rank-based p-value
/// and observed maximum ratio are written through the non-NULL
/// out-pointers.
#[no_mangle]
pub unsafe extern "C" fn regscan_mc_run(
    table: *const RegscanTable,
    zones: *const RegscanZones,
    model: *const c_char,
    replicates: usize,
    seed: u64,
    out_p_value: *mut f64,
    out_observed_llr: *mut f64,
) -> RegscanStatus {
    if table.is_null() {
        return null_arg("table");
    }
    if zones.is_null() {
        return null_arg("zones");
    }
    let spec = match parse_model(model) {
        Ok(s) => s,
        Err(status) => return status,
    };
    let table = &(*table).0;
    let zones = &(*zones).0;
    let options = ScanOptions::default();
    match guarded(|| mc_test(table, zones, spec, &options, replicates, seed)) {
        Ok(mc) => {
            if !out_p_value.is_null() {
                *out_p_value = mc.p_value;
            }
            if !out_observed_llr.is_null() {
                *out_observed_llr = mc.observed_max_llr;
            }
            RegscanStatus::Ok
        }
        Err(status) => status,
    }
}
