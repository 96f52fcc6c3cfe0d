//! C ABI over the wood calculus and the convergence harness.
//!
//! Every function returns an [`SptStatus`]. On failure the message is kept
//! per thread and read with [`spt_last_error`]. Objects are opaque handles
//! released with their `_free` function; strings handed out must be released
//! with [`spt_string_free`]. Node indices are 1-based, as in the text format.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use spde_taylor::harness::{
    run_convergence, symbolic_report, ConfigOverrides, ErrorReport, ExperimentConfig, HarnessError,
    Verdict,
};
use spde_taylor::term::psi_wood;
use spde_taylor::tree::{parse_wood, serialize_wood, ActiveNode, SWood, TreeError};

/// Result code of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SptStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    TreeError = 4,
    /// Undefined order: the wood has no active tree.
    NoActiveTree = 5,
    ConfigError = 6,
    ModelError = 7,
    SchemeError = 8,
    IoError = 9,
    OutOfRange = 10,
    Panic = 11,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SptVerdict {
    Pass = 0,
    Fail = 1,
    NotApplicable = 2,
}

/// One row of a convergence report.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SptErrorRow {
    pub h: f64,
    pub error: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub n_excluded: usize,
    pub in_fit: bool,
}

/// Opaque wood handle.
pub struct SptWood(SWood);

/// Opaque convergence report handle.
pub struct SptReport(ErrorReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

struct Failure(SptStatus, String);

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        let status = match &e {
            HarnessError::Config(_) | HarnessError::NoDataRows => SptStatus::ConfigError,
            HarnessError::Parse(_) => SptStatus::ParseError,
            HarnessError::Tree(TreeError::NoActiveTree) => SptStatus::NoActiveTree,
            HarnessError::Tree(_) => SptStatus::TreeError,
            HarnessError::Model(_) => SptStatus::ModelError,
            HarnessError::Scheme(_) => SptStatus::SchemeError,
            HarnessError::Io(_) => SptStatus::IoError,
        };
        Failure(status, e.to_string())
    }
}

impl From<TreeError> for Failure {
    fn from(e: TreeError) -> Self {
        HarnessError::from(e).into()
    }
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> SptStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            SptStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(&format!("internal panic: {msg}"));
            SptStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SptStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| Failure(SptStatus::InvalidUtf8, format!("{what}: {e}")))
}

unsafe fn get<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn put_string(out: *mut *mut c_char, s: String) -> Result<(), Failure> {
    let c = CString::new(s).map_err(|e| Failure(SptStatus::InvalidUtf8, e.to_string()))?;
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(c.into_raw());
    Ok(())
}

/// Message of the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn spt_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn spt_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// The initial wood `(0);(1*);(2*)`.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_initial(out: *mut *mut SptWood) -> SptStatus {
    guard(|| put(out, Box::into_raw(Box::new(SptWood(SWood::initial())))))
}

/// Parses wood text such as `(0);(1*[2]);(2*)`.
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_parse(text_in: *const c_char, out: *mut *mut SptWood) -> SptStatus {
    guard(|| {
        let s = text(text_in, "text")?;
        let w = parse_wood(s).map_err(HarnessError::from)?;
        put(out, Box::into_raw(Box::new(SptWood(w))))
    })
}

/// # Safety
/// `wood` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_free(wood: *mut SptWood) {
    if !wood.is_null() {
        drop(Box::from_raw(wood));
    }
}

/// Number of trees.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_len(wood: *const SptWood, out: *mut usize) -> SptStatus {
    guard(|| put(out, get(wood, "wood")?.0.len()))
}

/// Number of active nodes.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_active_count(wood: *const SptWood, out: *mut usize) -> SptStatus {
    guard(|| put(out, get(wood, "wood")?.0.active_nodes().len()))
}

/// Active node `index` (0-based, lexicographic) as a 1-based (tree, node).
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_active_node(
    wood: *const SptWood,
    index: usize,
    tree: *mut usize,
    node: *mut usize,
) -> SptStatus {
    guard(|| {
        let acn = get(wood, "wood")?.0.active_nodes();
        let a = acn.get(index).ok_or_else(|| {
            Failure(
                SptStatus::OutOfRange,
                format!("active node {index} of {}", acn.len()),
            )
        })?;
        put(tree, a.tree)?;
        put(node, a.node)
    })
}

/// New wood `E(tree, node)` of `wood`; the input is left untouched.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_expand(
    wood: *const SptWood,
    tree: usize,
    node: usize,
    out: *mut *mut SptWood,
) -> SptStatus {
    guard(|| {
        let w = get(wood, "wood")?.0.expand(ActiveNode::new(tree, node))?;
        put(out, Box::into_raw(Box::new(SptWood(w))))
    })
}

/// Numeric order at `(gamma, delta)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_order(
    wood: *const SptWood,
    gamma: f64,
    delta: f64,
    out: *mut f64,
) -> SptStatus {
    guard(|| {
        let order = get(wood, "wood")?.0.order()?;
        put(out, order.eval(gamma, delta).0)
    })
}

/// Symbolic order, e.g. `δ + min(γ, δ)`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_order_text(wood: *const SptWood, out: *mut *mut c_char) -> SptStatus {
    guard(|| {
        let order = get(wood, "wood")?.0.order()?;
        put_string(out, order.expr.to_string())
    })
}

/// Text form of the wood.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_serialize(wood: *const SptWood, out: *mut *mut c_char) -> SptStatus {
    guard(|| put_string(out, serialize_wood(&get(wood, "wood")?.0)))
}

/// Scheme terms of the wood in compact form.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_wood_psi(wood: *const SptWood, out: *mut *mut c_char) -> SptStatus {
    guard(|| put_string(out, psi_wood(&get(wood, "wood")?.0).compact()))
}

/// The multi-line report printed by `spde-taylor symbolic`.
///
/// # Safety
/// `wood_text` must be a NUL-terminated string; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spt_symbolic_report(wood_text: *const c_char, out: *mut *mut c_char) -> SptStatus {
    guard(|| {
        let s = text(wood_text, "wood text")?;
        put_string(out, symbolic_report(s)?)
    })
}

/// Runs a convergence experiment. `config` holds `key = value` lines over
/// the defaults; null or empty means all defaults.
///
/// # Safety
/// `config` must be null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn spt_converge(config: *const c_char, out: *mut *mut SptReport) -> SptStatus {
    guard(|| {
        let mut cfg = ExperimentConfig::default();
        if !config.is_null() {
            ConfigOverrides::from_toml(text(config, "config")?)?.apply(&mut cfg);
        }
        let report = run_convergence(&cfg)?;
        put(out, Box::into_raw(Box::new(SptReport(report))))
    })
}

/// # Safety
/// `report` must come from this library and not have been freed. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn spt_report_free(report: *mut SptReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_verdict(report: *const SptReport, out: *mut SptVerdict) -> SptStatus {
    guard(|| {
        let v = match get(report, "report")?.0.verdict {
            Verdict::Pass => SptVerdict::Pass,
            Verdict::Fail => SptVerdict::Fail,
            Verdict::NotApplicable => SptVerdict::NotApplicable,
        };
        put(out, v)
    })
}

/// Fitted slope; NaN when there were too few points to fit.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_slope(report: *const SptReport, out: *mut f64) -> SptStatus {
    guard(|| put(out, get(report, "report")?.0.slope.unwrap_or(f64::NAN)))
}

/// Predicted order; NaN for the reference scheme.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_predicted(report: *const SptReport, out: *mut f64) -> SptStatus {
    guard(|| put(out, get(report, "report")?.0.predicted.unwrap_or(f64::NAN)))
}

/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_row_count(report: *const SptReport, out: *mut usize) -> SptStatus {
    guard(|| put(out, get(report, "report")?.0.rows.len()))
}

/// Row `index`, coarsest step first.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_row(
    report: *const SptReport,
    index: usize,
    out: *mut SptErrorRow,
) -> SptStatus {
    guard(|| {
        let rows = &get(report, "report")?.0.rows;
        let r = rows.get(index).ok_or_else(|| {
            Failure(SptStatus::OutOfRange, format!("row {index} of {}", rows.len()))
        })?;
        put(
            out,
            SptErrorRow {
                h: r.h,
                error: r.error,
                std_error: r.stderr,
                n_paths: r.n_paths,
                n_excluded: r.n_excluded,
                in_fit: r.in_fit,
            },
        )
    })
}

/// The report as JSON, as written to `report.json`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_json(report: *const SptReport, out: *mut *mut c_char) -> SptStatus {
    guard(|| put_string(out, get(report, "report")?.0.to_json()?))
}

/// The report as CSV, as written to `report.csv`.
///
/// # Safety
/// Pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn spt_report_csv(report: *const SptReport, out: *mut *mut c_char) -> SptStatus {
    guard(|| put_string(out, get(report, "report")?.0.csv_string()?))
}

