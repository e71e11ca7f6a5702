//! C ABI over the blackout-risk engine.
//!
//! Cases and ledgers are opaque handles created by `br_*_load`/`br_*_run`
//! functions and released with the matching `_free`. Every fallible call
//! returns a [`BrStatus`]; on failure `br_last_error()` describes the error
//! until the next failing call on the same thread. Outputs are written only
//! on success.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use blackout_risk::cascade::{simulate, SimConfig};
use blackout_risk::copula::{CorrelationModel, ProbabilityEngine};
use blackout_risk::estimate::{chao_estimate, rcp_estimate, StabilityWindow};
use blackout_risk::grid::{load_case, CaseFormat, GridCase};
use blackout_risk::rc::{run_campaign, CampaignConfig, CampaignLedger, RcScheme};
use blackout_risk::risk::{estimate_risk, SetSizePolicy};
use blackout_risk::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BrStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Validation = 4,
    Domain = 5,
    Io = 6,
    InfeasibleDispatch = 7,
    SingularSystem = 8,
    NotMinimalizable = 9,
    NotRepairable = 10,
    InsufficientData = 11,
    Unstable = 12,
    MissingSetSize = 13,
    EmptyLedger = 14,
    Panic = 15,
}

impl From<&Error> for BrStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Parse(_) | Error::Json(_) | Error::Csv(_) => BrStatus::Parse,
            Error::Validation(_) => BrStatus::Validation,
            Error::Domain(_) => BrStatus::Domain,
            Error::Io { .. } => BrStatus::Io,
            Error::InfeasibleDispatch { .. } => BrStatus::InfeasibleDispatch,
            Error::SingularSystem { .. } => BrStatus::SingularSystem,
            Error::NotMinimalizable(..) => BrStatus::NotMinimalizable,
            Error::NotRepairable(_) => BrStatus::NotRepairable,
            Error::InsufficientData(_) => BrStatus::InsufficientData,
            Error::Unstable { .. } => BrStatus::Unstable,
            Error::MissingSetSize(_) => BrStatus::MissingSetSize,
            Error::EmptyLedger => BrStatus::EmptyLedger,
        }
    }
}

/// Opaque grid case.
pub struct BrCase(GridCase);

/// Opaque campaign ledger.
pub struct BrLedger(CampaignLedger);

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BrCascadeOutcome {
    pub load_shed_mw: f64,
    pub shed_fraction: f64,
    pub is_blackout: bool,
    /// Branches tripped by overload after the initiating outages.
    pub n_tripped: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BrJointProbability {
    pub value: f64,
    pub abs_error: f64,
    pub tolerance_met: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BrSizeBounds {
    pub unique_found: u64,
    pub chao_lower: f64,
    pub rcp_upper: f64,
    pub n1: u64,
    pub n2: u64,
    pub pair_max_a: i64,
    pub pair_max_b: i64,
    pub q_proportion: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct BrRisk {
    pub r2: f64,
    pub r3_low: f64,
    pub r3_high: f64,
    pub total_low: f64,
    pub total_high: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn br_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Forget the last error on this thread.
#[no_mangle]
pub extern "C" fn br_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn br_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

enum Failure {
    Null(&'static str),
    Utf8(&'static str),
    Engine(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Engine(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Failure>>(f: F) -> BrStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BrStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            BrStatus::NullPointer
        }
        Ok(Err(Failure::Utf8(what))) => {
            set_error(format!("{what} is not valid UTF-8"));
            BrStatus::InvalidUtf8
        }
        Ok(Err(Failure::Engine(e))) => {
            set_error(e.to_string());
            BrStatus::from(&e)
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            BrStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure::Utf8(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn ids_arg<'a>(ids: *const i64, n: usize) -> Result<&'a [i64], Failure> {
    if n == 0 {
        return Ok(&[]);
    }
    if ids.is_null() {
        return Err(Failure::Null("branch ids"));
    }
    Ok(std::slice::from_raw_parts(ids, n))
}

/// Load a case file (native JSON, or MATPOWER text for `.m`).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_case_load(path: *const c_char, out: *mut *mut BrCase) -> BrStatus {
    guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        let case = load_case(path, CaseFormat::from_path(path), None)?;
        *out = Box::into_raw(Box::new(BrCase(case)));
        Ok(())
    })
}

/// Parse a case from native JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_case_from_json(json: *const c_char, out: *mut *mut BrCase) -> BrStatus {
    guard(|| {
        let text = str_arg(json, "json")?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(BrCase(GridCase::from_json(text)?)));
        Ok(())
    })
}

/// # Safety
/// `case` must come from a `br_case_*` constructor (or be NULL) and not be
/// used afterwards.
#[no_mangle]
pub unsafe extern "C" fn br_case_free(case: *mut BrCase) {
    if !case.is_null() {
        drop(Box::from_raw(case));
    }
}

/// # Safety
/// `case` must be a live handle; `n_buses`/`n_branches` writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn br_case_size(
    case: *const BrCase,
    n_buses: *mut usize,
    n_branches: *mut usize,
) -> BrStatus {
    guard(|| {
        let case = &ref_arg(case, "case")?.0;
        if let Some(b) = n_buses.as_mut() {
            *b = case.n_buses();
        }
        if let Some(b) = n_branches.as_mut() {
            *b = case.n_branches();
        }
        Ok(())
    })
}

/// Cascade after removing `n` branches (by id).
///
/// # Safety
/// `ids` must point to `n` readable ids; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_simulate(
    case: *const BrCase,
    ids: *const i64,
    n: usize,
    threshold: f64,
    out: *mut BrCascadeOutcome,
) -> BrStatus {
    guard(|| {
        let case = &ref_arg(case, "case")?.0;
        let ids = ids_arg(ids, n)?;
        let out = out_arg(out, "out")?;
        let o = simulate(case, ids, &SimConfig::with_threshold(threshold)?)?;
        *out = BrCascadeOutcome {
            load_shed_mw: o.load_shed_mw,
            shed_fraction: o.shed_fraction,
            is_blackout: o.is_blackout,
            n_tripped: o.trip_sequence.len(),
            iterations: o.iterations,
            converged: o.converged,
        };
        Ok(())
    })
}

/// Joint outage probability of `n` branches under ρ(d) = ρ₀·exp(−d/L).
///
/// # Safety
/// `ids` must point to `n` readable ids; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_joint_probability(
    case: *const BrCase,
    ids: *const i64,
    n: usize,
    rho0: f64,
    length_km: f64,
    out: *mut BrJointProbability,
) -> BrStatus {
    guard(|| {
        let case = &ref_arg(case, "case")?.0;
        let ids = ids_arg(ids, n)?;
        let out = out_arg(out, "out")?;
        let model = CorrelationModel::new(rho0, length_km)?;
        let p = ProbabilityEngine::new(case).probability(ids, &model)?;
        *out = BrJointProbability {
            value: p.value,
            abs_error: p.abs_error_estimate,
            tolerance_met: p.tolerance_met,
        };
        Ok(())
    })
}

/// Run a Random Chemistry campaign. `scheme` is a comma list or "auto";
/// `workers` 0 means the default thread count.
///
/// # Safety
/// `scheme` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_campaign_run(
    case: *const BrCase,
    scheme: *const c_char,
    n_trials: u64,
    seed: u64,
    workers: usize,
    out: *mut *mut BrLedger,
) -> BrStatus {
    guard(|| {
        let case = &ref_arg(case, "case")?.0;
        let scheme = RcScheme::parse(str_arg(scheme, "scheme")?, case.n_branches())?;
        let out = out_arg(out, "out")?;
        let mut config = CampaignConfig::new(scheme, n_trials, seed);
        config.workers = (workers > 0).then_some(workers);
        let ledger = run_campaign(case, &config, None)?;
        *out = Box::into_raw(Box::new(BrLedger(ledger)));
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_ledger_load(path: *const c_char, out: *mut *mut BrLedger) -> BrStatus {
    guard(|| {
        let path = Path::new(str_arg(path, "path")?);
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(BrLedger(CampaignLedger::load(path)?)));
        Ok(())
    })
}

/// Write the ledger (JSON lines) and its `.meta.json` sidecar.
///
/// # Safety
/// `ledger` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn br_ledger_save(ledger: *const BrLedger, path: *const c_char) -> BrStatus {
    guard(|| {
        let ledger = &ref_arg(ledger, "ledger")?.0;
        ledger.save(Path::new(str_arg(path, "path")?))?;
        Ok(())
    })
}

/// # Safety
/// `ledger` must come from a `br_ledger_*`/`br_campaign_run` call (or be
/// NULL) and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn br_ledger_free(ledger: *mut BrLedger) {
    if !ledger.is_null() {
        drop(Box::from_raw(ledger));
    }
}

/// Trials run and aborted.
///
/// # Safety
/// `ledger` must be a live handle; outputs writable or NULL.
#[no_mangle]
pub unsafe extern "C" fn br_ledger_trials(
    ledger: *const BrLedger,
    run: *mut u64,
    aborted: *mut u64,
) -> BrStatus {
    guard(|| {
        let ledger = &ref_arg(ledger, "ledger")?.0;
        if let Some(r) = run.as_mut() {
            *r = ledger.trials_run();
        }
        if let Some(a) = aborted.as_mut() {
            *a = ledger.trials_aborted();
        }
        Ok(())
    })
}

/// Number of unique order-`k` sets in the ledger.
///
/// # Safety
/// `ledger` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_ledger_unique_count(
    ledger: *const BrLedger,
    k: usize,
    out: *mut usize,
) -> BrStatus {
    guard(|| {
        let ledger = &ref_arg(ledger, "ledger")?.0;
        *out_arg(out, "out")? = ledger.unique_count(k);
        Ok(())
    })
}

/// # Safety
/// `ledger` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_chao_estimate(ledger: *const BrLedger, k: usize, out: *mut f64) -> BrStatus {
    guard(|| {
        let ledger = &ref_arg(ledger, "ledger")?.0;
        let out = out_arg(out, "out")?;
        *out = chao_estimate(ledger, k)?;
        Ok(())
    })
}

/// Chao and RCP bounds on the number of N-3 malignancies.
///
/// # Safety
/// `case`, `ledger` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_size_bounds(
    case: *const BrCase,
    ledger: *const BrLedger,
    window_fraction: f64,
    min_window: u64,
    out: *mut BrSizeBounds,
) -> BrStatus {
    guard(|| {
        let case = &ref_arg(case, "case")?.0;
        let ledger = &ref_arg(ledger, "ledger")?.0;
        let out = out_arg(out, "out")?;
        let window = StabilityWindow {
            fraction: window_fraction,
            min_trials: min_window,
        };
        let b = rcp_estimate(case, ledger, &SimConfig::default(), &window)?;
        *out = BrSizeBounds {
            unique_found: b.unique_found,
            chao_lower: b.chao_lower,
            rcp_upper: b.rcp_upper,
            n1: b.n1,
            n2: b.n2,
            pair_max_a: b.pair_max.0,
            pair_max_b: b.pair_max.1,
            q_proportion: b.q_proportion,
        };
        Ok(())
    })
}

fn size_policy(low: f64, high: f64) -> SetSizePolicy {
    if low < 0.0 {
        SetSizePolicy::Sampled
    } else if low == high {
        SetSizePolicy::Exact(low)
    } else {
        SetSizePolicy::Bounds { lower: low, upper: high }
    }
}

/// System risk at one (ρ₀, L). Set sizes: a negative `k2_size` or `k3_low`
/// means "the sampled sets are complete"; `k3_low < k3_high` gives bounds.
///
/// # Safety
/// `case`, `ledger` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn br_risk(
    case: *const BrCase,
    ledger: *const BrLedger,
    rho0: f64,
    length_km: f64,
    k2_size: f64,
    k3_low: f64,
    k3_high: f64,
    out: *mut BrRisk,
) -> BrStatus {
    guard(|| {
        let case = &ref_arg(case, "case")?.0;
        let ledger = &ref_arg(ledger, "ledger")?.0;
        let out = out_arg(out, "out")?;
        let model = CorrelationModel::new(rho0, length_km)?;
        let policies = BTreeMap::from([
            (2, size_policy(k2_size, k2_size)),
            (3, size_policy(k3_low, k3_high)),
        ]);
        let e = estimate_risk(&ProbabilityEngine::new(case), ledger, &model, &policies)?;
        let (r3_low, r3_high) = e.r_hat(3);
        *out = BrRisk {
            r2: e.r_hat(2).0,
            r3_low,
            r3_high,
            total_low: e.total_low,
            total_high: e.total_high,
        };
        Ok(())
    })
}
