//! C interface to the constraint cache.
//!
//! Every fallible call returns an [`IcStatus`]; on failure the message is
//! available from [`ic_last_error_message`] on the same thread. Strings
//! returned by the library are owned by the caller and released with
//! [`ic_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use implcache::canon::canonize;
use implcache::expr::{parse, Solution};
use implcache::pipeline::{Answer, Config, Engine, Provenance, Stores, Strategy};
use implcache::Error;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    InvalidArgument = 4,
    Io = 5,
    Malformed = 6,
    VersionMismatch = 7,
    Internal = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcAnswer {
    Sat = 0,
    Unsat = 1,
    Unknown = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcProvenance {
    Solved = 0,
    ExactHit = 1,
    ReusedSat = 2,
    ReusedUnsat = 3,
    ReducedConflict = 4,
}

/// Values accepted by [`ic_engine_new`] as `strategy`.
pub const IC_STRATEGY_NONE: u32 = 0;
pub const IC_STRATEGY_EXACT: u32 = 1;
pub const IC_STRATEGY_LOGIC: u32 = 2;

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IcStats {
    pub queries: u64,
    pub solver_calls: u64,
    pub exact_hits: u64,
    pub reused_sat: u64,
    pub reused_unsat: u64,
    pub reduced_conflicts: u64,
    pub unknown: u64,
}

/// Opaque cache handle.
pub struct IcEngine {
    engine: Engine,
    last_solution: Option<Solution>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', "\\0");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: IcStatus, msg: impl Into<String>) -> IcStatus {
    set_error(msg);
    status
}

fn status_of(err: &Error) -> IcStatus {
    match err {
        Error::Syntax { .. } | Error::NonLinear { .. } => IcStatus::Syntax,
        Error::Io(_) => IcStatus::Io,
        Error::Malformed { .. } | Error::Corpus { .. } => IcStatus::Malformed,
        Error::VersionMismatch { .. } => IcStatus::VersionMismatch,
        _ => IcStatus::InvalidArgument,
    }
}

fn guard(f: impl FnOnce() -> Result<(), (IcStatus, String)>) -> IcStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => IcStatus::Ok,
        Ok(Err((status, msg))) => fail(status, msg),
        Err(_) => fail(IcStatus::Internal, "internal panic"),
    }
}

fn lib_err(e: Error) -> (IcStatus, String) {
    (status_of(&e), e.to_string())
}

/// # Safety
/// `s` is null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<&'a str, (IcStatus, String)> {
    if s.is_null() {
        return Err((IcStatus::NullPointer, "null string argument".into()));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| (IcStatus::InvalidUtf8, "argument is not UTF-8".into()))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "\\0"))
        .expect("NUL bytes replaced")
        .into_raw()
}

/// Creates an engine with empty stores. `strategy` is one of the
/// `IC_STRATEGY_*` values; `bound` is the solver search radius. Returns
/// null on an unknown strategy or a zero bound.
#[no_mangle]
pub extern "C" fn ic_engine_new(strategy: u32, bound: u64) -> *mut IcEngine {
    let strategy = match strategy {
        IC_STRATEGY_NONE => Strategy::NoReuse,
        IC_STRATEGY_EXACT => Strategy::ExactMatch,
        IC_STRATEGY_LOGIC => Strategy::Logic,
        other => {
            set_error(format!("unknown strategy {other}"));
            return ptr::null_mut();
        }
    };
    if bound == 0 {
        set_error("bound must be positive");
        return ptr::null_mut();
    }
    let config = Config {
        strategy,
        bound,
        ..Config::default()
    };
    Box::into_raw(Box::new(IcEngine {
        engine: Engine::new(config, Stores::default()),
        last_solution: None,
    }))
}

/// # Safety
/// `engine` is null or a handle from [`ic_engine_new`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_free(engine: *mut IcEngine) {
    if !engine.is_null() {
        drop(Box::from_raw(engine));
    }
}

/// Declares that queries stay inside the generator envelope, so a failed
/// bounded search is stored as unsatisfiable.
///
/// # Safety
/// `engine` is a live handle.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_set_envelope(engine: *mut IcEngine, enabled: bool) -> IcStatus {
    let Some(e) = engine.as_mut() else {
        return fail(IcStatus::NullPointer, "null engine");
    };
    e.engine.config.envelope = enabled;
    IcStatus::Ok
}

/// Answers one constraint. Only the connected components of the last
/// `fresh_count` comparisons are considered (all of them when 0). The
/// solution, if any, is kept for [`ic_engine_last_solution`].
///
/// # Safety
/// `engine` is a live handle, `constraint` a NUL-terminated string, and the
/// out pointers are null or writable.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_query(
    engine: *mut IcEngine,
    constraint: *const c_char,
    fresh_count: usize,
    answer_out: *mut IcAnswer,
    provenance_out: *mut IcProvenance,
) -> IcStatus {
    guard(|| {
        let e = engine
            .as_mut()
            .ok_or((IcStatus::NullPointer, "null engine".to_string()))?;
        let text = read_str(constraint)?;
        let o = e.engine.query_text(text, fresh_count).map_err(lib_err)?;
        e.last_solution = o.solution;
        if let Some(out) = answer_out.as_mut() {
            *out = match o.answer {
                Answer::Sat => IcAnswer::Sat,
                Answer::Unsat => IcAnswer::Unsat,
                Answer::Unknown => IcAnswer::Unknown,
            };
        }
        if let Some(out) = provenance_out.as_mut() {
            *out = match o.provenance {
                Provenance::Solved => IcProvenance::Solved,
                Provenance::ExactHit => IcProvenance::ExactHit,
                Provenance::ReusedSat => IcProvenance::ReusedSat,
                Provenance::ReusedUnsat => IcProvenance::ReusedUnsat,
                Provenance::ReducedConflict => IcProvenance::ReducedConflict,
            };
        }
        Ok(())
    })
}

/// Solution of the last satisfiable query as `x=1 y=-3`, or null when the
/// last query had none. Free with [`ic_string_free`].
///
/// # Safety
/// `engine` is null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_last_solution(engine: *const IcEngine) -> *mut c_char {
    match engine.as_ref().and_then(|e| e.last_solution.as_ref()) {
        Some(sol) => into_c_string(sol.to_string()),
        None => ptr::null_mut(),
    }
}

/// Writes the stores into directory `dir`.
///
/// # Safety
/// `engine` is a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_save(engine: *const IcEngine, dir: *const c_char) -> IcStatus {
    guard(|| {
        let e = engine
            .as_ref()
            .ok_or((IcStatus::NullPointer, "null engine".to_string()))?;
        e.engine.stores.save_dir(read_str(dir)?).map_err(lib_err)
    })
}

/// Replaces the stores with those saved in directory `dir`. On failure the
/// engine is unchanged.
///
/// # Safety
/// `engine` is a live handle and `dir` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_load(engine: *mut IcEngine, dir: *const c_char) -> IcStatus {
    guard(|| {
        let e = engine
            .as_mut()
            .ok_or((IcStatus::NullPointer, "null engine".to_string()))?;
        e.engine.stores = Stores::load_dir(read_str(dir)?).map_err(lib_err)?;
        Ok(())
    })
}

/// # Safety
/// `engine` is a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ic_engine_stats(engine: *const IcEngine, out: *mut IcStats) -> IcStatus {
    let (Some(e), Some(out)) = (engine.as_ref(), out.as_mut()) else {
        return fail(IcStatus::NullPointer, "null argument");
    };
    let s = &e.engine.stats;
    *out = IcStats {
        queries: s.queries,
        solver_calls: s.solver_calls,
        exact_hits: s.exact_hits,
        reused_sat: s.reused_sat,
        reused_unsat: s.reused_unsat,
        reduced_conflicts: s.reduced_conflicts,
        unknown: s.unknown,
    };
    IcStatus::Ok
}

/// Canonical rendering of `constraint` in `*out` (`false` for a
/// conjunction with a false constant comparison). Free with
/// [`ic_string_free`].
///
/// # Safety
/// `constraint` is a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ic_canonize(constraint: *const c_char, out: *mut *mut c_char) -> IcStatus {
    guard(|| {
        let out = out
            .as_mut()
            .ok_or((IcStatus::NullPointer, "null output pointer".to_string()))?;
        let canon = canonize(&parse(read_str(constraint)?).map_err(lib_err)?);
        let text = if canon.contradiction {
            "false".to_string()
        } else {
            canon.conj.to_string()
        };
        *out = into_c_string(text);
        Ok(())
    })
}

/// Message of the last failure on this thread, or null. Free with
/// [`ic_string_free`].
#[no_mangle]
pub extern "C" fn ic_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|e| match e.borrow().as_ref() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// # Safety
/// `s` is null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ic_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
