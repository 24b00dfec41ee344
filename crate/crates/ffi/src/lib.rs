//! C interface to `hybrid_asm`.
//!
//! Programs, states and trajectories are opaque handles created by the
//! library and released with the matching `*_free` function. Fallible calls
//! return a [`HasmStatus`]; the message of the last failure on the calling
//! thread is available from [`hasm_last_error`]. Strings returned by the
//! library are freed with [`hasm_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use hybrid_asm::characterize::synthesize;
use hybrid_asm::cli::csv::{default_observables, write_csv};
use hybrid_asm::cli::{parse_init, parse_samples};
use hybrid_asm::engine::{run, EngineConfig, Terminal, Trajectory};
use hybrid_asm::{parse, print, Location, Program, State};

/// Status codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HasmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InitError = 4,
    NotFound = 5,
    InvalidConfig = 6,
    SynthesisError = 7,
    Panic = 8,
}

/// How a run ended.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HasmTerminal {
    Quiescent = 0,
    ReachedTmax = 1,
    Error = 2,
}

/// Engine parameters; see [`hasm_config_default`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HasmConfig {
    pub step_h: f64,
    pub t_max: f64,
    pub event_tol: f64,
    pub max_jumps_per_instant: u64,
    pub sample_stride: u64,
    pub max_steps: u64,
}

pub struct HasmProgram {
    inner: Program,
}

pub struct HasmState {
    inner: State,
}

pub struct HasmTrajectory {
    inner: Trajectory,
    program: Program,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl ToString) {
    let text = msg.to_string().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).unwrap_or_default());
}

fn fail(status: HasmStatus, msg: impl ToString) -> HasmStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> HasmStatus) -> HasmStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(HasmStatus::Panic, "internal panic"))
}

unsafe fn text<'a>(p: *const c_char) -> Result<&'a str, HasmStatus> {
    if p.is_null() {
        return Err(fail(HasmStatus::NullPointer, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|e| fail(HasmStatus::InvalidUtf8, e))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s).map_or(ptr::null_mut(), CString::into_raw)
}

/// Message of the last failed call on this thread. The pointer stays valid
/// until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn hasm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hasm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Parses and checks program text.
///
/// # Safety
/// `source` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn hasm_program_parse(
    source: *const c_char,
    out: *mut *mut HasmProgram,
) -> HasmStatus {
    guard(|| {
        if out.is_null() {
            return fail(HasmStatus::NullPointer, "null output pointer");
        }
        let src = match text(source) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match parse(src) {
            Ok(p) => {
                *out = Box::into_raw(Box::new(HasmProgram { inner: p }));
                HasmStatus::Ok
            }
            Err(e) => fail(HasmStatus::ParseError, e),
        }
    })
}

/// # Safety
/// `program` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hasm_program_free(program: *mut HasmProgram) {
    if !program.is_null() {
        drop(Box::from_raw(program));
    }
}

/// Canonical text of the program, or NULL.
///
/// # Safety
/// `program` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hasm_program_print(program: *const HasmProgram) -> *mut c_char {
    match program.as_ref() {
        Some(p) => into_c_string(print(&p.inner)),
        None => {
            set_error("null program");
            ptr::null_mut()
        }
    }
}

/// Parses an initial-state file over the program's vocabulary.
///
/// # Safety
/// `program` must be a live handle, `init` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hasm_state_parse(
    program: *const HasmProgram,
    init: *const c_char,
    out: *mut *mut HasmState,
) -> HasmStatus {
    guard(|| {
        let (Some(p), false) = (program.as_ref(), out.is_null()) else {
            return fail(HasmStatus::NullPointer, "null argument");
        };
        let src = match text(init) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match parse_init(src, &p.inner.vocabulary) {
            Ok(s) => {
                *out = Box::into_raw(Box::new(HasmState { inner: s }));
                HasmStatus::Ok
            }
            Err(e) => fail(HasmStatus::InitError, e),
        }
    })
}

/// # Safety
/// `state` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hasm_state_free(state: *mut HasmState) {
    if !state.is_null() {
        drop(Box::from_raw(state));
    }
}

/// Reads a nullary real location.
///
/// # Safety
/// `state` must be a live handle, `name` a NUL-terminated string and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn hasm_state_get_real(
    state: *const HasmState,
    name: *const c_char,
    out: *mut f64,
) -> HasmStatus {
    guard(|| {
        let (Some(s), false) = (state.as_ref(), out.is_null()) else {
            return fail(HasmStatus::NullPointer, "null argument");
        };
        let name = match text(name) {
            Ok(n) => n,
            Err(status) => return status,
        };
        match s.inner.get(&Location::nullary(name)) {
            Ok(v) => match v.as_real() {
                Some(x) => {
                    *out = x;
                    HasmStatus::Ok
                }
                None => fail(HasmStatus::NotFound, format!("{name} is not real")),
            },
            Err(e) => fail(HasmStatus::NotFound, e),
        }
    })
}

/// Default engine parameters for a run up to `t_max`.
#[no_mangle]
pub extern "C" fn hasm_config_default(t_max: f64) -> HasmConfig {
    let c = EngineConfig::new(t_max);
    HasmConfig {
        step_h: c.step_h,
        t_max: c.t_max,
        event_tol: c.event_tol,
        max_jumps_per_instant: c.max_jumps_per_instant as u64,
        sample_stride: c.sample_stride as u64,
        max_steps: c.max_steps,
    }
}

/// Executes the program. A run that ends in an error still yields a
/// trajectory; inspect it with [`hasm_trajectory_terminal`].
///
/// # Safety
/// All pointers must be live handles or valid for reads/writes.
#[no_mangle]
pub unsafe extern "C" fn hasm_run(
    program: *const HasmProgram,
    init: *const HasmState,
    config: *const HasmConfig,
    out: *mut *mut HasmTrajectory,
) -> HasmStatus {
    guard(|| {
        let (Some(p), Some(s), Some(c), false) = (
            program.as_ref(),
            init.as_ref(),
            config.as_ref(),
            out.is_null(),
        ) else {
            return fail(HasmStatus::NullPointer, "null argument");
        };
        let config = EngineConfig {
            step_h: c.step_h,
            t_max: c.t_max,
            event_tol: c.event_tol,
            max_jumps_per_instant: c.max_jumps_per_instant as usize,
            sample_stride: c.sample_stride as usize,
            max_steps: c.max_steps,
        };
        if let Err(e) = config.validate() {
            return fail(HasmStatus::InvalidConfig, e);
        }
        let trajectory = run(&p.inner, &s.inner, &config);
        *out = Box::into_raw(Box::new(HasmTrajectory {
            inner: trajectory,
            program: p.inner.clone(),
        }));
        HasmStatus::Ok
    })
}

/// # Safety
/// `trajectory` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn hasm_trajectory_free(trajectory: *mut HasmTrajectory) {
    if !trajectory.is_null() {
        drop(Box::from_raw(trajectory));
    }
}

/// # Safety
/// `trajectory` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hasm_trajectory_terminal(
    trajectory: *const HasmTrajectory,
) -> HasmTerminal {
    match trajectory.as_ref().map(|t| &t.inner.terminal) {
        Some(Terminal::Quiescent) => HasmTerminal::Quiescent,
        Some(Terminal::ReachedTMax) => HasmTerminal::ReachedTmax,
        Some(Terminal::Error(e)) => {
            set_error(e);
            HasmTerminal::Error
        }
        None => {
            set_error("null trajectory");
            HasmTerminal::Error
        }
    }
}

/// Number of jumps taken.
///
/// # Safety
/// `trajectory` must be a live handle or NULL.
#[no_mangle]
pub unsafe extern "C" fn hasm_trajectory_jump_count(trajectory: *const HasmTrajectory) -> usize {
    trajectory.as_ref().map_or(0, |t| t.inner.jumps().count())
}

/// Copies the last recorded state into a new handle.
///
/// # Safety
/// `trajectory` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hasm_trajectory_final_state(
    trajectory: *const HasmTrajectory,
    out: *mut *mut HasmState,
) -> HasmStatus {
    let (Some(t), false) = (trajectory.as_ref(), out.is_null()) else {
        return fail(HasmStatus::NullPointer, "null argument");
    };
    *out = Box::into_raw(Box::new(HasmState {
        inner: t.inner.final_state().clone(),
    }));
    HasmStatus::Ok
}

/// The trajectory as CSV over all nullary real locations, or NULL.
///
/// # Safety
/// `trajectory` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn hasm_trajectory_csv(trajectory: *const HasmTrajectory) -> *mut c_char {
    match trajectory.as_ref() {
        Some(t) => into_c_string(write_csv(&t.inner, &default_observables(&t.program))),
        None => {
            set_error("null trajectory");
            ptr::null_mut()
        }
    }
}

/// Synthesizes the canonical program for the `---`-separated sample states.
///
/// # Safety
/// `program` must be a live handle, `samples` a NUL-terminated string and
/// `out` writable.
#[no_mangle]
pub unsafe extern "C" fn hasm_synthesize(
    program: *const HasmProgram,
    samples: *const c_char,
    out: *mut *mut HasmProgram,
) -> HasmStatus {
    guard(|| {
        let (Some(p), false) = (program.as_ref(), out.is_null()) else {
            return fail(HasmStatus::NullPointer, "null argument");
        };
        let src = match text(samples) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let states = match parse_samples(src, &p.inner.vocabulary) {
            Ok(s) => s,
            Err(e) => return fail(HasmStatus::InitError, e),
        };
        match synthesize(&states, &p.inner) {
            Ok(result) => {
                *out = Box::into_raw(Box::new(HasmProgram {
                    inner: result.program,
                }));
                HasmStatus::Ok
            }
            Err(e) => fail(HasmStatus::SynthesisError, e),
        }
    })
}
