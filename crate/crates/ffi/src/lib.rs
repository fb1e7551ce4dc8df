//! C ABI over the surfspread solver.
//!
//! Every function returns an [`SsStatus`]; on failure the message is kept per thread and
//! can be copied out with [`ss_last_error_message`]. Panics are caught at the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use surfspread::assembly::Assembler;
use surfspread::config::ScenarioConfig;
use surfspread::linsolve::LinearSolver;
use surfspread::postprocess::sample_point;
use surfspread::runner::prepare;
use surfspread::scenarios::{find, Profile};
use surfspread::timestepping::{alpha_parameters, Integrator, IntegratorState};
use surfspread::Error;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Solver = 4,
    Io = 5,
    Panic = 6,
}

/// Opaque simulation handle.
pub struct SsSimulation {
    assembler: Assembler,
    state: Option<IntegratorState>,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> SsStatus {
    match e {
        Error::Config(_) => SsStatus::Config,
        Error::Io { .. } => SsStatus::Io,
        _ => SsStatus::Solver,
    }
}

struct Failure(SsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> SsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsStatus::Ok,
        Ok(Err(Failure(s, msg))) => {
            set_error(msg);
            s
        }
        Err(p) => {
            let msg = p
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| p.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            SsStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SsStatus::NullPointer, format!("{what} is null"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Failure(SsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a>(sim: *mut SsSimulation) -> Result<&'a mut SsSimulation, Failure> {
    sim.as_mut().ok_or_else(|| null("simulation"))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(v);
    Ok(())
}

fn build(cfg: &ScenarioConfig) -> Result<Box<SsSimulation>, Error> {
    let prepared = prepare(cfg)?;
    let n = prepared.assembler.n_dofs();
    let assembler = prepared.assembler;
    let mut it = Integrator::new(
        &assembler,
        LinearSolver::new(cfg.solver),
        alpha_parameters(cfg.time.rho_inf)?,
        cfg.time.controls,
        cfg.time.mode,
        prepared.values,
        vec![0.0; n],
        cfg.time.dt_initial,
    )?;
    if cfg.time.consistent_initial_rate {
        it.make_rates_consistent()?;
    }
    let state = it.suspend();
    Ok(Box::new(SsSimulation { assembler, state: Some(state) }))
}

unsafe fn publish(cfg: Result<ScenarioConfig, Error>, out: *mut *mut SsSimulation) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output handle pointer"));
    }
    let sim = build(&cfg?)?;
    out.write(Box::into_raw(sim));
    Ok(())
}

/// Creates a simulation from TOML configuration text.
///
/// # Safety
/// `toml` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_from_toml(toml: *const c_char, out: *mut *mut SsSimulation) -> SsStatus {
    guard(|| {
        let t = text(toml, "toml")?;
        publish(ScenarioConfig::from_toml(t), out)
    })
}

/// Creates a simulation from a built-in scenario; `desk != 0` selects the desk profile.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_from_scenario(
    name: *const c_char,
    desk: i32,
    out: *mut *mut SsSimulation,
) -> SsStatus {
    guard(|| {
        let n = text(name, "name")?;
        let profile = if desk != 0 { Profile::Desk } else { Profile::Full };
        publish(find(n).map(|s| s.config(profile)), out)
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `sim` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_free(sim: *mut SsSimulation) {
    if !sim.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(sim))));
    }
}

/// Integrates up to `t_stop`, writing the number of accepted steps to `steps` when non-null.
///
/// On a solver failure the handle keeps the last accepted state.
///
/// # Safety
/// `sim` must be a live handle; `steps` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_advance(sim: *mut SsSimulation, t_stop: f64, steps: *mut usize) -> SsStatus {
    guard(|| {
        let s = handle(sim)?;
        let state =
            s.state.take().ok_or_else(|| Failure(SsStatus::Panic, "handle poisoned by an earlier panic".into()))?;
        if !t_stop.is_finite() || t_stop < state.t {
            let t = state.t;
            s.state = Some(state);
            return Err(Failure(SsStatus::InvalidArgument, format!("t_stop {t_stop} precedes current time {t}")));
        }
        let mut it = Integrator::resume(&s.assembler, state);
        let start = it.accepted;
        let mut result = Ok(());
        while it.t < t_stop {
            if let Err(e) = it.advance(t_stop) {
                result = Err(Failure::from(e));
                break;
            }
        }
        let taken = it.accepted - start;
        s.state = Some(it.suspend());
        if !steps.is_null() {
            steps.write(taken);
        }
        result
    })
}

/// Current simulation time.
///
/// # Safety
/// `sim` must be a live handle; `t` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_time(sim: *const SsSimulation, t: *mut f64) -> SsStatus {
    guard(|| {
        let s = handle(sim as *mut SsSimulation)?;
        let now = s.state.as_ref().map_or(f64::NAN, |st| st.t);
        write(t, now, "t")
    })
}

/// Number of unknowns (`2 *` basis functions).
///
/// # Safety
/// `sim` must be a live handle; `n` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_n_dofs(sim: *const SsSimulation, n: *mut usize) -> SsStatus {
    guard(|| {
        let s = handle(sim as *mut SsSimulation)?;
        write(n, s.assembler.n_dofs(), "n")
    })
}

/// Copies the control variables `[c | h]` into `buf` of length `len` (at least the dof count).
///
/// # Safety
/// `sim` must be a live handle; `buf` must be valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_values(sim: *const SsSimulation, buf: *mut f64, len: usize) -> SsStatus {
    guard(|| {
        let s = handle(sim as *mut SsSimulation)?;
        let st = s.state.as_ref().ok_or_else(|| Failure(SsStatus::Panic, "handle poisoned".into()))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        if len < st.values.len() {
            return Err(Failure(SsStatus::InvalidArgument, format!("buffer holds {len}, need {}", st.values.len())));
        }
        std::slice::from_raw_parts_mut(buf, st.values.len()).copy_from_slice(&st.values);
        Ok(())
    })
}

/// Surfactant concentration and film height at a physical point.
///
/// # Safety
/// `sim` must be a live handle; `c` and `h` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_sample(
    sim: *const SsSimulation,
    x: f64,
    y: f64,
    c: *mut f64,
    h: *mut f64,
) -> SsStatus {
    guard(|| {
        let s = handle(sim as *mut SsSimulation)?;
        let st = s.state.as_ref().ok_or_else(|| Failure(SsStatus::Panic, "handle poisoned".into()))?;
        if c.is_null() || h.is_null() {
            return Err(null("output pointer"));
        }
        let p = sample_point(s.assembler.mesh(), s.assembler.roughness(), &st.values, x, y)
            .map_err(|e| Failure(SsStatus::InvalidArgument, e.to_string()))?;
        c.write(p.c);
        h.write(p.h);
        Ok(())
    })
}

/// Integrals of `c` and of `h - f` over the domain.
///
/// # Safety
/// `sim` must be a live handle; outputs must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn ss_simulation_mass(
    sim: *const SsSimulation,
    surfactant: *mut f64,
    fluid: *mut f64,
) -> SsStatus {
    guard(|| {
        let s = handle(sim as *mut SsSimulation)?;
        let st = s.state.as_ref().ok_or_else(|| Failure(SsStatus::Panic, "handle poisoned".into()))?;
        if surfactant.is_null() || fluid.is_null() {
            return Err(null("output pointer"));
        }
        let (mc, mh) = s.assembler.mass_integrals(&st.values);
        surfactant.write(mc);
        fluid.write(mh);
        Ok(())
    })
}

/// Copies the calling thread's last error message (NUL-terminated, truncated to `len`).
/// Returns the full message length plus one, so a zero `len` queries the needed size.
///
/// # Safety
/// `buf` must be null or valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ss_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
            buf.add(n).write(0);
        }
        bytes.len() + 1
    })
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ss_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}
