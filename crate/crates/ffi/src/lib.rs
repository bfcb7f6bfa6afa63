//! C ABI for `pedflow`.
//!
//! Every fallible call returns a [`PedflowStatus`]; on failure the message is
//! kept per thread and read back with [`pedflow_last_error`]. Objects cross
//! the boundary as opaque handles that the caller releases with the matching
//! `*_free` function. Panics are caught at the boundary and reported as
//! [`PedflowStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use pedflow::macro_solver::{reaction_update, run_macro, MacroRun};
use pedflow::metrics::ComparisonReport;
use pedflow::micro::{run_ensemble, EnsembleResult};
use pedflow::runner::{self, Command};
use pedflow::scenario::Scenario;
use pedflow::{Error, Grid};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PedflowStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    StepBound = 3,
    OutsideDomain = 4,
    Runtime = 5,
    Io = 6,
    Parse = 7,
    GridMismatch = 8,
    OutOfRange = 9,
    BufferTooSmall = 10,
    NotCrossed = 11,
    Panic = 12,
}

impl From<&Error> for PedflowStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::Config(_) => Self::InvalidArgument,
            Error::StepBound { .. } => Self::StepBound,
            Error::OutsideDomain { .. } => Self::OutsideDomain,
            Error::Runtime { .. } => Self::Runtime,
            Error::GridMismatch(_) => Self::GridMismatch,
            Error::Io(_) => Self::Io,
            Error::Parse(_) | Error::Csv(_) => Self::Parse,
        }
    }
}

/// Subcommand selector for [`pedflow_execute`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PedflowCommand {
    Micro = 0,
    Macro = 1,
    Compare = 2,
    Validate = 3,
}

/// Opaque scenario handle.
pub struct PedflowScenario(Scenario);
/// Opaque handle to a finished macroscopic run.
pub struct PedflowMacroRun(MacroRun);
/// Opaque handle to a finished Monte-Carlo ensemble.
pub struct PedflowEnsemble(EnsembleResult);
/// Opaque handle to a micro/macro comparison.
pub struct PedflowReport(ComparisonReport);

/// Grid layout; cell `(i, j)` is stored at `j * nx + i`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PedflowGridInfo {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub x0: f64,
    pub y0: f64,
}

impl From<&Grid> for PedflowGridInfo {
    fn from(g: &Grid) -> Self {
        let o = g.origin();
        Self { nx: g.nx(), ny: g.ny(), dx: g.dx(), dy: g.dy(), x0: o.x, y0: o.y }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn fail(status: PedflowStatus, msg: impl Into<String>) -> PedflowStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> Result<(), PedflowStatus>) -> PedflowStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PedflowStatus::Ok,
        Ok(Err(status)) => status,
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            fail(PedflowStatus::Panic, msg)
        }
    }
}

fn check(result: pedflow::Result<()>) -> Result<(), PedflowStatus> {
    result.map_err(|e| fail(PedflowStatus::from(&e), e.to_string()))
}

fn lift<T>(result: pedflow::Result<T>) -> Result<T, PedflowStatus> {
    result.map_err(|e| fail(PedflowStatus::from(&e), e.to_string()))
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, PedflowStatus> {
    p.as_ref().ok_or_else(|| fail(PedflowStatus::NullPointer, format!("{what} is null")))
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, PedflowStatus> {
    p.as_mut().ok_or_else(|| fail(PedflowStatus::NullPointer, format!("{what} is null")))
}

unsafe fn read_str<'a>(p: *const c_char, what: &str) -> Result<&'a str, PedflowStatus> {
    if p.is_null() {
        return Err(fail(PedflowStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(PedflowStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), PedflowStatus> {
    let slot = borrow_mut(out, "output handle pointer")?;
    *slot = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn copy_out(values: &[f64], out: *mut f64, len: usize) -> Result<(), PedflowStatus> {
    if len < values.len() {
        return Err(fail(
            PedflowStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    if out.is_null() {
        return Err(fail(PedflowStatus::NullPointer, "output buffer is null"));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), out, values.len());
    Ok(())
}

fn index<T>(items: &[T], k: usize, what: &str) -> Result<usize, PedflowStatus> {
    if k < items.len() {
        Ok(k)
    } else {
        Err(fail(PedflowStatus::OutOfRange, format!("{what} {k} out of range (have {})", items.len())))
    }
}

/// Copies the last error message of this thread into `buf` (NUL-terminated,
/// truncated to `cap` bytes) and returns the full message length without the
/// terminator; 0 if there is no error.
///
/// # Safety
/// `buf` must be null or point to `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn pedflow_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && cap > 0 {
            let n = bytes.len().min(cap - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static, NUL-terminated name of a status code.
#[no_mangle]
pub extern "C" fn pedflow_status_name(status: PedflowStatus) -> *const c_char {
    let s: &'static CStr = match status {
        PedflowStatus::Ok => c"ok",
        PedflowStatus::NullPointer => c"null_pointer",
        PedflowStatus::InvalidArgument => c"invalid_argument",
        PedflowStatus::StepBound => c"step_bound",
        PedflowStatus::OutsideDomain => c"outside_domain",
        PedflowStatus::Runtime => c"runtime",
        PedflowStatus::Io => c"io",
        PedflowStatus::Parse => c"parse",
        PedflowStatus::GridMismatch => c"grid_mismatch",
        PedflowStatus::OutOfRange => c"out_of_range",
        PedflowStatus::BufferTooSmall => c"buffer_too_small",
        PedflowStatus::NotCrossed => c"not_crossed",
        PedflowStatus::Panic => c"panic",
    };
    s.as_ptr()
}

/// Parses a scenario from JSON text.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_scenario_from_json(json: *const c_char, out: *mut *mut PedflowScenario) -> PedflowStatus {
    guard(|| {
        let text = read_str(json, "json")?;
        let scenario = lift(Scenario::from_json(text))?;
        store(out, PedflowScenario(scenario))
    })
}

/// Loads a bundled scenario by name.
///
/// # Safety
/// `name` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_scenario_preset(name: *const c_char, out: *mut *mut PedflowScenario) -> PedflowStatus {
    guard(|| {
        let name = read_str(name, "name")?;
        let scenario = lift(Scenario::preset(name))?;
        store(out, PedflowScenario(scenario))
    })
}

/// Serialises a scenario to JSON; release the string with
/// [`pedflow_string_free`].
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_scenario_to_json(scenario: *const PedflowScenario, out: *mut *mut c_char) -> PedflowStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let text = lift(s.0.to_json())?;
        let slot = borrow_mut(out, "output string pointer")?;
        *slot = CString::new(text).map_err(|_| fail(PedflowStatus::Runtime, "interior NUL"))?.into_raw();
        Ok(())
    })
}

/// Overrides seed, pedestrian count and replicate count; a zero count keeps
/// the current value.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pedflow_scenario_configure(
    scenario: *mut PedflowScenario,
    seed: u64,
    pedestrians: usize,
    replicates: usize,
) -> PedflowStatus {
    guard(|| {
        let s = borrow_mut(scenario, "scenario")?;
        let mut next = s.0.clone();
        next.seed = seed;
        if pedestrians > 0 {
            next.micro.pedestrians = pedestrians;
        }
        if replicates > 0 {
            next.micro.replicates = replicates;
        }
        check(next.validate())?;
        s.0 = next;
        Ok(())
    })
}

/// # Safety
/// `scenario` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pedflow_scenario_free(scenario: *mut PedflowScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// # Safety
/// `s` must be null or a string returned by this library and not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pedflow_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs a command and writes its CSV artifacts into `out_dir`.
///
/// # Safety
/// `scenario` must be a live handle; `out_dir` a NUL-terminated path.
#[no_mangle]
pub unsafe extern "C" fn pedflow_execute(
    command: PedflowCommand,
    scenario: *const PedflowScenario,
    out_dir: *const c_char,
) -> PedflowStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let dir = read_str(out_dir, "out_dir")?;
        let command = match command {
            PedflowCommand::Micro => Command::Micro,
            PedflowCommand::Macro => Command::Macro,
            PedflowCommand::Compare => Command::Compare,
            PedflowCommand::Validate => Command::Validate,
        };
        lift(runner::execute(command, &s.0, Path::new(dir))).map(|_| ())
    })
}

/// Runs the macroscopic solver.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_run_macro(scenario: *const PedflowScenario, out: *mut *mut PedflowMacroRun) -> PedflowStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let run = lift(run_macro(&s.0))?;
        store(out, PedflowMacroRun(run))
    })
}

/// # Safety
/// `run` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pedflow_macro_run_free(run: *mut PedflowMacroRun) {
    if !run.is_null() {
        drop(Box::from_raw(run));
    }
}

/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_macro_run_grid(run: *const PedflowMacroRun, out: *mut PedflowGridInfo) -> PedflowStatus {
    guard(|| {
        let r = borrow(run, "run")?;
        *borrow_mut(out, "out")? = PedflowGridInfo::from(&r.0.grid);
        Ok(())
    })
}

/// Number of recorded snapshots; 0 for a null handle.
///
/// # Safety
/// `run` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pedflow_macro_run_snapshot_count(run: *const PedflowMacroRun) -> usize {
    run.as_ref().map_or(0, |r| r.0.snapshots.len())
}

/// Copies snapshot `k`: its time and the `u0`, `u1` cell arrays, each of
/// `len ≥ nx·ny` values. Either array pointer may be null to skip it.
///
/// # Safety
/// `run` must be a live handle; non-null buffers must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pedflow_macro_run_snapshot(
    run: *const PedflowMacroRun,
    k: usize,
    t: *mut f64,
    u0: *mut f64,
    u1: *mut f64,
    len: usize,
) -> PedflowStatus {
    guard(|| {
        let r = borrow(run, "run")?;
        let k = index(&r.0.snapshots, k, "snapshot")?;
        let field = &r.0.snapshots[k];
        if let Some(t) = t.as_mut() {
            *t = field.t;
        }
        if !u0.is_null() {
            copy_out(&field.u0, u0, len)?;
        }
        if !u1.is_null() {
            copy_out(&field.u1, u1, len)?;
        }
        Ok(())
    })
}

/// Total mass after the last step.
///
/// # Safety
/// `run` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_macro_run_final_mass(run: *const PedflowMacroRun, out: *mut f64) -> PedflowStatus {
    guard(|| {
        let r = borrow(run, "run")?;
        let last = r.0.diagnostics.last().ok_or_else(|| fail(PedflowStatus::Runtime, "run has no steps"))?;
        *borrow_mut(out, "out")? = last.total_mass;
        Ok(())
    })
}

/// Runs the Monte-Carlo ensemble.
///
/// # Safety
/// `scenario` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_run_ensemble(scenario: *const PedflowScenario, out: *mut *mut PedflowEnsemble) -> PedflowStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        let result = lift(run_ensemble(&s.0))?;
        store(out, PedflowEnsemble(result))
    })
}

/// # Safety
/// `ensemble` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pedflow_ensemble_free(ensemble: *mut PedflowEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}

/// # Safety
/// `ensemble` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_ensemble_grid(ensemble: *const PedflowEnsemble, out: *mut PedflowGridInfo) -> PedflowStatus {
    guard(|| {
        let e = borrow(ensemble, "ensemble")?;
        *borrow_mut(out, "out")? = PedflowGridInfo::from(&e.0.grid);
        Ok(())
    })
}

/// Number of snapshot times; 0 for a null handle.
///
/// # Safety
/// `ensemble` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pedflow_ensemble_snapshot_count(ensemble: *const PedflowEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.0.times.len())
}

/// Copies the empirical density at snapshot `k`.
///
/// # Safety
/// `ensemble` must be a live handle; `density` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pedflow_ensemble_density(
    ensemble: *const PedflowEnsemble,
    k: usize,
    t: *mut f64,
    density: *mut f64,
    len: usize,
) -> PedflowStatus {
    guard(|| {
        let e = borrow(ensemble, "ensemble")?;
        let k = index(&e.0.times, k, "snapshot")?;
        if let Some(t) = t.as_mut() {
            *t = e.0.times[k];
        }
        copy_out(&e.0.densities[k], density, len)
    })
}

/// Mean stopped fraction over replicates at every micro step (`steps + 1`
/// values including the initial state).
///
/// # Safety
/// `ensemble` must be a live handle; `out` must hold `len` doubles;
/// `written` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_ensemble_stopped_fraction(
    ensemble: *const PedflowEnsemble,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> PedflowStatus {
    guard(|| {
        let e = borrow(ensemble, "ensemble")?;
        let series = e.0.mean_stopped_fraction();
        *borrow_mut(written, "written")? = series.len();
        copy_out(&series, out, len)
    })
}

/// Compares an ensemble with a macroscopic run on the same grid.
///
/// # Safety
/// Both inputs must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_compare(
    ensemble: *const PedflowEnsemble,
    run: *const PedflowMacroRun,
    out: *mut *mut PedflowReport,
) -> PedflowStatus {
    guard(|| {
        let e = borrow(ensemble, "ensemble")?;
        let r = borrow(run, "run")?;
        let report = lift(runner::compare(&e.0, &r.0))?;
        store(out, PedflowReport(report))
    })
}

/// # Safety
/// `report` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pedflow_report_free(report: *mut PedflowReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

/// Number of compared snapshot times; 0 for a null handle.
///
/// # Safety
/// `report` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn pedflow_report_len(report: *const PedflowReport) -> usize {
    report.as_ref().map_or(0, |r| r.0.times.len())
}

/// Time, L¹ and L² error at compared snapshot `k`.
///
/// # Safety
/// `report` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_report_error(
    report: *const PedflowReport,
    k: usize,
    t: *mut f64,
    l1: *mut f64,
    l2: *mut f64,
) -> PedflowStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let k = index(&r.0.times, k, "snapshot")?;
        *borrow_mut(t, "t")? = r.0.times[k];
        *borrow_mut(l1, "l1")? = r.0.l1[k];
        *borrow_mut(l2, "l2")? = r.0.l2[k];
        Ok(())
    })
}

/// Macroscopic crossing time at cut `c`; [`PedflowStatus::NotCrossed`] if
/// the threshold was never reached.
///
/// # Safety
/// `report` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_report_macro_crossing(report: *const PedflowReport, c: usize, out: *mut f64) -> PedflowStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let c = index(&r.0.cuts, c, "cut")?;
        let slot = borrow_mut(out, "out")?;
        match r.0.macro_crossing[c] {
            Some(t) => {
                *slot = t;
                Ok(())
            }
            None => Err(fail(PedflowStatus::NotCrossed, format!("macro mass never crossed x = {}", r.0.cuts[c]))),
        }
    })
}

/// Mean microscopic crossing time at cut `c` over the replicates that
/// crossed; their number goes to `crossed`.
///
/// # Safety
/// `report` must be a live handle; output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn pedflow_report_micro_crossing(
    report: *const PedflowReport,
    c: usize,
    out: *mut f64,
    crossed: *mut usize,
) -> PedflowStatus {
    guard(|| {
        let r = borrow(report, "report")?;
        let c = index(&r.0.cuts, c, "cut")?;
        let (mean, count) = r.0.micro_crossing[c];
        *borrow_mut(crossed, "crossed")? = count;
        let slot = borrow_mut(out, "out")?;
        match mean {
            Some(t) => {
                *slot = t;
                Ok(())
            }
            None => Err(fail(PedflowStatus::NotCrossed, format!("no replicate crossed x = {}", r.0.cuts[c]))),
        }
    })
}

/// Exact two-state reaction over `dt` for one cell.
///
/// # Safety
/// `u0` and `u1` must be writable; they are updated in place.
#[no_mangle]
pub unsafe extern "C" fn pedflow_reaction_update(
    lambda0: f64,
    lambda1: f64,
    dt: f64,
    u0: *mut f64,
    u1: *mut f64,
) -> PedflowStatus {
    guard(|| {
        if !(lambda0 >= 0.0 && lambda1 >= 0.0 && dt >= 0.0) {
            return Err(fail(PedflowStatus::InvalidArgument, "rates and dt must be non-negative"));
        }
        let a = borrow_mut(u0, "u0")?;
        let b = borrow_mut(u1, "u1")?;
        (*a, *b) = reaction_update(lambda0, lambda1, *a, *b, dt);
        Ok(())
    })
}

/// Boundary-adjusted velocity `V(x, v)` in the scenario's domain.
///
/// # Safety
/// `scenario` must be a live handle; `out` must point to 2 writable doubles.
#[no_mangle]
pub unsafe extern "C" fn pedflow_reflect_velocity(
    scenario: *const PedflowScenario,
    x: f64,
    y: f64,
    vx: f64,
    vy: f64,
    out: *mut f64,
) -> PedflowStatus {
    guard(|| {
        let s = borrow(scenario, "scenario")?;
        if out.is_null() {
            return Err(fail(PedflowStatus::NullPointer, "out is null"));
        }
        let v = lift(s.0.domain.reflect_velocity(
            &s.0.reflection,
            pedflow::Vec2::new(x, y),
            pedflow::Vec2::new(vx, vy),
        ))?;
        *out = v.x;
        *out.add(1) = v.y;
        Ok(())
    })
}
