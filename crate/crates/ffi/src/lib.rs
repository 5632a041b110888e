//! C ABI over the pbdfs library.
//!
//! Every function returns a [`PbdfsStatus`]; on failure a human-readable
//! message is available from [`pbdfs_last_error_message`] on the same thread.
//! Objects cross the boundary as opaque handles that the caller releases with
//! the matching `*_free` function. Panics never unwind into C: they are caught
//! and reported as [`PbdfsStatus::Internal`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use pbdfs::search::{ExactLimits, SearchOutcome};
use pbdfs::{Assignment, Error, MipInstance, Model, ProbabilityVector, ScoreVariant, Termination};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbdfsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    NotFound = 5,
    InvalidInstance = 6,
    Dimension = 7,
    NoSolution = 8,
    Internal = 99,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbdfsScoreVariant {
    /// `max(p, 1 - p)`, rounding `p` for the first child.
    MaxP1mp = 0,
    /// `p`, fixing to 1 first.
    P = 1,
    /// `1 - p`, fixing to 0 first.
    OneMinusP = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PbdfsTerminationKind {
    FirstFeasible = 0,
    /// `limit` is seconds.
    TimeLimit = 1,
    /// `limit` is a node count.
    NodeLimit = 2,
    /// Search the whole tree.
    Exhaustive = 3,
}

/// Stopping rule for guided search.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PbdfsTermination {
    pub kind: PbdfsTerminationKind,
    pub limit: f64,
}

/// Opaque binary MIP instance.
pub struct PbdfsInstance(MipInstance);

/// Opaque trained predictor.
pub struct PbdfsModel(Model);

/// Opaque outcome of a search or an exact solve.
pub struct PbdfsResult {
    solution: Option<Assignment>,
    objective: Option<f64>,
    proved_optimal: bool,
    nodes: usize,
    backtracks: usize,
    wall_time_s: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn status_of(e: &Error) -> PbdfsStatus {
    match e {
        Error::Io { .. } => PbdfsStatus::Io,
        Error::Parse { .. } | Error::Version { .. } => PbdfsStatus::Parse,
        Error::Missing(_) => PbdfsStatus::NotFound,
        Error::InvalidInstance(_) => PbdfsStatus::InvalidInstance,
        Error::Dimension(_) | Error::LengthMismatch { .. } => PbdfsStatus::Dimension,
        _ => PbdfsStatus::InvalidArgument,
    }
}

/// Runs `f`, converting errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (PbdfsStatus, String)>) -> PbdfsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PbdfsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            PbdfsStatus::Internal
        }
    }
}

fn lib_err(e: Error) -> (PbdfsStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (PbdfsStatus, String) {
    (PbdfsStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (PbdfsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (PbdfsStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

/// # Safety
/// `p` must be null or point to a live handle of type `T`.
unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, (PbdfsStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// Message describing the last failure on this thread; empty after a
/// success. Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn pbdfs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pbdfs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Reads an instance file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_instance_read(path: *const c_char, out: *mut *mut PbdfsInstance) -> PbdfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let inst = MipInstance::read(Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PbdfsInstance(inst)));
        Ok(())
    })
}

/// Parses an instance from JSON text in the instance file format.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_instance_from_json(json: *const c_char, out: *mut *mut PbdfsInstance) -> PbdfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let text = str_arg(json, "json")?;
        let inst = MipInstance::from_json(text).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PbdfsInstance(inst)));
        Ok(())
    })
}

/// Number of variables; 0 for a null handle.
///
/// # Safety
/// `inst` must be null or a live instance handle.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_instance_nvars(inst: *const PbdfsInstance) -> usize {
    inst.as_ref().map_or(0, |i| i.0.nvars)
}

/// # Safety
/// `inst` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_instance_free(inst: *mut PbdfsInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

/// Loads a GCN or logistic-regression model file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_model_load(path: *const c_char, out: *mut *mut PbdfsModel) -> PbdfsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let path = str_arg(path, "path")?;
        let model = Model::load(Path::new(path)).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PbdfsModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_model_free(model: *mut PbdfsModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Writes `P(x_i = 1)` for every variable into `probs`, which must hold
/// exactly `len == nvars` values.
///
/// # Safety
/// Handles must be live; `probs` must be writable for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_model_predict(
    model: *const PbdfsModel,
    inst: *const PbdfsInstance,
    probs: *mut f64,
    len: usize,
) -> PbdfsStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let inst = handle(inst, "instance")?;
        if probs.is_null() {
            return Err(null("probs"));
        }
        if len != inst.0.nvars {
            return Err(lib_err(Error::LengthMismatch {
                expected: inst.0.nvars,
                got: len,
            }));
        }
        let p = model.0.predict_instance(&inst.0).map_err(lib_err)?;
        std::slice::from_raw_parts_mut(probs, len).copy_from_slice(&p.0);
        Ok(())
    })
}

fn termination(t: PbdfsTermination) -> Result<Termination, (PbdfsStatus, String)> {
    let bad = || (PbdfsStatus::InvalidArgument, format!("invalid limit {}", t.limit));
    match t.kind {
        PbdfsTerminationKind::FirstFeasible => Ok(Termination::FirstFeasible),
        PbdfsTerminationKind::Exhaustive => Ok(Termination::None),
        PbdfsTerminationKind::TimeLimit if t.limit >= 0.0 && t.limit.is_finite() => {
            Ok(Termination::TimeLimit(t.limit))
        }
        PbdfsTerminationKind::NodeLimit if t.limit >= 0.0 && t.limit.fract() == 0.0 => {
            Ok(Termination::NodeLimit(t.limit as usize))
        }
        _ => Err(bad()),
    }
}

fn from_outcome(out: SearchOutcome) -> PbdfsResult {
    PbdfsResult {
        objective: out.incumbent.as_ref().map(|i| i.objective),
        solution: out.incumbent.map(|i| i.solution),
        proved_optimal: out.stats.proved_optimal,
        nodes: out.stats.nodes,
        backtracks: out.stats.backtracks,
        wall_time_s: out.stats.wall_time_s,
    }
}

/// Guided depth-first search driven by `probs` (length `len == nvars`).
///
/// # Safety
/// `inst` must be live; `probs` readable for `len` doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_run_pbdfs(
    inst: *const PbdfsInstance,
    probs: *const f64,
    len: usize,
    variant: PbdfsScoreVariant,
    term: PbdfsTermination,
    out: *mut *mut PbdfsResult,
) -> PbdfsStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        if probs.is_null() {
            return Err(null("probs"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let p = std::slice::from_raw_parts(probs, len).to_vec();
        if p.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err((PbdfsStatus::InvalidArgument, "probabilities must lie in [0, 1]".into()));
        }
        let variant = match variant {
            PbdfsScoreVariant::MaxP1mp => ScoreVariant::MaxP1mp,
            PbdfsScoreVariant::P => ScoreVariant::P,
            PbdfsScoreVariant::OneMinusP => ScoreVariant::OneMinusP,
        };
        let outcome =
            pbdfs::pb_dfs(&inst.0, &ProbabilityVector(p), variant, termination(term)?).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(from_outcome(outcome)));
        Ok(())
    })
}

/// Exact best-bound branch and bound. `node_limit == 0` and
/// `time_limit <= 0` mean unlimited.
///
/// # Safety
/// `inst` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_solve_exact(
    inst: *const PbdfsInstance,
    node_limit: u64,
    time_limit: f64,
    out: *mut *mut PbdfsResult,
) -> PbdfsStatus {
    guard(|| {
        let inst = handle(inst, "instance")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let limits = ExactLimits {
            node_limit: (node_limit > 0).then_some(node_limit as usize),
            time_limit: (time_limit > 0.0).then_some(time_limit),
        };
        let r = pbdfs::solve_exact(&inst.0, limits).map_err(lib_err)?;
        *out = Box::into_raw(Box::new(PbdfsResult {
            solution: r.solution,
            objective: r.objective,
            proved_optimal: r.proved_optimal,
            nodes: r.stats.nodes,
            backtracks: r.stats.backtracks,
            wall_time_s: r.stats.wall_time_s,
        }));
        Ok(())
    })
}

/// Whether a feasible solution was found.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_has_solution(res: *const PbdfsResult) -> bool {
    res.as_ref().is_some_and(|r| r.solution.is_some())
}

/// Objective of the best solution; `NoSolution` when none was found.
///
/// # Safety
/// `res` must be a live result handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_objective(res: *const PbdfsResult, out: *mut f64) -> PbdfsStatus {
    guard(|| {
        let res = handle(res, "result")?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = res
            .objective
            .ok_or((PbdfsStatus::NoSolution, "no feasible solution".to_string()))?;
        Ok(())
    })
}

/// Copies the 0/1 solution into `values`, which must hold `len == nvars`
/// bytes.
///
/// # Safety
/// `res` must be live and `values` writable for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_solution(res: *const PbdfsResult, values: *mut u8, len: usize) -> PbdfsStatus {
    guard(|| {
        let res = handle(res, "result")?;
        if values.is_null() {
            return Err(null("values"));
        }
        let sol = res
            .solution
            .as_ref()
            .ok_or((PbdfsStatus::NoSolution, "no feasible solution".to_string()))?;
        if len != sol.len() {
            return Err(lib_err(Error::LengthMismatch {
                expected: sol.len(),
                got: len,
            }));
        }
        let bits = sol.to_bits().map_err(lib_err)?;
        std::slice::from_raw_parts_mut(values, len).copy_from_slice(&bits);
        Ok(())
    })
}

/// Whether the search tree was exhausted.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_proved_optimal(res: *const PbdfsResult) -> bool {
    res.as_ref().is_some_and(|r| r.proved_optimal)
}

/// Nodes whose LP was solved.
///
/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_nodes(res: *const PbdfsResult) -> usize {
    res.as_ref().map_or(0, |r| r.nodes)
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_backtracks(res: *const PbdfsResult) -> usize {
    res.as_ref().map_or(0, |r| r.backtracks)
}

/// # Safety
/// `res` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_wall_time(res: *const PbdfsResult) -> f64 {
    res.as_ref().map_or(0.0, |r| r.wall_time_s)
}

/// # Safety
/// `res` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pbdfs_result_free(res: *mut PbdfsResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
