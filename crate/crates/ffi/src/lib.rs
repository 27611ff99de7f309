//! C ABI over the `sepcross` library.
//!
//! Objects are opaque handles created by `*_new`/`*_build`/`*_find` and
//! released by the matching `*_free`. Every fallible call returns a
//! [`SepcrossStatus`]; on failure `sepcross_last_error` describes the cause
//! for the calling thread.

use sepcross::adiabatic::{CoefficientTable, Mode};
use sepcross::fast::{FastSystem, RegionId};
use sepcross::model::{DoubleWell, ModelParams};
use sepcross::return_map::{density, find_fixed_points, FixedPointSolution, SearchConfig};
use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SepcrossStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NoConvergence = 3,
    Numerical = 4,
    OutOfRange = 5,
    Panic = 6,
}

/// The double-well family with its four parameters.
pub struct SepcrossModel(DoubleWell);

/// Crossing coefficients and phase integrals tabulated over an action interval.
pub struct SepcrossTable(CoefficientTable);

/// Stable fixed points of the return map, sorted by action.
pub struct SepcrossFixedPoints(Vec<FixedPointSolution>);

/// Saddle of the frozen fast system at one slow point.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SepcrossSaddle {
    pub q_c: f64,
    pub h_s: f64,
    /// `1/√g` with `g = −U''(q_c)`.
    pub a: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SepcrossFixedPoint {
    pub branch: u8,
    pub i: f64,
    pub eta: f64,
    pub eta1: f64,
    pub q: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &sepcross::Error) -> SepcrossStatus {
    use sepcross::Error as E;
    match e {
        E::InvalidParams(_) => SepcrossStatus::InvalidArgument,
        E::NoConvergence { .. } | E::NewtonDiverged(_) | E::TracingStalled(_) => {
            SepcrossStatus::NoConvergence
        }
        E::OutOfRange(_) | E::CoefficientInterpolationGap(_) | E::EscapeFromXi(_) => {
            SepcrossStatus::OutOfRange
        }
        _ => SepcrossStatus::Numerical,
    }
}

/// Runs `f`, converting library errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (SepcrossStatus, String)>) -> SepcrossStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            SepcrossStatus::Ok
        }
        Ok(Err((s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("panic inside sepcross".into());
            SepcrossStatus::Panic
        }
    }
}

fn lib<T>(r: sepcross::Result<T>) -> Result<T, (SepcrossStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (SepcrossStatus, String) {
    (SepcrossStatus::NullPointer, format!("{what} is null"))
}

/// # Safety
/// `p` must be null or point to a live `T`.
unsafe fn borrow<'a, T>(p: *const T, what: &str) -> Result<&'a T, (SepcrossStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

/// # Safety
/// `p` must be null or valid for writes of `T`.
unsafe fn put<T>(p: *mut T, v: T, what: &str) -> Result<(), (SepcrossStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into the library on this thread.
#[no_mangle]
pub extern "C" fn sepcross_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |c| c.as_ptr()))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_model_new(
    beta: f64,
    omega_x: f64,
    omega_y: f64,
    k0: f64,
    out: *mut *mut SepcrossModel,
) -> SepcrossStatus {
    guard(|| {
        let m = lib(DoubleWell::new(ModelParams {
            beta,
            omega_x,
            omega_y,
            k0,
        }))?;
        put(out, Box::into_raw(Box::new(SepcrossModel(m))), "out")
    })
}

/// # Safety
/// `model` must be null or a handle from `sepcross_model_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sepcross_model_free(model: *mut SepcrossModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Saddle data of the frozen system at `(y, x)`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_saddle(
    model: *const SepcrossModel,
    y: f64,
    x: f64,
    out: *mut SepcrossSaddle,
) -> SepcrossStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let sys = lib(FastSystem::new(&m.0, y, x))?;
        let s = sys.saddle();
        put(
            out,
            SepcrossSaddle {
                q_c: s.q_c,
                h_s: s.h_s,
                a: s.a,
            },
            "out",
        )
    })
}

/// Area inside the separatrix loop of branch `nu` (1 or 2) at `(y, x)`.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_loop_area(
    model: *const SepcrossModel,
    y: f64,
    x: f64,
    nu: u8,
    out: *mut f64,
) -> SepcrossStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let region = lib(RegionId::well(nu))?;
        let sys = lib(FastSystem::new(&m.0, y, x))?;
        put(out, lib(sys.loop_area(region))?, "out")
    })
}

/// Tabulates `n` nodes over `[lo, hi]` for crossings into branch `nu` on
/// the slow level `h0`. `improved` selects the first-order corrected phases.
///
/// # Safety
/// `model` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_table_build(
    model: *const SepcrossModel,
    nu: u8,
    h0: f64,
    lo: f64,
    hi: f64,
    n: usize,
    improved: bool,
    out: *mut *mut SepcrossTable,
) -> SepcrossStatus {
    guard(|| {
        let m = borrow(model, "model")?;
        let mode = if improved {
            Mode::Improved
        } else {
            Mode::Adiabatic
        };
        let t = lib(CoefficientTable::build(&m.0, nu, h0, lo, hi, n, mode))?;
        put(out, Box::into_raw(Box::new(SepcrossTable(t))), "out")
    })
}

/// # Safety
/// `table` must be null or a handle from `sepcross_table_build` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sepcross_table_free(table: *mut SepcrossTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Predicted number of stable fixed points in `[lo, hi]` at `eps`, from
/// `n` samples of the density.
///
/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_predicted_count(
    table: *const SepcrossTable,
    eps: f64,
    lo: f64,
    hi: f64,
    n: usize,
    c1: f64,
    out: *mut f64,
) -> SepcrossStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        if !(eps > 0.0) {
            return Err((
                SepcrossStatus::InvalidArgument,
                format!("eps must be positive, got {eps}"),
            ));
        }
        let d = lib(density(&t.0, lo, hi, n, c1))?;
        put(out, d.predicted_count(eps), "out")
    })
}

/// Stable fixed points with action in `[lo, hi]` at `eps`.
///
/// # Safety
/// `table` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_fixed_points_find(
    table: *const SepcrossTable,
    eps: f64,
    lo: f64,
    hi: f64,
    c1: f64,
    out: *mut *mut SepcrossFixedPoints,
) -> SepcrossStatus {
    guard(|| {
        let t = borrow(table, "table")?;
        let mut cfg = SearchConfig::new(eps, lo, hi);
        cfg.c1 = c1;
        let r = lib(find_fixed_points(&t.0, &cfg))?;
        put(
            out,
            Box::into_raw(Box::new(SepcrossFixedPoints(r.solutions))),
            "out",
        )
    })
}

/// # Safety
/// `fps` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn sepcross_fixed_points_len(fps: *const SepcrossFixedPoints) -> usize {
    fps.as_ref().map_or(0, |f| f.0.len())
}

/// # Safety
/// `fps` must be a live handle and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn sepcross_fixed_points_get(
    fps: *const SepcrossFixedPoints,
    index: usize,
    out: *mut SepcrossFixedPoint,
) -> SepcrossStatus {
    guard(|| {
        let f = borrow(fps, "fixed points")?;
        let s = f.0.get(index).ok_or_else(|| {
            (
                SepcrossStatus::OutOfRange,
                format!("index {index} out of {} fixed points", f.0.len()),
            )
        })?;
        put(
            out,
            SepcrossFixedPoint {
                branch: s.branch,
                i: s.i,
                eta: s.eta,
                eta1: s.eta1,
                q: s.q,
            },
            "out",
        )
    })
}

/// # Safety
/// `fps` must be null or a handle from `sepcross_fixed_points_find` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn sepcross_fixed_points_free(fps: *mut SepcrossFixedPoints) {
    if !fps.is_null() {
        drop(Box::from_raw(fps));
    }
}
