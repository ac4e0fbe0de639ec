//! C ABI over `cheeger-core`.
//!
//! Every fallible call returns a [`CheegerStatus`]; on failure the message is
//! available from [`cheeger_last_error_message`] on the same thread until the
//! next failing call. Handles are opaque and must be released with the
//! matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cheeger::counterexample::{self, CounterexampleSpec};
use cheeger::deformation::{self, OrbitTensor, ZtInput};
use cheeger::feasibility::{self, FeasibilityInstance, Outcome, Side};
use cheeger::group::LieAlgebraData;
use cheeger::CheegerError;
use nalgebra::{DMatrix, DVector};
use num_rational::BigRational;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CheegerStatus {
    Ok = 0,
    NullPointer = 1,
    Input = 2,
    Dimension = 3,
    Domain = 4,
    Unsupported = 5,
    Verification = 6,
    Config = 7,
    Io = 8,
    /// The instance has no solution; not an error.
    Infeasible = 9,
    BufferTooSmall = 10,
    Panic = 11,
}

impl From<&CheegerError> for CheegerStatus {
    fn from(e: &CheegerError) -> Self {
        match e {
            CheegerError::Input(_) => CheegerStatus::Input,
            CheegerError::Dimension { .. } => CheegerStatus::Dimension,
            CheegerError::Domain(_) => CheegerStatus::Domain,
            CheegerError::Unsupported(_) => CheegerStatus::Unsupported,
            CheegerError::Verification(_) => CheegerStatus::Verification,
            CheegerError::Config { .. } => CheegerStatus::Config,
            CheegerError::Io(_) | CheegerError::Csv(_) => CheegerStatus::Io,
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn fail(status: CheegerStatus, msg: impl Into<String>) -> CheegerStatus {
    set_error(msg.into());
    status
}

/// Runs `f`, mapping library errors and panics to status codes.
fn guard(f: impl FnOnce() -> Result<CheegerStatus, CheegerError>) -> CheegerStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(status)) => status,
        Ok(Err(e)) => fail((&e).into(), e.to_string()),
        Err(_) => fail(CheegerStatus::Panic, "internal panic"),
    }
}

/// Message of the most recent failure on this thread, or null. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn cheeger_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

unsafe fn slice<'a, T>(p: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        return Some(&[]);
    }
    if p.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(p, len))
    }
}

macro_rules! nonnull {
    ($($p:expr),+) => {
        $(if $p.is_null() {
            return fail(CheegerStatus::NullPointer, concat!(stringify!($p), " is null"));
        })+
    };
}

/// `z_t = 3t cᵀ(tP + 1)⁻¹c` with `c = dw + (t/2) bracket`. `p` is a
/// row-major `k×k` symmetric positive definite matrix.
///
/// # Safety
/// `p` must point to `k*k` doubles, `dw` and `bracket` to `k` doubles and
/// `out` to one writable double.
#[no_mangle]
pub unsafe extern "C" fn cheeger_zt(
    p: *const f64,
    dw: *const f64,
    bracket: *const f64,
    k: usize,
    t: f64,
    out: *mut f64,
) -> CheegerStatus {
    nonnull!(out);
    let (Some(p), Some(dw), Some(bracket)) = (slice(p, k * k), slice(dw, k), slice(bracket, k)) else {
        return fail(CheegerStatus::NullPointer, "input array is null");
    };
    if !(t >= 0.0 && t.is_finite()) {
        return fail(CheegerStatus::Domain, format!("t = {t} must be finite and nonnegative"));
    }
    guard(|| {
        let lie = LieAlgebraData::from_flat(k, vec![0.0; k * k * k], vec![])?;
        let tensor = OrbitTensor::new(DMatrix::from_row_slice(k, k, p), &lie)?;
        let input = ZtInput {
            dw: DVector::from_column_slice(dw),
            bracket: DVector::from_column_slice(bracket),
        };
        *out = deformation::z_t(&tensor, &input, t);
        Ok(CheegerStatus::Ok)
    })
}

pub struct CheegerFeasibility(FeasibilityInstance);

/// Builds an instance with `nblocks` blocks of dimensions `dims`, orbit
/// codimension `l`, and `nconstraints` tuples given as row-major numerator
/// and denominator arrays of shape `nconstraints×nblocks`.
///
/// # Safety
/// Array arguments must have the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cheeger_feasibility_new(
    dims: *const u64,
    nblocks: usize,
    l: u64,
    num: *const i64,
    den: *const i64,
    nconstraints: usize,
    out: *mut *mut CheegerFeasibility,
) -> CheegerStatus {
    nonnull!(out);
    *out = ptr::null_mut();
    let n = nblocks * nconstraints;
    let (Some(dims), Some(num), Some(den)) = (slice(dims, nblocks), slice(num, n), slice(den, n)) else {
        return fail(CheegerStatus::NullPointer, "input array is null");
    };
    if den.contains(&0) {
        return fail(CheegerStatus::Input, "zero denominator");
    }
    guard(|| {
        let constraints = (0..nconstraints)
            .map(|r| (0..nblocks).map(|c| BigRational::new(num[r * nblocks + c].into(), den[r * nblocks + c].into())).collect())
            .collect();
        let inst = FeasibilityInstance::new(dims.to_vec(), l, constraints)?;
        *out = Box::into_raw(Box::new(CheegerFeasibility(inst)));
        Ok(CheegerStatus::Ok)
    })
}

/// Solves for curvature constants. Writes `nblocks` λ's to `lambdas` and
/// returns `Ok`, or returns `Infeasible`. Two-block instances use the exact
/// criterion; larger ones the pairwise sufficient test. `side` receives 1 or
/// 2 for two blocks and 0 otherwise; it may be null.
///
/// # Safety
/// `inst` must come from [`cheeger_feasibility_new`]; `lambdas` must hold
/// `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cheeger_feasibility_solve(
    inst: *const CheegerFeasibility,
    lambdas: *mut f64,
    len: usize,
    side: *mut i32,
) -> CheegerStatus {
    nonnull!(inst, lambdas);
    let inst = &(*inst).0;
    if len < inst.dims().len() {
        return fail(CheegerStatus::BufferTooSmall, format!("need {} entries, got {len}", inst.dims().len()));
    }
    guard(|| {
        let (s, sol) = if inst.dims().len() == 2 {
            match feasibility::solve_lambdas_2(inst)? {
                Outcome::Feasible((Side::First, sol)) => (1, sol),
                Outcome::Feasible((Side::Second, sol)) => (2, sol),
                Outcome::Infeasible => return Ok(CheegerStatus::Infeasible),
            }
        } else {
            match feasibility::solve_lambdas_n(inst)? {
                Outcome::Feasible((_, sol)) => (0, sol),
                Outcome::Infeasible => return Ok(CheegerStatus::Infeasible),
            }
        };
        for (i, v) in sol.lambdas_f64().into_iter().enumerate() {
            *lambdas.add(i) = v;
        }
        if !side.is_null() {
            *side = s;
        }
        Ok(CheegerStatus::Ok)
    })
}

/// # Safety
/// `inst` must come from [`cheeger_feasibility_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn cheeger_feasibility_free(inst: *mut CheegerFeasibility) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

pub struct CheegerCounterexample(CounterexampleSpec);

/// Builds the cohomogeneity-one metric on the `n`-sphere (`n >= 5`) whose
/// deformations keep a negative horizontal Ricci value.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cheeger_counterexample_new(n: usize, out: *mut *mut CheegerCounterexample) -> CheegerStatus {
    nonnull!(out);
    *out = ptr::null_mut();
    guard(|| {
        let spec = counterexample::build(n)?;
        *out = Box::into_raw(Box::new(CheegerCounterexample(spec)));
        Ok(CheegerStatus::Ok)
    })
}

/// Curvature constants and the predicted horizontal Ricci value.
///
/// # Safety
/// `spec` must come from [`cheeger_counterexample_new`]; the out pointers
/// must be writable or null.
#[no_mangle]
pub unsafe extern "C" fn cheeger_counterexample_constants(
    spec: *const CheegerCounterexample,
    lambda1: *mut f64,
    lambda2: *mut f64,
    expected_ricci: *mut f64,
    t0: *mut f64,
) -> CheegerStatus {
    nonnull!(spec);
    let spec = &(*spec).0;
    for (p, v) in [
        (lambda1, spec.lambda1()),
        (lambda2, spec.lambda2()),
        (expected_ricci, spec.expected_ricci()),
        (t0, spec.warped.t0),
    ] {
        if !p.is_null() {
            *p = v;
        }
    }
    CheegerStatus::Ok
}

/// Evaluates `Ric_t(X)` at the fixed point for each of the `len` deformation
/// parameters, writing the values to `ricci`. Returns `Verification` when
/// any value strays from the prediction by more than `tol`.
///
/// # Safety
/// `spec` must come from [`cheeger_counterexample_new`]; `t_grid` and
/// `ricci` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn cheeger_counterexample_ricci(
    spec: *const CheegerCounterexample,
    t_grid: *const f64,
    len: usize,
    tol: f64,
    ricci: *mut f64,
) -> CheegerStatus {
    nonnull!(spec, ricci);
    let Some(grid) = slice(t_grid, len) else {
        return fail(CheegerStatus::NullPointer, "t_grid is null");
    };
    if grid.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
        return fail(CheegerStatus::Domain, "t_grid entries must be finite and nonnegative");
    }
    let spec = &(*spec).0;
    guard(|| {
        let report = counterexample::verify_negative_ricci(spec, grid)?;
        for (i, (_, r)) in report.rows.iter().enumerate() {
            *ricci.add(i) = *r;
        }
        if report.passed(tol) {
            Ok(CheegerStatus::Ok)
        } else {
            Err(CheegerError::Verification(format!(
                "max deviation {:e} exceeds {tol:e}",
                report.max_deviation
            )))
        }
    })
}

/// # Safety
/// `spec` must come from [`cheeger_counterexample_new`] or be null.
#[no_mangle]
pub unsafe extern "C" fn cheeger_counterexample_free(spec: *mut CheegerCounterexample) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}
