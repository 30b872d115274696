//! C ABI for `matmoment`.
//!
//! Problems and measures are opaque heap handles released with their
//! `*_free` function. Every fallible call returns an [`MmStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`mm_last_error_message`]. Matrices cross the boundary as row-major
//! arrays of `n * n` doubles, real and imaginary parts separately (a null
//! imaginary pointer means a real matrix).

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use matmoment::extensions::CanonicalParameter;
use matmoment::linalg::{CMat, HermMatrix};
use num_complex::Complex64;
use matmoment::{io, solutions, solvability, DiscreteMatrixMeasure, Error, MomentSequence};

/// Status codes; `MM_OK` is zero.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MmStatus {
    MmOk = 0,
    /// A required pointer argument was null.
    MmErrNull = 1,
    /// Bad input data: shapes, interval, non-Hermitian matrices.
    MmErrInvalid = 2,
    /// Unreadable or malformed file.
    MmErrParse = 3,
    /// `K` or `T` outside `[0, I]`, or of the wrong size.
    MmErrParameter = 4,
    /// The problem has no solution.
    MmErrUnsolvable = 5,
    /// Numerical failure (singular resolvent, failed self-check, ...).
    MmErrNumeric = 6,
    /// Unexpected panic inside the library.
    MmErrPanic = 7,
}

/// Opaque truncated moment problem.
pub struct MmProblem(MomentSequence);

/// Opaque discrete matrix measure.
pub struct MmMeasure(DiscreteMatrixMeasure);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> MmStatus {
    match e {
        Error::Parse(_) | Error::Io(_) => MmStatus::MmErrParse,
        Error::InvalidParameter(_) => MmStatus::MmErrParameter,
        Error::Unsolvable { .. } => MmStatus::MmErrUnsolvable,
        Error::IllDefinedOperator { .. } | Error::SingularResolvent(_) | Error::Internal(_) => {
            MmStatus::MmErrNumeric
        }
        _ => MmStatus::MmErrInvalid,
    }
}

/// Runs `f`, translating errors and panics into a status.
fn guard(f: impl FnOnce() -> Result<(), (MmStatus, String)>) -> MmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MmStatus::MmOk,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            MmStatus::MmErrPanic
        }
    }
}

fn lib(e: Error) -> (MmStatus, String) {
    (status_of(&e), e.to_string())
}

fn null(what: &str) -> (MmStatus, String) {
    (MmStatus::MmErrNull, format!("{what} is null"))
}

unsafe fn deref<'a, T>(p: *const T, what: &str) -> Result<&'a T, (MmStatus, String)> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, (MmStatus, String)> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, (MmStatus, String)> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| (MmStatus::MmErrInvalid, "path is not UTF-8".into()))
}

/// Reads `count` row-major `n x n` matrices.
unsafe fn matrices(
    re: *const f64,
    im: *const f64,
    n: usize,
    count: usize,
) -> Result<Vec<CMat>, (MmStatus, String)> {
    if re.is_null() {
        return Err(null("real part"));
    }
    let len = n * n * count;
    let re = std::slice::from_raw_parts(re, len);
    let im = (!im.is_null()).then(|| std::slice::from_raw_parts(im, len));
    Ok((0..count)
        .map(|k| {
            CMat::from_fn(n, n, |i, j| {
                let idx = k * n * n + i * n + j;
                Complex64::new(re[idx], im.map_or(0.0, |v| v[idx]))
            })
        })
        .collect())
}

fn hermitian(m: CMat) -> Result<HermMatrix, (MmStatus, String)> {
    HermMatrix::with_tolerance(m, io::PARSE_HERMITIAN_TOL).map_err(lib)
}

fn scalar_parameter(t: f64, what: &str) -> Result<CanonicalParameter, (MmStatus, String)> {
    if (0.0..=1.0).contains(&t) {
        Ok(CanonicalParameter::Scaled(t))
    } else {
        Err((MmStatus::MmErrParameter, format!("{what} = {t} outside [0, 1]")))
    }
}

/// Message of the last failure on this thread (a failed call, or the failed
/// conditions of an unsolvable `mm_problem_check`); empty if none. The
/// pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn mm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds a problem from `count` moments `S_0..S_{count-1}`, each `n x n`.
///
/// # Safety
/// `re` (and `im` unless null) must point to `count * n * n` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_problem_new(
    a: f64,
    b: f64,
    n: usize,
    count: usize,
    re: *const f64,
    im: *const f64,
    out: *mut *mut MmProblem,
) -> MmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        if n == 0 || count == 0 {
            return Err((MmStatus::MmErrInvalid, "n and count must be positive".into()));
        }
        let moments = matrices(re, im, n, count)?
            .into_iter()
            .map(hermitian)
            .collect::<Result<Vec<_>, _>>()?;
        let seq = MomentSequence::new(a, b, moments).map_err(lib)?;
        *out = Box::into_raw(Box::new(MmProblem(seq)));
        Ok(())
    })
}

/// Loads a problem JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_problem_load(path: *const c_char, out: *mut *mut MmProblem) -> MmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let seq = io::read_problem(path_arg(path)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(MmProblem(seq)));
        Ok(())
    })
}

/// # Safety
/// `problem` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mm_problem_free(problem: *mut MmProblem) {
    if !problem.is_null() {
        drop(Box::from_raw(problem));
    }
}

/// Block size `N`, or 0 for a null handle.
///
/// # Safety
/// `problem` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mm_problem_block_size(problem: *const MmProblem) -> usize {
    problem.as_ref().map_or(0, |p| p.0.block_size())
}

/// Decides solvability; `*solvable` is set to 1 or 0.
///
/// # Safety
/// `problem` must be a live handle; `solvable` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_problem_check(problem: *const MmProblem, solvable: *mut i32) -> MmStatus {
    guard(|| {
        let p = deref(problem, "problem")?;
        let solvable = out_ptr(solvable, "solvable")?;
        let report = solvability::check(&p.0).map_err(lib)?;
        *solvable = i32::from(report.solvable);
        if !report.solvable {
            set_error(&format!("failed: {}", report.failed_conditions.join(", ")));
        }
        Ok(())
    })
}

fn solve_with(
    seq: &MomentSequence,
    k: CanonicalParameter,
    t: CanonicalParameter,
) -> Result<MmMeasure, (MmStatus, String)> {
    let report = solvability::check(seq).map_err(lib)?;
    if !report.solvable {
        return Err(lib(Error::Unsolvable {
            failed: report.failed_conditions,
        }));
    }
    solutions::solve(seq, &k, &t).map(MmMeasure).map_err(lib)
}

/// Solves with `K = k·I` and, for an even number of moments, `T = t·I`;
/// both scalars must lie in `[0, 1]`.
///
/// # Safety
/// `problem` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_problem_solve(
    problem: *const MmProblem,
    k: f64,
    t: f64,
    out: *mut *mut MmMeasure,
) -> MmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let m = solve_with(&p.0, scalar_parameter(k, "k")?, scalar_parameter(t, "t")?)?;
        *out = Box::into_raw(Box::new(m));
        Ok(())
    })
}

/// Solves with explicit Hermitian matrices `K` (`k_dim x k_dim`, the defect
/// dimension) and `T` (`N x N`). A null real pointer selects `I/2`.
///
/// # Safety
/// Non-null matrix pointers must hold `dim * dim` doubles; `problem` must be
/// a live handle; `out` must be writable.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn mm_problem_solve_matrix(
    problem: *const MmProblem,
    k_dim: usize,
    k_re: *const f64,
    k_im: *const f64,
    t_re: *const f64,
    t_im: *const f64,
    out: *mut *mut MmMeasure,
) -> MmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let p = deref(problem, "problem")?;
        let param = |re: *const f64, im: *const f64, dim: usize| {
            if re.is_null() {
                return Ok(CanonicalParameter::half());
            }
            let m = matrices(re, im, dim, 1)?.pop().unwrap_or_else(|| CMat::zeros(0, 0));
            hermitian(m).map(CanonicalParameter::Matrix)
        };
        let k = param(k_re, k_im, k_dim)?;
        let t = param(t_re, t_im, p.0.block_size())?;
        *out = Box::into_raw(Box::new(solve_with(&p.0, k, t)?));
        Ok(())
    })
}

/// Loads a measure JSON file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_load(path: *const c_char, out: *mut *mut MmMeasure) -> MmStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let m = io::read_measure(path_arg(path)?).map_err(lib)?;
        *out = Box::into_raw(Box::new(MmMeasure(m)));
        Ok(())
    })
}

/// Writes a measure JSON file.
///
/// # Safety
/// `measure` must be a live handle; `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_save(measure: *const MmMeasure, path: *const c_char) -> MmStatus {
    guard(|| {
        let m = deref(measure, "measure")?;
        io::write_measure(path_arg(path)?, &m.0).map_err(lib)
    })
}

/// # Safety
/// `measure` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_free(measure: *mut MmMeasure) {
    if !measure.is_null() {
        drop(Box::from_raw(measure));
    }
}

/// Number of atoms, or 0 for a null handle.
///
/// # Safety
/// `measure` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_len(measure: *const MmMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.len())
}

/// Block size `N`, or 0 for a null handle.
///
/// # Safety
/// `measure` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_block_size(measure: *const MmMeasure) -> usize {
    measure.as_ref().map_or(0, |m| m.0.block_size())
}

/// Copies atom `index` (sorted by location): its location into `*x` and its
/// weight into the row-major `N x N` arrays `re` / `im` (either may be null).
///
/// # Safety
/// `measure` must be a live handle; non-null outputs must be writable with
/// room for `N * N` doubles.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_atom(
    measure: *const MmMeasure,
    index: usize,
    x: *mut f64,
    re: *mut f64,
    im: *mut f64,
) -> MmStatus {
    guard(|| {
        let m = deref(measure, "measure")?;
        let atom = m.0.atoms().get(index).ok_or_else(|| {
            (MmStatus::MmErrInvalid, format!("atom index {index} out of range ({} atoms)", m.0.len()))
        })?;
        if let Some(x) = x.as_mut() {
            *x = atom.x;
        }
        let n = m.0.block_size();
        for i in 0..n {
            for j in 0..n {
                let w = atom.weight.get(i, j);
                if !re.is_null() {
                    *re.add(i * n + j) = w.re;
                }
                if !im.is_null() {
                    *im.add(i * n + j) = w.im;
                }
            }
        }
        Ok(())
    })
}

/// Compares the moments of `measure` with `problem`; `*passed` is 1 when
/// every moment matches within `tol` (relative), the support lies in
/// `[a, b]` and the weights are PSD.
///
/// # Safety
/// Handles must be live; `passed` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mm_measure_verify(
    measure: *const MmMeasure,
    problem: *const MmProblem,
    tol: f64,
    passed: *mut i32,
) -> MmStatus {
    guard(|| {
        let m = deref(measure, "measure")?;
        let p = deref(problem, "problem")?;
        let passed = out_ptr(passed, "passed")?;
        if !(tol.is_finite() && tol >= 0.0) {
            return Err((MmStatus::MmErrParameter, format!("tolerance {tol} must be >= 0")));
        }
        let report = solutions::verify(&m.0, &p.0, tol).map_err(lib)?;
        *passed = i32::from(report.passed);
        Ok(())
    })
}
