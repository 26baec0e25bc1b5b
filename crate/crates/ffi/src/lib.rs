//! C ABI over the `gaep` toolkit.
//!
//! Every fallible call returns a [`GaepStatus`]; on failure the message is
//! kept per thread and read with [`gaep_last_error`]. Problems are opaque
//! handles created by [`gaep_problem_new`] and released with
//! [`gaep_problem_free`]. Panics never cross the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use gaep::ballprob::{ball_prob_exact_dp, BallQuery};
use gaep::codec::{elias_delta_len, elias_encode};
use gaep::model::{DistortionMeasure, FiniteDistribution};
use gaep::ratefn::{blahut_arimoto, per_letter_terms, rate_r1, FiniteProblem, Regime};
use gaep::Error;

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GaepStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidDistribution = 2,
    InvalidDistortion = 3,
    DimensionMismatch = 4,
    Infeasible = 5,
    Degenerate = 6,
    NoValueGrid = 7,
    TooLarge = 8,
    Numerical = 9,
    BufferTooSmall = 10,
    Other = 11,
    Panic = 12,
}

/// Source law, reproduction law and distortion matrix.
pub struct GaepProblem {
    p: FiniteDistribution,
    q: FiniteDistribution,
    rho: DistortionMeasure,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> GaepStatus {
    match e {
        Error::InvalidDistribution(_) | Error::Empty(_) => GaepStatus::InvalidDistribution,
        Error::InvalidDistortion(_) => GaepStatus::InvalidDistortion,
        Error::DimensionMismatch(_) => GaepStatus::DimensionMismatch,
        Error::InfeasibleLow { .. } | Error::FallbackInfeasible(_) => GaepStatus::Infeasible,
        Error::Degenerate(_) => GaepStatus::Degenerate,
        Error::NoValueGrid => GaepStatus::NoValueGrid,
        Error::TooLarge(_) => GaepStatus::TooLarge,
        Error::Numerical(_) => GaepStatus::Numerical,
        _ => GaepStatus::Other,
    }
}

fn guard<F: FnOnce() -> Result<(), (GaepStatus, String)>>(f: F) -> GaepStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GaepStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            GaepStatus::Panic
        }
    }
}

fn lift<T>(r: gaep::Result<T>) -> Result<T, (GaepStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (GaepStatus, String) {
    (GaepStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], (GaepStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller guarantees `p` points to `len` readable elements.
    Ok(unsafe { std::slice::from_raw_parts(p, len) })
}

unsafe fn problem_ref<'a>(h: *const GaepProblem) -> Result<&'a GaepProblem, (GaepStatus, String)> {
    // SAFETY: non-null handles come from gaep_problem_new.
    unsafe { h.as_ref() }.ok_or_else(|| null("problem"))
}

unsafe fn write<T>(out: *mut T, v: T) {
    if !out.is_null() {
        // SAFETY: non-null output pointers are writable per the API contract.
        unsafe { out.write(v) };
    }
}

/// Message of the last failed call on this thread, or NULL. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn gaep_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Builds a problem from P (length `rows`), Q (length `cols`) and a row-major
/// `rows x cols` distortion matrix. `grid <= 0` means no value grid.
///
/// # Safety
/// Pointers must reference arrays of the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gaep_problem_new(
    p: *const f64,
    rows: usize,
    q: *const f64,
    cols: usize,
    rho: *const f64,
    grid: f64,
    out: *mut *mut GaepProblem,
) -> GaepStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let p = unsafe { slice(p, rows, "p")? };
        let q = unsafe { slice(q, cols, "q")? };
        let m = unsafe { slice(rho, rows * cols, "rho")? };
        let matrix: Vec<Vec<f64>> = if cols == 0 { Vec::new() } else { m.chunks(cols).map(<[f64]>::to_vec).collect() };
        let problem = GaepProblem {
            p: lift(FiniteDistribution::from_probs(p.to_vec()))?,
            q: lift(FiniteDistribution::from_probs(q.to_vec()))?,
            rho: lift(DistortionMeasure::new(matrix, (grid > 0.0).then_some(grid)))?,
        };
        unsafe { write(out, Box::into_raw(Box::new(problem))) };
        Ok(())
    })
}

/// Releases a problem; NULL is ignored.
///
/// # Safety
/// `h` must come from [`gaep_problem_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn gaep_problem_free(h: *mut GaepProblem) {
    if !h.is_null() {
        // SAFETY: h was produced by Box::into_raw in gaep_problem_new.
        drop(unsafe { Box::from_raw(h) });
    }
}

/// R₁(P, Q, D) in nats with the dual root λ*; `zero_rate` is set to 1 when D ≥ d_av.
///
/// # Safety
/// `h` must be a live handle; outputs may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gaep_rate_r1(h: *const GaepProblem, d: f64, r1_nats: *mut f64, lambda_star: *mut f64, zero_rate: *mut i32) -> GaepStatus {
    guard(|| {
        let h = unsafe { problem_ref(h)? };
        let pt = lift(rate_r1(&lift(FiniteProblem::new(&h.p, &h.q, &h.rho))?, d))?;
        unsafe {
            write(r1_nats, pt.r1_nats);
            write(lambda_star, pt.lambda_star);
            write(zero_rate, (pt.regime == Regime::ZeroRate) as i32);
        }
        Ok(())
    })
}

/// Minimal coding variance Var_P[h(X)] in bits² at distortion D.
///
/// # Safety
/// `h` must be a live handle; `out` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn gaep_sigma2_coding(h: *const GaepProblem, d: f64, out: *mut f64) -> GaepStatus {
    guard(|| {
        let h = unsafe { problem_ref(h)? };
        let t = lift(per_letter_terms(&lift(FiniteProblem::new(&h.p, &h.q, &h.rho))?, d))?;
        unsafe { write(out, t.sigma2_coding) };
        Ok(())
    })
}

/// R(D) in bits for the problem's P and distortion (Q is ignored); the
/// optimal reproduction law is written to `q_star` when it has room for
/// `cols` entries.
///
/// # Safety
/// `h` must be a live handle; `q_star` must hold `q_star_len` doubles or be NULL.
#[no_mangle]
pub unsafe extern "C" fn gaep_blahut_arimoto(h: *const GaepProblem, d: f64, tol: f64, rate_bits: *mut f64, q_star: *mut f64, q_star_len: usize) -> GaepStatus {
    guard(|| {
        let h = unsafe { problem_ref(h)? };
        let sol = lift(blahut_arimoto(&h.p, &h.rho, d, tol))?;
        unsafe { write(rate_bits, sol.rate_bits) };
        if !q_star.is_null() {
            let probs = sol.q_star.probs();
            if q_star_len < probs.len() {
                return Err((GaepStatus::BufferTooSmall, format!("q_star needs {} entries", probs.len())));
            }
            // SAFETY: q_star holds at least q_star_len >= probs.len() doubles.
            unsafe { ptr::copy_nonoverlapping(probs.as_ptr(), q_star, probs.len()) };
        }
        Ok(())
    })
}

/// Exact natural-log ball probability log Qⁿ(B(x, D)); −∞ for an empty ball.
///
/// # Safety
/// `h` must be a live handle and `x` must hold `n` symbols.
#[no_mangle]
pub unsafe extern "C" fn gaep_ball_log_prob(h: *const GaepProblem, x: *const u32, n: usize, d: f64, log_prob: *mut f64) -> GaepStatus {
    guard(|| {
        let h = unsafe { problem_ref(h)? };
        let x: Vec<usize> = unsafe { slice(x, n, "x")? }.iter().map(|s| *s as usize).collect();
        let b = lift(ball_prob_exact_dp(&lift(BallQuery::new(&x, &h.q, &h.rho, d))?))?;
        unsafe { write(log_prob, b.log_prob) };
        Ok(())
    })
}

/// Length in bits of the Elias-delta codeword of `n`; 0 for n = 0.
#[no_mangle]
pub extern "C" fn gaep_elias_len(n: u64) -> u64 {
    if n == 0 {
        0
    } else {
        elias_delta_len(n)
    }
}

/// Writes the Elias-delta codeword of `n` as a NUL-terminated '0'/'1' string.
///
/// # Safety
/// `buf` must hold `cap` bytes; at least codeword length + 1 are needed.
#[no_mangle]
pub unsafe extern "C" fn gaep_elias_encode(n: u64, buf: *mut c_char, cap: usize) -> GaepStatus {
    guard(|| {
        if buf.is_null() {
            return Err(null("buf"));
        }
        let s = lift(elias_encode(n))?;
        if cap < s.len() + 1 {
            return Err((GaepStatus::BufferTooSmall, format!("need {} bytes", s.len() + 1)));
        }
        // SAFETY: buf holds cap >= len + 1 bytes.
        unsafe {
            ptr::copy_nonoverlapping(s.as_ptr().cast::<c_char>(), buf, s.len());
            buf.add(s.len()).write(0);
        }
        Ok(())
    })
}
