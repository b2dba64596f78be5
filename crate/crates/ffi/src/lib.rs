//! C ABI over `ckballs`.
//!
//! Points are passed as `2k` doubles `(re_1, im_1, ..., re_k, im_k)`;
//! matrices as `2k^2` doubles, row-major with interleaved real and imaginary
//! parts. Every function returns a [`CkStatus`]; on failure the message is
//! available from [`ck_last_error_message`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ckballs::generated::example24_norm;
use ckballs::matrix::{ComplexMatrix, HermitianMatrix};
use ckballs::mobius::{ball_norm, pick_oracle, PickNodes};
use ckballs::nonsmooth::{
    build_sequence, curve_intersection, envelope_eval, f_ac, f_ac_prime, CurveParams,
    EnvelopeModel, SequenceConfig,
};
use ckballs::schur::{
    ideal_analyze, idempotent_oracle_from_matrix, pac_slice_membership, perp_membership,
    perp_oracle, SchurIdealGens,
};
use ckballs::{BallError, BallOracle, Membership, Point};
use num_complex::Complex64;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkStatus {
    CkOk = 0,
    CkNullPointer = 1,
    CkInvalidArgument = 2,
    CkDimensionMismatch = 3,
    CkNotHermitian = 4,
    CkNotInvertible = 5,
    CkNoConvergence = 6,
    CkPrecondition = 7,
    CkInternal = 8,
    CkPanic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CkMembership {
    CkNonMember = 0,
    CkMember = 1,
    CkUnknown = 2,
}

impl From<Membership> for CkMembership {
    fn from(m: Membership) -> Self {
        match m {
            Membership::Member => CkMembership::CkMember,
            Membership::NonMember => CkMembership::CkNonMember,
            Membership::Unknown => CkMembership::CkUnknown,
        }
    }
}

/// A membership oracle.
pub struct CkOracle {
    inner: BallOracle,
}

/// A finite set of Schur-ideal generators.
pub struct CkIdeal {
    inner: SchurIdealGens,
}

/// A built curve sequence with its envelope.
pub struct CkEnvelope {
    inner: EnvelopeModel,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &BallError) -> CkStatus {
    match e {
        BallError::DimensionMismatch { .. } | BallError::NotSquare { .. } => {
            CkStatus::CkDimensionMismatch
        }
        BallError::NotHermitian { .. } => CkStatus::CkNotHermitian,
        BallError::NotInvertible { .. } | BallError::IllConditioned { .. } => {
            CkStatus::CkNotInvertible
        }
        BallError::NoConvergence { .. }
        | BallError::MedianNoConvergence { .. }
        | BallError::SequenceStep { .. }
        | BallError::GridBudget { .. } => CkStatus::CkNoConvergence,
        BallError::Precondition(_) | BallError::NotPsd { .. } => CkStatus::CkPrecondition,
        _ => CkStatus::CkInvalidArgument,
    }
}

/// Runs `f`, recording errors and converting panics.
fn guard(f: impl FnOnce() -> Result<(), (CkStatus, String)>) -> CkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            CkStatus::CkOk
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("panic inside ckballs".into());
            CkStatus::CkPanic
        }
    }
}

trait OrStatus<T> {
    fn or_status(self) -> Result<T, (CkStatus, String)>;
}

impl<T> OrStatus<T> for ckballs::Result<T> {
    fn or_status(self) -> Result<T, (CkStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (CkStatus, String) {
    (CkStatus::CkNullPointer, format!("{what} is null"))
}

fn invalid(msg: &str) -> (CkStatus, String) {
    (CkStatus::CkInvalidArgument, msg.to_string())
}

unsafe fn read_complex(data: *const f64, count: usize, what: &str) -> Result<Vec<Complex64>, (CkStatus, String)> {
    if data.is_null() {
        return Err(null(what));
    }
    let raw = std::slice::from_raw_parts(data, 2 * count);
    Ok(raw.chunks(2).map(|p| Complex64::new(p[0], p[1])).collect())
}

unsafe fn read_point(data: *const f64, k: usize) -> Result<Point, (CkStatus, String)> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    Ok(Point::new(read_complex(data, k, "point")?))
}

unsafe fn read_hermitian(data: *const f64, k: usize) -> Result<HermitianMatrix, (CkStatus, String)> {
    if k == 0 {
        return Err(invalid("k must be positive"));
    }
    let entries = read_complex(data, k * k, "matrix")?;
    HermitianMatrix::new(ComplexMatrix::new(k, k, entries).or_status()?).or_status()
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (CkStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    *out = value;
    Ok(())
}

unsafe fn store_handle<T>(out: *mut *mut T, value: T) -> Result<(), (CkStatus, String)> {
    write_out(out, Box::into_raw(Box::new(value)), "out")
}

/// Length in bytes of the last error message on this thread, without the
/// terminating NUL; 0 when there is none.
#[no_mangle]
pub extern "C" fn ck_last_error_length() -> usize {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(0, |s| s.as_bytes().len()))
}

/// Copies the last error message into `buf` (NUL-terminated, truncated to
/// `len - 1` bytes). Returns the number of bytes written excluding the NUL.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn ck_last_error_message(buf: *mut c_char, len: usize) -> usize {
    if buf.is_null() || len == 0 {
        return 0;
    }
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let bytes = e.as_ref().map_or(&[][..], |s| s.as_bytes());
        let n = bytes.len().min(len - 1);
        ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, n);
        *buf.add(n) = 0;
        n
    })
}

/// Pick body with nodes `alpha` (`2k` doubles).
///
/// # Safety
/// `alpha` must hold `2k` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_pick(
    alpha: *const f64,
    k: usize,
    tol: f64,
    out: *mut *mut CkOracle,
) -> CkStatus {
    guard(|| {
        let nodes = PickNodes::new(read_point(alpha, k)?.into_coords()).or_status()?;
        store_handle(out, CkOracle { inner: pick_oracle(nodes, tol) })
    })
}

/// Unit ball `||Q^{1/2} Diag(w) Q^{-1/2}|| <= 1` for PSD invertible `Q`.
///
/// # Safety
/// `q` must hold `2k^2` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_idempotent(
    q: *const f64,
    k: usize,
    tol: f64,
    out: *mut *mut CkOracle,
) -> CkStatus {
    guard(|| {
        let q = read_hermitian(q, k)?;
        let oracle = idempotent_oracle_from_matrix(&q, tol).or_status()?;
        store_handle(out, CkOracle { inner: oracle })
    })
}

/// Perp ball of an ideal; the ideal handle is not consumed.
///
/// # Safety
/// `ideal` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_perp(
    ideal: *const CkIdeal,
    tol: f64,
    out: *mut *mut CkOracle,
) -> CkStatus {
    guard(|| {
        let ideal = ideal.as_ref().ok_or_else(|| null("ideal"))?;
        store_handle(out, CkOracle { inner: perp_oracle(ideal.inner.clone(), tol) })
    })
}

/// Writes the membership of `w` (`2k` doubles) to `out`.
///
/// # Safety
/// `oracle` must be live, `w` must hold `2k` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_membership(
    oracle: *const CkOracle,
    w: *const f64,
    k: usize,
    out: *mut CkMembership,
) -> CkStatus {
    guard(|| {
        let oracle = oracle.as_ref().ok_or_else(|| null("oracle"))?;
        let w = read_point(w, k)?;
        let m = oracle.inner.membership(&w).or_status()?;
        write_out(out, m.into(), "out")
    })
}

/// Minkowski norm of `w` by bisection on the oracle.
///
/// # Safety
/// `oracle` must be live, `w` must hold `2k` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_norm(
    oracle: *const CkOracle,
    w: *const f64,
    k: usize,
    out: *mut f64,
) -> CkStatus {
    guard(|| {
        let oracle = oracle.as_ref().ok_or_else(|| null("oracle"))?;
        let w = read_point(w, k)?;
        let n = ball_norm(&oracle.inner, &w).or_status()?;
        write_out(out, n, "out")
    })
}

/// Dimension `k` of the oracle, or 0 for null.
///
/// # Safety
/// `oracle` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_dim(oracle: *const CkOracle) -> usize {
    oracle.as_ref().map_or(0, |o| o.inner.dim())
}

/// # Safety
/// `oracle` must come from a `ck_oracle_*` constructor, or be null.
#[no_mangle]
pub unsafe extern "C" fn ck_oracle_free(oracle: *mut CkOracle) {
    if !oracle.is_null() {
        drop(Box::from_raw(oracle));
    }
}

/// Ideal generated by `n_gens` PSD `k x k` matrices stored back to back.
///
/// # Safety
/// `gens` must hold `2 n_gens k^2` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_ideal_new(
    gens: *const f64,
    n_gens: usize,
    k: usize,
    tol: f64,
    out: *mut *mut CkIdeal,
) -> CkStatus {
    guard(|| {
        if gens.is_null() {
            return Err(null("gens"));
        }
        let mats = (0..n_gens)
            .map(|g| read_hermitian(gens.add(2 * g * k * k), k))
            .collect::<Result<Vec<_>, _>>()?;
        let ideal = ideal_analyze(mats, tol).or_status()?;
        store_handle(out, CkIdeal { inner: ideal })
    })
}

/// Boundedness constant `delta` (0 for a trivial ideal).
///
/// # Safety
/// `ideal` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_ideal_delta(ideal: *const CkIdeal, out: *mut f64) -> CkStatus {
    guard(|| {
        let ideal = ideal.as_ref().ok_or_else(|| null("ideal"))?;
        write_out(out, ideal.inner.delta, "out")
    })
}

/// Writes 1 when the ideal is non-trivial, else 0.
///
/// # Safety
/// `ideal` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_ideal_nontrivial(ideal: *const CkIdeal, out: *mut i32) -> CkStatus {
    guard(|| {
        let ideal = ideal.as_ref().ok_or_else(|| null("ideal"))?;
        write_out(out, ideal.inner.nontrivial as i32, "out")
    })
}

/// Perp membership of `w` (`2k` doubles).
///
/// # Safety
/// `ideal` must be live, `w` must hold `2k` doubles, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_ideal_perp_membership(
    ideal: *const CkIdeal,
    w: *const f64,
    k: usize,
    tol: f64,
    out: *mut CkMembership,
) -> CkStatus {
    guard(|| {
        let ideal = ideal.as_ref().ok_or_else(|| null("ideal"))?;
        let w = read_point(w, k)?;
        let m = perp_membership(&ideal.inner, &w, tol).or_status()?;
        write_out(out, m.into(), "out")
    })
}

/// # Safety
/// `ideal` must come from [`ck_ideal_new`], or be null.
#[no_mangle]
pub unsafe extern "C" fn ck_ideal_free(ideal: *mut CkIdeal) {
    if !ideal.is_null() {
        drop(Box::from_raw(ideal));
    }
}

/// Builds `n_curves` curves starting at `(a0, c0)` with bisected endpoints.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_envelope_build(
    n_curves: usize,
    a0: f64,
    c0: f64,
    jump_min: f64,
    out: *mut *mut CkEnvelope,
) -> CkStatus {
    guard(|| {
        let cfg = SequenceConfig {
            n_curves,
            a0,
            c0,
            jump_min,
            ..SequenceConfig::default()
        };
        let model = build_sequence(&cfg).or_status()?;
        store_handle(out, CkEnvelope { inner: model })
    })
}

/// Number of breakpoints (`n_curves - 1`), or 0 for null.
///
/// # Safety
/// `env` must be live or null.
#[no_mangle]
pub unsafe extern "C" fn ck_envelope_breakpoint_count(env: *const CkEnvelope) -> usize {
    env.as_ref().map_or(0, |e| e.inner.breakpoints.len())
}

/// Copies up to `len` breakpoints into `out`; writes the number copied to
/// `written`.
///
/// # Safety
/// `env` must be live; `out` valid for `len` doubles; `written` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_envelope_breakpoints(
    env: *const CkEnvelope,
    out: *mut f64,
    len: usize,
    written: *mut usize,
) -> CkStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("envelope"))?;
        if out.is_null() && len > 0 {
            return Err(null("out"));
        }
        let n = env.inner.breakpoints.len().min(len);
        if n > 0 {
            ptr::copy_nonoverlapping(env.inner.breakpoints.as_ptr(), out, n);
        }
        write_out(written, n, "written")
    })
}

/// Envelope value at `u` and the 0-based index of the active curve.
///
/// # Safety
/// `env` must be live; `f` and `active` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_envelope_eval(
    env: *const CkEnvelope,
    u: f64,
    f: *mut f64,
    active: *mut usize,
) -> CkStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("envelope"))?;
        let (v, i) = envelope_eval(&env.inner, u).or_status()?;
        write_out(f, v, "f")?;
        write_out(active, i, "active")
    })
}

/// Writes 1 when every structural invariant re-checks, else 0.
///
/// # Safety
/// `env` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_envelope_invariants_hold(env: *const CkEnvelope, out: *mut i32) -> CkStatus {
    guard(|| {
        let env = env.as_ref().ok_or_else(|| null("envelope"))?;
        write_out(out, env.inner.all_invariants_hold() as i32, "out")
    })
}

/// # Safety
/// `env` must come from [`ck_envelope_build`], or be null.
#[no_mangle]
pub unsafe extern "C" fn ck_envelope_free(env: *mut CkEnvelope) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// `f_{a,c}(u)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_f_ac(a: f64, c: f64, u: f64, out: *mut f64) -> CkStatus {
    guard(|| {
        let p = CurveParams::new(a, c).or_status()?;
        write_out(out, f_ac(p, u).or_status()?, "out")
    })
}

/// `d/du f_{a,c}(u)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_f_ac_prime(a: f64, c: f64, u: f64, out: *mut f64) -> CkStatus {
    guard(|| {
        let p = CurveParams::new(a, c).or_status()?;
        write_out(out, f_ac_prime(p, u).or_status()?, "out")
    })
}

/// Crossing abscissa of `f_{a1,c1}` and `f_{a2,c2}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_curve_intersection(
    a1: f64,
    c1: f64,
    a2: f64,
    c2: f64,
    out: *mut f64,
) -> CkStatus {
    guard(|| {
        let p1 = CurveParams::new(a1, c1).or_status()?;
        let p2 = CurveParams::new(a2, c2).or_status()?;
        write_out(out, curve_intersection(p1, p2).or_status()?, "out")
    })
}

/// Membership of `(0, x, y)` in the perp of `P_{a,c}`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ck_pac_slice_membership(
    a: f64,
    c: f64,
    x: f64,
    y: f64,
    tol: f64,
    out: *mut CkMembership,
) -> CkStatus {
    guard(|| {
        let m = pac_slice_membership(a, c, x, y, tol).or_status()?;
        write_out(out, m.into(), "out")
    })
}

/// Norm of `w` in `C^2` (4 doubles) for the ball generated by `(1, -1)`.
///
/// # Safety
/// `w` must hold 4 doubles; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ck_example24_norm(w: *const f64, out: *mut f64) -> CkStatus {
    guard(|| {
        let w = read_point(w, 2)?;
        write_out(out, example24_norm(&w).or_status()?, "out")
    })
}
