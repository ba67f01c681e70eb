//! C ABI over `g2min`.
//!
//! Models and transforms are opaque heap handles, released with the matching
//! `_free` function. Rationals cross the boundary as NUL-terminated strings
//! `"n"` or `"n/d"`. Every fallible function returns a [`G2Status`]; on
//! failure a message is available from [`g2_last_error_message`] on the same
//! thread. Strings returned through `char **` must be released with
//! [`g2_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use g2min::arith::{format_rational, parse_rational, Rational};
use g2min::cli::ModelFile;
use g2min::error::Error;
use g2min::linalg::QMatrix;
use g2min::minimise::{minimise_model_global, minimise_model_local, minimise_step};
use g2min::model::{CurveSextic, Model, QuadForm6, Transform};
use g2min::weights::brute_force_minimisable;

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum G2Status {
    Ok = 0,
    /// A precondition failed, e.g. the model is invalid or `p` is not prime.
    InvalidArgument = 1,
    /// A string could not be parsed.
    ParseError = 2,
    /// A required pointer was null.
    NullPointer = 3,
    /// Internal failure; the library state is unaffected.
    Panic = 4,
}

/// A model `(λ, H)` together with its sextic.
pub struct G2Model(Model);

/// A pair `(c, P)` acting on models.
pub struct G2Transform(Transform);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(G2Status, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match e {
            Error::Parse(_) => G2Status::ParseError,
            _ => G2Status::InvalidArgument,
        };
        Failure(status, e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(G2Status::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> G2Status {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            G2Status::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "internal error".into());
            set_error(&msg);
            G2Status::Panic
        }
    }
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s).to_str().map_err(|_| Failure(G2Status::ParseError, format!("{what} is not UTF-8")))
}

unsafe fn rationals(xs: *const *const c_char, n: usize, what: &str) -> Result<Vec<Rational>, Failure> {
    if xs.is_null() {
        return Err(null(what));
    }
    (0..n).map(|i| Ok(parse_rational(text(*xs.add(i), what)?)?)).collect()
}

unsafe fn model<'a>(m: *const G2Model) -> Result<&'a Model, Failure> {
    m.as_ref().map(|m| &m.0).ok_or_else(|| null("model"))
}

unsafe fn put<T>(out: *mut *mut T, value: T) {
    *out = Box::into_raw(Box::new(value));
}

unsafe fn put_string(out: *mut *mut c_char, s: String) {
    *out = CString::new(s).expect("no interior NUL").into_raw();
}

/// Message for the last failure on this thread; empty after a success. The
/// pointer stays valid until the next call into this library on the thread.
#[no_mangle]
pub extern "C" fn g2_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

#[no_mangle]
pub extern "C" fn g2_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn g2_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Builds a model from `curve[0..7]` (`f0` first), `lambda` and `h[0..21]`
/// (upper-triangular order over `z12, z13, z23, z14, z24, z34`), checking the
/// determinant identity.
///
/// # Safety
/// `curve` must point to 7 strings, `h` to 21, all NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_new(
    curve: *const *const c_char,
    lambda: *const c_char,
    h: *const *const c_char,
    out: *mut *mut G2Model,
) -> G2Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let f = rationals(curve, 7, "curve")?;
        let curve = CurveSextic::new(std::array::from_fn(|i| f[i].clone()))?;
        let lambda = parse_rational(text(lambda, "lambda")?)?;
        let h = QuadForm6::from_slice(&rationals(h, 21, "h")?)?;
        put(out, G2Model(Model::new(curve, lambda, h)?));
        Ok(())
    })
}

/// Parses a model file line (the CLI format) and checks it.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_from_json(json: *const c_char, out: *mut *mut G2Model) -> G2Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let m = ModelFile::parse(text(json, "json")?)?.to_model(true)?;
        put(out, G2Model(m));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_to_json(m: *const G2Model, out: *mut *mut c_char) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_string(out, ModelFile::from_model(m, None).to_line().trim_end().to_string());
        Ok(())
    })
}

/// `λ` as a string.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_lambda(m: *const G2Model, out: *mut *mut c_char) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        put_string(out, format_rational(&m.lambda));
        Ok(())
    })
}

/// Coefficient `index` (0 to 20) of `H` as a string.
///
/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_coefficient(m: *const G2Model, index: usize, out: *mut *mut c_char) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let c = m.h.coeffs().get(index).ok_or_else(|| {
            Failure(G2Status::InvalidArgument, format!("coefficient index {index} out of range"))
        })?;
        put_string(out, format_rational(c));
        Ok(())
    })
}

/// # Safety
/// `m` must be a live model handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_is_valid(m: *const G2Model, out: *mut bool) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = m.is_valid();
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live model handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn g2_model_free(m: *mut G2Model) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// `(c, P)` from a scalar and 16 matrix entries in row-major order.
///
/// # Safety
/// `c` must be a NUL-terminated string, `p` must point to 16; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_transform_new(
    c: *const c_char,
    p: *const *const c_char,
    out: *mut *mut G2Transform,
) -> G2Status {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let c = parse_rational(text(c, "c")?)?;
        let e = rationals(p, 16, "p")?;
        let t = Transform::new(c, QMatrix::from_fn(|i, j| e[4 * i + j].clone()))?;
        put(out, G2Transform(t));
        Ok(())
    })
}

/// `c` followed by the 16 entries of `P`, as a JSON array of strings.
///
/// # Safety
/// `t` must be a live transform handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_transform_to_json(t: *const G2Transform, out: *mut *mut c_char) -> G2Status {
    guard(|| {
        let t = t.as_ref().ok_or_else(|| null("transform"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mut v = vec![format_rational(&t.0.c)];
        v.extend(t.0.p.0.iter().flatten().map(format_rational));
        put_string(out, serde_json::to_string(&v).expect("strings"));
        Ok(())
    })
}

/// # Safety
/// `t` must be null or a live transform handle; it is invalid afterwards.
#[no_mangle]
pub unsafe extern "C" fn g2_transform_free(t: *mut G2Transform) {
    if !t.is_null() {
        drop(Box::from_raw(t));
    }
}

/// The model `(cλ, (c/det P) H ∘ ∧²P)`.
///
/// # Safety
/// Handles must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_model_act(
    m: *const G2Model,
    t: *const G2Transform,
    out: *mut *mut G2Model,
) -> G2Status {
    guard(|| {
        let m = model(m)?;
        let t = t.as_ref().ok_or_else(|| null("transform"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        put(out, G2Model(m.act(&t.0)));
        Ok(())
    })
}

/// Minimises at `p`, returning the new model and the transform producing it.
///
/// # Safety
/// `m` must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_minimise_local(
    m: *const G2Model,
    p: u64,
    out_model: *mut *mut G2Model,
    out_transform: *mut *mut G2Transform,
) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out_model.is_null() || out_transform.is_null() {
            return Err(null("output"));
        }
        let r = minimise_model_local(m, p)?;
        put(out_model, G2Model(r.model));
        put(out_transform, G2Transform(r.transform));
        Ok(())
    })
}

/// Minimises at the given primes, or at the primes found by trial division
/// when `nprimes` is 0.
///
/// # Safety
/// `primes` must point to `nprimes` values (or be null when 0); outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_minimise_global(
    m: *const G2Model,
    primes: *const u64,
    nprimes: usize,
    out_model: *mut *mut G2Model,
    out_transform: *mut *mut G2Transform,
) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out_model.is_null() || out_transform.is_null() {
            return Err(null("output"));
        }
        let list = if nprimes == 0 {
            None
        } else if primes.is_null() {
            return Err(null("primes"));
        } else {
            Some(std::slice::from_raw_parts(primes, nprimes))
        };
        let r = minimise_model_global(m, list)?;
        put(out_model, G2Model(r.model));
        put(out_transform, G2Transform(r.transform));
        Ok(())
    })
}

/// Whether one run of the algorithm finds `P` with `v((1/det P) H ∘ ∧²P) > 0`.
///
/// # Safety
/// `m` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_is_reducible(m: *const G2Model, p: u64, out: *mut bool) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = minimise_step(&m.h, p)?.reducible;
        Ok(())
    })
}

/// Exhaustive answer to the same question, for `p` = 2 or 3.
///
/// # Safety
/// `m` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn g2_oracle_reducible(m: *const G2Model, p: u64, out: *mut bool) -> G2Status {
    guard(|| {
        let m = model(m)?;
        if out.is_null() {
            return Err(null("out"));
        }
        *out = brute_force_minimisable(&m.h, p)?;
        Ok(())
    })
}
