//! C ABI over the `cocycle` library.
//!
//! Every fallible call returns a [`CocycleStatus`] and writes its result
//! through an out-pointer. On failure, [`cocycle_last_error_message`] holds
//! a description until the next failing call on the same thread. Handles
//! are opaque; release them with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cocycle::c0::{Engine, Reconstructor};
use cocycle::ck::reconstruct_ck_point;
use cocycle::func::{cocycle_from_seed, Bivariate, FuncSpec, Seed};
use cocycle::rational::{Point, Rational};
use cocycle::verify::kurepa_residual;
use cocycle::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CocycleStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Syntax = 3,
    Argument = 4,
    Domain = 5,
    Eval = 6,
    Convergence = 7,
    Accuracy = 8,
    Panic = 9,
}

/// Lattice engine selector.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CocycleEngine {
    EuclidChain = 0,
    Dyadic = 1,
}

impl From<CocycleEngine> for Engine {
    fn from(e: CocycleEngine) -> Engine {
        match e {
            CocycleEngine::EuclidChain => Engine::EuclidChain,
            CocycleEngine::Dyadic => Engine::Dyadic,
        }
    }
}

/// A parsed or builtin function, univariate or bivariate.
pub struct CocycleFunction {
    spec: FuncSpec,
}

/// Memoizing reconstructor bound to one bivariate function.
pub struct CocycleReconstructor {
    inner: Reconstructor<FuncSpec>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> CocycleStatus {
    match e {
        Error::Syntax { .. } | Error::UnknownIdentifier { .. } | Error::Arity { .. } => {
            CocycleStatus::Syntax
        }
        Error::Domain { .. } | Error::Coverage(_) => CocycleStatus::Domain,
        Error::Eval(_) | Error::LatticeEval { .. } => CocycleStatus::Eval,
        Error::Convergence { .. } => CocycleStatus::Convergence,
        Error::Accuracy { .. } => CocycleStatus::Accuracy,
        Error::AtPoint { source, .. } => status_of(source),
        Error::Argument(_) | Error::EmptyGrid | Error::Io(_) => CocycleStatus::Argument,
    }
}

struct Fail(CocycleStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Fail {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(CocycleStatus::NullPointer, format!("{what} is null"))
}

/// Runs `body`, converting errors and panics into a status code.
fn guard(body: impl FnOnce() -> Result<(), Fail>) -> CocycleStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(Ok(())) => CocycleStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error(format!("internal panic: {msg}"));
            CocycleStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        Fail(
            CocycleStatus::InvalidUtf8,
            format!("{what} is not valid UTF-8"),
        )
    })
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

fn rational(num: i64, den: i64) -> Result<Rational, Fail> {
    Ok(Rational::reduce(num, den)?)
}

fn bivariate(f: &CocycleFunction) -> Result<&FuncSpec, Fail> {
    if f.spec.arity() != 2 {
        return Err(Fail(
            CocycleStatus::Argument,
            "function must be bivariate".into(),
        ));
    }
    Ok(&f.spec)
}

fn boxed(spec: FuncSpec) -> *mut CocycleFunction {
    Box::into_raw(Box::new(CocycleFunction { spec }))
}

/// Parses an expression in `nvars` (1 or 2) variables.
///
/// # Safety
/// `expr` and each of the `nvars` entries of `vars` must be nul-terminated
/// strings; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_parse(
    expr: *const c_char,
    vars: *const *const c_char,
    nvars: usize,
    out: *mut *mut CocycleFunction,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let src = str_arg(expr, "expr")?;
        if vars.is_null() && nvars > 0 {
            return Err(null("vars"));
        }
        let names = (0..nvars)
            .map(|i| str_arg(*vars.add(i), "variable name"))
            .collect::<Result<Vec<_>, _>>()?;
        *out = boxed(FuncSpec::parse(src, &names)?);
        Ok(())
    })
}

/// A builtin univariate seed by name: square, cube, expo, sine, hoelder.
///
/// # Safety
/// `name` must be a nul-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_builtin(
    name: *const c_char,
    out: *mut *mut CocycleFunction,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let seed: Seed = str_arg(name, "name")?.parse()?;
        *out = boxed(FuncSpec::Builtin(seed));
        Ok(())
    })
}

/// The bivariate `g(x + y) - g(x) - g(y)` of a univariate `g`. Does not
/// consume `g`.
///
/// # Safety
/// `g` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_from_seed(
    g: *const CocycleFunction,
    out: *mut *mut CocycleFunction,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let g = ref_arg(g, "g")?;
        *out = boxed(cocycle_from_seed(g.spec.clone())?);
        Ok(())
    })
}

/// 1 or 2; 0 for a null handle.
///
/// # Safety
/// `f` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_arity(f: *const CocycleFunction) -> usize {
    f.as_ref().map_or(0, |f| f.spec.arity())
}

/// Evaluates a bivariate function at `(x, y)`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_eval2(
    f: *const CocycleFunction,
    x: f64,
    y: f64,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = bivariate(ref_arg(f, "f")?)?.eval2(x, y)?;
        Ok(())
    })
}

/// Evaluates a univariate function at `t`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_eval1(
    f: *const CocycleFunction,
    t: f64,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ref_arg(f, "f")?.spec.eval1(t)?;
        Ok(())
    })
}

/// # Safety
/// `f` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cocycle_function_free(f: *mut CocycleFunction) {
    if !f.is_null() {
        drop(Box::from_raw(f));
    }
}

/// Creates a reconstructor for a bivariate function. Copies `f`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_reconstructor_new(
    f: *const CocycleFunction,
    out: *mut *mut CocycleReconstructor,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let spec = bivariate(ref_arg(f, "f")?)?.clone();
        let inner = Reconstructor::new(spec)?;
        *out = Box::into_raw(Box::new(CocycleReconstructor { inner }));
        Ok(())
    })
}

/// Normalized `h(num/den)` with `h(0) = h(1) = 0`.
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_reconstructor_h(
    rec: *const CocycleReconstructor,
    num: i64,
    den: i64,
    engine: CocycleEngine,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rec = ref_arg(rec, "rec")?;
        *out = rec.inner.h_rational(&rational(num, den)?, engine.into())?;
        Ok(())
    })
}

/// `f(num/den) = h(num/den) - F(0, 0)`.
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_reconstructor_f_rational(
    rec: *const CocycleReconstructor,
    num: i64,
    den: i64,
    engine: CocycleEngine,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rec = ref_arg(rec, "rec")?;
        *out = rec.inner.f_rational(&rational(num, den)?, engine.into())?;
        Ok(())
    })
}

/// `f(t)` at a real point to accuracy `epsilon`, via rational approximants.
///
/// # Safety
/// `rec` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_reconstructor_f_real(
    rec: *const CocycleReconstructor,
    t: f64,
    epsilon: f64,
    engine: CocycleEngine,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let rec = ref_arg(rec, "rec")?;
        *out = rec
            .inner
            .reconstruct_point(&Point::Real(t), epsilon, engine.into())?
            .value;
        Ok(())
    })
}

/// # Safety
/// `rec` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cocycle_reconstructor_free(rec: *mut CocycleReconstructor) {
    if !rec.is_null() {
        drop(Box::from_raw(rec));
    }
}

/// Max Kurepa defect of a bivariate function over `count` triples stored
/// as `x0, y0, z0, x1, y1, z1, ...`.
///
/// # Safety
/// `f` must be a live handle; `triples` must hold `3 * count` doubles;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_kurepa_residual(
    f: *const CocycleFunction,
    triples: *const f64,
    count: usize,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let f = bivariate(ref_arg(f, "f")?)?;
        if triples.is_null() && count > 0 {
            return Err(null("triples"));
        }
        let flat: &[f64] = if count == 0 {
            &[]
        } else {
            std::slice::from_raw_parts(triples, 3 * count)
        };
        let t: Vec<(f64, f64, f64)> = flat.chunks_exact(3).map(|c| (c[0], c[1], c[2])).collect();
        *out = kurepa_residual(f, &t, 0.0)?.max_residual.unwrap_or(0.0);
        Ok(())
    })
}

/// Differentiable-route `f(t)` with `f'(0) = 0`, quadrature tolerance `tol`.
///
/// # Safety
/// `f` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn cocycle_ck_point(
    f: *const CocycleFunction,
    t: f64,
    tol: f64,
    out: *mut f64,
) -> CocycleStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = reconstruct_ck_point(bivariate(ref_arg(f, "f")?)?, t, tol)?;
        Ok(())
    })
}

/// Message of the last failing call on this thread, or null. Valid until
/// the next failing call on this thread.
#[no_mangle]
pub extern "C" fn cocycle_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn cocycle_status_string(status: CocycleStatus) -> *const c_char {
    let s: &'static CStr = match status {
        CocycleStatus::Ok => c"ok",
        CocycleStatus::NullPointer => c"null pointer",
        CocycleStatus::InvalidUtf8 => c"invalid UTF-8",
        CocycleStatus::Syntax => c"syntax error",
        CocycleStatus::Argument => c"invalid argument",
        CocycleStatus::Domain => c"outside domain",
        CocycleStatus::Eval => c"evaluation error",
        CocycleStatus::Convergence => c"no convergence",
        CocycleStatus::Accuracy => c"accuracy not reached",
        CocycleStatus::Panic => c"internal panic",
    };
    s.as_ptr()
}
