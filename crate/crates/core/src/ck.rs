//! Reconstruction for differentiable F.
//!
//! Along `l = (1/sqrt2, -1/sqrt2)` the derivative of a cocycle splits as
//! `dF/dl(x, y) = h1(x) + h2(y)` with `h1(x) = dF/dl(x, 0)` and
//! `h2 = -h1`. Integrating gives `u(t) = -sqrt2 * int_0^t h1`, and
//! `f = u - F(0, 0)` solves the cocycle with `f'(0) = 0`.

use std::f64::consts::SQRT_2;

use crate::c0::{EngineTag, Normalization, ReconstructedFunction, Sample};
use crate::error::{Error, Result};
use crate::func::Bivariate;

const DIR: (f64, f64) = (1.0 / SQRT_2, -1.0 / SQRT_2);

/// Default quadrature tolerance.
pub const DEFAULT_TOL: f64 = 1e-10;

const MAX_DEPTH: u32 = 48;

/// `cbrt(machine epsilon) * max(1, |point|)`.
pub fn default_step(x: f64, y: f64) -> f64 {
    f64::EPSILON.cbrt() * x.hypot(y).max(1.0)
}

/// Central difference of F along `l` at `(x, y)`, with one Richardson level
/// when `richardson` is set.
pub fn directional_derivative<F: Bivariate + ?Sized>(
    f: &F,
    (x, y): (f64, f64),
    step: f64,
    richardson: bool,
) -> Result<f64> {
    if step.is_nan() || step <= 0.0 {
        return Err(Error::Argument(format!(
            "step must be positive, got {step}"
        )));
    }
    let central = |s: f64| -> Result<f64> {
        let fwd = f.eval2(x + DIR.0 * s, y + DIR.1 * s)?;
        let bwd = f.eval2(x - DIR.0 * s, y - DIR.1 * s)?;
        Ok((fwd - bwd) / (2.0 * s))
    };
    let coarse = central(step)?;
    if !richardson {
        return Ok(coarse);
    }
    let fine = central(step / 2.0)?;
    Ok((4.0 * fine - coarse) / 3.0)
}

/// `h1` and `h2` of a bivariate F.
pub struct DerivativeProfile<'a, F: Bivariate + ?Sized> {
    f: &'a F,
    /// Fixed step; `None` uses [`default_step`] at each point.
    pub step: Option<f64>,
    pub richardson: bool,
    at_origin: f64,
}

impl<'a, F: Bivariate + ?Sized> DerivativeProfile<'a, F> {
    pub fn new(f: &'a F) -> Result<Self> {
        let mut p = DerivativeProfile {
            f,
            step: None,
            richardson: true,
            at_origin: 0.0,
        };
        p.at_origin = p.derivative(0.0, 0.0)?;
        Ok(p)
    }

    fn derivative(&self, x: f64, y: f64) -> Result<f64> {
        let step = self.step.unwrap_or_else(|| default_step(x, y));
        directional_derivative(self.f, (x, y), step, self.richardson)
    }

    /// `dF/dl(0, 0)`; zero for a cocycle.
    pub fn at_origin(&self) -> f64 {
        self.at_origin
    }

    /// `h1(x) = dF/dl(x, 0)`.
    pub fn h1(&self, x: f64) -> Result<f64> {
        self.derivative(x, 0.0)
    }

    /// `h2(y) = dF/dl(0, y) - dF/dl(0, 0)`.
    pub fn h2(&self, y: f64) -> Result<f64> {
        Ok(self.derivative(0.0, y)? - self.at_origin)
    }
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
}

/// Adaptive Simpson estimate of `int_0^x h`, targeting absolute error `tol`.
pub fn antiderivative<H>(h: H, x: f64, tol: f64) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    if tol.is_nan() || tol <= 0.0 || !x.is_finite() {
        return Err(Error::Argument(format!(
            "bad quadrature request x={x}, tol={tol}"
        )));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let (a, b) = (0.0, x);
    let (fa, fm, fb) = (h(a)?, h(0.5 * (a + b))?, h(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut err = 0.0;
    let mut exhausted = false;
    let v = refine(
        &h,
        Panel {
            a,
            b,
            fa,
            fm,
            fb,
            whole,
        },
        tol,
        MAX_DEPTH,
        &mut err,
        &mut exhausted,
    )?;
    if exhausted && err > tol {
        return Err(Error::Accuracy {
            estimate: v,
            error: err,
        });
    }
    Ok(v)
}

fn refine<H>(
    h: &H,
    p: Panel,
    tol: f64,
    depth: u32,
    err: &mut f64,
    exhausted: &mut bool,
) -> Result<f64>
where
    H: Fn(f64) -> Result<f64>,
{
    let m = 0.5 * (p.a + p.b);
    let (lm, rm) = (0.5 * (p.a + m), 0.5 * (m + p.b));
    let (flm, frm) = (h(lm)?, h(rm)?);
    let left = (m - p.a) / 6.0 * (p.fa + 4.0 * flm + p.fm);
    let right = (p.b - m) / 6.0 * (p.fm + 4.0 * frm + p.fb);
    let diff = left + right - p.whole;
    if diff.abs() <= 15.0 * tol {
        *err += diff.abs() / 15.0;
        return Ok(left + right + diff / 15.0);
    }
    if depth == 0 {
        *exhausted = true;
        *err += diff.abs() / 15.0;
        return Ok(left + right + diff / 15.0);
    }
    let l = Panel {
        a: p.a,
        b: m,
        fa: p.fa,
        fm: flm,
        fb: p.fm,
        whole: left,
    };
    let r = Panel {
        a: m,
        b: p.b,
        fa: p.fm,
        fm: frm,
        fb: p.fb,
        whole: right,
    };
    Ok(refine(h, l, tol / 2.0, depth - 1, err, exhausted)?
        + refine(h, r, tol / 2.0, depth - 1, err, exhausted)?)
}

/// `f(t) = -sqrt2 * int_0^t h1 - F(0, 0)`.
pub fn reconstruct_ck_point<F: Bivariate + ?Sized>(f: &F, t: f64, tol: f64) -> Result<f64> {
    let profile = DerivativeProfile::new(f)?;
    ck_value(f, &profile, t, tol)
}

fn ck_value<F: Bivariate + ?Sized>(
    f: &F,
    profile: &DerivativeProfile<'_, F>,
    t: f64,
    tol: f64,
) -> Result<f64> {
    let f00 = f.eval2(0.0, 0.0)?;
    let integral = antiderivative(|z| profile.h1(z), t, tol)?;
    Ok(-SQRT_2 * integral - f00)
}

/// Samples the C^k reconstruction at the given points.
pub fn reconstruct_ck_grid<F: Bivariate + ?Sized>(
    f: &F,
    points: &[crate::rational::Rational],
    tol: f64,
) -> Result<ReconstructedFunction> {
    let profile = DerivativeProfile::new(f)?;
    let f00 = f.eval2(0.0, 0.0)?;
    let samples = points
        .iter()
        .map(|r| {
            let t = r.to_f64();
            let v = ck_value(f, &profile, t, tol).map_err(|e| Error::AtPoint {
                t: r.to_string(),
                source: Box::new(e),
            })?;
            Ok(Sample {
                t,
                exact: Some(r.clone()),
                f: v,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ReconstructedFunction::new(
        samples,
        EngineTag::Ck,
        tol,
        Normalization::FlatAtOrigin { f_at_zero: -f00 },
    )
}
