//! Continuous reconstruction on the rational lattice.
//!
//! With `H(x, y) = F(x, y) - F(0, 0)` the normalized solution `h` satisfies
//! `H(x, y) = h(x + y) - h(x) - h(y)` and `h(0) = h(1) = 0`. On `(0, 1/2)` it
//! is computed by unrolling the identity `h(k x) = k h(x) + sum_{i<k} H(x, i x)`
//! along the Euclidean quotient chain of `p/n`; every other rational is
//! reduced to that interval through the cocycle identity itself. Reals are
//! reached as limits of rational approximants, and the returned solution is
//! `f = h - F(0, 0)`.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::func::Bivariate;
use crate::modulus::modulus_probe;
use crate::rational::{dyadic_round, euclid_chain, Convergents, Point, Rational, Strategy};
use crate::sum::CompensatedSum;

/// Lattice engine for `h` at rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Quotient-chain recursion; any rational.
    EuclidChain,
    /// Halving recursion `h(x) = (h(2x) - H(x, x)) / 2`; dyadic rationals only.
    Dyadic,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::EuclidChain => "euclid-chain",
            Engine::Dyadic => "dyadic",
        }
    }

    /// Approximation strategy that keeps this engine's lattice cheap.
    pub fn natural_strategy(self) -> Strategy {
        match self {
            Engine::EuclidChain => Strategy::Convergents,
            Engine::Dyadic => Strategy::Dyadic,
        }
    }
}

impl FromStr for Engine {
    type Err = Error;
    fn from_str(s: &str) -> Result<Engine> {
        match s {
            "euclid-chain" => Ok(Engine::EuclidChain),
            "dyadic" => Ok(Engine::Dyadic),
            _ => Err(Error::Argument(format!("unknown engine `{s}`"))),
        }
    }
}

/// Engine tag recorded on a sample table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EngineTag {
    EuclidChain,
    Dyadic,
    Ck,
}

impl From<Engine> for EngineTag {
    fn from(e: Engine) -> Self {
        match e {
            Engine::EuclidChain => EngineTag::EuclidChain,
            Engine::Dyadic => EngineTag::Dyadic,
        }
    }
}

impl fmt::Display for EngineTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EngineTag::EuclidChain => "euclid-chain",
            EngineTag::Dyadic => "dyadic",
            EngineTag::Ck => "ck",
        })
    }
}

/// Which representative of the solution family a table holds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// `f(0) = -F(0,0)` and `f(1) = f(0)`.
    EqualEndpoints { f_at_zero: f64 },
    /// `f(0) = -F(0,0)` and `f'(0) = 0`.
    FlatAtOrigin { f_at_zero: f64 },
}

/// Grid density for [`Reconstructor::reconstruct_grid`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Resolution {
    /// All reduced rationals with denominator at most this bound.
    Denominators(u64),
    /// All multiples of `2^-level`.
    DyadicLevel(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub exact: Option<Rational>,
    pub f: f64,
}

/// Sample table `t -> f(t)` with its provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructedFunction {
    samples: Vec<Sample>,
    pub engine: EngineTag,
    /// Accuracy bound for samples taken at real (non-lattice) points.
    pub epsilon: f64,
    pub normalization: Normalization,
}

impl ReconstructedFunction {
    /// Keys must be strictly increasing and values finite.
    pub fn new(
        samples: Vec<Sample>,
        engine: EngineTag,
        epsilon: f64,
        normalization: Normalization,
    ) -> Result<Self> {
        for w in samples.windows(2) {
            if w[0].t >= w[1].t {
                return Err(Error::Argument(format!(
                    "sample keys not strictly increasing at {}",
                    w[1].t
                )));
            }
        }
        if let Some(s) = samples
            .iter()
            .find(|s| !s.f.is_finite() || !s.t.is_finite())
        {
            return Err(Error::Argument(format!("non-finite sample at t = {}", s.t)));
        }
        Ok(ReconstructedFunction {
            samples,
            engine,
            epsilon,
            normalization,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Table value at a stored key. There is no extension rule, so any other
    /// point is a coverage error.
    pub fn lookup(&self, p: &Point) -> Result<f64> {
        let x = p.to_f64();
        let i = self
            .samples
            .binary_search_by(|s| s.t.total_cmp(&x))
            .map_err(|_| Error::Coverage(p.to_string()))?;
        let s = &self.samples[i];
        match (p, &s.exact) {
            (Point::Exact(r), Some(e)) if r != e => Err(Error::Coverage(p.to_string())),
            _ => Ok(s.f),
        }
    }

    /// CSV with header `t,f` (plus `t_exact` when some key has no terminating
    /// decimal form). Values carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let rows: Vec<(String, Option<String>)> = self
            .samples
            .iter()
            .map(|s| match &s.exact {
                Some(r) => match exact_decimal(r) {
                    Some(d) => (d, None),
                    None => (sig17(s.t), Some(r.to_string())),
                },
                None => (sig17(s.t), None),
            })
            .collect();
        let with_exact = rows.iter().any(|(_, e)| e.is_some());
        let mut out = String::from(if with_exact { "t,f,t_exact\n" } else { "t,f\n" });
        for ((t, exact), s) in rows.iter().zip(&self.samples) {
            out.push_str(t);
            out.push(',');
            out.push_str(&sig17(s.f));
            if with_exact {
                out.push(',');
                out.push_str(exact.as_deref().unwrap_or(""));
            }
            out.push('\n');
        }
        out
    }
}

/// 17 significant digits, scientific notation.
pub fn sig17(x: f64) -> String {
    format!("{:.16e}", x + 0.0)
}

/// Exact decimal expansion of a rational whose denominator is `2^a 5^b`.
pub fn exact_decimal(r: &Rational) -> Option<String> {
    if !r.is_terminating_decimal() {
        return None;
    }
    let den = r.denom();
    let mut digits = 0usize;
    let mut scale = BigInt::one();
    while !(&scale % den).is_zero() {
        scale *= 10;
        digits += 1;
    }
    let scaled = r.numer() * (&scale / den);
    let neg = scaled.is_negative();
    let mut s = scaled.abs().to_string();
    if digits > 0 {
        if s.len() <= digits {
            s = "0".repeat(digits + 1 - s.len()) + &s;
        }
        s.insert(s.len() - digits, '.');
    }
    Some(if neg { format!("-{s}") } else { s })
}

/// Value of `f` at a point, with the bound that justified stopping.
#[derive(Debug, Clone, PartialEq)]
pub struct PointEstimate {
    pub value: f64,
    /// `3 * omega(F; |t - t_j|; box)` at the accepted approximant; zero on the lattice.
    pub bound: f64,
    pub approximant: Rational,
    pub depth: usize,
}

/// Options for the limit step at real points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LimitOptions {
    /// Defaults to the engine's natural strategy.
    pub strategy: Option<Strategy>,
    pub max_depth: usize,
    /// Anchors per axis for the modulus probe.
    pub probe_anchors: usize,
    /// Largest convergent denominator handed to the Euclid chain. Past it the
    /// approximants continue as dyadic roundings of `t`, evaluated dyadically.
    pub max_chain_denominator: u64,
}

impl Default for LimitOptions {
    fn default() -> Self {
        LimitOptions {
            strategy: None,
            max_depth: 64,
            probe_anchors: 17,
            max_chain_denominator: 1 << 22,
        }
    }
}

/// Memoizing evaluator of the lattice construction for one F.
pub struct Reconstructor<F: Bivariate> {
    f: F,
    f00: f64,
    h_memo: Mutex<HashMap<(Engine, Rational), f64>>,
    pair_memo: Mutex<HashMap<(Rational, Rational), f64>>,
    pub limit: LimitOptions,
}

impl<F: Bivariate> Reconstructor<F> {
    pub fn new(f: F) -> Result<Self> {
        let f00 = f.eval2(0.0, 0.0).map_err(|e| Error::LatticeEval {
            at: Box::new((Rational::zero(), Rational::zero())),
            reason: e.to_string(),
        })?;
        Ok(Reconstructor {
            f,
            f00,
            h_memo: Mutex::new(HashMap::new()),
            pair_memo: Mutex::new(HashMap::new()),
            limit: LimitOptions::default(),
        })
    }

    pub fn function(&self) -> &F {
        &self.f
    }

    /// `F(0, 0)`.
    pub fn f00(&self) -> f64 {
        self.f00
    }

    /// `H(x, y) = F(x, y) - F(0, 0)` at a lattice pair, memoized.
    pub fn big_h(&self, x: &Rational, y: &Rational) -> Result<f64> {
        let key = (x.clone(), y.clone());
        if let Some(v) = self.pair_memo.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.eval_h(x.to_f64(), y.to_f64(), || (x.clone(), y.clone()))?;
        self.pair_memo.lock().unwrap().insert(key, v);
        Ok(v)
    }

    fn eval_h(&self, x: f64, y: f64, at: impl FnOnce() -> (Rational, Rational)) -> Result<f64> {
        match self.f.eval2(x, y) {
            Ok(v) => Ok(v - self.f00),
            Err(e) => Err(Error::LatticeEval {
                at: Box::new(at()),
                reason: e.to_string(),
            }),
        }
    }

    /// Normalized `h` at an exact rational.
    pub fn h_rational(&self, r: &Rational, engine: Engine) -> Result<f64> {
        if r.is_zero() || *r == Rational::one() {
            return Ok(0.0);
        }
        let key = (engine, r.clone());
        if let Some(v) = self.h_memo.lock().unwrap().get(&key) {
            return Ok(*v);
        }
        let v = self.compute_h(r, engine)?;
        self.h_memo.lock().unwrap().insert(key, v);
        Ok(v)
    }

    fn compute_h(&self, r: &Rational, engine: Engine) -> Result<f64> {
        if r.is_negative() {
            // 0 = h(r) + h(-r) + H(-r, r)
            let a = -r;
            return Ok(-self.h_rational(&a, engine)? - self.big_h(&a, r)?);
        }
        if r.is_integer() {
            // h(k) = k h(1) + sum_{i=1}^{k-1} H(1, i)
            let k = r.numer().to_u64().ok_or_else(|| too_large(r))?;
            let mut acc = CompensatedSum::new();
            for i in 1..k {
                acc += self.eval_h(1.0, i as f64, || {
                    (Rational::one(), Rational::from_integer(i))
                })?;
            }
            return Ok(acc.value());
        }
        let whole = r.floor();
        if whole >= BigInt::one() {
            // h(k + s) = h(k) + h(s) + H(k, s)
            let k = Rational::from_integer(whole);
            let s = r.fract();
            let mut acc = CompensatedSum::new();
            acc += self.h_rational(&k, engine)?;
            acc += self.h_rational(&s, engine)?;
            acc += self.big_h(&k, &s)?;
            return Ok(acc.value());
        }
        match engine {
            Engine::Dyadic => {
                if !r.is_dyadic() {
                    return Err(Error::Domain {
                        value: r.to_string(),
                        domain: "dyadic rationals",
                    });
                }
                let twice = r * &Rational::from_integer(2);
                Ok((self.h_rational(&twice, engine)? - self.big_h(r, r)?) / 2.0)
            }
            Engine::EuclidChain => {
                let half = Rational::new(1, 2);
                match r.cmp(&half) {
                    std::cmp::Ordering::Equal => Ok(-self.big_h(r, r)? / 2.0),
                    std::cmp::Ordering::Greater => {
                        // h(1) = h(r) + h(1 - r) + H(r, 1 - r)
                        let c = &Rational::one() - r;
                        Ok(-self.h_rational(&c, engine)? - self.big_h(r, &c)?)
                    }
                    std::cmp::Ordering::Less => self.chain_value(r),
                }
            }
        }
    }

    /// Unrolls the quotient chain of `r = p/n` in (0, 1/2) from its zero
    /// remainder back to `p`, with `h(1) = 0`:
    /// `h(p_j/n) = -(S_j + B_j + h(p_{j+1}/n)) / m_j`, where
    /// `S_j = sum_{i=1}^{m_j-1} H(p_j/n, i p_j/n)` and
    /// `B_j = H(p_{j+1}/n, 1 - p_{j+1}/n)` (zero once the remainder is zero).
    fn chain_value(&self, r: &Rational) -> Result<f64> {
        let chain = euclid_chain(r)?;
        let rem = chain.remainders();
        let n = &chain.n;
        let k = chain.steps.len();
        let at = |j: usize| Rational::reduce(rem[j].clone(), n.clone()).expect("n > 0");

        // Resume from the deepest remainder whose value is already known.
        let mut start = k;
        let mut h_next = 0.0;
        {
            let memo = self.h_memo.lock().unwrap();
            for j in 1..k {
                if let Some(v) = memo.get(&(Engine::EuclidChain, at(j))) {
                    start = j;
                    h_next = *v;
                    break;
                }
            }
        }
        for j in (0..start).rev() {
            let m = chain.steps[j]
                .quotient
                .to_u64()
                .ok_or_else(|| too_large(r))?;
            let mut acc = self.chain_sum(&rem[j], n, m)?;
            let next = &rem[j + 1];
            if !next.is_zero() {
                let x = Rational::reduce(next.clone(), n.clone())?;
                let y = &Rational::one() - &x;
                acc += self.big_h(&x, &y)?;
            }
            acc += h_next;
            h_next = -acc.value() / m as f64;
            if j > 0 {
                self.h_memo
                    .lock()
                    .unwrap()
                    .insert((Engine::EuclidChain, at(j)), h_next);
            }
        }
        Ok(h_next)
    }

    /// `sum_{i=1}^{m-1} H(p/n, i p/n)`, compensated.
    fn chain_sum(&self, p: &BigInt, n: &BigInt, m: u64) -> Result<CompensatedSum> {
        let mut acc = CompensatedSum::new();
        let lattice = |i: u64| {
            (
                Rational::reduce(p.clone(), n.clone()).expect("n > 0"),
                Rational::reduce(p * i, n.clone()).expect("n > 0"),
            )
        };
        if let (Some(pp), Some(nn)) = (p.to_u64(), n.to_u64()) {
            if nn < 1 << 53 {
                // i p <= m p <= n, so every numerator is an exact double.
                let (pf, nf) = (pp as f64, nn as f64);
                let x = pf / nf;
                for i in 1..m {
                    let y = (i * pp) as f64 / nf;
                    acc += self.eval_h(x, y, || lattice(i))?;
                }
                return Ok(acc);
            }
        }
        let x = Rational::reduce(p.clone(), n.clone())?;
        let xf = x.to_f64();
        for i in 1..m {
            let y = Rational::reduce(p * i, n.clone())?;
            acc += self.eval_h(xf, y.to_f64(), || lattice(i))?;
        }
        Ok(acc)
    }

    /// `f = h - F(0, 0)` at an exact rational.
    pub fn f_rational(&self, r: &Rational, engine: Engine) -> Result<f64> {
        Ok(self.h_rational(r, engine)? - self.f00)
    }

    /// `f(t)`: directly on the lattice for exact points, otherwise as the limit
    /// over rational approximants, stopping once successive values agree to
    /// `eps` and `3 omega(F; |t - t_j|; [-M, M]^2) <= eps`.
    pub fn reconstruct_point(&self, t: &Point, eps: f64, engine: Engine) -> Result<PointEstimate> {
        match t {
            Point::Exact(r) => Ok(PointEstimate {
                value: self.f_rational(r, engine)?,
                bound: 0.0,
                approximant: r.clone(),
                depth: 0,
            }),
            Point::Real(x) => self.limit_value(*x, eps, engine),
        }
    }

    fn limit_value(&self, x: f64, eps: f64, engine: Engine) -> Result<PointEstimate> {
        if eps.is_nan() || eps <= 0.0 {
            return Err(Error::Argument(format!(
                "epsilon must be positive, got {eps}"
            )));
        }
        let target = Rational::from_f64(x)?;
        let m = (x.abs().ceil() + 1.0).max(1.0);
        let strategy = self
            .limit
            .strategy
            .unwrap_or_else(|| engine.natural_strategy());
        let approximants: Box<dyn Iterator<Item = (Rational, Engine)>> = match strategy {
            Strategy::Dyadic => {
                let t = target.clone();
                Box::new((1..).map(move |j| (dyadic_round(&t, j), engine)))
            }
            Strategy::Convergents => {
                let all: Vec<Rational> = Convergents::new(&target).collect();
                // Skip the integer part unless it is the whole expansion.
                let skip = usize::from(all.len() > 1);
                let cap = BigInt::from(self.limit.max_chain_denominator);
                let cheap: Vec<Rational> = all
                    .into_iter()
                    .skip(skip)
                    .take_while(|q| engine != Engine::EuclidChain || *q.denom() <= cap)
                    .collect();
                let start = cheap.last().map_or(1, |q| 2 * q.denom().bits() as u32);
                let t = target.clone();
                let tail = (start..).map(move |j| (dyadic_round(&t, j), Engine::Dyadic));
                Box::new(cheap.into_iter().map(move |q| (q, engine)).chain(tail))
            }
        };
        let mut prev: Option<f64> = None;
        let mut best = (f64::NAN, f64::INFINITY);
        for (depth, (q, engine)) in approximants.take(self.limit.max_depth).enumerate() {
            let value = self.f_rational(&q, engine)?;
            let delta = (&target - &q).abs().to_f64();
            if delta == 0.0 {
                return Ok(PointEstimate {
                    value,
                    bound: 0.0,
                    approximant: q,
                    depth: depth + 1,
                });
            }
            best.0 = value;
            if prev.is_some_and(|p| (value - p).abs() <= eps) {
                let bound = 3.0 * modulus_probe(&self.f, delta, m, self.limit.probe_anchors)?;
                best.1 = bound;
                if bound <= eps {
                    return Ok(PointEstimate {
                        value,
                        bound,
                        approximant: q,
                        depth: depth + 1,
                    });
                }
            }
            prev = Some(value);
        }
        Err(Error::Convergence {
            depth: self.limit.max_depth,
            best: best.0,
            bound: best.1,
        })
    }

    /// Samples `f` at every grid rational in `[a, b]`.
    pub fn reconstruct_grid(
        &self,
        a: &Rational,
        b: &Rational,
        resolution: Resolution,
        engine: Engine,
        eps: f64,
    ) -> Result<ReconstructedFunction> {
        let points = grid_points(a, b, resolution)?;
        let samples = points
            .into_iter()
            .map(|r| {
                let f = self.f_rational(&r, engine).map_err(|e| Error::AtPoint {
                    t: r.to_string(),
                    source: Box::new(e),
                })?;
                Ok(Sample {
                    t: r.to_f64(),
                    exact: Some(r),
                    f,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        ReconstructedFunction::new(
            samples,
            engine.into(),
            eps,
            Normalization::EqualEndpoints {
                f_at_zero: -self.f00,
            },
        )
    }
}

fn too_large(r: &Rational) -> Error {
    Error::Argument(format!("{r} needs more lattice terms than can be summed"))
}

/// Reduced rationals in `[a, b]` at the given resolution, increasing.
pub fn grid_points(a: &Rational, b: &Rational, resolution: Resolution) -> Result<Vec<Rational>> {
    if a >= b {
        return Err(Error::Argument(format!("empty interval [{a}, {b}]")));
    }
    let span = |d: &BigInt| -> Result<(i64, i64)> {
        let lo = (a.numer() * d).div_ceil(a.denom());
        let hi = (b.numer() * d).div_floor(b.denom());
        match (lo.to_i64(), hi.to_i64()) {
            (Some(lo), Some(hi)) => Ok((lo, hi)),
            _ => Err(Error::Argument("grid too large".into())),
        }
    };
    let mut out = Vec::new();
    match resolution {
        Resolution::Denominators(0) => {
            return Err(Error::Argument(
                "denominator bound must be at least 1".into(),
            ))
        }
        Resolution::Denominators(bound) => {
            for d in 1..=bound {
                let (lo, hi) = span(&BigInt::from(d))?;
                for k in lo..=hi {
                    if k.gcd(&(d as i64)) == 1 {
                        out.push(Rational::new(k, d as i64));
                    }
                }
            }
            out.sort();
        }
        Resolution::DyadicLevel(level) => {
            if level > 62 {
                return Err(Error::Argument(format!("dyadic level {level} too deep")));
            }
            let d = 1i64 << level;
            let (lo, hi) = span(&BigInt::from(d))?;
            out.extend((lo..=hi).map(|k| Rational::new(k, d)));
        }
    }
    Ok(out)
}

/// One-shot `h` at a rational.
pub fn h_rational<F: Bivariate>(f: &F, r: &Rational, engine: Engine) -> Result<f64> {
    Reconstructor::new(f)?.h_rational(r, engine)
}

/// One-shot `f(t)` with accuracy `eps` for real points.
pub fn reconstruct_point<F: Bivariate>(f: &F, t: &Point, eps: f64) -> Result<f64> {
    Ok(Reconstructor::new(f)?
        .reconstruct_point(t, eps, Engine::EuclidChain)?
        .value)
}

/// One-shot grid reconstruction.
pub fn reconstruct_grid<F: Bivariate>(
    f: &F,
    a: &Rational,
    b: &Rational,
    resolution: Resolution,
    engine: Engine,
    eps: f64,
) -> Result<ReconstructedFunction> {
    Reconstructor::new(f)?.reconstruct_grid(a, b, resolution, engine, eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::func::{cocycle_from_seed, FromFn, FuncSpec, Seed};

    fn bilinear() -> FromFn<impl Fn(f64, f64) -> f64 + Send + Sync> {
        FromFn(|x: f64, y: f64| 2.0 * x * y)
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn h_examples() {
        let f = bilinear();
        let rec = Reconstructor::new(&f).unwrap();
        let e = Engine::EuclidChain;
        assert!((rec.h_rational(&r(1, 3), e).unwrap() + 2.0 / 9.0).abs() < 1e-15);
        assert_eq!(rec.h_rational(&r(2, 1), e).unwrap(), 2.0);
        assert_eq!(
            rec.h_rational(&r(1, 4), Engine::Dyadic).unwrap(),
            -3.0 / 16.0
        );
        let zero = FromFn(|_: f64, _: f64| 0.0);
        for q in [r(1, 3), r(-7, 5), r(13, 4), r(1, 2)] {
            assert_eq!(h_rational(&zero, &q, e).unwrap(), 0.0);
        }
    }

    #[test]
    fn reduction_rules_match_oracle() {
        // oracle h(t) = t^2 - t for F = 2xy
        let f = bilinear();
        let rec = Reconstructor::new(&f).unwrap();
        for q in [
            r(1, 2),
            r(3, 5),
            r(5, 2),
            r(-1, 3),
            r(-9, 4),
            r(7, 1),
            r(-3, 1),
            r(22, 7),
        ] {
            let t = q.to_f64();
            let got = rec.h_rational(&q, Engine::EuclidChain).unwrap();
            assert!((got - (t * t - t)).abs() < 1e-12, "{q}: {got}");
        }
    }

    #[test]
    fn dyadic_engine_requires_dyadic() {
        let f = bilinear();
        assert!(matches!(
            h_rational(&f, &r(1, 3), Engine::Dyadic),
            Err(Error::Domain { .. })
        ));
    }

    #[test]
    fn oddness_identity() {
        let g = cocycle_from_seed(FuncSpec::Builtin(Seed::Expo)).unwrap();
        let rec = Reconstructor::new(&g).unwrap();
        for q in [r(1, 7), r(5, 3), r(2, 9)] {
            let lhs = rec.h_rational(&-&q, Engine::EuclidChain).unwrap()
                + rec.h_rational(&q, Engine::EuclidChain).unwrap();
            assert_eq!(lhs, -rec.big_h(&q, &-&q).unwrap());
        }
    }

    #[test]
    fn lattice_error_carries_point() {
        let f = FromFn(|x: f64, y: f64| if y > 0.6 { f64::NAN } else { x * y });
        match h_rational(&f, &r(1, 5), Engine::EuclidChain) {
            Err(Error::LatticeEval { at, .. }) => {
                let (x, y) = *at;
                assert_eq!(x, r(1, 5));
                assert!(y.to_f64() > 0.6);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn point_examples() {
        let f = bilinear();
        let rec = Reconstructor::new(&f).unwrap();
        let s = 2f64.sqrt();
        let est = rec
            .reconstruct_point(&Point::Real(s), 1e-6, Engine::EuclidChain)
            .unwrap();
        assert!((est.value - (2.0 - s)).abs() <= 1e-6, "{est:?}");
        assert!(est.bound <= 1e-6);
        let one = rec
            .reconstruct_point(&Point::Exact(r(1, 1)), 1e-6, Engine::EuclidChain)
            .unwrap();
        assert_eq!(one.value, 0.0);
        let zero = FromFn(|_: f64, _: f64| 0.0);
        assert_eq!(
            reconstruct_point(&zero, &Point::Real(0.123), 1e-9).unwrap(),
            0.0
        );
        let dy = rec
            .reconstruct_point(&Point::Real(s), 1e-6, Engine::Dyadic)
            .unwrap();
        assert!((dy.value - (2.0 - s)).abs() <= 1e-6, "{dy:?}");
        assert!(rec
            .reconstruct_point(&Point::Real(s), 0.0, Engine::Dyadic)
            .is_err());
    }

    #[test]
    fn point_near_simple_rational() {
        // 0.7 has convergents 1, 2/3, 7/10 and then a denominator near 2^52.
        let f =
            crate::func::cocycle_from_seed(crate::func::FuncSpec::Builtin(crate::func::Seed::Expo))
                .unwrap();
        let rec = Reconstructor::new(&f).unwrap();
        let e = std::f64::consts::E;
        for x in [0.7, -0.3, 1.25 + 1e-9] {
            let est = rec
                .reconstruct_point(&Point::Real(x), 1e-8, Engine::EuclidChain)
                .unwrap();
            let want = x.exp() - (e - 1.0) * x;
            assert!((est.value - want).abs() <= 1e-8, "{x} {est:?}");
            assert!(*est.approximant.denom() <= BigInt::from(1u64 << 62));
        }
    }

    #[test]
    fn point_convergence_error() {
        let f = bilinear();
        let mut rec = Reconstructor::new(&f).unwrap();
        rec.limit.max_depth = 3;
        assert!(matches!(
            rec.reconstruct_point(
                &Point::Real(std::f64::consts::PI),
                1e-12,
                Engine::EuclidChain
            ),
            Err(Error::Convergence { depth: 3, .. })
        ));
    }

    #[test]
    fn grid_example() {
        let f = bilinear();
        let table = reconstruct_grid(
            &f,
            &r(0, 1),
            &r(1, 1),
            Resolution::Denominators(4),
            Engine::EuclidChain,
            1e-9,
        )
        .unwrap();
        let expect = [
            (r(0, 1), 0.0),
            (r(1, 4), -3.0 / 16.0),
            (r(1, 3), -2.0 / 9.0),
            (r(1, 2), -0.25),
            (r(2, 3), -2.0 / 9.0),
            (r(3, 4), -3.0 / 16.0),
            (r(1, 1), 0.0),
        ];
        assert_eq!(table.len(), expect.len());
        for (s, (q, v)) in table.samples().iter().zip(expect) {
            assert_eq!(s.exact.as_ref().unwrap(), &q);
            assert!((s.f - v).abs() < 1e-15, "{q}");
        }
        assert_eq!(
            table.lookup(&Point::Exact(r(2, 3))).unwrap(),
            table.samples()[4].f
        );
        assert!(matches!(
            table.lookup(&Point::Exact(r(1, 5))),
            Err(Error::Coverage(_))
        ));
        assert!(table.lookup(&Point::Real(0.3)).is_err());
    }

    #[test]
    fn grid_errors() {
        assert!(grid_points(&r(1, 1), &r(0, 1), Resolution::Denominators(3)).is_err());
        assert!(grid_points(&r(0, 1), &r(1, 1), Resolution::Denominators(0)).is_err());
        let bad = FromFn(|x: f64, _: f64| if x > 0.4 { f64::INFINITY } else { 0.0 });
        match reconstruct_grid(
            &bad,
            &r(0, 1),
            &r(1, 1),
            Resolution::Denominators(3),
            Engine::EuclidChain,
            1e-9,
        ) {
            Err(Error::AtPoint { .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn csv_format() {
        let f = bilinear();
        let table = reconstruct_grid(
            &f,
            &r(0, 1),
            &r(1, 2),
            Resolution::Denominators(3),
            Engine::EuclidChain,
            1e-9,
        )
        .unwrap();
        let csv = table.to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,f,t_exact");
        assert_eq!(lines[1], "0,0.0000000000000000e0,");
        assert_eq!(lines[2], "3.3333333333333331e-1,-2.2222222222222221e-1,1/3");
        assert_eq!(lines[3], "0.5,-2.5000000000000000e-1,");
        let dy = reconstruct_grid(
            &f,
            &r(-1, 1),
            &r(0, 1),
            Resolution::DyadicLevel(1),
            Engine::Dyadic,
            1e-9,
        )
        .unwrap();
        assert_eq!(dy.to_csv().lines().next().unwrap(), "t,f");
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(exact_decimal(&r(-3, 16)).unwrap(), "-0.1875");
        assert_eq!(exact_decimal(&r(7, 1)).unwrap(), "7");
        assert_eq!(exact_decimal(&r(1, 40)).unwrap(), "0.025");
        assert!(exact_decimal(&r(1, 3)).is_none());
    }

    fn seed_oracle(seed: Seed, t: f64) -> f64 {
        let g = |t: f64| match seed {
            Seed::Square => t * t,
            Seed::Cube => t * t * t,
            Seed::Expo => t.exp(),
            Seed::Sine => t.sin(),
            Seed::Hoelder => t.abs().sqrt(),
        };
        g(t) - (g(1.0) - g(0.0)) * t
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use proptest::strategy::Strategy;

        fn any_seed() -> impl Strategy<Value = Seed> {
            (0usize..5).prop_map(|i| Seed::ALL[i])
        }

        fn rational(max_den: i64, m: i64) -> impl Strategy<Value = Rational> {
            (1..=max_den)
                .prop_flat_map(move |d| (-m * d..=m * d).prop_map(move |k| Rational::new(k, d)))
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn round_trip(seed in any_seed(), r in rational(200, 3)) {
                let f = cocycle_from_seed(FuncSpec::Builtin(seed)).unwrap();
                let v = Reconstructor::new(&f).unwrap().f_rational(&r, Engine::EuclidChain).unwrap();
                prop_assert!((v - seed_oracle(seed, r.to_f64())).abs() <= 1e-9, "{} at {}", v, r);
            }

            #[test]
            fn engines_agree(i in 0usize..4, level in 0u32..14, k in 0i64..1 << 14) {
                let f = cocycle_from_seed(FuncSpec::Builtin(Seed::ALL[i])).unwrap();
                let rec = Reconstructor::new(&f).unwrap();
                let r = Rational::new(k % ((1 << level) + 1), 1 << level);
                let a = rec.h_rational(&r, Engine::EuclidChain).unwrap();
                let b = rec.h_rational(&r, Engine::Dyadic).unwrap();
                prop_assert!((a - b).abs() <= 1e-10);
            }

            #[test]
            fn restores_cocycle(seed in any_seed(), x in rational(50, 2), y in rational(50, 2)) {
                let f = cocycle_from_seed(FuncSpec::Builtin(seed)).unwrap();
                let rec = Reconstructor::new(&f).unwrap();
                let e = Engine::EuclidChain;
                let rhs = rec.f_rational(&(&x + &y), e).unwrap()
                    - rec.f_rational(&x, e).unwrap()
                    - rec.f_rational(&y, e).unwrap();
                prop_assert!((f.eval2(x.to_f64(), y.to_f64()).unwrap() - rhs).abs() <= 1e-9);
            }

            #[test]
            fn odd_up_to_h(seed in any_seed(), r in rational(100, 3)) {
                let f = cocycle_from_seed(FuncSpec::Builtin(seed)).unwrap();
                let rec = Reconstructor::new(&f).unwrap();
                let e = Engine::EuclidChain;
                let lhs = rec.h_rational(&-&r, e).unwrap() + rec.h_rational(&r, e).unwrap();
                let rhs = -rec.big_h(&r, &-&r).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
            }

            #[test]
            fn lattice_bound(seed in any_seed(), n in 3i64..400, p in 1i64..200) {
                let p = 1 + p % ((n - 1) / 2);
                let r = Rational::new(p, n);
                let f = cocycle_from_seed(FuncSpec::Builtin(seed)).unwrap();
                let rec = Reconstructor::new(&f).unwrap();
                let reps = crate::verify::check_lattice_bound(
                    &f,
                    |q: &Rational| rec.h_rational(q, Engine::EuclidChain),
                    &[r],
                    1e-6,
                )
                .unwrap();
                prop_assert!(reps[0].pass, "{:?}", reps[0]);
            }
        }
    }
}
