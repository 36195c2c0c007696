//! Exact fractions, the Euclidean quotient chain, and rational approximants
//! of real targets.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Integers below this bound convert to `f64` without rounding.
const EXACT_F64_INT: u64 = 1 << 53;

/// A reduced fraction `num/den` with `den >= 1` and the sign carried by `num`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Rational {
    num: BigInt,
    den: BigInt,
}

impl Rational {
    /// Reduces `num/den` to lowest terms with a positive denominator.
    pub fn reduce(num: impl Into<BigInt>, den: impl Into<BigInt>) -> Result<Rational> {
        let num = num.into();
        let den = den.into();
        if den.is_zero() {
            return Err(Error::Argument("zero denominator".into()));
        }
        Ok(Self::reduce_nonzero(num, den))
    }

    fn reduce_nonzero(mut num: BigInt, mut den: BigInt) -> Rational {
        if den.is_negative() {
            num = -num;
            den = -den;
        }
        let g = num.gcd(&den);
        if !g.is_one() {
            num /= &g;
            den /= &g;
        }
        Rational { num, den }
    }

    /// Shorthand for small literals; panics on a zero denominator.
    pub fn new(num: i64, den: i64) -> Rational {
        Self::reduce(num, den).expect("nonzero denominator")
    }

    pub fn from_integer(n: impl Into<BigInt>) -> Rational {
        Rational {
            num: n.into(),
            den: BigInt::one(),
        }
    }

    pub fn zero() -> Rational {
        Self::from_integer(0)
    }

    pub fn one() -> Rational {
        Self::from_integer(1)
    }

    /// The exact value of a finite double.
    pub fn from_f64(x: f64) -> Result<Rational> {
        if !x.is_finite() {
            return Err(Error::Argument(format!("non-finite value {x}")));
        }
        if x == 0.0 {
            return Ok(Self::zero());
        }
        let bits = x.to_bits();
        let sign = if bits >> 63 == 0 { 1 } else { -1 };
        let exp = ((bits >> 52) & 0x7ff) as i64;
        let mantissa = if exp == 0 {
            (bits & 0xf_ffff_ffff_ffff) << 1
        } else {
            (bits & 0xf_ffff_ffff_ffff) | 0x10_0000_0000_0000
        };
        // x = sign * mantissa * 2^(exp - 1075)
        let shift = exp - 1075;
        let m = BigInt::from(mantissa) * sign;
        Ok(if shift >= 0 {
            Self::from_integer(m << shift as usize)
        } else {
            Self::reduce_nonzero(m, BigInt::one() << (-shift) as usize)
        })
    }

    pub fn numer(&self) -> &BigInt {
        &self.num
    }

    pub fn denom(&self) -> &BigInt {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_integer(&self) -> bool {
        self.den.is_one()
    }

    pub fn is_negative(&self) -> bool {
        self.num.is_negative()
    }

    pub fn abs(&self) -> Rational {
        Rational {
            num: self.num.abs(),
            den: self.den.clone(),
        }
    }

    /// Largest integer `<= self`.
    pub fn floor(&self) -> BigInt {
        self.num.div_floor(&self.den)
    }

    /// Smallest integer `>= self`.
    pub fn ceil(&self) -> BigInt {
        -((-&self.num).div_floor(&self.den))
    }

    /// `self - floor(self)`, always in `[0, 1)`.
    pub fn fract(&self) -> Rational {
        Rational {
            num: self.num.mod_floor(&self.den),
            den: self.den.clone(),
        }
    }

    /// True when the denominator is a power of two.
    pub fn is_dyadic(&self) -> bool {
        let d = &self.den;
        (d & (d - BigInt::one())).is_zero()
    }

    /// True when the decimal expansion terminates (denominator of the form 2^a 5^b).
    pub fn is_terminating_decimal(&self) -> bool {
        let mut d = self.den.clone();
        for f in [2u32, 5] {
            let f = BigInt::from(f);
            while (&d % &f).is_zero() {
                d /= &f;
            }
        }
        d.is_one()
    }

    /// Nearest double (ties to even).
    pub fn to_f64(&self) -> f64 {
        if let (Some(n), Some(d)) = (self.num.abs().to_u64(), self.den.to_u64()) {
            if n < EXACT_F64_INT && d < EXACT_F64_INT {
                let q = n as f64 / d as f64;
                return if self.num.is_negative() { -q } else { q };
            }
        }
        let n = self.num.abs();
        let nbits = n.bits() as i64;
        let dbits = self.den.bits() as i64;
        // Scale so the integer quotient carries at least 66 significant bits,
        // then fold the remainder into a sticky bit so the final conversion
        // rounds once.
        let k = (66 + dbits - nbits).max(0);
        let (q, r) = (n << k as usize).div_rem(&self.den);
        let q: BigInt = (q << 1usize) + if r.is_zero() { 0 } else { 1 };
        let k = k + 1;
        let mag = q.to_f64().unwrap_or(f64::INFINITY);
        let mag = scale_pow2(mag, -k);
        if self.num.is_negative() {
            -mag
        } else {
            mag
        }
    }
}

fn scale_pow2(x: f64, e: i64) -> f64 {
    let mut x = x;
    let mut e = e;
    while e < -1000 {
        x *= 2f64.powi(-1000);
        e += 1000;
    }
    while e > 1000 {
        x *= 2f64.powi(1000);
        e -= 1000;
    }
    x * 2f64.powi(e as i32)
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den.is_one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl fmt::Debug for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

/// Parses `p/n` or `p` with an optional leading sign and no whitespace.
impl FromStr for Rational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Rational> {
        let bad = || Error::Argument(format!("malformed rational `{s}`"));
        let parse_int = |t: &str, signed: bool| -> Result<BigInt> {
            let digits = if signed {
                t.strip_prefix(['+', '-']).unwrap_or(t)
            } else {
                t
            };
            if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return Err(bad());
            }
            t.parse::<BigInt>().map_err(|_| bad())
        };
        match s.split_once('/') {
            Some((p, n)) => Rational::reduce(parse_int(p, true)?, parse_int(n, false)?),
            None => Ok(Rational::from_integer(parse_int(s, true)?)),
        }
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        (&self.num * &other.den).cmp(&(&other.num * &self.den))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &Rational {
    type Output = Rational;
    fn add(self, rhs: &Rational) -> Rational {
        Rational::reduce_nonzero(
            &self.num * &rhs.den + &rhs.num * &self.den,
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &Rational {
    type Output = Rational;
    fn sub(self, rhs: &Rational) -> Rational {
        Rational::reduce_nonzero(
            &self.num * &rhs.den - &rhs.num * &self.den,
            &self.den * &rhs.den,
        )
    }
}

impl Mul for &Rational {
    type Output = Rational;
    fn mul(self, rhs: &Rational) -> Rational {
        Rational::reduce_nonzero(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Neg for &Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        Rational {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Rational {
            type Output = Rational;
            fn $m(self, rhs: Rational) -> Rational {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl Neg for Rational {
    type Output = Rational;
    fn neg(self) -> Rational {
        -&self
    }
}

/// One division step `n = quotient * p_j + remainder`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub quotient: BigInt,
    pub remainder: BigInt,
}

/// The Euclidean quotient chain of `p/n` with the denominator `n` held fixed:
/// `m_j = floor(n / p_j)`, `p_{j+1} = n - m_j p_j`, ending at remainder zero.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EuclidChain {
    pub start: BigInt,
    pub n: BigInt,
    pub steps: Vec<ChainStep>,
}

impl EuclidChain {
    /// The remainders `p_0, p_1, ..., p_k` (starting numerator first, final zero last).
    pub fn remainders(&self) -> Vec<BigInt> {
        std::iter::once(self.start.clone())
            .chain(self.steps.iter().map(|s| s.remainder.clone()))
            .collect()
    }
}

/// Builds the quotient chain for a reduced `r` in the open interval (0, 1/2).
pub fn euclid_chain(r: &Rational) -> Result<EuclidChain> {
    if r.is_negative() || r.is_zero() || r >= &Rational::new(1, 2) {
        return Err(Error::Domain {
            value: r.to_string(),
            domain: "(0, 1/2)",
        });
    }
    let n = r.denom().clone();
    let mut p = r.numer().clone();
    let mut steps = Vec::new();
    while !p.is_zero() {
        let (m, rem) = n.div_rem(&p);
        steps.push(ChainStep {
            quotient: m,
            remainder: rem.clone(),
        });
        p = rem;
    }
    Ok(EuclidChain {
        start: r.numer().clone(),
        n,
        steps,
    })
}

/// How a real target is approached by rationals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// `round(t * 2^j) / 2^j` for j = 1, 2, ... (ties toward zero).
    Dyadic,
    /// Continued-fraction convergents after the integer part.
    Convergents,
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Strategy> {
        match s {
            "dyadic" => Ok(Strategy::Dyadic),
            "convergents" => Ok(Strategy::Convergents),
            _ => Err(Error::Argument(format!(
                "unknown approximation strategy `{s}`"
            ))),
        }
    }
}

/// `count` rationals converging to the exact value of the double `t`.
pub fn approximants(t: f64, strategy: Strategy, count: usize) -> Result<Vec<Rational>> {
    if !t.is_finite() {
        return Err(Error::Argument(format!("non-finite target {t}")));
    }
    Ok(rational_approximants(
        &Rational::from_f64(t)?,
        strategy,
        count,
    ))
}

/// Approximants of an exact rational target. Sequences that reach the target
/// early repeat it.
pub fn rational_approximants(t: &Rational, strategy: Strategy, count: usize) -> Vec<Rational> {
    match strategy {
        Strategy::Dyadic => (1..=count).map(|j| dyadic_round(t, j as u32)).collect(),
        Strategy::Convergents => {
            let mut out: Vec<Rational> = Convergents::new(t).skip(1).take(count).collect();
            let last = out
                .last()
                .cloned()
                .unwrap_or_else(|| Convergents::new(t).last().expect("at least one convergent"));
            out.resize(count, last);
            out
        }
    }
}

/// Nearest multiple of `2^-level`, ties toward zero.
pub fn dyadic_round(t: &Rational, level: u32) -> Rational {
    let scale = BigInt::one() << level as usize;
    let scaled = Rational::reduce_nonzero(t.numer() * &scale, t.denom().clone());
    let a = scaled.abs();
    let fl = a.floor();
    let frac = a.fract();
    let half = Rational::new(1, 2);
    let mag = if frac > half { fl + 1 } else { fl };
    let k = if scaled.is_negative() { -mag } else { mag };
    Rational::reduce_nonzero(k, scale)
}

/// Iterator over the continued-fraction convergents `c_0, c_1, ...` of an
/// exact rational; finite.
pub struct Convergents {
    num: BigInt,
    den: BigInt,
    h: (BigInt, BigInt),
    k: (BigInt, BigInt),
    done: bool,
}

impl Convergents {
    pub fn new(t: &Rational) -> Self {
        Convergents {
            num: t.numer().clone(),
            den: t.denom().clone(),
            h: (BigInt::one(), BigInt::zero()),
            k: (BigInt::zero(), BigInt::one()),
            done: false,
        }
    }
}

impl Iterator for Convergents {
    type Item = Rational;

    fn next(&mut self) -> Option<Rational> {
        if self.done {
            return None;
        }
        let a = self.num.div_floor(&self.den);
        let rem = &self.num - &a * &self.den;
        let h = &a * &self.h.0 + &self.h.1;
        let k = &a * &self.k.0 + &self.k.1;
        self.h = (h.clone(), std::mem::take(&mut self.h.0));
        self.k = (k.clone(), std::mem::take(&mut self.k.0));
        if rem.is_zero() {
            self.done = true;
        } else {
            self.num = std::mem::replace(&mut self.den, rem);
        }
        Some(Rational { num: h, den: k })
    }
}

/// An abscissa given either exactly or as a real. Exact points are evaluated
/// on the lattice directly; real points go through the limit procedure.
#[derive(Debug, Clone, PartialEq)]
pub enum Point {
    Exact(Rational),
    Real(f64),
}

impl Point {
    pub fn to_f64(&self) -> f64 {
        match self {
            Point::Exact(r) => r.to_f64(),
            Point::Real(x) => *x,
        }
    }

    pub fn as_exact(&self) -> Option<&Rational> {
        match self {
            Point::Exact(r) => Some(r),
            Point::Real(_) => None,
        }
    }
}

impl Add for &Point {
    type Output = Point;
    fn add(self, rhs: &Point) -> Point {
        match (self, rhs) {
            (Point::Exact(a), Point::Exact(b)) => Point::Exact(a + b),
            _ => Point::Real(self.to_f64() + rhs.to_f64()),
        }
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Point::Exact(r) => write!(f, "{r}"),
            Point::Real(x) => write!(f, "{x}"),
        }
    }
}

/// `p/n` parses as exact, anything else as a decimal real.
impl FromStr for Point {
    type Err = Error;
    fn from_str(s: &str) -> Result<Point> {
        if s.contains('/') {
            s.parse().map(Point::Exact)
        } else {
            let x: f64 = s
                .parse()
                .map_err(|_| Error::Argument(format!("malformed number `{s}`")))?;
            if !x.is_finite() {
                return Err(Error::Argument(format!("non-finite number `{s}`")));
            }
            Ok(Point::Real(x))
        }
    }
}

impl From<Rational> for Point {
    fn from(r: Rational) -> Self {
        Point::Exact(r)
    }
}

impl From<f64> for Point {
    fn from(x: f64) -> Self {
        Point::Real(x)
    }
}

#[cfg(test)]
mod tests {
    use super::Strategy;
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn reduce_examples() {
        assert_eq!(Rational::reduce(4, 6).unwrap(), r(2, 3));
        let z = Rational::reduce(0, 5).unwrap();
        assert_eq!((z.numer().clone(), z.denom().clone()), (0.into(), 1.into()));
        let s = Rational::reduce(3, -9).unwrap();
        assert_eq!(
            (s.numer().clone(), s.denom().clone()),
            ((-1).into(), 3.into())
        );
        assert!(matches!(Rational::reduce(1, 0), Err(Error::Argument(_))));
    }

    fn chain_pairs(c: &EuclidChain) -> Vec<(i64, i64)> {
        c.steps
            .iter()
            .map(|s| (s.quotient.to_i64().unwrap(), s.remainder.to_i64().unwrap()))
            .collect()
    }

    #[test]
    fn chain_examples() {
        assert_eq!(
            chain_pairs(&euclid_chain(&r(2, 5)).unwrap()),
            [(2, 1), (5, 0)]
        );
        assert_eq!(chain_pairs(&euclid_chain(&r(1, 3)).unwrap()), [(3, 0)]);
        assert_eq!(
            chain_pairs(&euclid_chain(&r(3, 7)).unwrap()),
            [(2, 1), (7, 0)]
        );
    }

    #[test]
    fn chain_domain() {
        for bad in [r(0, 1), r(1, 2), r(2, 3), r(-1, 5), r(3, 1)] {
            assert!(
                matches!(euclid_chain(&bad), Err(Error::Domain { .. })),
                "{bad}"
            );
        }
    }

    #[test]
    fn approximant_examples() {
        assert_eq!(
            approximants(0.75, Strategy::Dyadic, 3).unwrap(),
            [r(1, 2), r(3, 4), r(3, 4)]
        );
        assert_eq!(
            approximants(2f64.sqrt() - 1.0, Strategy::Convergents, 4).unwrap(),
            [r(1, 2), r(2, 5), r(5, 12), r(12, 29)]
        );
        assert_eq!(
            rational_approximants(&r(1, 3), Strategy::Convergents, 1),
            [r(1, 3)]
        );
        assert_eq!(
            rational_approximants(&r(5, 1), Strategy::Convergents, 2),
            [r(5, 1), r(5, 1)]
        );
        assert_eq!(dyadic_round(&r(-3, 4), 1), r(-1, 2));
        assert!(approximants(f64::NAN, Strategy::Dyadic, 2).is_err());
    }

    #[test]
    fn parse_and_display() {
        assert_eq!("-6/4".parse::<Rational>().unwrap(), r(-3, 2));
        assert_eq!("7".parse::<Rational>().unwrap(), r(7, 1));
        for bad in ["", "1/", "/2", "1 /2", "1/-2", "a/b", "1/0", "+/3"] {
            assert!(bad.parse::<Rational>().is_err(), "{bad}");
        }
        assert_eq!(r(-3, 2).to_string(), "-3/2");
        assert_eq!(r(4, 2).to_string(), "2");
        assert_eq!("1/3".parse::<Point>().unwrap(), Point::Exact(r(1, 3)));
        assert_eq!("0.5".parse::<Point>().unwrap(), Point::Real(0.5));
    }

    #[test]
    fn to_f64_large_parts() {
        let big = Rational::reduce(
            BigInt::from(1u64 << 60) * 3 + 1,
            BigInt::from(1u64 << 60) * 7,
        )
        .unwrap();
        assert_eq!(big.to_f64(), 3.0 / 7.0);
        let x = 0.1f64;
        assert_eq!(Rational::from_f64(x).unwrap().to_f64(), x);
        assert_eq!(Rational::from_f64(-1e-310).unwrap().to_f64(), -1e-310);
        assert_eq!(Rational::from_f64(1e300).unwrap().to_f64(), 1e300);
    }

    #[test]
    fn floor_fract() {
        assert_eq!(r(-7, 3).floor(), BigInt::from(-3));
        assert_eq!(r(-7, 3).fract(), r(2, 3));
        assert_eq!(r(7, 3).ceil(), BigInt::from(3));
        assert!(r(3, 8).is_dyadic() && !r(1, 3).is_dyadic());
        assert!(r(3, 40).is_terminating_decimal() && !r(1, 6).is_terminating_decimal());
    }

    proptest! {
        #[test]
        fn reduce_is_scale_invariant(n in -10_000i64..10_000, d in 1i64..10_000, k in 1i64..1000) {
            prop_assert_eq!(Rational::reduce(n * k, d * k).unwrap(), Rational::reduce(n, d).unwrap());
        }

        #[test]
        fn chain_invariants(n in 3i64..100_000, seed in 0u64..u64::MAX) {
            let p = 1 + (seed % ((n - 1) / 2) as u64) as i64;
            let q = Rational::new(p, n);
            prop_assume!(q < Rational::new(1, 2));
            let chain = euclid_chain(&q).unwrap();
            let rem = chain.remainders();
            let nn = chain.n.clone();
            let mut prev_m: Option<BigInt> = None;
            for (j, step) in chain.steps.iter().enumerate() {
                prop_assert_eq!(&step.quotient * &rem[j] + &step.remainder, nn.clone());
                prop_assert!(step.remainder < rem[j]);
                if let Some(pm) = &prev_m { prop_assert!(pm <= &step.quotient); }
                prev_m = Some(step.quotient.clone());
            }
            prop_assert!(chain.steps[0].quotient >= BigInt::from(2));
            prop_assert!(chain.steps.last().unwrap().remainder.is_zero());
            prop_assert_eq!(Rational::reduce(chain.start.clone(), nn).unwrap(), q);
        }

        #[test]
        fn convergents_best_approximation(t in 0.001f64..1000.0) {
            let exact = Rational::from_f64(t).unwrap();
            for c in Convergents::new(&exact) {
                let err = (&exact - &c).abs();
                let bound = Rational::reduce(BigInt::one(), c.denom() * c.denom()).unwrap();
                prop_assert!(err <= bound);
            }
        }

        #[test]
        fn to_f64_matches_division(n in -1_000_000i64..1_000_000, d in 1i64..1_000_000) {
            prop_assert_eq!(Rational::new(n, d).to_f64(), n as f64 / d as f64);
        }
    }
}
