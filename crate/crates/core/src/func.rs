//! Functions under study: bivariate expressions, univariate seeds, and the
//! cocycle `F(x, y) = g(x + y) - g(x) - g(y)` built from a seed.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::expr::{parse_expr, ExprAst};

/// Anything that can be evaluated at a real point of the plane.
pub trait Bivariate: Send + Sync {
    fn eval2(&self, x: f64, y: f64) -> Result<f64>;
}

impl<T: Bivariate + ?Sized> Bivariate for &T {
    fn eval2(&self, x: f64, y: f64) -> Result<f64> {
        (**self).eval2(x, y)
    }
}

impl<T: Bivariate + ?Sized> Bivariate for Box<T> {
    fn eval2(&self, x: f64, y: f64) -> Result<f64> {
        (**self).eval2(x, y)
    }
}

impl<T: Bivariate + ?Sized> Bivariate for Arc<T> {
    fn eval2(&self, x: f64, y: f64) -> Result<f64> {
        (**self).eval2(x, y)
    }
}

/// Adapts an infallible closure.
#[derive(Clone, Copy)]
pub struct FromFn<F>(pub F);

impl<F: Fn(f64, f64) -> f64 + Send + Sync> Bivariate for FromFn<F> {
    fn eval2(&self, x: f64, y: f64) -> Result<f64> {
        let v = (self.0)(x, y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Eval(format!("non-finite value at ({x}, {y})")))
        }
    }
}

/// Builtin seed families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Seed {
    /// t^2
    Square,
    /// t^3
    Cube,
    /// e^t
    Expo,
    /// sin t
    Sine,
    /// |t|^(1/2); continuous but not differentiable at 0.
    Hoelder,
}

impl Seed {
    pub const ALL: [Seed; 5] = [
        Seed::Square,
        Seed::Cube,
        Seed::Expo,
        Seed::Sine,
        Seed::Hoelder,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Seed::Square => "square",
            Seed::Cube => "cube",
            Seed::Expo => "expo",
            Seed::Sine => "sine",
            Seed::Hoelder => "hoelder",
        }
    }

    pub fn eval(self, t: f64) -> f64 {
        match self {
            Seed::Square => t * t,
            Seed::Cube => t * t * t,
            Seed::Expo => t.exp(),
            Seed::Sine => t.sin(),
            Seed::Hoelder => t.abs().sqrt(),
        }
    }

    pub fn is_smooth(self) -> bool {
        self != Seed::Hoelder
    }
}

impl FromStr for Seed {
    type Err = Error;
    fn from_str(s: &str) -> Result<Seed> {
        Seed::ALL
            .into_iter()
            .find(|seed| seed.name() == s)
            .ok_or_else(|| Error::Argument(format!("unknown builtin seed `{s}`")))
    }
}

impl fmt::Display for Seed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A bivariate F or a univariate seed g.
#[derive(Debug, Clone, PartialEq)]
pub enum FuncSpec {
    /// Expression in two variables.
    Bivariate(ExprAst),
    /// Expression in one variable.
    SeedExpr(ExprAst),
    Builtin(Seed),
    /// `g(x + y) - g(x) - g(y)` for a univariate `g`.
    Cocycle(Box<FuncSpec>),
}

impl FuncSpec {
    /// Parses an expression; one declared variable gives a seed, two a bivariate F.
    pub fn parse<S: AsRef<str>>(src: &str, vars: &[S]) -> Result<FuncSpec> {
        let ast = parse_expr(src, vars)?;
        match vars.len() {
            1 => Ok(FuncSpec::SeedExpr(ast)),
            2 => Ok(FuncSpec::Bivariate(ast)),
            n => Err(Error::Argument(format!(
                "expected 1 or 2 variables, got {n}"
            ))),
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            FuncSpec::Bivariate(_) | FuncSpec::Cocycle(_) => 2,
            FuncSpec::SeedExpr(_) | FuncSpec::Builtin(_) => 1,
        }
    }

    pub fn eval1(&self, t: f64) -> Result<f64> {
        match self {
            FuncSpec::SeedExpr(ast) => ast.eval(&[t]),
            FuncSpec::Builtin(seed) => {
                let v = seed.eval(t);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::Eval(format!("{seed}({t}) is not finite")))
                }
            }
            _ => Err(Error::Argument(
                "univariate evaluation of a bivariate function".into(),
            )),
        }
    }
}

impl Bivariate for FuncSpec {
    fn eval2(&self, x: f64, y: f64) -> Result<f64> {
        match self {
            FuncSpec::Bivariate(ast) => ast.eval(&[x, y]),
            FuncSpec::Cocycle(g) => {
                let s = g.eval1(x + y)?;
                let gx = g.eval1(x)?;
                let gy = g.eval1(y)?;
                // gx + gy commutes exactly, so F(x, y) == F(y, x) bit for bit.
                Ok(s - (gx + gy))
            }
            _ => Err(Error::Argument(
                "bivariate evaluation of a univariate function".into(),
            )),
        }
    }
}

impl fmt::Display for FuncSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FuncSpec::Bivariate(ast) | FuncSpec::SeedExpr(ast) => write!(f, "{ast}"),
            FuncSpec::Builtin(seed) => write!(f, "{seed}"),
            FuncSpec::Cocycle(g) => write!(f, "cocycle({g})"),
        }
    }
}

/// The cocycle of a univariate seed.
pub fn cocycle_from_seed(g: FuncSpec) -> Result<FuncSpec> {
    if g.arity() != 1 {
        return Err(Error::Argument("cocycle seed must be univariate".into()));
    }
    Ok(FuncSpec::Cocycle(Box::new(g)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cocycle(seed: Seed) -> FuncSpec {
        cocycle_from_seed(FuncSpec::Builtin(seed)).unwrap()
    }

    #[test]
    fn examples() {
        let sq = cocycle(Seed::Square);
        assert_eq!(sq.eval2(1.0, 2.0).unwrap(), 4.0);
        for x in [-3.0, -0.5, 0.0, 0.25, 7.0] {
            assert_eq!(sq.eval2(x, 0.0).unwrap(), 0.0);
        }
        let ex = cocycle(Seed::Expo);
        let e = std::f64::consts::E;
        assert!((ex.eval2(1.0, 1.0).unwrap() - (e * e - 2.0 * e)).abs() < 1e-15);
        assert!((ex.eval2(1.0, 1.0).unwrap() - 1.95249).abs() < 1e-5);
    }

    #[test]
    fn expression_seed_matches_builtin() {
        let g = FuncSpec::parse("t^2", &["t"]).unwrap();
        let f = cocycle_from_seed(g).unwrap();
        assert_eq!(f.arity(), 2);
        assert_eq!(
            f.eval2(1.5, -0.25).unwrap(),
            cocycle(Seed::Square).eval2(1.5, -0.25).unwrap()
        );
    }

    #[test]
    fn arity_errors() {
        let f = FuncSpec::parse("x*y", &["x", "y"]).unwrap();
        assert!(cocycle_from_seed(f.clone()).is_err());
        assert!(f.eval1(1.0).is_err());
        assert!(FuncSpec::Builtin(Seed::Cube).eval2(1.0, 1.0).is_err());
        assert!(FuncSpec::parse("1", &["a", "b", "c"]).is_err());
    }

    #[test]
    fn seed_errors_propagate() {
        let f = cocycle_from_seed(FuncSpec::parse("log(t)", &["t"]).unwrap()).unwrap();
        assert!(matches!(f.eval2(1.0, -2.0), Err(Error::Eval(_))));
    }

    #[test]
    fn seed_names() {
        for s in Seed::ALL {
            assert_eq!(s.name().parse::<Seed>().unwrap(), s);
        }
        assert!("quartic".parse::<Seed>().is_err());
    }

    proptest! {
        #[test]
        fn cocycle_exactly_symmetric(i in 0usize..5, x in -4.0f64..4.0, y in -4.0f64..4.0) {
            let f = cocycle(Seed::ALL[i]);
            prop_assert_eq!(f.eval2(x, y).unwrap(), f.eval2(y, x).unwrap());
        }

        #[test]
        fn cocycle_satisfies_kurepa(i in 0usize..5, x in -1.0f64..1.0, y in -1.0f64..1.0, z in -1.0f64..1.0) {
            let f = cocycle(Seed::ALL[i]);
            let r = f.eval2(x + y, z).unwrap() + f.eval2(x, y).unwrap()
                - f.eval2(y, z).unwrap() - f.eval2(x, y + z).unwrap();
            prop_assert!(r.abs() <= 1e-12, "residual {}", r);
        }
    }
}
