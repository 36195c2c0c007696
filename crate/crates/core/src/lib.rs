//! Reconstruction of additive-cocycle solutions `f` from a symmetric
//! `F(x, y) = f(x + y) - f(x) - f(y)`.

pub mod c0;
pub mod ck;
pub mod cli;
pub mod error;
pub mod expr;
pub mod func;
pub mod modulus;
pub mod rational;
pub mod sum;
pub mod verify;

pub use error::{Error, Result};
pub use func::{cocycle_from_seed, Bivariate, FuncSpec, Seed};
pub use rational::{Point, Rational};
