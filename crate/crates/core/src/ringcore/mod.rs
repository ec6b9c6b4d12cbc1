//! Exact scalars, dense linear algebra and the truncated exponential-polynomial ring.

mod gaussian;
mod hbar;
mod matrix;
mod rational;
mod series;
mod subspace;

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use thiserror::Error;

pub use gaussian::GaussianRational;
pub use hbar::{HbarLaurent, HbarTerm};
pub use matrix::{is_nondegenerate, kernel_basis, Matrix};
pub use rational::{q, Rational};
pub use series::{series_mul, ExpVar, Monomial, RingDecl, SeriesElem};
pub use subspace::Subspace;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RingError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("matrix is not square ({0}x{1})")]
    NotSquare(usize, usize),
    #[error("matrix is singular")]
    Singular,
    #[error("unknown variable {0:?}")]
    UnknownVariable(String),
    #[error("mismatched ring declarations")]
    RingMismatch,
    #[error("invalid assignment: {0}")]
    Assignment(String),
    #[error("parse error: {0}")]
    Parse(String),
}

/// Exact field scalars used by [`Matrix`] and [`Subspace`].
pub trait Field:
    Clone
    + PartialEq
    + fmt::Debug
    + fmt::Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn from_rational(q: &Rational) -> Self;
}

impl Field for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn one() -> Self {
        Rational::one()
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
    fn from_rational(q: &Rational) -> Self {
        q.clone()
    }
}

impl Field for GaussianRational {
    fn zero() -> Self {
        GaussianRational::default()
    }
    fn one() -> Self {
        GaussianRational::real(Rational::one())
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn from_rational(q: &Rational) -> Self {
        GaussianRational::real(q.clone())
    }
}

/// Dot product of two equal-length vectors.
pub fn dot<F: Field>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).fold(F::zero(), |acc, (x, y)| acc + x.clone() * y.clone())
}

/// Standard unit vector.
pub fn unit_vector<F: Field>(n: usize, i: usize) -> Vec<F> {
    let mut v = vec![F::zero(); n];
    v[i] = F::one();
    v
}

pub fn vec_add<F: Field>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| x.clone() + y.clone()).collect()
}

pub fn vec_sub<F: Field>(a: &[F], b: &[F]) -> Vec<F> {
    a.iter().zip(b).map(|(x, y)| x.clone() - y.clone()).collect()
}

pub fn vec_scale<F: Field>(s: &F, a: &[F]) -> Vec<F> {
    a.iter().map(|x| s.clone() * x.clone()).collect()
}

pub fn is_zero_vec<F: Field>(a: &[F]) -> bool {
    a.iter().all(|x| x.is_zero())
}

/// Parse a list of rationals from strings.
pub fn qs(items: &[&str]) -> Vec<Rational> {
    items.iter().map(|s| s.parse().expect("rational literal")).collect()
}

/// Integer vector to rationals.
pub fn qv(items: &[i64]) -> Vec<Rational> {
    items.iter().map(|&n| Rational::int(n)).collect()
}
