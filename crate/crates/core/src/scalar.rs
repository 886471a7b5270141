//! Scalar fields used for coefficients: binary floats and exact `ℚ(τ)`.
//!
//! The small dense-linear-algebra kernels live on the trait so that generic
//! algorithms make exact decisions in exact mode and tolerance-based decisions
//! in float mode without branching at every call site.

use alloc::vec::Vec;
use core::fmt::{Debug, Display};
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::exact::{Exact, TAU_F64};
use crate::linalg::{self, Mat};

pub trait Scalar:
    Clone
    + PartialEq
    + Debug
    + Display
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    /// True for the exact field; exact kernels ignore tolerances.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_ratio(n: i64, d: i64) -> Self;
    fn from_rational(r: &BigRational) -> Self;
    /// Float input; the exact field stores its binary value.
    fn from_f64(v: f64) -> Self;
    /// `2π`.
    fn tau() -> Self;
    fn is_zero(&self) -> bool;
    fn to_f64(&self) -> f64;
    fn sqrt(&self) -> Option<Self>;
    /// Exact value (floats convert through their binary expansion).
    fn to_exact(&self) -> Exact;

    /// Rank; `threshold` is an absolute singular-value cutoff in float mode.
    fn rank(m: &Mat<Self>, _threshold: f64) -> usize {
        linalg::rref(m.clone()).1.len()
    }

    /// Basis of `{v : m v = 0}`.
    fn null_space(m: &Mat<Self>, threshold: f64) -> Vec<Vec<Self>> {
        let _ = threshold;
        linalg::exact_null_space(m)
    }

    /// A solution of `a x = b` with non-pivot unknowns set to zero
    /// (float mode: least squares over greedily selected independent columns).
    /// `None` when exactly inconsistent.
    fn solve(a: &Mat<Self>, b: &[Self], threshold: f64) -> Option<Vec<Self>> {
        let _ = threshold;
        linalg::exact_solve(a, b)
    }
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        n as f64 / d as f64
    }
    fn from_rational(r: &BigRational) -> Self {
        r.to_f64().unwrap_or(f64::NAN)
    }
    fn from_f64(v: f64) -> Self {
        v
    }
    fn tau() -> Self {
        TAU_F64
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn sqrt(&self) -> Option<Self> {
        (*self >= 0.0).then(|| libm::sqrt(*self))
    }
    fn to_exact(&self) -> Exact {
        Exact::from_f64(*self).expect("finite float")
    }

    fn rank(m: &Mat<Self>, threshold: f64) -> usize {
        linalg::singular_values(m)
            .iter()
            .filter(|&&s| s > threshold)
            .count()
    }

    fn null_space(m: &Mat<Self>, threshold: f64) -> Vec<Vec<Self>> {
        linalg::float_null_space(m, threshold)
    }

    fn solve(a: &Mat<Self>, b: &[Self], threshold: f64) -> Option<Vec<Self>> {
        Some(linalg::float_solve_greedy(a, b, threshold))
    }
}

impl Scalar for Exact {
    const EXACT: bool = true;

    fn zero() -> Self {
        Exact::zero()
    }
    fn one() -> Self {
        Exact::one()
    }
    fn from_i64(v: i64) -> Self {
        Exact::from_integer(v)
    }
    fn from_ratio(n: i64, d: i64) -> Self {
        Exact::from_ratio(n, d)
    }
    fn from_rational(r: &BigRational) -> Self {
        Exact::from_rational(r.clone())
    }
    fn from_f64(v: f64) -> Self {
        Exact::from_f64(v).expect("non-finite float in exact mode")
    }
    fn tau() -> Self {
        Exact::tau()
    }
    fn is_zero(&self) -> bool {
        Exact::is_zero(self)
    }
    fn to_f64(&self) -> f64 {
        Exact::to_f64(self)
    }
    fn sqrt(&self) -> Option<Self> {
        Exact::sqrt(self)
    }
    fn to_exact(&self) -> Exact {
        self.clone()
    }
}
