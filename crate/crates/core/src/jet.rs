//! Truncated univariate Taylor series and an expression tree evaluated on them.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::ops::{Add, Mul, Neg, Sub};

use crate::error::Error;

/// `f(a + h) = Σ_{j≤K} t_j h^j + O(h^{K+1})`.
#[derive(Clone, Debug, PartialEq)]
pub struct JetSeries {
    center: f64,
    coeffs: Vec<f64>,
}

impl JetSeries {
    pub fn constant(center: f64, order: usize, c: f64) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        JetSeries { center, coeffs }
    }

    /// The identity `x ↦ x` expanded at `center`.
    pub fn variable(center: f64, order: usize) -> Self {
        let mut j = JetSeries::constant(center, order, center);
        if order >= 1 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn from_coeffs(center: f64, coeffs: Vec<f64>) -> Self {
        assert!(!coeffs.is_empty(), "jet needs at least the constant term");
        JetSeries { center, coeffs }
    }

    /// Series with prescribed derivatives `f^{(j)}(a)`.
    pub fn from_derivatives(center: f64, derivs: &[f64]) -> Self {
        let mut fact = 1.0;
        let coeffs = derivs
            .iter()
            .enumerate()
            .map(|(j, d)| {
                if j > 0 {
                    fact *= j as f64;
                }
                d / fact
            })
            .collect();
        JetSeries::from_coeffs(center, coeffs)
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `f^{(j)}(a) = j! t_j`.
    pub fn derivative(&self, j: usize) -> f64 {
        self.coeffs[j] * factorial(j)
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..self.coeffs.len()).map(|j| self.derivative(j)).collect()
    }

    pub fn zeros_like(&self) -> Self {
        JetSeries::constant(self.center, self.order(), 0.0)
    }

    fn check(&self, other: &Self) {
        debug_assert_eq!(self.coeffs.len(), other.coeffs.len(), "jet orders differ");
    }

    pub fn scale(&self, c: f64) -> Self {
        JetSeries {
            center: self.center,
            coeffs: self.coeffs.iter().map(|t| t * c).collect(),
        }
    }

    /// `α f + β`.
    pub fn affine(&self, alpha: f64, beta: f64) -> Self {
        let mut out = self.scale(alpha);
        out.coeffs[0] += beta;
        out
    }

    pub fn exp(&self) -> Self {
        let k = self.coeffs.len();
        let u = &self.coeffs;
        let mut e = vec![0.0; k];
        e[0] = libm::exp(u[0]);
        for n in 1..k {
            let s: f64 = (1..=n).map(|j| j as f64 * u[j] * e[n - j]).sum();
            e[n] = s / n as f64;
        }
        JetSeries {
            center: self.center,
            coeffs: e,
        }
    }

    pub fn recip(&self) -> Result<Self, Error> {
        let u = &self.coeffs;
        if u[0] == 0.0 {
            return Err(Error::ZeroReciprocal);
        }
        let k = u.len();
        let mut r = vec![0.0; k];
        r[0] = 1.0 / u[0];
        for n in 1..k {
            let s: f64 = (1..=n).map(|j| u[j] * r[n - j]).sum();
            r[n] = -s / u[0];
        }
        Ok(JetSeries {
            center: self.center,
            coeffs: r,
        })
    }

    /// Integer power; negative exponents go through the reciprocal.
    pub fn powi(&self, n: i32) -> Result<Self, Error> {
        let base = if n < 0 { self.recip()? } else { self.clone() };
        let mut e = n.unsigned_abs();
        let mut acc = JetSeries::constant(self.center, self.order(), 1.0);
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &sq;
            }
            e >>= 1;
            if e > 0 {
                sq = &sq * &sq;
            }
        }
        Ok(acc)
    }

    /// Evaluates the truncated series at `a + h`.
    pub fn eval_offset(&self, h: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, t| acc * h + t)
    }
}

impl Add for &JetSeries {
    type Output = JetSeries;
    fn add(self, rhs: &JetSeries) -> JetSeries {
        self.check(rhs);
        JetSeries {
            center: self.center,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &JetSeries {
    type Output = JetSeries;
    fn sub(self, rhs: &JetSeries) -> JetSeries {
        self.check(rhs);
        JetSeries {
            center: self.center,
            coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &JetSeries {
    type Output = JetSeries;
    fn neg(self) -> JetSeries {
        self.scale(-1.0)
    }
}

impl Mul for &JetSeries {
    type Output = JetSeries;
    /// Cauchy product.
    fn mul(self, rhs: &JetSeries) -> JetSeries {
        self.check(rhs);
        let k = self.coeffs.len();
        let coeffs = (0..k)
            .map(|n| (0..=n).map(|j| self.coeffs[j] * rhs.coeffs[n - j]).sum())
            .collect();
        JetSeries {
            center: self.center,
            coeffs,
        }
    }
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Expression in one real variable.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Const(f64),
    Var,
    Add(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, i32),
    Exp(Box<Expr>),
    Recip(Box<Expr>),
    /// `scale · inner + shift`.
    Affine { scale: f64, shift: f64, inner: Box<Expr> },
}

impl Expr {
    pub fn var() -> Expr {
        Expr::Var
    }

    pub fn constant(c: f64) -> Expr {
        Expr::Const(c)
    }

    pub fn add(self, other: Expr) -> Expr {
        Expr::Add(Box::new(self), Box::new(other))
    }

    pub fn mul(self, other: Expr) -> Expr {
        Expr::Mul(Box::new(self), Box::new(other))
    }

    pub fn pow(self, n: i32) -> Expr {
        Expr::Pow(Box::new(self), n)
    }

    pub fn exp(self) -> Expr {
        Expr::Exp(Box::new(self))
    }

    pub fn recip(self) -> Expr {
        Expr::Recip(Box::new(self))
    }

    pub fn affine(self, scale: f64, shift: f64) -> Expr {
        Expr::Affine {
            scale,
            shift,
            inner: Box::new(self),
        }
    }

    /// `exp(-1/u)`, the positive branch of the flat function.
    pub fn flat(self) -> Expr {
        self.recip().affine(-1.0, 0.0).exp()
    }

    /// `σ(u) / (σ(u) + σ(1-u))` on `0 < u < 1`.
    pub fn smooth_step(self) -> Expr {
        let rising = self.clone().flat();
        let falling = self.affine(-1.0, 1.0).flat();
        rising.clone().mul(rising.add(falling).recip())
    }

    /// Plain float evaluation.
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var => x,
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Pow(a, n) => libm::pow(a.eval(x), *n as f64),
            Expr::Exp(a) => libm::exp(a.eval(x)),
            Expr::Recip(a) => 1.0 / a.eval(x),
            Expr::Affine { scale, shift, inner } => scale * inner.eval(x) + shift,
        }
    }
}

/// Taylor expansion of `expr` at `a` through order `order`.
pub fn jet_arith(expr: &Expr, a: f64, order: usize) -> Result<JetSeries, Error> {
    Ok(match expr {
        Expr::Const(c) => JetSeries::constant(a, order, *c),
        Expr::Var => JetSeries::variable(a, order),
        Expr::Add(l, r) => &jet_arith(l, a, order)? + &jet_arith(r, a, order)?,
        Expr::Mul(l, r) => &jet_arith(l, a, order)? * &jet_arith(r, a, order)?,
        Expr::Pow(b, n) => jet_arith(b, a, order)?.powi(*n)?,
        Expr::Exp(b) => jet_arith(b, a, order)?.exp(),
        Expr::Recip(b) => jet_arith(b, a, order)?.recip()?,
        Expr::Affine { scale, shift, inner } => jet_arith(inner, a, order)?.affine(*scale, *shift),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exp_at_zero() {
        let j = jet_arith(&Expr::var().exp(), 0.0, 3).unwrap();
        let expect = [1.0, 1.0, 0.5, 1.0 / 6.0];
        for (a, b) in j.coeffs().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn square_at_one() {
        let j = jet_arith(&Expr::var().pow(2), 1.0, 2).unwrap();
        assert_eq!(j.coeffs(), &[1.0, 2.0, 1.0]);
    }

    #[test]
    fn flat_function_at_half() {
        // σ = e^{-2}, σ' = σ/u² = 4e^{-2}, σ'' = σ(1/u⁴ - 2/u³) = 0
        let j = jet_arith(&Expr::var().flat(), 0.5, 2).unwrap();
        let e2 = libm::exp(-2.0);
        assert!((j.derivative(0) - e2).abs() < 1e-15);
        assert!((j.derivative(1) - 4.0 * e2).abs() < 1e-14);
        assert!(j.derivative(2).abs() < 1e-14);
    }

    #[test]
    fn reciprocal_of_zero_jet_fails() {
        assert_eq!(
            jet_arith(&Expr::var().recip(), 0.0, 2),
            Err(Error::ZeroReciprocal)
        );
    }

    #[test]
    fn negative_power_matches_reciprocal() {
        let a = jet_arith(&Expr::var().pow(-2), 0.7, 4).unwrap();
        let b = jet_arith(&Expr::var().mul(Expr::var()).recip(), 0.7, 4).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
