//! Exact multivariate trigonometric polynomials on the unit torus `[0,1)ⁿ`.
//!
//! A term `(m, phase) ↦ c` denotes `c · phase(2π⟨m, x⟩)`. Stored terms are
//! canonical: `sin` never appears with `m = 0`, the first nonzero entry of `m`
//! is positive, and no coefficient is zero.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use num_rational::Rational64;
use num_traits::Zero;

use crate::error::Error;
use crate::exact::TAU_F64;
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Phase {
    Cos,
    Sin,
}

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TrigKey {
    pub freq: Vec<i64>,
    pub phase: Phase,
}

impl TrigKey {
    pub fn is_zero_freq(&self) -> bool {
        self.freq.iter().all(|&m| m == 0)
    }

    /// `∫ phase(2π⟨m,x⟩)² dx` over the unit torus, as `(num, den)`.
    pub fn l2_weight(&self) -> (i64, i64) {
        if self.is_zero_freq() {
            (1, 1)
        } else {
            (1, 2)
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        let t: f64 = self.freq.iter().zip(x).map(|(&m, &xi)| m as f64 * xi).sum();
        let theta = TAU_F64 * (t - libm::floor(t));
        match self.phase {
            Phase::Cos => libm::cos(theta),
            Phase::Sin => libm::sin(theta),
        }
    }
}

#[derive(Clone, PartialEq)]
pub struct TrigPoly<S> {
    dim: usize,
    terms: BTreeMap<TrigKey, S>,
}

impl<S: Scalar> TrigPoly<S> {
    pub fn zero(dim: usize) -> Self {
        TrigPoly {
            dim,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(dim: usize, c: S) -> Self {
        let mut p = TrigPoly::zero(dim);
        p.push(alloc::vec![0; dim], Phase::Cos, c);
        p
    }

    /// `c · phase(2π⟨freq, x⟩)`.
    pub fn monomial(freq: &[i64], phase: Phase, c: S) -> Self {
        let mut p = TrigPoly::zero(freq.len());
        p.push(freq.to_vec(), phase, c);
        p
    }

    /// Builds from raw (possibly non-canonical) terms.
    pub fn from_terms(
        dim: usize,
        terms: impl IntoIterator<Item = (Vec<i64>, Phase, S)>,
    ) -> Result<Self, Error> {
        let mut p = TrigPoly::zero(dim);
        for (freq, phase, c) in terms {
            if freq.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: freq.len(),
                });
            }
            p.push(freq, phase, c);
        }
        Ok(p)
    }

    /// Adds one term, folding it into canonical form.
    fn push(&mut self, mut freq: Vec<i64>, phase: Phase, mut c: S) {
        debug_assert_eq!(freq.len(), self.dim);
        if c.is_zero() {
            return;
        }
        match freq.iter().find(|&&m| m != 0) {
            None if phase == Phase::Sin => return,
            Some(&first) if first < 0 => {
                for m in &mut freq {
                    *m = -*m;
                }
                if phase == Phase::Sin {
                    c = -c;
                }
            }
            _ => {}
        }
        let key = TrigKey { freq, phase };
        match self.terms.remove(&key) {
            Some(old) => {
                let sum = old + c;
                if !sum.is_zero() {
                    self.terms.insert(key, sum);
                }
            }
            None => {
                self.terms.insert(key, c);
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TrigKey, &S)> {
        self.terms.iter()
    }

    pub fn coeff(&self, key: &TrigKey) -> Option<&S> {
        self.terms.get(key)
    }

    /// Largest `|m_i|` over stored terms.
    pub fn max_freq(&self) -> i64 {
        self.terms
            .keys()
            .flat_map(|k| k.freq.iter().map(|m| m.abs()))
            .max()
            .unwrap_or(0)
    }

    /// Rebuilds from the stored terms; the identity on canonical input.
    pub fn recanonicalize(&self) -> Self {
        let mut p = TrigPoly::zero(self.dim);
        for (k, c) in &self.terms {
            p.push(k.freq.clone(), k.phase, c.clone());
        }
        p
    }

    fn check_dim(&self, other: &Self) -> Result<(), Error> {
        if self.dim == other.dim {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            })
        }
    }

    fn check_axis(&self, axis: usize) -> Result<(), Error> {
        if axis < self.dim {
            Ok(())
        } else {
            Err(Error::AxisOutOfRange {
                axis,
                dimension: self.dim,
            })
        }
    }

    pub fn scale(&self, c: &S) -> Self {
        if c.is_zero() {
            return TrigPoly::zero(self.dim);
        }
        TrigPoly {
            dim: self.dim,
            terms: self
                .terms
                .iter()
                .map(|(k, v)| (k.clone(), v.clone() * c.clone()))
                .filter(|(_, v)| !v.is_zero())
                .collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (k, c) in &other.terms {
            out.push(k.freq.clone(), k.phase, c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.add(&other.scale(&-S::one()))
    }

    /// Exact partial derivative along `axis`.
    pub fn partial(&self, axis: usize) -> Result<Self, Error> {
        self.check_axis(axis)?;
        Ok(self.partial_with(axis, &S::tau()))
    }

    /// `(2π)⁻¹ ∂_axis`: keeps rational coefficients rational.
    pub fn partial_unscaled(&self, axis: usize) -> Result<Self, Error> {
        self.check_axis(axis)?;
        Ok(self.partial_with(axis, &S::one()))
    }

    fn partial_with(&self, axis: usize, factor: &S) -> Self {
        let mut out = TrigPoly::zero(self.dim);
        for (k, c) in &self.terms {
            let m = k.freq[axis];
            if m == 0 {
                continue;
            }
            let scaled = c.clone() * factor.clone() * S::from_i64(m);
            match k.phase {
                Phase::Cos => out.push(k.freq.clone(), Phase::Sin, -scaled),
                Phase::Sin => out.push(k.freq.clone(), Phase::Cos, scaled),
            }
        }
        out
    }

    /// `∂^I`.
    pub fn derivative(&self, index: &MultiIndex) -> Result<Self, Error> {
        if index.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: index.dim(),
            });
        }
        let mut out = self.clone();
        for axis in index.axes() {
            out = out.partial_with(axis, &S::tau());
        }
        Ok(out)
    }

    /// `(2π)^{-|I|} ∂^I`.
    pub fn derivative_unscaled(&self, index: &MultiIndex) -> Result<Self, Error> {
        if index.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: index.dim(),
            });
        }
        let mut out = self.clone();
        for axis in index.axes() {
            out = out.partial_with(axis, &S::one());
        }
        Ok(out)
    }

    /// Exact product via product-to-sum identities.
    pub fn mul(&self, other: &Self) -> Result<Self, Error> {
        self.check_dim(other)?;
        let mut out = TrigPoly::zero(self.dim);
        let half = S::from_ratio(1, 2);
        for (ka, ca) in &self.terms {
            for (kb, cb) in &other.terms {
                let c = ca.clone() * cb.clone() * half.clone();
                let sum: Vec<i64> = ka.freq.iter().zip(&kb.freq).map(|(a, b)| a + b).collect();
                let diff: Vec<i64> = ka.freq.iter().zip(&kb.freq).map(|(a, b)| a - b).collect();
                match (ka.phase, kb.phase) {
                    (Phase::Cos, Phase::Cos) => {
                        out.push(diff, Phase::Cos, c.clone());
                        out.push(sum, Phase::Cos, c);
                    }
                    (Phase::Sin, Phase::Sin) => {
                        out.push(diff, Phase::Cos, c.clone());
                        out.push(sum, Phase::Cos, -c);
                    }
                    (Phase::Sin, Phase::Cos) => {
                        out.push(sum, Phase::Sin, c.clone());
                        out.push(diff, Phase::Sin, c);
                    }
                    (Phase::Cos, Phase::Sin) => {
                        out.push(sum, Phase::Sin, c.clone());
                        out.push(diff, Phase::Sin, -c);
                    }
                }
            }
        }
        Ok(out)
    }

    /// Float evaluation at `x ∈ [0,1)ⁿ` (any real `x` is reduced periodically).
    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(k, c)| c.to_f64() * k.eval(x))
            .sum()
    }

    /// Exact evaluation at a rational point, available when every phase value
    /// is rational there (`cos 2πt ∈ {0, ±1/2, ±1}`).
    pub fn eval_exact(&self, x: &[Rational64]) -> Option<S> {
        let mut acc = S::zero();
        for (k, c) in &self.terms {
            let t = k
                .freq
                .iter()
                .zip(x)
                .fold(Rational64::zero(), |acc, (&m, xi)| acc + xi * m);
            let t = match k.phase {
                Phase::Cos => t,
                Phase::Sin => t - Rational64::new(1, 4),
            };
            let (n, d) = cos_two_pi_rational(t)?;
            acc = acc + c.clone() * S::from_ratio(n, d);
        }
        Some(acc)
    }

    /// `∫_{Tⁿ} f g dx`.
    pub fn l2_inner(&self, other: &Self) -> Result<S, Error> {
        self.check_dim(other)?;
        let mut acc = S::zero();
        for (k, c) in &self.terms {
            if let Some(d) = other.terms.get(k) {
                let (wn, wd) = k.l2_weight();
                acc = acc + c.clone() * d.clone() * S::from_ratio(wn, wd);
            }
        }
        Ok(acc)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> TrigPoly<T> {
        let mut out = TrigPoly::zero(self.dim);
        for (k, c) in &self.terms {
            out.push(k.freq.clone(), k.phase, f(c));
        }
        out
    }

    pub fn to_f64(&self) -> TrigPoly<f64> {
        self.map_coeffs(|c| c.to_f64())
    }
}

/// `cos(2πt)` for rational `t` when it is rational (Niven's theorem lists all cases).
pub fn cos_two_pi_rational(t: Rational64) -> Option<(i64, i64)> {
    let frac = t - t.floor();
    let (p, q) = (*frac.numer(), *frac.denom());
    match (q, p) {
        (1, _) => Some((1, 1)),
        (2, _) => Some((-1, 1)),
        (4, _) => Some((0, 1)),
        (3, _) => Some((-1, 2)),
        (6, _) => Some((1, 2)),
        _ => None,
    }
}

impl<S: Scalar> fmt::Debug for TrigPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self)
    }
}

impl<S: Scalar> fmt::Display for TrigPoly<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (k, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            if k.is_zero_freq() {
                write!(f, "({})", c)?;
            } else {
                let name = match k.phase {
                    Phase::Cos => "cos",
                    Phase::Sin => "sin",
                };
                write!(f, "({})*{}{:?}", c, name, k.freq)?;
            }
        }
        Ok(())
    }
}

/// Circle distance from 0 of a real `t` on `ℝ/ℤ`.
pub fn circle_distance(t: f64) -> f64 {
    let f = t - libm::floor(t);
    if f > 0.5 {
        1.0 - f
    } else {
        f
    }
}

/// Canonical keys with `|m|∞ ≤ cutoff` (first nonzero frequency positive), sorted.
pub fn keys_up_to(dim: usize, cutoff: i64) -> Vec<TrigKey> {
    let side = (2 * cutoff.max(0) + 1) as usize;
    let mut out = Vec::new();
    for k in 0..side.pow(dim as u32) {
        let mut rem = k;
        let mut freq = alloc::vec![0i64; dim];
        for f in freq.iter_mut() {
            *f = (rem % side) as i64 - cutoff;
            rem /= side;
        }
        match freq.iter().find(|&&m| m != 0) {
            None => out.push(TrigKey { freq, phase: Phase::Cos }),
            Some(&first) if first > 0 => {
                out.push(TrigKey { freq: freq.clone(), phase: Phase::Cos });
                out.push(TrigKey { freq, phase: Phase::Sin });
            }
            _ => {}
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Exact;
    use alloc::vec;

    fn sin_x() -> TrigPoly<Exact> {
        TrigPoly::monomial(&[1], Phase::Sin, Exact::one())
    }

    #[test]
    fn derivative_of_sine_and_constant() {
        let d = sin_x().partial(0).unwrap();
        assert_eq!(d, TrigPoly::monomial(&[1], Phase::Cos, Exact::tau()));
        let c = TrigPoly::constant(1, Exact::one()).partial(0).unwrap();
        assert!(c.is_zero());
        assert!(matches!(
            sin_x().partial(1),
            Err(Error::AxisOutOfRange { axis: 1, dimension: 1 })
        ));
    }

    #[test]
    fn sine_squared_half_angle() {
        let p = sin_x().mul(&sin_x()).unwrap();
        let expect = TrigPoly::from_terms(
            1,
            vec![
                (vec![0], Phase::Cos, Exact::from_ratio(1, 2)),
                (vec![2], Phase::Cos, Exact::from_ratio(-1, 2)),
            ],
        )
        .unwrap();
        assert_eq!(p, expect);
        assert!(p.mul(&TrigPoly::zero(1)).unwrap().is_zero());
    }

    #[test]
    fn canonical_form_folds_negative_frequencies() {
        let p = TrigPoly::from_terms(
            2,
            vec![
                (vec![-1, 1], Phase::Sin, 1.0),
                (vec![1, -1], Phase::Sin, 1.0),
                (vec![0, 0], Phase::Sin, 3.0),
                (vec![0, -2], Phase::Cos, 2.0),
            ],
        )
        .unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(
            p.coeff(&TrigKey { freq: vec![0, 2], phase: Phase::Cos }),
            Some(&2.0)
        );
    }

    #[test]
    fn evaluation_examples() {
        assert!((sin_x().eval(&[0.25]) - 1.0).abs() < 1e-15);
        let five = TrigPoly::constant(1, 5.0);
        assert_eq!(five.eval(&[0.3]), 5.0);
        let h = sin_x().mul(&sin_x()).unwrap();
        assert!((h.eval(&[0.125]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn exact_evaluation_at_niven_points() {
        let s = sin_x();
        assert_eq!(s.eval_exact(&[Rational64::new(1, 4)]), Some(Exact::one()));
        assert_eq!(s.eval_exact(&[Rational64::new(1, 2)]), Some(Exact::zero()));
        assert_eq!(s.eval_exact(&[Rational64::new(1, 8)]), None);
        let c = TrigPoly::monomial(&[1], Phase::Cos, Exact::one());
        assert_eq!(c.eval_exact(&[Rational64::new(1, 6)]), Some(Exact::from_ratio(1, 2)));
    }

    #[test]
    fn l2_examples() {
        let s = sin_x();
        let c = TrigPoly::monomial(&[1], Phase::Cos, Exact::one());
        assert_eq!(s.l2_inner(&s).unwrap(), Exact::from_ratio(1, 2));
        assert_eq!(s.l2_inner(&c).unwrap(), Exact::zero());
        let g = TrigPoly::constant(1, Exact::one()).sub(&c).unwrap();
        assert_eq!(g.l2_inner(&g).unwrap(), Exact::from_ratio(3, 2));
    }
}
