//! A smooth, non-analytic function on the circle whose jets at `1/n` vanish
//! below order `n` and equal `n!` at order `n`. No elliptic operator of
//! order `d ≤ n_max` annihilates it.

use alloc::vec::Vec;

use crate::bump::plateau_bump;
use crate::error::Error;
use crate::jet::{factorial, jet_arith, Expr, JetSeries};
use crate::trig::{circle_distance, TrigPoly};

pub const MIN_TERMS: usize = 2;
pub const MAX_TERMS: usize = 8;
/// Distance to a piece boundary treated as a kink.
pub const KINK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct BumpSpec {
    n_max: usize,
    centers: Vec<f64>,
    half_widths: Vec<f64>,
}

impl BumpSpec {
    pub fn new(n_max: usize) -> Result<Self, Error> {
        if !(MIN_TERMS..=MAX_TERMS).contains(&n_max) {
            return Err(Error::OutOfRange {
                what: "n_max",
                value: n_max as i64,
            });
        }
        let centers: Vec<f64> = (2..=n_max).map(|n| 1.0 / n as f64).collect();
        let half_widths = centers
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let gap = centers
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, &b)| circle_distance(a - b))
                    .fold(f64::INFINITY, f64::min);
                gap / 3.0
            })
            .collect();
        Ok(BumpSpec {
            n_max,
            centers,
            half_widths,
        })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `1/n` for `n = 2..=n_max`.
    pub fn center(&self, n: usize) -> f64 {
        self.centers[n - 2]
    }

    pub fn half_width(&self, n: usize) -> f64 {
        self.half_widths[n - 2]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
    pub expr: Expr,
}

/// `f(x) = Σ_n B((x − 1/n)/ε_n)·(x − 1/n)^n`, stored as smooth pieces.
#[derive(Clone, Debug, PartialEq)]
pub struct Counterexample {
    spec: BumpSpec,
    pieces: Vec<Piece>,
}

pub fn build_counterexample(n_max: usize) -> Result<Counterexample, Error> {
    let spec = BumpSpec::new(n_max)?;
    let mut pieces = Vec::new();
    for n in 2..=n_max {
        let a = spec.center(n);
        let eps = spec.half_width(n);
        let mono = Expr::var().affine(1.0, -a).pow(n as i32);
        let right = Expr::var().affine(-2.0 / eps, 2.0 + 2.0 * a / eps).smooth_step();
        let left = Expr::var().affine(2.0 / eps, 2.0 - 2.0 * a / eps).smooth_step();
        pieces.push(Piece {
            n,
            lo: a - eps,
            hi: a - eps / 2.0,
            expr: left.mul(mono.clone()),
        });
        pieces.push(Piece {
            n,
            lo: a - eps / 2.0,
            hi: a + eps / 2.0,
            expr: mono.clone(),
        });
        pieces.push(Piece {
            n,
            lo: a + eps / 2.0,
            hi: a + eps,
            expr: right.mul(mono),
        });
    }
    Ok(Counterexample { spec, pieces })
}

fn reduce(x: f64) -> f64 {
    x - libm::floor(x)
}

impl Counterexample {
    pub fn spec(&self) -> &BumpSpec {
        &self.spec
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Pointwise value.
    pub fn eval(&self, x: f64) -> f64 {
        let x = reduce(x);
        (2..=self.spec.n_max)
            .map(|n| {
                let a = self.spec.center(n);
                let d = x - a;
                plateau_bump(d / self.spec.half_width(n)) * libm::pow(d, n as f64)
            })
            .sum()
    }

    /// Taylor jet through `order` at `x`.
    pub fn jets_at(&self, x: f64, order: usize) -> Result<JetSeries, Error> {
        let x = reduce(x);
        let mut acc = JetSeries::constant(x, order, 0.0);
        for p in &self.pieces {
            if (x - p.lo).abs() <= KINK_TOL || (x - p.hi).abs() <= KINK_TOL {
                return Err(Error::KinkPoint { x });
            }
            if p.lo < x && x < p.hi {
                acc = &acc + &jet_arith(&p.expr, x, order)?;
            }
        }
        Ok(acc)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Refutation {
    pub order: usize,
    pub point: f64,
    /// `E f(1/d)`.
    pub value: f64,
    /// `a_d(1/d)`.
    pub leading: f64,
    /// `|value| ≥ |a_d(1/d)|·d!·(1 − 1e−9)`.
    pub certified: bool,
}

/// `E f(1/d)` for `E = Σ_{k ≤ d} a_k(x) ∂^k` with `coefficients = [a_0, …, a_d]`.
pub fn refute_operator(
    f: &Counterexample,
    coefficients: &[TrigPoly<f64>],
) -> Result<Refutation, Error> {
    let d = coefficients.len().saturating_sub(1);
    if !(MIN_TERMS..=f.spec.n_max).contains(&d) {
        return Err(Error::OutOfRange {
            what: "operator order",
            value: d as i64,
        });
    }
    let x = 1.0 / d as f64;
    let leading = coefficients[d].eval(&[x]);
    if leading.abs() < KINK_TOL {
        return Err(Error::VanishingLeadingCoefficient { at: x });
    }
    let jet = f.jets_at(x, d)?;
    let value = coefficients
        .iter()
        .enumerate()
        .map(|(k, a)| a.eval(&[x]) * jet.derivative(k))
        .sum::<f64>();
    let certified = value.abs() >= leading.abs() * factorial(d) * (1.0 - 1e-9);
    Ok(Refutation {
        order: d,
        point: x,
        value,
        leading,
        certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trig::Phase;
    use alloc::vec;

    #[test]
    fn supports_are_disjoint() {
        let s = BumpSpec::new(8).unwrap();
        for n in 2..=8 {
            for m in (n + 1)..=8 {
                let gap = circle_distance(s.center(n) - s.center(m));
                assert!(gap > s.half_width(n) + s.half_width(m));
            }
        }
        assert!((s.half_width(2) - 1.0 / 18.0).abs() < 1e-15);
    }

    #[test]
    fn jets_at_centers() {
        let f = build_counterexample(4).unwrap();
        assert_eq!(f.jets_at(0.5, 2).unwrap().derivatives(), vec![0.0, 0.0, 2.0]);
        let j = f.jets_at(1.0 / 3.0, 3).unwrap().derivatives();
        for (a, b) in j.iter().zip([0.0, 0.0, 0.0, 6.0]) {
            assert!((a - b).abs() < 1e-12);
        }
        let zero = f.jets_at(0.9, 3).unwrap();
        assert!(zero.coeffs().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn kink_points_are_rejected() {
        let f = build_counterexample(3).unwrap();
        let eps = f.spec().half_width(2);
        assert!(matches!(f.jets_at(0.5 + eps / 2.0, 1), Err(Error::KinkPoint { .. })));
        assert!(matches!(build_counterexample(9), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn refutations() {
        let f = build_counterexample(4).unwrap();
        let one = TrigPoly::constant(1, 1.0);
        let zero = TrigPoly::zero(1);
        let r = refute_operator(&f, &[one.clone(), zero.clone(), one.clone()]).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12 && r.certified);
        let r = refute_operator(&f, &[zero.clone(), zero.clone(), zero.clone(), one.clone()]).unwrap();
        assert!((r.value - 6.0).abs() < 1e-12);
        let lead = TrigPoly::constant(1, 2.0)
            .add(&TrigPoly::monomial(&[1], Phase::Cos, 1.0))
            .unwrap();
        let r = refute_operator(&f, &[zero.clone(), zero.clone(), lead]).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
        let vanishing = TrigPoly::monomial(&[1], Phase::Sin, 1.0);
        assert!(matches!(
            refute_operator(&f, &[one.clone(), zero.clone(), vanishing]),
            Err(Error::VanishingLeadingCoefficient { .. })
        ));
        assert!(matches!(
            refute_operator(&f, &vec![one; 6]),
            Err(Error::OutOfRange { .. })
        ));
    }
}
