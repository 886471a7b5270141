//! Exact scalars: rational functions in the transcendental `τ = 2π`.
//!
//! Derivatives of trigonometric polynomials with rational coefficients pick up
//! integer multiples of `2π`. Keeping `τ` as a formal symbol gives a field
//! `ℚ(τ)` in which every quantity the engine manipulates in exact mode lives.
//! Because `2π` is transcendental, a polynomial identity in `τ` holds at
//! `τ = 2π` iff it holds formally, so ranks and zero tests over `ℚ(τ)` are
//! faithful to the real numbers.

use alloc::vec::Vec;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// `2π` as a float, the value at which `τ` is evaluated.
pub const TAU_F64: f64 = core::f64::consts::TAU;

/// Polynomial in `τ` with rational coefficients, ascending powers, no trailing zeros.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct TauPoly {
    coeffs: Vec<BigRational>,
}

impl TauPoly {
    pub fn zero() -> Self {
        TauPoly { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        let mut p = TauPoly { coeffs: alloc::vec![c] };
        p.trim();
        p
    }

    /// `c · τ^power`.
    pub fn monomial(c: BigRational, power: usize) -> Self {
        let mut coeffs = alloc::vec![BigRational::zero(); power + 1];
        coeffs[power] = c;
        let mut p = TauPoly { coeffs };
        p.trim();
        p
    }

    pub fn from_coeffs(coeffs: Vec<BigRational>) -> Self {
        let mut p = TauPoly { coeffs };
        p.trim();
        p
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigRational> {
        self.coeffs.last()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn eval_f64(&self, tau: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * tau + c.to_f64().unwrap_or(f64::NAN))
    }

    fn scale(&self, c: &BigRational) -> Self {
        if c.is_zero() {
            return TauPoly::zero();
        }
        TauPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Make the leading coefficient one; returns the factor divided out.
    fn make_monic(&mut self) -> BigRational {
        match self.leading().cloned() {
            Some(lead) if !lead.is_one() => {
                let inv = lead.recip();
                for c in &mut self.coeffs {
                    *c = &*c * &inv;
                }
                lead
            }
            _ => BigRational::one(),
        }
    }

    /// Euclidean division; panics on a zero divisor.
    pub fn div_rem(&self, divisor: &TauPoly) -> (TauPoly, TauPoly) {
        let d_deg = divisor.degree().expect("division by the zero polynomial");
        let d_lead = divisor.leading().unwrap().clone();
        let mut rem = self.clone();
        let mut quot = alloc::vec![BigRational::zero(); self.coeffs.len().saturating_sub(d_deg)];
        while let Some(r_deg) = rem.degree() {
            if r_deg < d_deg {
                break;
            }
            let shift = r_deg - d_deg;
            let factor = rem.leading().unwrap() / &d_lead;
            for (i, dc) in divisor.coeffs.iter().enumerate() {
                rem.coeffs[i + shift] = &rem.coeffs[i + shift] - &factor * dc;
            }
            quot[shift] = factor;
            rem.trim();
        }
        (TauPoly::from_coeffs(quot), rem)
    }

    /// Monic greatest common divisor.
    pub fn gcd(a: &TauPoly, b: &TauPoly) -> TauPoly {
        let mut x = a.clone();
        let mut y = b.clone();
        while !y.is_zero() {
            let (_, r) = x.div_rem(&y);
            x = y;
            y = r;
        }
        x.make_monic();
        x
    }
}

impl Add for &TauPoly {
    type Output = TauPoly;
    fn add(self, rhs: &TauPoly) -> TauPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let coeffs = (0..n)
            .map(|i| match (self.coeffs.get(i), rhs.coeffs.get(i)) {
                (Some(a), Some(b)) => a + b,
                (Some(a), None) => a.clone(),
                (None, Some(b)) => b.clone(),
                (None, None) => unreachable!(),
            })
            .collect();
        TauPoly::from_coeffs(coeffs)
    }
}

impl Neg for &TauPoly {
    type Output = TauPoly;
    fn neg(self) -> TauPoly {
        TauPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl Sub for &TauPoly {
    type Output = TauPoly;
    fn sub(self, rhs: &TauPoly) -> TauPoly {
        self + &(-rhs)
    }
}

impl Mul for &TauPoly {
    type Output = TauPoly;
    fn mul(self, rhs: &TauPoly) -> TauPoly {
        if self.is_zero() || rhs.is_zero() {
            return TauPoly::zero();
        }
        let mut coeffs = alloc::vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] = &coeffs[i + j] + a * b;
            }
        }
        TauPoly::from_coeffs(coeffs)
    }
}

/// Element of `ℚ(τ)` kept in lowest terms with a monic denominator.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Exact {
    num: TauPoly,
    den: TauPoly,
}

impl Exact {
    pub fn zero() -> Self {
        Exact {
            num: TauPoly::zero(),
            den: TauPoly::constant(BigRational::one()),
        }
    }

    pub fn one() -> Self {
        Exact::from_rational(BigRational::one())
    }

    pub fn tau() -> Self {
        Exact::from_poly(TauPoly::monomial(BigRational::one(), 1))
    }

    pub fn from_rational(r: BigRational) -> Self {
        Exact::from_poly(TauPoly::constant(r))
    }

    pub fn from_integer(v: i64) -> Self {
        Exact::from_rational(BigRational::from_integer(BigInt::from(v)))
    }

    pub fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Exact::from_rational(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    /// The exact binary value of a finite float.
    pub fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v).map(Exact::from_rational)
    }

    pub fn from_poly(num: TauPoly) -> Self {
        Exact {
            num,
            den: TauPoly::constant(BigRational::one()),
        }
    }

    /// `num / den`, reduced. Panics if `den` is zero.
    pub fn from_parts(num: TauPoly, den: TauPoly) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut e = Exact { num, den };
        e.normalize();
        e
    }

    fn normalize(&mut self) {
        if self.num.is_zero() {
            self.den = TauPoly::constant(BigRational::one());
            return;
        }
        if !self.den.is_constant() {
            let g = TauPoly::gcd(&self.num, &self.den);
            if !g.is_constant() {
                self.num = self.num.div_rem(&g).0;
                self.den = self.den.div_rem(&g).0;
            }
        }
        let lead = self.den.make_monic();
        if !lead.is_one() {
            self.num = self.num.scale(&lead.recip());
        }
    }

    pub fn numerator(&self) -> &TauPoly {
        &self.num
    }

    pub fn denominator(&self) -> &TauPoly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// The rational value when free of `τ`.
    pub fn as_rational(&self) -> Option<BigRational> {
        if self.num.is_constant() && self.den.is_constant() {
            Some(self.num.coeffs.first().cloned().unwrap_or_else(BigRational::zero))
        } else {
            None
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.num.eval_f64(TAU_F64) / self.den.eval_f64(TAU_F64)
    }

    pub fn recip(&self) -> Option<Self> {
        if self.is_zero() {
            None
        } else {
            Some(Exact::from_parts(self.den.clone(), self.num.clone()))
        }
    }

    /// Exact square root of a nonnegative rational constant, when it exists.
    pub fn sqrt(&self) -> Option<Self> {
        let r = self.as_rational()?;
        if r.is_negative() {
            return None;
        }
        let n = r.numer().sqrt();
        let d = r.denom().sqrt();
        if &(&n * &n) == r.numer() && &(&d * &d) == r.denom() {
            Some(Exact::from_rational(BigRational::new(n, d)))
        } else {
            None
        }
    }

    /// Ordering of the real values at `τ = 2π`; exact when the difference is a rational.
    pub fn cmp_value(&self, other: &Exact) -> Ordering {
        let diff = self - other;
        if diff.is_zero() {
            return Ordering::Equal;
        }
        if let Some(r) = diff.as_rational() {
            return if r.is_positive() { Ordering::Greater } else { Ordering::Less };
        }
        diff.to_f64().partial_cmp(&0.0).unwrap_or(Ordering::Equal)
    }
}

impl Default for Exact {
    fn default() -> Self {
        Exact::zero()
    }
}

impl Add for &Exact {
    type Output = Exact;
    fn add(self, rhs: &Exact) -> Exact {
        if self.den == rhs.den {
            return Exact::from_parts(&self.num + &rhs.num, self.den.clone());
        }
        Exact::from_parts(
            &(&self.num * &rhs.den) + &(&rhs.num * &self.den),
            &self.den * &rhs.den,
        )
    }
}

impl Sub for &Exact {
    type Output = Exact;
    fn sub(self, rhs: &Exact) -> Exact {
        self + &(-rhs)
    }
}

impl Neg for &Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        Exact {
            num: -&self.num,
            den: self.den.clone(),
        }
    }
}

impl Mul for &Exact {
    type Output = Exact;
    fn mul(self, rhs: &Exact) -> Exact {
        if self.is_zero() || rhs.is_zero() {
            return Exact::zero();
        }
        Exact::from_parts(&self.num * &rhs.num, &self.den * &rhs.den)
    }
}

impl Div for &Exact {
    type Output = Exact;
    fn div(self, rhs: &Exact) -> Exact {
        self * &rhs.recip().expect("division by zero")
    }
}

macro_rules! forward_owned {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr for Exact {
            type Output = Exact;
            fn $m(self, rhs: Exact) -> Exact {
                (&self).$m(&rhs)
            }
        }
    )*};
}
forward_owned!(Add add, Sub sub, Mul mul, Div div);

impl Neg for Exact {
    type Output = Exact;
    fn neg(self) -> Exact {
        -&self
    }
}

fn fmt_poly(p: &TauPoly, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    if p.is_zero() {
        return write!(f, "0");
    }
    let mut first = true;
    for (power, c) in p.coeffs.iter().enumerate().rev() {
        if c.is_zero() {
            continue;
        }
        let neg = c.is_negative();
        let mag = c.abs();
        if first {
            if neg {
                write!(f, "-")?;
            }
        } else {
            write!(f, " {} ", if neg { '-' } else { '+' })?;
        }
        first = false;
        match power {
            0 => write!(f, "{}", mag)?,
            _ => {
                if !mag.is_one() {
                    write!(f, "{}*", mag)?;
                }
                if power == 1 {
                    write!(f, "tau")?;
                } else {
                    write!(f, "tau^{}", power)?;
                }
            }
        }
    }
    Ok(())
}

impl fmt::Display for TauPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_poly(self, f)
    }
}

impl fmt::Display for Exact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let den_one = self.den.is_constant();
        let multi = self.num.coeffs.iter().filter(|c| !c.is_zero()).count() > 1;
        if den_one {
            return fmt_poly(&self.num, f);
        }
        if multi {
            write!(f, "(")?;
            fmt_poly(&self.num, f)?;
            write!(f, ")")?;
        } else {
            fmt_poly(&self.num, f)?;
        }
        write!(f, "/(")?;
        fmt_poly(&self.den, f)?;
        write!(f, ")")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tau_arithmetic_reduces() {
        let t = Exact::tau();
        let t2 = &t * &t;
        let q = &t2 / &t;
        assert_eq!(q, t);
        let one_plus = &Exact::one() + &t;
        let r = &(&one_plus * &one_plus) / &one_plus;
        assert_eq!(r, one_plus);
        assert!((t2.to_f64() - TAU_F64 * TAU_F64).abs() < 1e-12);
    }

    #[test]
    fn sqrt_of_rational_squares() {
        assert_eq!(Exact::from_ratio(9, 4).sqrt(), Some(Exact::from_ratio(3, 2)));
        assert_eq!(Exact::from_ratio(1, 2).sqrt(), None);
        assert_eq!(Exact::tau().sqrt(), None);
    }

    #[test]
    fn display_is_readable() {
        let t = Exact::tau();
        let v = &(&(&t * &t) * &t) - &Exact::from_ratio(1, 2);
        assert_eq!(alloc::format!("{}", v), "tau^3 - 1/2");
        let w = &Exact::one() / &t;
        assert_eq!(alloc::format!("{}", w), "1/(tau)");
    }

    #[test]
    fn comparison_uses_real_value() {
        let t = Exact::tau();
        assert_eq!(t.cmp_value(&Exact::from_integer(6)), Ordering::Greater);
        assert_eq!(t.cmp_value(&Exact::from_integer(7)), Ordering::Less);
    }
}
