//! Linear differential operators `Σ_I c_I(x) ∂^I` with constant, analytic
//! (trigonometric) or grid-sampled coefficients.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::funcspace::{Domain, DomainFn, FunctionSpace};
use crate::grid::{Grid, GridField};
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::trig::TrigPoly;

/// Default ellipticity margin.
pub const DEFAULT_SYMBOL_MARGIN: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq)]
pub enum Coefficient<S: Scalar> {
    Constant(S),
    Analytic(DomainFn<S>),
    Sampled(GridField),
}

impl<S: Scalar> Coefficient<S> {
    pub fn is_zero(&self) -> bool {
        match self {
            Coefficient::Constant(c) => c.is_zero(),
            Coefficient::Analytic(f) => f.is_zero(),
            Coefficient::Sampled(g) => g.is_identically_zero(),
        }
    }

    pub fn is_sampled(&self) -> bool {
        matches!(self, Coefficient::Sampled(_))
    }

    fn as_function(&self, domain: &Domain) -> Option<DomainFn<S>> {
        match self {
            Coefficient::Constant(c) => Some(DomainFn::from_parts(vec![
                TrigPoly::constant(domain.dimension(), c.clone());
                domain.components()
            ])),
            Coefficient::Analytic(f) => Some(f.clone()),
            Coefficient::Sampled(_) => None,
        }
    }

    /// Value at a point of a component. Sampled coefficients use the nearest
    /// grid point.
    pub fn eval(&self, component: usize, x: &[f64]) -> f64 {
        match self {
            Coefficient::Constant(c) => c.to_f64(),
            Coefficient::Analytic(f) => f.eval(component, x),
            Coefficient::Sampled(g) => g.get(g.grid().nearest_index(component, x)),
        }
    }

    /// Value at grid point `index`; sampled coefficients must live on `grid`.
    pub fn eval_at(&self, grid: &Grid, index: usize) -> Result<f64, Error> {
        Ok(match self {
            Coefficient::Sampled(g) => {
                g.check_same_grid(grid)?;
                g.get(index)
            }
            other => other.eval(grid.component_of(index), &grid.coords(index)),
        })
    }

    pub fn sample(&self, grid: &Grid) -> Result<GridField, Error> {
        let values = (0..grid.len())
            .map(|i| self.eval_at(grid, i))
            .collect::<Result<_, _>>()?;
        Ok(GridField::new(*grid, values))
    }

    fn sampled_grid(&self) -> Option<Grid> {
        match self {
            Coefficient::Sampled(g) => Some(*g.grid()),
            _ => None,
        }
    }

    fn combine(
        &self,
        other: &Self,
        domain: &Domain,
        exact: impl Fn(&S, &S) -> S,
        symbolic: impl Fn(&DomainFn<S>, &DomainFn<S>) -> Result<DomainFn<S>, Error>,
        float: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, Error> {
        if let (Coefficient::Constant(a), Coefficient::Constant(b)) = (self, other) {
            return Ok(Coefficient::Constant(exact(a, b)));
        }
        match (self.as_function(domain), other.as_function(domain)) {
            (Some(a), Some(b)) => Ok(Coefficient::Analytic(symbolic(&a, &b)?)),
            _ => {
                let grid = self
                    .sampled_grid()
                    .or_else(|| other.sampled_grid())
                    .expect("one side is sampled");
                let a = self.sample(&grid)?;
                let b = other.sample(&grid)?;
                let values = a
                    .values()
                    .iter()
                    .zip(b.values())
                    .map(|(x, y)| float(*x, *y))
                    .collect();
                Ok(Coefficient::Sampled(GridField::new(grid, values)))
            }
        }
    }

    pub fn add(&self, other: &Self, domain: &Domain) -> Result<Self, Error> {
        self.combine(
            other,
            domain,
            |a, b| a.clone() + b.clone(),
            DomainFn::add,
            |a, b| a + b,
        )
    }

    pub fn mul(&self, other: &Self, domain: &Domain) -> Result<Self, Error> {
        self.combine(
            other,
            domain,
            |a, b| a.clone() * b.clone(),
            DomainFn::mul,
            |a, b| a * b,
        )
    }

    pub fn neg(&self) -> Self {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(-c.clone()),
            Coefficient::Analytic(f) => Coefficient::Analytic(f.scale(&-S::one())),
            Coefficient::Sampled(g) => Coefficient::Sampled(GridField::new(
                *g.grid(),
                g.values().iter().map(|v| -v).collect(),
            )),
        }
    }

    pub fn to_f64(&self) -> Coefficient<f64> {
        match self {
            Coefficient::Constant(c) => Coefficient::Constant(c.to_f64()),
            Coefficient::Analytic(f) => Coefficient::Analytic(f.to_f64()),
            Coefficient::Sampled(g) => Coefficient::Sampled(g.clone()),
        }
    }
}

/// Result of applying an operator to a function.
#[derive(Clone, Debug, PartialEq)]
pub enum Applied<S: Scalar> {
    Analytic(DomainFn<S>),
    Sampled(GridField),
}

/// `Σ_I c_I(x) ∂^I` on a domain. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct DiffOp<S: Scalar> {
    domain: Domain,
    terms: BTreeMap<MultiIndex, Coefficient<S>>,
}

impl<S: Scalar> DiffOp<S> {
    pub fn zero(domain: Domain) -> Self {
        DiffOp {
            domain,
            terms: BTreeMap::new(),
        }
    }

    pub fn identity(domain: Domain) -> Self {
        let mut op = DiffOp::zero(domain);
        op.terms.insert(
            MultiIndex::zero(domain.dimension()),
            Coefficient::Constant(S::one()),
        );
        op
    }

    /// Builds from terms; repeated indices are summed.
    pub fn from_terms(
        domain: Domain,
        terms: impl IntoIterator<Item = (MultiIndex, Coefficient<S>)>,
    ) -> Result<Self, Error> {
        let mut op = DiffOp::zero(domain);
        for (idx, c) in terms {
            op.add_term(idx, c)?;
        }
        Ok(op)
    }

    fn check_coefficient(&self, c: &Coefficient<S>) -> Result<(), Error> {
        match c {
            Coefficient::Constant(_) => Ok(()),
            Coefficient::Analytic(f) => {
                if f.components() != self.domain.components() {
                    return Err(Error::ComponentMismatch {
                        expected: self.domain.components(),
                        found: f.components(),
                    });
                }
                if f.dim() != self.domain.dimension() {
                    return Err(Error::DimensionMismatch {
                        expected: self.domain.dimension(),
                        found: f.dim(),
                    });
                }
                Ok(())
            }
            Coefficient::Sampled(g) => {
                if g.grid().dimension() != self.domain.dimension()
                    || g.grid().components() != self.domain.components()
                {
                    return Err(Error::GridMismatch);
                }
                if let Some(other) = self.sampled_grid() {
                    g.check_same_grid(&other)?;
                }
                Ok(())
            }
        }
    }

    /// Adds `c ∂^I` to the operator.
    pub fn add_term(&mut self, index: MultiIndex, c: Coefficient<S>) -> Result<(), Error> {
        if index.dim() != self.domain.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dimension(),
                found: index.dim(),
            });
        }
        self.check_coefficient(&c)?;
        let merged = match self.terms.remove(&index) {
            Some(old) => old.add(&c, &self.domain)?,
            None => c,
        };
        if !merged.is_zero() {
            self.terms.insert(index, merged);
        }
        Ok(())
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient<S>)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, index: &MultiIndex) -> Option<&Coefficient<S>> {
        self.terms.get(index)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Largest `|I|` with a stored term (0 for the zero operator).
    pub fn order(&self) -> u32 {
        self.terms.keys().map(MultiIndex::order).max().unwrap_or(0)
    }

    pub fn leading_terms(&self) -> impl Iterator<Item = (&MultiIndex, &Coefficient<S>)> {
        let d = self.order();
        self.terms.iter().filter(move |(i, _)| i.order() == d)
    }

    /// Grid shared by all sampled coefficients, if any.
    pub fn sampled_grid(&self) -> Option<Grid> {
        self.terms.values().find_map(Coefficient::sampled_grid)
    }

    pub fn scale(&self, c: &S) -> Result<Self, Error> {
        let k = Coefficient::Constant(c.clone());
        let terms = self
            .terms
            .iter()
            .map(|(i, t)| Ok((i.clone(), t.mul(&k, &self.domain)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        DiffOp::from_terms(self.domain, terms)
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        if self.domain != other.domain {
            return Err(Error::ComponentMismatch {
                expected: self.domain.components(),
                found: other.domain.components(),
            });
        }
        let mut out = self.clone();
        for (i, c) in &other.terms {
            out.add_term(i.clone(), c.clone())?;
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        let neg = DiffOp {
            domain: other.domain,
            terms: other.terms.iter().map(|(i, c)| (i.clone(), c.neg())).collect(),
        };
        self.add(&neg)
    }

    /// Left multiplication by a function: `(g·P) f = g · (P f)`.
    pub fn mul_coefficient(&self, g: &Coefficient<S>) -> Result<Self, Error> {
        let terms = self
            .terms
            .iter()
            .map(|(i, c)| Ok((i.clone(), c.mul(g, &self.domain)?)))
            .collect::<Result<Vec<_>, Error>>()?;
        DiffOp::from_terms(self.domain, terms)
    }

    pub fn to_f64(&self) -> DiffOp<f64> {
        DiffOp {
            domain: self.domain,
            terms: self
                .terms
                .iter()
                .map(|(i, c)| (i.clone(), c.to_f64()))
                .collect(),
        }
    }

    fn check_fn(&self, f: &DomainFn<S>) -> Result<(), Error> {
        if f.components() != self.domain.components() {
            return Err(Error::ComponentMismatch {
                expected: self.domain.components(),
                found: f.components(),
            });
        }
        if f.dim() != self.domain.dimension() {
            return Err(Error::DimensionMismatch {
                expected: self.domain.dimension(),
                found: f.dim(),
            });
        }
        Ok(())
    }

    /// `P f`, symbolic unless some coefficient is sampled.
    pub fn apply(&self, f: &DomainFn<S>) -> Result<Applied<S>, Error> {
        self.check_fn(f)?;
        match self.sampled_grid() {
            Some(grid) => Ok(Applied::Sampled(self.apply_on_grid(f, &grid)?)),
            None => {
                let mut acc = DomainFn::zero(&self.domain);
                for (idx, c) in &self.terms {
                    let d = f.derivative(idx)?;
                    let cf = c.as_function(&self.domain).expect("not sampled");
                    let term = match c {
                        Coefficient::Constant(k) => d.scale(k),
                        _ => cf.mul(&d)?,
                    };
                    acc = acc.add(&term)?;
                }
                Ok(Applied::Analytic(acc))
            }
        }
    }

    /// Values `Σ_I c_I(x) ∂^I f(x)` at every grid point.
    pub fn apply_on_grid(&self, f: &DomainFn<S>, grid: &Grid) -> Result<GridField, Error> {
        self.check_fn(f)?;
        let derivs = self
            .terms
            .iter()
            .map(|(idx, c)| Ok((f.derivative(idx)?.to_f64(), c)))
            .collect::<Result<Vec<_>, Error>>()?;
        let mut values = Vec::with_capacity(grid.len());
        for i in 0..grid.len() {
            let comp = grid.component_of(i);
            let x = grid.coords(i);
            let mut v = 0.0;
            for (d, c) in &derivs {
                v += c.eval_at(grid, i)? * d.eval(comp, &x);
            }
            values.push(v);
        }
        Ok(GridField::new(*grid, values))
    }

    /// `(P f)(x)` at one point of one component.
    pub fn apply_at(&self, f: &DomainFn<S>, component: usize, x: &[f64]) -> Result<f64, Error> {
        self.check_fn(f)?;
        let mut v = 0.0;
        for (idx, c) in &self.terms {
            v += c.eval(component, x) * f.derivative(idx)?.eval(component, x);
        }
        Ok(v)
    }

    /// Real principal symbol `Σ_{|I|=d} c_I(x) ξ^I`.
    pub fn principal_symbol(&self, component: usize, x: &[f64], xi: &[f64]) -> f64 {
        self.leading_terms()
            .map(|(i, c)| c.eval(component, x) * i.monomial(xi))
            .sum()
    }

    /// Scans `|σ(x, ξ)|` over a grid and sampled unit directions.
    pub fn ellipticity_check(
        &self,
        grid: &Grid,
        sphere_samples: usize,
        margin: f64,
    ) -> Result<SymbolReport, Error> {
        let directions = sphere_directions(self.dimension(), sphere_samples.max(2));
        let leading: Vec<_> = self.leading_terms().collect();
        let mut report = SymbolReport {
            min_modulus: f64::INFINITY,
            argmin_point: 0,
            argmin_direction: vec![],
            points: grid.len(),
            directions: directions.len(),
            margin,
            passed: false,
        };
        for i in 0..grid.len() {
            let coeffs = leading
                .iter()
                .map(|(_, c)| c.eval_at(grid, i))
                .collect::<Result<Vec<_>, _>>()?;
            for xi in &directions {
                let s: f64 = leading
                    .iter()
                    .zip(&coeffs)
                    .map(|((idx, _), c)| c * idx.monomial(xi))
                    .sum();
                if s.abs() < report.min_modulus {
                    report.min_modulus = s.abs();
                    report.argmin_point = i;
                    report.argmin_direction = xi.clone();
                }
            }
        }
        report.passed = report.min_modulus > margin;
        Ok(report)
    }

    /// Largest `|P f_j(x)|` over the grid and the basis.
    pub fn residual_on_grid(
        &self,
        space: &FunctionSpace<S>,
        grid: &Grid,
    ) -> Result<Residual, Error> {
        let mut worst = Residual::default();
        for (j, f) in space.basis().iter().enumerate() {
            let field = self.apply_on_grid(f, grid)?;
            for (i, v) in field.values().iter().enumerate() {
                if v.abs() > worst.sup || (j == 0 && i == 0) {
                    worst = Residual {
                        sup: v.abs().max(worst.sup),
                        point: i,
                        function: j,
                    };
                }
            }
        }
        Ok(worst)
    }
}

/// Worst residual location.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Residual {
    pub sup: f64,
    /// Grid point index.
    pub point: usize,
    /// Basis position (0-based).
    pub function: usize,
}

/// Outcome of a sampled ellipticity scan.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SymbolReport {
    pub min_modulus: f64,
    /// Grid index of the minimizing point.
    pub argmin_point: usize,
    pub argmin_direction: Vec<f64>,
    pub points: usize,
    pub directions: usize,
    pub margin: f64,
    pub passed: bool,
}

/// Unit directions: `±1` on the line, equally spaced angles on the circle,
/// a Fibonacci lattice on the sphere.
pub fn sphere_directions(dimension: usize, samples: usize) -> Vec<Vec<f64>> {
    match dimension {
        1 => vec![vec![-1.0], vec![1.0]],
        2 => (0..samples)
            .map(|i| {
                let t = core::f64::consts::TAU * i as f64 / samples as f64;
                vec![libm::cos(t), libm::sin(t)]
            })
            .collect(),
        _ => {
            let golden = core::f64::consts::PI * (3.0 - libm::sqrt(5.0));
            (0..samples)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / samples as f64;
                    let r = libm::sqrt(1.0 - z * z);
                    let phi = golden * i as f64;
                    vec![r * libm::cos(phi), r * libm::sin(phi), z]
                })
                .collect()
        }
    }
}

/// `(Σ_i ∂_i²)^p` expanded by the multinomial theorem.
pub fn laplacian_power<S: Scalar>(domain: Domain, p: u32) -> Result<DiffOp<S>, Error> {
    if p < 1 {
        return Err(Error::OutOfRange {
            what: "Laplacian power",
            value: p as i64,
        });
    }
    let n = domain.dimension();
    let fact = |k: u32| (1..=k as u64).product::<u64>();
    let terms = MultiIndex::of_order(n, p).into_iter().map(|alpha| {
        let denom: u64 = alpha.entries().iter().map(|&a| fact(a)).product();
        let doubled = MultiIndex::new(alpha.entries().iter().map(|a| 2 * a).collect());
        (
            doubled,
            Coefficient::Constant(S::from_i64((fact(p) / denom) as i64)),
        )
    });
    DiffOp::from_terms(domain, terms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Exact;
    use crate::trig::Phase;

    fn mi(v: &[u32]) -> MultiIndex {
        MultiIndex::new(v.to_vec())
    }

    #[test]
    fn harmonic_oscillator_kills_sine() {
        let d = Domain::torus(1);
        let tau = Exact::tau();
        let op = DiffOp::from_terms(
            d,
            [
                (mi(&[2]), Coefficient::Constant(Exact::one())),
                (mi(&[0]), Coefficient::Constant(tau.clone() * tau)),
            ],
        )
        .unwrap();
        let f = DomainFn::single(TrigPoly::monomial(&[1], Phase::Sin, Exact::one()));
        match op.apply(&f).unwrap() {
            Applied::Analytic(g) => assert!(g.is_zero()),
            Applied::Sampled(_) => panic!("constant operator gave sampled output"),
        }
    }

    #[test]
    fn mixed_derivative_of_product() {
        let d = Domain::torus(2);
        let op = DiffOp::from_terms(d, [(mi(&[1, 1]), Coefficient::Constant(Exact::one()))]).unwrap();
        let s1s2 = TrigPoly::monomial(&[1, 0], Phase::Sin, Exact::one())
            .mul(&TrigPoly::monomial(&[0, 1], Phase::Sin, Exact::one()))
            .unwrap();
        let c1c2 = TrigPoly::monomial(&[1, 0], Phase::Cos, Exact::one())
            .mul(&TrigPoly::monomial(&[0, 1], Phase::Cos, Exact::one()))
            .unwrap();
        let tau = Exact::tau();
        let expect = DomainFn::single(c1c2.scale(&(tau.clone() * tau)));
        assert_eq!(op.apply(&DomainFn::single(s1s2)).unwrap(), Applied::Analytic(expect));
    }

    #[test]
    fn laplacian_expansions() {
        let two = Domain::torus(2);
        let sq: DiffOp<Exact> = laplacian_power(two, 2).unwrap();
        let got: Vec<_> = sq.terms().map(|(i, c)| (i.clone(), c.clone())).collect();
        assert_eq!(
            got,
            vec![
                (mi(&[4, 0]), Coefficient::Constant(Exact::one())),
                (mi(&[2, 2]), Coefficient::Constant(Exact::from_integer(2))),
                (mi(&[0, 4]), Coefficient::Constant(Exact::one())),
            ]
        );
        assert!(laplacian_power::<f64>(two, 0).is_err());
        let grid = Grid::new(&two, 32).unwrap();
        let rep = sq.to_f64().ellipticity_check(&grid, 16, 1e-6).unwrap();
        assert!(rep.passed);
        assert!((rep.min_modulus - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symbol_with_variable_coefficient() {
        let d = Domain::torus(2);
        let c = TrigPoly::constant(2, 2.0)
            .add(&TrigPoly::monomial(&[1, 0], Phase::Cos, 1.0))
            .unwrap();
        let op = DiffOp::from_terms(
            d,
            [
                (mi(&[2, 0]), Coefficient::Analytic(DomainFn::single(c.clone()))),
                (mi(&[0, 2]), Coefficient::Analytic(DomainFn::single(c))),
            ],
        )
        .unwrap();
        assert!((op.principal_symbol(0, &[0.0, 0.3], &[0.0, 1.0]) - 3.0).abs() < 1e-15);
    }

    #[test]
    fn vanishing_leading_coefficient_fails_scan() {
        let d = Domain::torus(1);
        let op = DiffOp::from_terms(
            d,
            [(
                mi(&[2]),
                Coefficient::Analytic(DomainFn::single(TrigPoly::monomial(&[1], Phase::Sin, 1.0))),
            )],
        )
        .unwrap();
        let rep = op.ellipticity_check(&Grid::new(&d, 64).unwrap(), 2, 1e-6).unwrap();
        assert!(!rep.passed);
        assert_eq!(rep.min_modulus, 0.0);
        assert_eq!(rep.argmin_point, 0);
    }

    #[test]
    fn sampled_grids_must_agree() {
        let d = Domain::torus(1);
        let g1 = Grid::new(&d, 8).unwrap();
        let g2 = Grid::new(&d, 16).unwrap();
        let mut op: DiffOp<f64> = DiffOp::identity(d);
        op.add_term(mi(&[1]), Coefficient::Sampled(GridField::constant(g1, 1.0)))
            .unwrap();
        assert_eq!(
            op.add_term(mi(&[0]), Coefficient::Sampled(GridField::constant(g2, 1.0))),
            Err(Error::GridMismatch)
        );
    }
}
