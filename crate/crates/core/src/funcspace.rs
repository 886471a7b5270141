//! Domains (disjoint unions of flat tori), functions on them, and the
//! finite-dimensional function spaces the constructions act on.

use alloc::format;
use alloc::vec::Vec;

use num_rational::Rational64;

use crate::error::Error;
use crate::linalg::Mat;
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::trig::TrigPoly;

/// Disjoint union of `components` copies of the unit torus `Tⁿ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Domain {
    dimension: usize,
    components: usize,
}

impl Domain {
    pub fn new(dimension: usize, components: usize) -> Result<Self, Error> {
        if !(1..=3).contains(&dimension) {
            return Err(Error::InvalidDomain(format!(
                "torus dimension {} (supported: 1 to 3)",
                dimension
            )));
        }
        if components == 0 {
            return Err(Error::InvalidDomain("no components".into()));
        }
        Ok(Domain {
            dimension,
            components,
        })
    }

    pub fn torus(dimension: usize) -> Self {
        Domain::new(dimension, 1).expect("torus dimension in 1..=3")
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn components(&self) -> usize {
        self.components
    }
}

/// A function on a [`Domain`]: one trigonometric polynomial per component.
#[derive(Clone, Debug, PartialEq)]
pub struct DomainFn<S: Scalar> {
    parts: Vec<TrigPoly<S>>,
}

impl<S: Scalar> DomainFn<S> {
    pub fn zero(domain: &Domain) -> Self {
        DomainFn {
            parts: (0..domain.components)
                .map(|_| TrigPoly::zero(domain.dimension))
                .collect(),
        }
    }

    /// Single-component function.
    pub fn single(p: TrigPoly<S>) -> Self {
        DomainFn {
            parts: alloc::vec![p],
        }
    }

    pub fn from_parts(parts: Vec<TrigPoly<S>>) -> Self {
        DomainFn { parts }
    }

    /// `p` on component `c`, zero elsewhere.
    pub fn on_component(domain: &Domain, c: usize, p: TrigPoly<S>) -> Self {
        let mut f = DomainFn::zero(domain);
        f.parts[c] = p;
        f
    }

    pub fn parts(&self) -> &[TrigPoly<S>] {
        &self.parts
    }

    pub fn part(&self, component: usize) -> &TrigPoly<S> {
        &self.parts[component]
    }

    pub fn components(&self) -> usize {
        self.parts.len()
    }

    pub fn dim(&self) -> usize {
        self.parts.first().map_or(0, TrigPoly::dim)
    }

    pub fn is_zero(&self) -> bool {
        self.parts.iter().all(TrigPoly::is_zero)
    }

    pub fn term_count(&self) -> usize {
        self.parts.iter().map(TrigPoly::len).sum()
    }

    fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(&TrigPoly<S>, &TrigPoly<S>) -> Result<TrigPoly<S>, Error>,
    ) -> Result<Self, Error> {
        if self.parts.len() != other.parts.len() {
            return Err(Error::ComponentMismatch {
                expected: self.parts.len(),
                found: other.parts.len(),
            });
        }
        let parts = self
            .parts
            .iter()
            .zip(&other.parts)
            .map(|(a, b)| f(a, b))
            .collect::<Result<_, _>>()?;
        Ok(DomainFn { parts })
    }

    pub fn add(&self, other: &Self) -> Result<Self, Error> {
        self.zip_with(other, TrigPoly::add)
    }

    pub fn sub(&self, other: &Self) -> Result<Self, Error> {
        self.zip_with(other, TrigPoly::sub)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, Error> {
        self.zip_with(other, TrigPoly::mul)
    }

    pub fn scale(&self, c: &S) -> Self {
        DomainFn {
            parts: self.parts.iter().map(|p| p.scale(c)).collect(),
        }
    }

    pub fn derivative(&self, index: &MultiIndex) -> Result<Self, Error> {
        let parts = self
            .parts
            .iter()
            .map(|p| p.derivative(index))
            .collect::<Result<_, _>>()?;
        Ok(DomainFn { parts })
    }

    pub fn derivative_unscaled(&self, index: &MultiIndex) -> Result<Self, Error> {
        let parts = self
            .parts
            .iter()
            .map(|p| p.derivative_unscaled(index))
            .collect::<Result<_, _>>()?;
        Ok(DomainFn { parts })
    }

    pub fn eval(&self, component: usize, x: &[f64]) -> f64 {
        self.parts[component].eval(x)
    }

    pub fn eval_exact(&self, component: usize, x: &[Rational64]) -> Option<S> {
        self.parts[component].eval_exact(x)
    }

    /// L² pairing summed over components.
    pub fn l2_inner(&self, other: &Self) -> Result<S, Error> {
        if self.parts.len() != other.parts.len() {
            return Err(Error::ComponentMismatch {
                expected: self.parts.len(),
                found: other.parts.len(),
            });
        }
        self.parts
            .iter()
            .zip(&other.parts)
            .try_fold(S::zero(), |acc, (a, b)| Ok(acc + a.l2_inner(b)?))
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> DomainFn<T> {
        DomainFn {
            parts: self.parts.iter().map(|p| p.map_coeffs(&f)).collect(),
        }
    }

    pub fn to_f64(&self) -> DomainFn<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn recanonicalize(&self) -> Self {
        DomainFn {
            parts: self.parts.iter().map(TrigPoly::recanonicalize).collect(),
        }
    }
}

/// Relative squared-norm loss below which a float basis element counts as dependent.
const FLOAT_DEPENDENCE_TOL: f64 = 1e-20;

/// Ordered basis `f_1, …, f_N` of a space of functions on a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionSpace<S: Scalar> {
    domain: Domain,
    basis: Vec<DomainFn<S>>,
}

impl<S: Scalar> FunctionSpace<S> {
    /// Validates shapes and linear independence.
    pub fn new(domain: Domain, basis: Vec<DomainFn<S>>) -> Result<Self, Error> {
        if basis.is_empty() {
            return Err(Error::EmptyBasis);
        }
        for f in &basis {
            if f.components() != domain.components {
                return Err(Error::ComponentMismatch {
                    expected: domain.components,
                    found: f.components(),
                });
            }
            for p in f.parts() {
                if p.dim() != domain.dimension {
                    return Err(Error::DimensionMismatch {
                        expected: domain.dimension,
                        found: p.dim(),
                    });
                }
            }
        }
        let space = FunctionSpace { domain, basis };
        space.orthogonalize()?;
        Ok(space)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn basis(&self) -> &[DomainFn<S>] {
        &self.basis
    }

    /// `N = dim S`.
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Gram matrix of an arbitrary pairing.
    pub fn gram_with(
        &self,
        pairing: impl Fn(&DomainFn<S>, &DomainFn<S>) -> Result<S, Error>,
    ) -> Result<Mat<S>, Error> {
        let n = self.len();
        let mut g = Mat::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = pairing(&self.basis[i], &self.basis[j])?;
                g[(j, i)] = v.clone();
                g[(i, j)] = v;
            }
        }
        Ok(g)
    }

    pub fn l2_gram(&self) -> Mat<S> {
        self.gram_with(DomainFn::l2_inner)
            .expect("basis shapes validated at construction")
    }

    /// Gram–Schmidt without normalization; returns the orthogonal basis and
    /// the squared L² norms. Rejects the first element in the span of its
    /// predecessors.
    pub fn orthogonalize(&self) -> Result<(Vec<DomainFn<S>>, Vec<S>), Error> {
        let mut ortho: Vec<DomainFn<S>> = Vec::with_capacity(self.len());
        let mut norms: Vec<S> = Vec::with_capacity(self.len());
        for (i, f) in self.basis.iter().enumerate() {
            let mut r = f.clone();
            let passes = if S::EXACT { 1 } else { 2 };
            for _ in 0..passes {
                for (q, nq) in ortho.iter().zip(&norms) {
                    let proj = r.l2_inner(q)? / nq.clone();
                    r = r.sub(&q.scale(&proj))?;
                }
            }
            let nr = r.l2_inner(&r)?;
            let dependent = if S::EXACT {
                nr.is_zero()
            } else {
                let nf = f.l2_inner(f)?.to_f64();
                nf == 0.0 || nr.to_f64() <= FLOAT_DEPENDENCE_TOL * nf
            };
            if dependent {
                return Err(Error::DependentBasis { position: i + 1 });
            }
            ortho.push(r);
            norms.push(nr);
        }
        Ok((ortho, norms))
    }

    /// L²-orthonormal basis with the same span. In exact mode this succeeds
    /// only when every norm is a rational square.
    pub fn orthonormalize(&self) -> Result<FunctionSpace<S>, Error> {
        let (ortho, norms) = self.orthogonalize()?;
        let basis = ortho
            .iter()
            .zip(&norms)
            .map(|(q, n)| {
                let s = n.sqrt().ok_or_else(|| {
                    Error::Inconclusive(format!("norm^2 = {} has no exact square root", n))
                })?;
                Ok(q.scale(&(S::one() / s)))
            })
            .collect::<Result<_, Error>>()?;
        Ok(FunctionSpace {
            domain: self.domain,
            basis,
        })
    }

    /// Float copy with an L²-orthonormal basis; the working frame for
    /// tolerance-based decisions.
    pub fn orthonormal_f64(&self) -> Result<FunctionSpace<f64>, Error> {
        self.to_f64().orthonormalize()
    }

    /// New basis `g_j = Σ_i m_{ij} f_i`.
    pub fn change_basis(&self, m: &Mat<S>) -> Result<FunctionSpace<S>, Error> {
        if m.rows() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: m.rows(),
            });
        }
        let basis = (0..m.cols())
            .map(|j| {
                (0..m.rows()).try_fold(DomainFn::zero(&self.domain), |acc, i| {
                    acc.add(&self.basis[i].scale(&m[(i, j)]))
                })
            })
            .collect::<Result<_, _>>()?;
        FunctionSpace::new(self.domain, basis)
    }

    pub fn map_coeffs<T: Scalar>(&self, f: impl Fn(&S) -> T) -> FunctionSpace<T> {
        FunctionSpace {
            domain: self.domain,
            basis: self.basis.iter().map(|b| b.map_coeffs(&f)).collect(),
        }
    }

    pub fn to_f64(&self) -> FunctionSpace<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    /// Largest frequency entry over the basis.
    pub fn max_freq(&self) -> i64 {
        self.basis
            .iter()
            .flat_map(|f| f.parts().iter().map(TrigPoly::max_freq))
            .max()
            .unwrap_or(0)
    }
}
