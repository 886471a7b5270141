//! Sobolev inner products on tori, the chart-cover variant on the circle,
//! norm-equivalence constants of finite-dimensional spaces, and the growth
//! of Sobolev-to-L² ratios along Fourier modes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::bump::plateau_bump_jet;
use crate::error::Error;
use crate::funcspace::{DomainFn, FunctionSpace};
use crate::jet::JetSeries;
use crate::linalg::{self, Mat};
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::trig::{circle_distance, TrigPoly};

/// Default quadrature resolution for chart covers.
pub const DEFAULT_QUADRATURE: usize = 2048;
/// Smallest accepted quadrature resolution.
pub const MIN_QUADRATURE: usize = 64;

/// `w_k(m) = Σ_{j≤k} Σ_{|I|=j} (2π)^{2j} m^{2I}`.
pub fn sobolev_weight<S: Scalar>(k: u32, freq: &[i64]) -> S {
    let tau2 = S::tau() * S::tau();
    let mut total = S::zero();
    let mut tau_pow = S::one();
    for j in 0..=k {
        let mut level = S::zero();
        for idx in MultiIndex::of_order(freq.len(), j) {
            let mono = idx
                .entries()
                .iter()
                .zip(freq)
                .fold(S::one(), |acc, (&e, &m)| acc * S::from_i64(m.pow(2 * e)));
            level = level + mono;
        }
        total = total + tau_pow.clone() * level;
        tau_pow = tau_pow * tau2.clone();
    }
    total
}

/// `Σ_{|I|≤k} ⟨∂^I f, ∂^I g⟩_{L²}` on the unit torus.
pub fn sobolev_inner<S: Scalar>(f: &TrigPoly<S>, g: &TrigPoly<S>, k: u32) -> Result<S, Error> {
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch {
            expected: f.dim(),
            found: g.dim(),
        });
    }
    let mut acc = S::zero();
    for (key, c) in f.terms() {
        if let Some(d) = g.coeff(key) {
            let (wn, wd) = key.l2_weight();
            acc = acc + c.clone() * d.clone() * S::from_ratio(wn, wd) * sobolev_weight(k, &key.freq);
        }
    }
    Ok(acc)
}

/// Sobolev pairing summed over the components of a domain.
pub fn sobolev_inner_fn<S: Scalar>(f: &DomainFn<S>, g: &DomainFn<S>, k: u32) -> Result<S, Error> {
    if f.components() != g.components() {
        return Err(Error::ComponentMismatch {
            expected: f.components(),
            found: g.components(),
        });
    }
    f.parts()
        .iter()
        .zip(g.parts())
        .try_fold(S::zero(), |acc, (a, b)| Ok(acc + sobolev_inner(a, b, k)?))
}

/// Gram matrix `(G_k)_{ij} = ⟨f_i, f_j⟩_{2,k}`.
pub fn sobolev_gram<S: Scalar>(space: &FunctionSpace<S>, k: u32) -> Result<Mat<S>, Error> {
    space.gram_with(|f, g| sobolev_inner_fn(f, g, k))
}

/// An arc `(center - radius, center + radius)` of the circle. A radius of
/// at least 1/2 denotes the whole circle.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Arc {
    pub center: f64,
    pub radius: f64,
}

impl Arc {
    pub fn is_whole(&self) -> bool {
        self.radius >= 0.5
    }

    /// Jet at `x` of the raw plateau bump attached to this arc.
    fn bump_jet(&self, x: f64, order: usize) -> JetSeries {
        if self.is_whole() {
            return JetSeries::constant(x, order, 1.0);
        }
        let d = circle_distance(x - self.center);
        plateau_bump_jet(&JetSeries::variable(d, order).scale(1.0 / self.radius))
    }
}

/// Arc cover of the circle with the normalized bump partition of unity.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChartCover {
    arcs: Vec<Arc>,
    resolution: usize,
}

impl ChartCover {
    /// Checks radii, quadrature resolution, and that the bumps cover every
    /// quadrature node.
    pub fn new(arcs: Vec<Arc>, resolution: usize) -> Result<Self, Error> {
        if resolution < MIN_QUADRATURE {
            return Err(Error::QuadratureTooCoarse { resolution });
        }
        if arcs.is_empty() {
            return Err(Error::InvalidCover("no arcs".into()));
        }
        if let Some(a) = arcs.iter().find(|a| !(a.radius > 0.0) || !a.center.is_finite()) {
            return Err(Error::InvalidCover(format!(
                "arc at {} has radius {}",
                a.center, a.radius
            )));
        }
        let cover = ChartCover { arcs, resolution };
        for q in 0..resolution {
            let x = cover.node(q);
            let total: f64 = cover.arcs.iter().map(|a| a.bump_jet(x, 0).value()).sum();
            if total <= 0.0 {
                return Err(Error::InvalidCover(format!("point {} is not covered", x)));
            }
        }
        Ok(cover)
    }

    pub fn whole_circle(resolution: usize) -> Result<Self, Error> {
        ChartCover::new(
            vec![Arc {
                center: 0.0,
                radius: 0.5,
            }],
            resolution,
        )
    }

    /// `count` equal arcs centered at `i/count`, each with the given overlap
    /// factor (radius = factor / count).
    pub fn uniform(count: usize, factor: f64, resolution: usize) -> Result<Self, Error> {
        let arcs = (0..count)
            .map(|i| Arc {
                center: i as f64 / count as f64,
                radius: factor / count as f64,
            })
            .collect();
        ChartCover::new(arcs, resolution)
    }

    pub fn arcs(&self) -> &[Arc] {
        &self.arcs
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    fn node(&self, q: usize) -> f64 {
        q as f64 / self.resolution as f64
    }

    /// Jets of every partition function at `x`.
    pub fn partition_jets(&self, x: f64, order: usize) -> Vec<JetSeries> {
        let raw: Vec<JetSeries> = self.arcs.iter().map(|a| a.bump_jet(x, order)).collect();
        let total = raw
            .iter()
            .skip(1)
            .fold(raw[0].clone(), |acc, b| &acc + b);
        let inv = total.recip().expect("cover validated at construction");
        raw.iter().map(|b| b * &inv).collect()
    }

    /// Partition function values at the quadrature nodes, one row per arc.
    pub fn partition_values(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.resolution]; self.arcs.len()];
        for q in 0..self.resolution {
            for (i, j) in self.partition_jets(self.node(q), 0).iter().enumerate() {
                out[i][q] = j.value();
            }
        }
        out
    }
}

fn derivative_table(f: &TrigPoly<f64>, k: usize) -> Result<Vec<TrigPoly<f64>>, Error> {
    let mut out = Vec::with_capacity(k + 1);
    out.push(f.clone());
    for j in 0..k {
        let next = out[j].partial(0)?;
        out.push(next);
    }
    Ok(out)
}

/// `Σ_i ⟨π_i f, π_i g⟩_{2,k}` by trapezoid quadrature on the circle.
pub fn sobolev_inner_cover(
    f: &TrigPoly<f64>,
    g: &TrigPoly<f64>,
    k: u32,
    cover: &ChartCover,
) -> Result<f64, Error> {
    for p in [f, g] {
        if p.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: p.dim(),
            });
        }
    }
    let k = k as usize;
    let df = derivative_table(f, k)?;
    let dg = derivative_table(g, k)?;
    let mut total = 0.0;
    for q in 0..cover.resolution {
        let x = cover.node(q);
        let fj = JetSeries::from_derivatives(x, &df.iter().map(|p| p.eval(&[x])).collect::<Vec<_>>());
        let gj = JetSeries::from_derivatives(x, &dg.iter().map(|p| p.eval(&[x])).collect::<Vec<_>>());
        for pi in cover.partition_jets(x, k) {
            let a = &pi * &fj;
            let b = &pi * &gj;
            total += (0..=k).map(|j| a.derivative(j) * b.derivative(j)).sum::<f64>();
        }
    }
    Ok(total / cover.resolution as f64)
}

/// Observed range of `‖f‖²_cover / ‖f‖²_{2,k}` over sample functions.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverRatios {
    pub min_ratio: f64,
    pub max_ratio: f64,
    /// Smallest `K` with every ratio in `[1/K, K]`.
    pub bound: f64,
}

pub fn cover_ratios(
    cover: &ChartCover,
    k: u32,
    samples: &[TrigPoly<f64>],
) -> Result<CoverRatios, Error> {
    let mut min_ratio = f64::INFINITY;
    let mut max_ratio = 0.0f64;
    for f in samples.iter().filter(|f| !f.is_zero()) {
        let r = sobolev_inner_cover(f, f, k, cover)? / sobolev_inner(f, f, k)?;
        min_ratio = min_ratio.min(r);
        max_ratio = max_ratio.max(r);
    }
    if max_ratio == 0.0 {
        return Err(Error::EmptyBasis);
    }
    Ok(CoverRatios {
        min_ratio,
        max_ratio,
        bound: max_ratio.max(1.0 / min_ratio),
    })
}

/// `max { ‖f‖_{2,k} : f ∈ S, ‖f‖_{L²} = 1 }`.
pub fn norm_equivalence_constant<S: Scalar>(space: &FunctionSpace<S>, k: u32) -> Result<f64, Error> {
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "Sobolev order",
            value: k as i64,
        });
    }
    let gk = sobolev_gram(space, k)?.to_f64();
    let g0 = space.l2_gram().to_f64();
    let lambda = linalg::generalized_max_eigenvalue(&gk, &g0).ok_or(Error::SingularGram)?;
    Ok(libm::sqrt(lambda.max(0.0)))
}

/// Exact square of the constant, available when `G_0⁻¹ G_k` is diagonal
/// (each basis element is an eigenvector of the Sobolev form).
pub fn norm_equivalence_constant_squared<S: Scalar>(
    space: &FunctionSpace<S>,
    k: u32,
) -> Result<Option<S>, Error> {
    let gk = sobolev_gram(space, k)?;
    let g0 = space.l2_gram();
    let n = space.len();
    let mut best: Option<S> = None;
    for j in 0..n {
        let col = S::solve(&g0, &gk.column(j), 0.0).ok_or(Error::SingularGram)?;
        for (i, v) in col.iter().enumerate() {
            if i != j && !v.is_zero() {
                return Ok(None);
            }
        }
        let d = col[j].clone();
        if best.as_ref().is_none_or(|b| d.to_f64() > b.to_f64()) {
            best = Some(d);
        }
    }
    Ok(best)
}

/// `‖sin 2πmx‖_{2,k} / ‖sin 2πmx‖_{L²} = √w_k(m)` for `m = 1..=m_max`.
pub fn mode_divergence(k: u32, m_max: u32) -> Result<Vec<f64>, Error> {
    if k < 1 {
        return Err(Error::OutOfRange {
            what: "Sobolev order",
            value: k as i64,
        });
    }
    if m_max < 2 {
        return Err(Error::OutOfRange {
            what: "mode count",
            value: m_max as i64,
        });
    }
    (1..=m_max as i64)
        .map(|m| {
            let f = TrigPoly::monomial(&[m], crate::trig::Phase::Sin, 1.0);
            Ok(libm::sqrt(sobolev_inner(&f, &f, k)? / f.l2_inner(&f)?))
        })
        .collect()
}
