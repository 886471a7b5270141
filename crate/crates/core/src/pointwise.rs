//! Jets of a function space at a point: the functionals `f ↦ ∂^I f(x)`, their
//! rank, pointwise annihilators, greedy spanning sets and the pointwise
//! correction of an elliptic operator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use num_rational::Rational64;

use crate::diffop::{Applied, Coefficient, DiffOp};
use crate::error::Error;
use crate::exact::{Exact, TAU_F64};
use crate::funcspace::{DomainFn, FunctionSpace};
use crate::linalg::{self, Mat};
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::trig::{Phase, TrigKey};

/// Default relative rank tolerance for float decisions.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;
/// Scaled jets with largest singular value below this count as zero.
pub const ZERO_JET_FLOOR: f64 = 1e-14;

/// Smallest `k` such that the span of derivative tuples
/// `(∂^I f_1, …, ∂^I f_N)`, `|I| ≤ k`, is closed under one more derivative.
pub fn jet_closure_order<S: Scalar>(space: &FunctionSpace<S>) -> u32 {
    let n = space.domain().dimension();
    // coordinates: (basis position, component, key)
    let mut coords: BTreeMap<(usize, usize, TrigKey), usize> = BTreeMap::new();
    for (j, f) in space.basis().iter().enumerate() {
        for (c, p) in f.parts().iter().enumerate() {
            for (key, _) in p.terms() {
                for phase in [Phase::Cos, Phase::Sin] {
                    if phase == Phase::Sin && key.is_zero_freq() {
                        continue;
                    }
                    let k = TrigKey {
                        freq: key.freq.clone(),
                        phase,
                    };
                    let next = coords.len();
                    coords.entry((j, c, k)).or_insert(next);
                }
            }
        }
    }
    let width = coords.len();
    if width == 0 {
        return 0;
    }
    let tuple_row = |idx: &MultiIndex| -> Vec<Exact> {
        let mut row = vec![Exact::zero(); width];
        for (j, f) in space.basis().iter().enumerate() {
            let d = f.derivative_unscaled(idx).expect("index dimension matches");
            for (c, p) in d.parts().iter().enumerate() {
                for (key, v) in p.terms() {
                    row[coords[&(j, c, key.clone())]] = v.to_exact();
                }
            }
        }
        row
    };
    let mut rows: Vec<Vec<Exact>> = Vec::new();
    let mut rank = 0;
    let mut k = 0u32;
    loop {
        for idx in MultiIndex::of_order(n, k) {
            rows.push(tuple_row(&idx));
        }
        let r = Exact::rank(&Mat::from_rows(rows.clone()), 0.0);
        if k > 0 && r == rank {
            return k - 1;
        }
        if r == width {
            // nothing further can be new
            return k;
        }
        rank = r;
        k += 1;
    }
}

/// Rows `∂^I f_i(x)` for `|I| ≤ order`, columns indexed by the basis.
#[derive(Clone, Debug, PartialEq)]
pub struct JetMatrix<S: Scalar> {
    pub component: usize,
    pub point: Vec<f64>,
    pub order: u32,
    pub rows: Vec<MultiIndex>,
    pub values: Mat<S>,
    /// Every entry was evaluated exactly.
    pub exact: bool,
}

fn rational_to_f64(x: &[Rational64]) -> Vec<f64> {
    x.iter()
        .map(|r| *r.numer() as f64 / *r.denom() as f64)
        .collect()
}

fn eval_fn<S: Scalar>(f: &DomainFn<S>, component: usize, x: &[Rational64], xf: &[f64]) -> (S, bool) {
    if S::EXACT {
        if let Some(v) = f.eval_exact(component, x) {
            return (v, true);
        }
    }
    (S::from_f64(f.eval(component, xf)), false)
}

/// Jet matrix at a rational point; entries are exact whenever the phases
/// there are rational, otherwise float-evaluated.
pub fn jet_matrix<S: Scalar>(
    space: &FunctionSpace<S>,
    component: usize,
    x: &[Rational64],
    order: u32,
) -> Result<JetMatrix<S>, Error> {
    let xf = rational_to_f64(x);
    let rows = MultiIndex::up_to(space.domain().dimension(), order);
    let mut exact = S::EXACT;
    let mut values = Mat::zeros(rows.len(), space.len());
    for (r, idx) in rows.iter().enumerate() {
        for (j, f) in space.basis().iter().enumerate() {
            let (v, ok) = eval_fn(&f.derivative(idx)?, component, x, &xf);
            exact &= ok;
            values[(r, j)] = v;
        }
    }
    Ok(JetMatrix {
        component,
        point: xf,
        order,
        rows,
        values,
        exact,
    })
}

/// Jet matrix at an arbitrary float point.
pub fn jet_matrix_at<S: Scalar>(
    space: &FunctionSpace<S>,
    component: usize,
    x: &[f64],
    order: u32,
) -> Result<JetMatrix<S>, Error> {
    let rows = MultiIndex::up_to(space.domain().dimension(), order);
    let mut values = Mat::zeros(rows.len(), space.len());
    for (r, idx) in rows.iter().enumerate() {
        for (j, f) in space.basis().iter().enumerate() {
            values[(r, j)] = S::from_f64(f.derivative(idx)?.eval(component, x));
        }
    }
    Ok(JetMatrix {
        component,
        point: x.to_vec(),
        order,
        rows,
        values,
        exact: false,
    })
}

/// Derivative functionals chosen at a point, in selection order.
#[derive(Clone, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FunctionalSpan {
    pub indices: Vec<MultiIndex>,
}

impl FunctionalSpan {
    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    /// Largest selected order `q` (0 when empty).
    pub fn order(&self) -> u32 {
        self.indices.iter().map(MultiIndex::order).max().unwrap_or(0)
    }
}

fn scale_rows(rows: &[MultiIndex], m: &Mat<f64>) -> Mat<f64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| {
        m[(i, j)] / libm::pow(TAU_F64, rows[i].order() as f64)
    })
}

fn float_threshold(scaled: &Mat<f64>, tol: f64) -> f64 {
    let smax = linalg::singular_values(scaled).first().copied().unwrap_or(0.0);
    if smax < ZERO_JET_FLOOR {
        f64::INFINITY
    } else {
        tol * smax
    }
}

fn exact_greedy<S: Scalar>(m: &Mat<S>) -> Vec<usize> {
    let mut kept: Vec<usize> = Vec::new();
    let mut rank = 0;
    for i in 0..m.rows() {
        let mut trial = kept.clone();
        trial.push(i);
        let r = S::rank(&m.select_rows(&trial), 0.0);
        if r > rank {
            rank = r;
            kept = trial;
        }
    }
    kept
}

impl<S: Scalar> JetMatrix<S> {
    /// Entries divided by `(2π)^{|I|}`, in float.
    pub fn scaled_f64(&self) -> Mat<f64> {
        scale_rows(&self.rows, &self.values.to_f64())
    }

    fn use_exact(&self) -> bool {
        S::EXACT && self.exact
    }

    /// Rank and a basis of `{c : Σ_I c_I ∂^I f_i(x) = 0 ∀ i}`. Float decisions
    /// are made on the scaled jet with cutoff `tol · σ_max`.
    pub fn rank_and_annihilator(&self, tol: f64) -> (usize, Vec<Vec<S>>) {
        if self.use_exact() {
            let r = S::rank(&self.values, 0.0);
            return (r, S::null_space(&self.values.transpose(), 0.0));
        }
        let scaled = self.scaled_f64();
        let threshold = float_threshold(&scaled, tol);
        let r = f64::rank(&scaled, threshold);
        let ns = linalg::float_null_space(&scaled.transpose(), threshold.min(f64::MAX));
        let ns = ns
            .into_iter()
            .map(|v| {
                v.iter()
                    .zip(&self.rows)
                    .map(|(c, idx)| S::from_f64(c / libm::pow(TAU_F64, idx.order() as f64)))
                    .collect()
            })
            .collect();
        (r, ns)
    }

    /// Greedy selection in multi-index order, keeping rows that raise the rank.
    pub fn spanning_functionals(&self, tol: f64) -> FunctionalSpan {
        let kept = if self.use_exact() {
            exact_greedy(&self.values)
        } else {
            let scaled = self.scaled_f64();
            let threshold = float_threshold(&scaled, tol);
            let rows: Vec<Vec<f64>> = (0..scaled.rows()).map(|i| scaled.row(i).to_vec()).collect();
            linalg::greedy_independent(&rows, threshold)
        };
        FunctionalSpan {
            indices: kept.into_iter().map(|i| self.rows[i].clone()).collect(),
        }
    }
}

/// Per-point decisions made once per space: exact where the jet evaluates
/// exactly, otherwise in float on an L²-orthonormal frame, which makes the
/// outcome independent of the chosen basis.
#[derive(Clone, Debug)]
pub struct Analyzer<'a, S: Scalar> {
    space: &'a FunctionSpace<S>,
    frame: FunctionSpace<f64>,
    order: u32,
    tol: f64,
    rows: Vec<MultiIndex>,
    frame_jets: Vec<Vec<DomainFn<f64>>>,
}

/// Outcome of [`Analyzer::analyze`].
#[derive(Clone, Debug, PartialEq)]
pub struct PointAnalysis {
    pub rank: usize,
    pub span: FunctionalSpan,
    pub exact: bool,
}

impl<'a, S: Scalar> Analyzer<'a, S> {
    pub fn new(space: &'a FunctionSpace<S>, order: u32, tol: f64) -> Result<Self, Error> {
        let frame = space.orthonormal_f64()?;
        let rows = MultiIndex::up_to(space.domain().dimension(), order);
        let frame_jets = rows
            .iter()
            .map(|idx| {
                frame
                    .basis()
                    .iter()
                    .map(|f| f.derivative_unscaled(idx))
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Analyzer {
            space,
            frame,
            order,
            tol,
            rows,
            frame_jets,
        })
    }

    pub fn space(&self) -> &FunctionSpace<S> {
        self.space
    }

    pub fn frame(&self) -> &FunctionSpace<f64> {
        &self.frame
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn rows(&self) -> &[MultiIndex] {
        &self.rows
    }

    /// Scaled jet of the orthonormal frame at a float point.
    pub fn frame_jet(&self, component: usize, x: &[f64]) -> Mat<f64> {
        Mat::from_fn(self.rows.len(), self.frame.len(), |i, j| {
            self.frame_jets[i][j].eval(component, x)
        })
    }

    /// Rows of the scaled frame jet for the given indices.
    pub fn frame_rows(&self, component: usize, x: &[f64], indices: &[MultiIndex]) -> Mat<f64> {
        let pos: Vec<usize> = indices
            .iter()
            .map(|i| self.rows.iter().position(|r| r == i).expect("index within order"))
            .collect();
        Mat::from_fn(pos.len(), self.frame.len(), |a, j| {
            self.frame_jets[pos[a]][j].eval(component, x)
        })
    }

    pub fn analyze(&self, component: usize, x: &[Rational64]) -> Result<PointAnalysis, Error> {
        if S::EXACT {
            let jm = jet_matrix(self.space, component, x, self.order)?;
            if jm.exact {
                let span = jm.spanning_functionals(self.tol);
                return Ok(PointAnalysis {
                    rank: span.rank(),
                    span,
                    exact: true,
                });
            }
        }
        let xf = rational_to_f64(x);
        Ok(self.analyze_float(component, &xf))
    }

    pub fn analyze_float(&self, component: usize, x: &[f64]) -> PointAnalysis {
        let scaled = self.frame_jet(component, x);
        let threshold = float_threshold(&scaled, self.tol);
        let rows: Vec<Vec<f64>> = (0..scaled.rows()).map(|i| scaled.row(i).to_vec()).collect();
        let kept = linalg::greedy_independent(&rows, threshold);
        PointAnalysis {
            rank: kept.len(),
            span: FunctionalSpan {
                indices: kept.into_iter().map(|i| self.rows[i].clone()).collect(),
            },
            exact: false,
        }
    }
}

/// `E − Σ c_i P_i` annihilating the space at one point.
#[derive(Clone, Debug, PartialEq)]
pub struct PointwiseOperator<S: Scalar> {
    pub component: usize,
    pub point: Vec<f64>,
    pub span: FunctionalSpan,
    pub coefficients: Vec<S>,
    pub operator: DiffOp<S>,
    /// `max_j |(E − Σ c_i P_i) f_j(x)|`.
    pub residual: f64,
    pub exact: bool,
}

/// Solves `E f_j(x) = Σ_i c_i ∂^{I_i} f_j(x)` for all basis functions.
/// The residual must stay below `tol · max(1, max_j |E f_j(x)|)`.
pub fn elliptic_completion_at<S: Scalar>(
    space: &FunctionSpace<S>,
    component: usize,
    x: &[Rational64],
    span: &FunctionalSpan,
    reference: &DiffOp<S>,
    tol: f64,
) -> Result<PointwiseOperator<S>, Error> {
    if reference.order() <= span.order() {
        return Err(Error::OrderTooLow {
            elliptic_order: reference.order(),
            required_above: span.order(),
        });
    }
    let xf = rational_to_f64(x);
    let nb = space.len();
    let m = span.rank();
    let mut exact = S::EXACT && reference.sampled_grid().is_none();
    let mut a = Mat::zeros(nb, m);
    let mut b = vec![S::zero(); nb];
    for (j, f) in space.basis().iter().enumerate() {
        for (i, idx) in span.indices.iter().enumerate() {
            let (v, ok) = eval_fn(&f.derivative(idx)?, component, x, &xf);
            exact &= ok;
            a[(j, i)] = v;
        }
        b[j] = match reference.apply(f)? {
            Applied::Analytic(g) => {
                let (v, ok) = eval_fn(&g, component, x, &xf);
                exact &= ok;
                v
            }
            Applied::Sampled(_) => S::from_f64(reference.apply_at(f, component, &xf)?),
        };
    }
    let scale = b.iter().fold(1.0f64, |s, v| s.max(v.to_f64().abs()));
    let coefficients: Vec<S> = if exact {
        S::solve(&a, &b, 0.0).ok_or_else(|| Error::ResidualTooLarge {
            residual: f64::INFINITY,
            tol,
            context: format!("inconsistent pointwise system at {:?}", xf),
        })?
    } else {
        let af = a.to_f64().to_dmatrix();
        let bf = DVector::from_iterator(nb, b.iter().map(S::to_f64));
        let sol = if m == 0 {
            DVector::zeros(0)
        } else {
            linalg::lstsq(&af, &bf)
        };
        sol.iter().map(|v| S::from_f64(*v)).collect()
    };
    let residual = if exact {
        let fitted = a.mul_vec(&coefficients);
        fitted
            .iter()
            .zip(&b)
            .map(|(u, v)| (u.clone() - v.clone()).to_f64().abs())
            .fold(0.0, f64::max)
    } else {
        let af: DMatrix<f64> = a.to_f64().to_dmatrix();
        let c = DVector::from_iterator(m, coefficients.iter().map(S::to_f64));
        let bf = DVector::from_iterator(nb, b.iter().map(S::to_f64));
        if m == 0 {
            bf.amax()
        } else {
            (af * c - bf).amax()
        }
    };
    if residual > tol * scale {
        return Err(Error::ResidualTooLarge {
            residual,
            tol: tol * scale,
            context: format!("pointwise completion at {:?}", xf),
        });
    }
    let mut operator = reference.clone();
    for (idx, c) in span.indices.iter().zip(&coefficients) {
        operator.add_term(idx.clone(), Coefficient::Constant(-c.clone()))?;
    }
    Ok(PointwiseOperator {
        component,
        point: xf,
        span: span.clone(),
        coefficients,
        operator,
        residual,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::laplacian_power;
    use crate::funcspace::Domain;
    use crate::trig::TrigPoly;

    fn r(n: i64, d: i64) -> Rational64 {
        Rational64::new(n, d)
    }

    fn space1(terms: &[(i64, Phase)]) -> FunctionSpace<Exact> {
        FunctionSpace::new(
            Domain::torus(1),
            terms
                .iter()
                .map(|&(m, ph)| DomainFn::single(TrigPoly::monomial(&[m], ph, Exact::one())))
                .collect(),
        )
        .unwrap()
    }

    fn sin_cos() -> FunctionSpace<Exact> {
        space1(&[(1, Phase::Sin), (1, Phase::Cos)])
    }

    fn product() -> FunctionSpace<Exact> {
        let s1 = TrigPoly::monomial(&[1, 0], Phase::Sin, Exact::one());
        let s2 = TrigPoly::monomial(&[0, 1], Phase::Sin, Exact::one());
        FunctionSpace::new(Domain::torus(2), vec![DomainFn::single(s1.mul(&s2).unwrap())]).unwrap()
    }

    #[test]
    fn closure_orders() {
        assert_eq!(jet_closure_order(&sin_cos()), 1);
        assert_eq!(jet_closure_order(&space1(&[(0, Phase::Cos)])), 0);
        assert_eq!(jet_closure_order(&space1(&[(0, Phase::Cos), (1, Phase::Sin)])), 2);
    }

    #[test]
    fn jets_of_sine_and_cosine_at_zero() {
        let j = jet_matrix(&sin_cos(), 0, &[r(0, 1)], 1).unwrap();
        assert!(j.exact);
        assert_eq!(
            j.values,
            Mat::from_rows(vec![
                vec![Exact::zero(), Exact::one()],
                vec![Exact::tau(), Exact::zero()]
            ])
        );
    }

    #[test]
    fn harmonic_annihilator() {
        let j = jet_matrix(&sin_cos(), 0, &[r(0, 1)], 2).unwrap();
        let (rank, ann) = j.rank_and_annihilator(DEFAULT_RANK_TOL);
        assert_eq!(rank, 2);
        assert_eq!(ann.len(), 1);
        let tau = Exact::tau();
        assert_eq!(ann[0], vec![tau.clone() * tau, Exact::zero(), Exact::one()]);
    }

    #[test]
    fn product_jets() {
        let j = jet_matrix(&product(), 0, &[r(0, 1), r(0, 1)], 2).unwrap();
        for (i, idx) in j.rows.iter().enumerate() {
            let expect = if idx.entries() == [1, 1] {
                Exact::tau() * Exact::tau()
            } else {
                Exact::zero()
            };
            assert_eq!(j.values[(i, 0)], expect);
        }
        let generic = jet_matrix_at(&product().to_f64(), 0, &[0.13, 0.71], 1).unwrap();
        let (rank, ann) = generic.rank_and_annihilator(DEFAULT_RANK_TOL);
        assert_eq!((rank, ann.len()), (1, 2));
    }

    #[test]
    fn spans_prefer_low_orders() {
        let s = sin_cos();
        let j = jet_matrix(&s, 0, &[r(0, 1)], 2).unwrap();
        let span = j.spanning_functionals(DEFAULT_RANK_TOL);
        assert_eq!(span.indices, vec![MultiIndex::new(vec![0]), MultiIndex::new(vec![1])]);
        assert_eq!(span.order(), 1);

        let s = space1(&[(0, Phase::Cos), (1, Phase::Sin)]);
        let j = jet_matrix(&s, 0, &[r(1, 4)], 2).unwrap();
        let span = j.spanning_functionals(DEFAULT_RANK_TOL);
        assert_eq!(span.indices, vec![MultiIndex::new(vec![0]), MultiIndex::new(vec![2])]);
        let sf = s.to_f64();
        let an = Analyzer::new(&sf, 2, DEFAULT_RANK_TOL).unwrap();
        assert_eq!(an.analyze_float(0, &[0.25]).span, span);
    }

    #[test]
    fn completion_of_negative_bilaplacian() {
        let s = sin_cos();
        let e = laplacian_power::<Exact>(Domain::torus(1), 2)
            .unwrap()
            .scale(&-Exact::one())
            .unwrap();
        let span = FunctionalSpan {
            indices: vec![MultiIndex::new(vec![0]), MultiIndex::new(vec![1])],
        };
        let op = elliptic_completion_at(&s, 0, &[r(1, 4)], &span, &e, 1e-12).unwrap();
        let t4 = Exact::tau() * Exact::tau() * Exact::tau() * Exact::tau();
        assert!(op.exact);
        assert_eq!(op.coefficients, vec![-t4.clone(), Exact::zero()]);
        assert_eq!(op.residual, 0.0);
        assert_eq!(
            op.operator.coefficient(&MultiIndex::new(vec![0])),
            Some(&Coefficient::Constant(t4))
        );
    }

    #[test]
    fn completion_in_float_at_generic_point() {
        let s = space1(&[(1, Phase::Sin), (2, Phase::Sin)]).to_f64();
        let e = laplacian_power::<f64>(Domain::torus(1), 2).unwrap();
        let span = FunctionalSpan {
            indices: vec![MultiIndex::new(vec![0]), MultiIndex::new(vec![1])],
        };
        let op = elliptic_completion_at(&s, 0, &[r(1, 8)], &span, &e, 1e-12).unwrap();
        for f in s.basis() {
            assert!(op.operator.apply_at(f, 0, &[0.125]).unwrap().abs() < 1e-10);
        }
        let low = FunctionalSpan {
            indices: vec![MultiIndex::new(vec![0]), MultiIndex::new(vec![4])],
        };
        assert!(matches!(
            elliptic_completion_at(&s, 0, &[r(1, 8)], &low, &e, 1e-12),
            Err(Error::OrderTooLow { .. })
        ));
    }
}
