//! Constant-rank construction: independence patches, coefficient fields on
//! each patch, a bump partition of unity, and the glued operator.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::bump::plateau_bump;
use crate::diffop::{Coefficient, DiffOp, Residual, SymbolReport};
use crate::error::Error;
use crate::funcspace::FunctionSpace;
use crate::grid::{Grid, GridField};
use crate::linalg::{self, Mat};
use crate::multi_index::MultiIndex;
use crate::pointwise::{Analyzer, FunctionalSpan};
use crate::scalar::Scalar;
use crate::trig::circle_distance;

/// Independence threshold relative to the frame norm at the seed.
pub const DEFAULT_MARGIN_FACTOR: f64 = 1e-6;
/// Maximum number of doublings of a patch.
pub const MAX_GROWTH_STEPS: usize = 8;
/// Default number of seeds per axis on each component.
pub const SEEDS_PER_AXIS: usize = 16;

/// Per-point rank and minimal spanning order.
#[derive(Clone, Debug, PartialEq)]
pub struct RankField {
    pub grid: Grid,
    pub ranks: Vec<usize>,
    pub orders: Vec<u32>,
    pub spans: Vec<FunctionalSpan>,
    /// Points decided with exact arithmetic.
    pub exact_points: usize,
}

impl RankField {
    pub fn rank_range(&self) -> (usize, usize) {
        let min = self.ranks.iter().copied().min().unwrap_or(0);
        let max = self.ranks.iter().copied().max().unwrap_or(0);
        (min, max)
    }

    pub fn is_rank_constant(&self) -> bool {
        let (a, b) = self.rank_range();
        a == b
    }

    pub fn is_order_constant(&self) -> bool {
        self.orders.windows(2).all(|w| w[0] == w[1])
    }

    /// `q = max_x q_min(x)`.
    pub fn max_order(&self) -> u32 {
        self.orders.iter().copied().max().unwrap_or(0)
    }

    /// Number of points per rank value, ascending.
    pub fn rank_histogram(&self) -> BTreeMap<usize, usize> {
        let mut h = BTreeMap::new();
        for r in &self.ranks {
            *h.entry(*r).or_insert(0) += 1;
        }
        h
    }
}

pub fn rank_field<S: Scalar>(analyzer: &Analyzer<'_, S>, grid: &Grid) -> Result<RankField, Error> {
    if grid.is_empty() {
        return Err(Error::OutOfRange {
            what: "grid size",
            value: 0,
        });
    }
    let mut ranks = Vec::with_capacity(grid.len());
    let mut orders = Vec::with_capacity(grid.len());
    let mut spans = Vec::with_capacity(grid.len());
    let mut exact_points = 0;
    for i in 0..grid.len() {
        let a = analyzer.analyze(grid.component_of(i), &grid.coords_exact(i))?;
        exact_points += a.exact as usize;
        ranks.push(a.rank);
        orders.push(a.span.order());
        spans.push(a.span);
    }
    Ok(RankField {
        grid: *grid,
        ranks,
        orders,
        spans,
        exact_points,
    })
}

/// Axis-aligned periodic rectangle on one component, with the span that
/// stays independent on it. A half-width of at least 1/2 is the whole axis.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverPatch {
    pub component: usize,
    pub center: Vec<f64>,
    pub half_width: Vec<f64>,
    pub span: FunctionalSpan,
    /// Smallest `σ_min` of the selected scaled frame rows on the patch.
    pub margin: f64,
    /// Margin threshold in force while the patch grew.
    pub threshold: f64,
    /// Grid index of the seed.
    pub seed: usize,
}

impl CoverPatch {
    fn offsets(&self, grid: &Grid, index: usize) -> Option<Vec<f64>> {
        if grid.component_of(index) != self.component {
            return None;
        }
        Some(
            grid.coords(index)
                .iter()
                .zip(&self.center)
                .map(|(x, c)| circle_distance(x - c))
                .collect(),
        )
    }

    fn within(&self, grid: &Grid, index: usize, fraction: f64) -> bool {
        match self.offsets(grid, index) {
            None => false,
            Some(d) => d
                .iter()
                .zip(&self.half_width)
                .all(|(d, h)| *h >= 0.5 || d.abs() <= fraction * h + 1e-12),
        }
    }

    /// Grid point lies in the closed rectangle.
    pub fn contains(&self, grid: &Grid, index: usize) -> bool {
        self.within(grid, index, 1.0)
    }

    /// Grid point lies in the inner three quarters, where the bump is at least 1/2.
    pub fn covers(&self, grid: &Grid, index: usize) -> bool {
        self.within(grid, index, 0.75)
    }

    /// Product of plateau bumps over the non-full axes.
    pub fn bump(&self, grid: &Grid, index: usize) -> f64 {
        match self.offsets(grid, index) {
            None => 0.0,
            Some(d) => d
                .iter()
                .zip(&self.half_width)
                .map(|(d, h)| if *h >= 0.5 { 1.0 } else { plateau_bump(d / h) })
                .product(),
        }
    }

    /// Volume fraction of the component.
    pub fn size(&self) -> f64 {
        self.half_width.iter().map(|h| (2.0 * h).min(1.0)).product()
    }

    pub fn points(&self, grid: &Grid) -> Vec<usize> {
        (0..grid.len()).filter(|&i| self.contains(grid, i)).collect()
    }
}

/// Seeds on a regular sub-lattice: `per_axis` per axis on every component.
pub fn default_seeds(grid: &Grid, per_axis: usize) -> Vec<usize> {
    let per_axis = per_axis.min(grid.resolution()).max(1);
    let stride = grid.resolution() / per_axis;
    let n = grid.dimension();
    let mut out = Vec::new();
    for c in 0..grid.components() {
        let total = per_axis.pow(n as u32);
        for k in 0..total {
            let mut rem = k;
            let mut lattice = vec![0; n];
            for axis in (0..n).rev() {
                lattice[axis] = (rem % per_axis) * stride;
                rem /= per_axis;
            }
            out.push(grid.index_of(c, &lattice));
        }
    }
    out
}

/// Margin of a span at every grid point of one component.
fn margin_field<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    grid: &Grid,
    component: usize,
    span: &FunctionalSpan,
) -> Vec<f64> {
    (0..grid.len())
        .map(|i| {
            if grid.component_of(i) != component {
                0.0
            } else if span.indices.is_empty() {
                f64::INFINITY
            } else {
                linalg::row_margin(&analyzer.frame_rows(component, &grid.coords(i), &span.indices))
            }
        })
        .collect()
}

/// Grows a patch from every seed and keeps a covering subfamily, largest first.
pub fn build_cover<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    field: &RankField,
    seeds: &[usize],
    margin_factor: f64,
) -> Result<Vec<CoverPatch>, Error> {
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    if !field.is_rank_constant() {
        let (min, max) = field.rank_range();
        return Err(Error::NonConstantRank { min, max });
    }
    let grid = &field.grid;
    let mut margins: BTreeMap<(usize, Vec<MultiIndex>), Vec<f64>> = BTreeMap::new();
    let mut candidates = Vec::new();
    for &seed in seeds {
        let component = grid.component_of(seed);
        let span = field.spans[seed].clone();
        let key = (component, span.indices.clone());
        let margin = margins
            .entry(key)
            .or_insert_with(|| margin_field(analyzer, grid, component, &span));
        let center = grid.coords(seed);
        let threshold = if span.indices.is_empty() {
            0.0
        } else {
            margin_factor
                * analyzer
                    .frame_rows(component, &center, &span.indices)
                    .spectral_norm()
        };
        let mut accepted: Option<CoverPatch> = None;
        let mut h = grid.spacing();
        for _ in 0..=MAX_GROWTH_STEPS {
            let trial = CoverPatch {
                component,
                center: center.clone(),
                half_width: vec![h.min(0.5); grid.dimension()],
                span: span.clone(),
                margin: 0.0,
                threshold,
                seed,
            };
            let pts = trial.points(grid);
            let m = pts.iter().map(|&i| margin[i]).fold(f64::INFINITY, f64::min);
            if m <= threshold {
                break;
            }
            let full = h >= 0.5;
            accepted = Some(CoverPatch { margin: m, ..trial });
            if full {
                break;
            }
            h *= 2.0;
        }
        if let Some(p) = accepted {
            candidates.push(p);
        }
    }
    // larger patches first; stable on seed order
    candidates.sort_by(|a, b| b.size().partial_cmp(&a.size()).unwrap_or(core::cmp::Ordering::Equal));
    let mut covered = vec![false; grid.len()];
    let mut remaining = grid.len();
    let mut cover = Vec::new();
    for p in candidates {
        if remaining == 0 {
            break;
        }
        let fresh: Vec<usize> = (0..grid.len())
            .filter(|&i| !covered[i] && p.covers(grid, i))
            .collect();
        if fresh.is_empty() {
            continue;
        }
        for i in fresh {
            covered[i] = true;
            remaining -= 1;
        }
        cover.push(p);
    }
    if remaining > 0 {
        return Err(Error::Uncoverable {
            uncovered: remaining,
        });
    }
    Ok(cover)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientMethod {
    /// Pointwise least squares.
    Direct,
    /// Dual functions at the patch center and `C = (I + A)⁻¹ V`.
    DualBasis,
}

/// Coefficients `c_i(x)` of the patch span at every patch point.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchFields {
    pub points: Vec<usize>,
    /// `values[k][i]` is `c_i` at `points[k]`.
    pub values: Vec<Vec<f64>>,
    /// Largest condition number of `I + A(x)` (dual-basis method only).
    pub condition: Option<f64>,
}

impl PatchFields {
    pub fn sup_difference(&self, other: &PatchFields) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

fn raw_rows(
    frame: &FunctionSpace<f64>,
    derivs: &[Vec<crate::funcspace::DomainFn<f64>>],
    component: usize,
    x: &[f64],
) -> DMatrix<f64> {
    DMatrix::from_fn(derivs.len(), frame.len(), |i, j| derivs[i][j].eval(component, x))
}

pub fn patch_coefficients<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    grid: &Grid,
    patch: &CoverPatch,
    reference: &DiffOp<f64>,
    method: CoefficientMethod,
) -> Result<PatchFields, Error> {
    if reference.order() <= patch.span.order() && !patch.span.indices.is_empty() {
        return Err(Error::OrderTooLow {
            elliptic_order: reference.order(),
            required_above: patch.span.order(),
        });
    }
    let frame = analyzer.frame();
    let derivs = patch
        .span
        .indices
        .iter()
        .map(|idx| frame.basis().iter().map(|f| f.derivative(idx)).collect())
        .collect::<Result<Vec<Vec<_>>, Error>>()?;
    let images = frame
        .basis()
        .iter()
        .map(|f| match reference.apply(f)? {
            crate::diffop::Applied::Analytic(g) => Ok(g),
            crate::diffop::Applied::Sampled(_) => Err(Error::GridMismatch),
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let m = patch.span.rank();
    let nb = frame.len();
    let points = patch.points(grid);
    let mut values = Vec::with_capacity(points.len());
    let dual = match method {
        CoefficientMethod::Direct => None,
        CoefficientMethod::DualBasis => {
            let j0 = raw_rows(frame, &derivs, patch.component, &patch.center);
            let b = j0.clone().pseudo_inverse(1e-300).map_err(|_| Error::SingularDualSystem {
                point: patch.seed,
            })?;
            Some(b)
        }
    };
    let mut condition: f64 = 1.0;
    for &i in &points {
        let x = grid.coords(i);
        if m == 0 {
            values.push(Vec::new());
            continue;
        }
        let j = raw_rows(frame, &derivs, patch.component, &x);
        let e = DVector::from_iterator(nb, images.iter().map(|g| g.eval(patch.component, &x)));
        let c = match &dual {
            None => linalg::lstsq(&j.transpose(), &e),
            Some(b) => {
                let mm = (&j * b).transpose();
                let v = b.transpose() * &e;
                let sv = mm.singular_values();
                let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
                let smax = sv.iter().copied().fold(0.0, f64::max);
                if !(smin > 1e-14 * smax.max(1.0)) {
                    return Err(Error::SingularDualSystem { point: i });
                }
                condition = condition.max(smax / smin);
                mm.lu().solve(&v).ok_or(Error::SingularDualSystem { point: i })?
            }
        };
        values.push(c.iter().copied().collect());
    }
    Ok(PatchFields {
        points,
        values,
        condition: dual.map(|_| condition),
    })
}

/// Normalized bumps `π_j = b_j / Σ_k b_k` on the grid.
#[derive(Clone, Debug, PartialEq)]
pub struct PartitionOfUnity {
    /// `weights[j][i]` is `π_j` at grid point `i`.
    pub weights: Vec<Vec<f64>>,
}

impl PartitionOfUnity {
    pub fn max_sum_error(&self) -> f64 {
        let n = self.weights.first().map_or(0, Vec::len);
        (0..n)
            .map(|i| (self.weights.iter().map(|w| w[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn partition_of_unity(cover: &[CoverPatch], grid: &Grid) -> Result<PartitionOfUnity, Error> {
    let raw: Vec<Vec<f64>> = cover
        .iter()
        .map(|p| (0..grid.len()).map(|i| p.bump(grid, i)).collect())
        .collect();
    let mut weights = raw.clone();
    let mut uncovered = 0;
    for i in 0..grid.len() {
        let total: f64 = raw.iter().map(|b| b[i]).sum();
        if total <= 0.0 {
            uncovered += 1;
            continue;
        }
        for w in weights.iter_mut() {
            w[i] /= total;
        }
    }
    if uncovered > 0 {
        return Err(Error::Uncoverable { uncovered });
    }
    Ok(PartitionOfUnity { weights })
}

/// `E₀ = E − Σ_j π_j Σ_i c_i^{(j)} ∂^{I_i^{(j)}}` with its verification data.
#[derive(Clone, Debug, PartialEq)]
pub struct GluedOperator {
    pub operator: DiffOp<f64>,
    pub residual: Residual,
    pub symbol: SymbolReport,
}

pub fn glue_and_verify<S: Scalar>(
    space: &FunctionSpace<S>,
    cover: &[CoverPatch],
    fields: &[PatchFields],
    pou: &PartitionOfUnity,
    reference: &DiffOp<f64>,
    grid: &Grid,
    tol: f64,
) -> Result<GluedOperator, Error> {
    if cover.len() != fields.len() || cover.len() != pou.weights.len() {
        return Err(Error::InvalidCover(format!(
            "{} patches, {} coefficient sets, {} partition functions",
            cover.len(),
            fields.len(),
            pou.weights.len()
        )));
    }
    let mut lower: BTreeMap<MultiIndex, Vec<f64>> = BTreeMap::new();
    for ((patch, f), w) in cover.iter().zip(fields).zip(&pou.weights) {
        for (k, &i) in f.points.iter().enumerate() {
            if w[i] == 0.0 {
                continue;
            }
            for (a, idx) in patch.span.indices.iter().enumerate() {
                let field = lower
                    .entry(idx.clone())
                    .or_insert_with(|| vec![0.0; grid.len()]);
                field[i] += w[i] * f.values[k][a];
            }
        }
    }
    let mut operator = reference.clone();
    for (idx, values) in lower {
        let neg: Vec<f64> = values.iter().map(|v| -v).collect();
        operator.add_term(idx, Coefficient::Sampled(GridField::new(*grid, neg)))?;
    }
    let residual = operator.residual_on_grid(&space.to_f64(), grid)?;
    let symbol = operator.ellipticity_check(grid, 16, crate::diffop::DEFAULT_SYMBOL_MARGIN)?;
    if residual.sup > tol {
        return Err(Error::ResidualTooLarge {
            residual: residual.sup,
            tol,
            context: format!(
                "glued operator at grid point {} on basis function {}",
                residual.point,
                residual.function + 1
            ),
        });
    }
    Ok(GluedOperator {
        operator,
        residual,
        symbol,
    })
}

/// Everything produced by the constant-rank path.
#[derive(Clone, Debug, PartialEq)]
pub struct GlobalConstruction {
    pub cover: Vec<CoverPatch>,
    pub fields: Vec<PatchFields>,
    pub partition: PartitionOfUnity,
    pub glued: GluedOperator,
    /// Largest disagreement between the two coefficient methods.
    pub method_gap: f64,
}

/// Runs cover, both coefficient methods, partition and gluing.
pub fn construct_global<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    field: &RankField,
    reference: &DiffOp<f64>,
    tol: f64,
) -> Result<GlobalConstruction, Error> {
    let grid = field.grid;
    let seeds = default_seeds(&grid, SEEDS_PER_AXIS);
    let cover = build_cover(analyzer, field, &seeds, DEFAULT_MARGIN_FACTOR)?;
    let mut fields = Vec::with_capacity(cover.len());
    let mut method_gap: f64 = 0.0;
    for p in &cover {
        let direct = patch_coefficients(analyzer, &grid, p, reference, CoefficientMethod::Direct)?;
        let dual = patch_coefficients(analyzer, &grid, p, reference, CoefficientMethod::DualBasis)?;
        method_gap = method_gap.max(direct.sup_difference(&dual));
        fields.push(dual);
    }
    let partition = partition_of_unity(&cover, &grid)?;
    let glued = glue_and_verify(analyzer.space(), &cover, &fields, &partition, reference, &grid, tol)?;
    Ok(GlobalConstruction {
        cover,
        fields,
        partition,
        glued,
        method_gap,
    })
}

/// Jet matrix of a span in raw (unscaled) form; exposed for diagnostics.
pub fn span_rows(
    frame: &FunctionSpace<f64>,
    span: &FunctionalSpan,
    component: usize,
    x: &[f64],
) -> Result<Mat<f64>, Error> {
    let mut m = Mat::zeros(span.rank(), frame.len());
    for (a, idx) in span.indices.iter().enumerate() {
        for (j, f) in frame.basis().iter().enumerate() {
            m[(a, j)] = f.derivative(idx)?.eval(component, x);
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::laplacian_power;
    use crate::exact::Exact;
    use crate::funcspace::{Domain, DomainFn};
    use crate::pointwise::DEFAULT_RANK_TOL;
    use crate::trig::{Phase, TrigPoly};

    fn space(terms: &[(i64, Phase)]) -> FunctionSpace<f64> {
        FunctionSpace::new(
            Domain::torus(1),
            terms
                .iter()
                .map(|&(m, ph)| DomainFn::single(TrigPoly::monomial(&[m], ph, 1.0)))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn harmonic_pair_single_patch() {
        let s = space(&[(1, Phase::Sin), (1, Phase::Cos)]);
        let an = Analyzer::new(&s, 1, DEFAULT_RANK_TOL).unwrap();
        let grid = Grid::new(s.domain(), 64).unwrap();
        let field = rank_field(&an, &grid).unwrap();
        assert!(field.is_rank_constant() && field.is_order_constant());
        assert_eq!(field.ranks[0], 2);
        assert_eq!(field.max_order(), 1);
        let e = laplacian_power::<f64>(*s.domain(), 2).unwrap().scale(&-1.0).unwrap();
        let g = construct_global(&an, &field, &e, 1e-9).unwrap();
        assert_eq!(g.cover.len(), 1);
        assert!(g.cover[0].half_width[0] >= 0.5);
        let t4 = core::f64::consts::TAU.powi(4);
        for v in &g.fields[0].values {
            assert!((v[0] + t4).abs() < 1e-9 && v[1].abs() < 1e-9);
        }
        assert!(g.method_gap < 1e-9);
    }

    #[test]
    fn constant_and_sine_need_several_patches() {
        let s = space(&[(0, Phase::Cos), (1, Phase::Sin)]);
        let an = Analyzer::new(&s, 2, DEFAULT_RANK_TOL).unwrap();
        let grid = Grid::new(s.domain(), 256).unwrap();
        let field = rank_field(&an, &grid).unwrap();
        let e = laplacian_power::<f64>(*s.domain(), 2).unwrap();
        let g = construct_global(&an, &field, &e, 1e-9).unwrap();
        assert!(g.cover.len() >= 2);
        assert!(g.partition.max_sum_error() < 1e-12);
        assert!(g.method_gap < 1e-9);
        let quarter = grid.index_of(0, &[64]);
        for p in g.cover.iter().filter(|p| p.contains(&grid, quarter)) {
            assert_eq!(p.span.indices, vec![MultiIndex::new(vec![0]), MultiIndex::new(vec![2])]);
        }
        for (i, c) in e.terms().zip(g.glued.operator.leading_terms()) {
            assert_eq!(i, c);
        }
    }

    #[test]
    fn empty_seeds_rejected() {
        let s = space(&[(0, Phase::Cos)]);
        let an = Analyzer::new(&s, 0, DEFAULT_RANK_TOL).unwrap();
        let grid = Grid::new(s.domain(), 16).unwrap();
        let field = rank_field(&an, &grid).unwrap();
        assert_eq!(
            build_cover(&an, &field, &[], DEFAULT_MARGIN_FACTOR),
            Err(Error::EmptySeeds)
        );
    }

    #[test]
    fn constant_space_needs_no_correction() {
        let s = FunctionSpace::new(
            Domain::torus(2),
            vec![DomainFn::single(TrigPoly::constant(2, Exact::one()))],
        )
        .unwrap();
        let an = Analyzer::new(&s, 0, DEFAULT_RANK_TOL).unwrap();
        let grid = Grid::new(s.domain(), 8).unwrap();
        let field = rank_field(&an, &grid).unwrap();
        let e = laplacian_power::<f64>(*s.domain(), 1).unwrap();
        let g = construct_global(&an, &field, &e, 1e-12).unwrap();
        assert_eq!(g.glued.residual.sup, 0.0);
        for v in &g.fields[0].values {
            assert_eq!(v[0], 0.0);
        }
    }
}
