//! Stratified construction for spaces whose rank or spanning order varies:
//! a descending chain of grid sets, Gram-determinant defining functions, and
//! the corrected operators `E_n, …, E_1`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::diffop::{Applied, Coefficient, DiffOp, Residual, SymbolReport};
use crate::error::Error;
use crate::funcspace::{DomainFn, FunctionSpace};
use crate::global::RankField;
use crate::grid::{Grid, GridField};
use crate::linalg::{self, Mat};
use crate::multi_index::MultiIndex;
use crate::pointwise::{Analyzer, FunctionalSpan, ZERO_JET_FLOOR};
use crate::scalar::Scalar;
use crate::trig::TrigPoly;

pub const MAX_STAGES: usize = 32;
/// Symbolic defining functions larger than this fall back to grid samples.
pub const MAX_SYMBOLIC_TERMS: usize = 1_000_000;
/// Smallest admissible `|g_k|` on `V_k`.
pub const DIVISION_FLOOR: f64 = 1e-14;

/// One step of the chain.
#[derive(Clone, Debug, PartialEq)]
pub struct Stage {
    pub tuple: FunctionalSpan,
    /// Largest rank on `F_k`.
    pub max_rank: usize,
    /// Grid index of the point the tuple was chosen at.
    pub chosen_at: usize,
    /// `V_k ∩ F_k`: points of `F_k` where the tuple is independent.
    pub members: Vec<usize>,
    /// `|F_{k+1}|`.
    pub remaining: usize,
    /// Smallest `σ_min` of the tuple rows over the members.
    pub margin: f64,
}

impl Stage {
    pub fn order(&self) -> u32 {
        self.tuple.order()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stratification {
    pub grid: Grid,
    pub stages: Vec<Stage>,
}

impl Stratification {
    /// `q = max_k q_k`.
    pub fn max_order(&self) -> u32 {
        self.stages.iter().map(Stage::order).max().unwrap_or(0)
    }

    /// Membership mask of `F_k` (1-based stage number).
    pub fn closed_set(&self, stage: usize) -> Vec<bool> {
        let mut mask = vec![true; self.grid.len()];
        for s in &self.stages[..stage - 1] {
            for &i in &s.members {
                mask[i] = false;
            }
        }
        mask
    }
}

fn tuple_key(span: &FunctionalSpan) -> (u32, &[MultiIndex]) {
    (span.order(), &span.indices)
}

/// Independence of the tuple at a point with the same rule used to pick spans.
fn tuple_margin<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    grid: &Grid,
    index: usize,
    tuple: &FunctionalSpan,
) -> (bool, f64) {
    if tuple.indices.is_empty() {
        return (true, f64::INFINITY);
    }
    let comp = grid.component_of(index);
    let x = grid.coords(index);
    let full = analyzer.frame_jet(comp, &x);
    let smax = linalg::singular_values(&full).first().copied().unwrap_or(0.0);
    if smax < ZERO_JET_FLOOR {
        return (false, 0.0);
    }
    let threshold = analyzer.tol() * smax;
    let sel = analyzer.frame_rows(comp, &x, &tuple.indices);
    let rows: Vec<Vec<f64>> = (0..sel.rows()).map(|i| sel.row(i).to_vec()).collect();
    let independent = linalg::greedy_independent(&rows, threshold).len() == rows.len();
    (independent, linalg::row_margin(&sel))
}

pub fn stratify<S: Scalar>(analyzer: &Analyzer<'_, S>, field: &RankField) -> Result<Stratification, Error> {
    let grid = field.grid;
    let mut in_f = vec![true; grid.len()];
    let mut left = grid.len();
    let mut stages = Vec::new();
    while left > 0 {
        if stages.len() == MAX_STAGES {
            return Err(Error::StageLimit { stages: MAX_STAGES });
        }
        let max_rank = (0..grid.len())
            .filter(|&i| in_f[i])
            .map(|i| field.ranks[i])
            .max()
            .unwrap_or(0);
        let chosen_at = (0..grid.len())
            .filter(|&i| in_f[i] && field.ranks[i] == max_rank)
            .min_by(|&a, &b| tuple_key(&field.spans[a]).cmp(&tuple_key(&field.spans[b])))
            .expect("nonempty set");
        let tuple = field.spans[chosen_at].clone();
        let mut members = Vec::new();
        let mut margin = f64::INFINITY;
        for i in (0..grid.len()).filter(|&i| in_f[i]) {
            let (ok, m) = if field.ranks[i] == 0 && tuple.indices.is_empty() {
                (true, f64::INFINITY)
            } else {
                tuple_margin(analyzer, &grid, i, &tuple)
            };
            if ok {
                members.push(i);
                margin = margin.min(m);
            }
        }
        if members.is_empty() {
            return Err(Error::StageLimit {
                stages: stages.len() + 1,
            });
        }
        for &i in &members {
            in_f[i] = false;
        }
        left -= members.len();
        stages.push(Stage {
            tuple,
            max_rank,
            chosen_at,
            members,
            remaining: left,
            margin,
        });
    }
    Ok(Stratification { grid, stages })
}

/// Nonnegative function vanishing exactly where a tuple loses rank.
#[derive(Clone, Debug, PartialEq)]
pub enum DefiningFunction<S: Scalar> {
    Symbolic(DomainFn<S>),
    /// Fallback when the symbolic form grows too large.
    Sampled(GridField),
}

impl<S: Scalar> DefiningFunction<S> {
    pub fn values(&self, grid: &Grid) -> Vec<f64> {
        match self {
            DefiningFunction::Symbolic(g) => (0..grid.len())
                .map(|i| g.eval(grid.component_of(i), &grid.coords(i)))
                .collect(),
            DefiningFunction::Sampled(f) => f.values().to_vec(),
        }
    }

    pub fn term_count(&self) -> Option<usize> {
        match self {
            DefiningFunction::Symbolic(g) => Some(g.term_count()),
            DefiningFunction::Sampled(_) => None,
        }
    }

    pub fn as_coefficient(&self) -> Coefficient<S> {
        match self {
            DefiningFunction::Symbolic(g) => Coefficient::Analytic(g.clone()),
            DefiningFunction::Sampled(f) => Coefficient::Sampled(f.clone()),
        }
    }
}

struct TermLimit;

fn det_symbolic<S: Scalar>(m: &[Vec<DomainFn<S>>]) -> Result<DomainFn<S>, TermLimit> {
    let n = m.len();
    if n == 1 {
        return Ok(m[0][0].clone());
    }
    let mut acc: Option<DomainFn<S>> = None;
    for col in 0..n {
        if m[0][col].is_zero() {
            continue;
        }
        let minor: Vec<Vec<DomainFn<S>>> = m[1..]
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter(|(j, _)| *j != col)
                    .map(|(_, v)| v.clone())
                    .collect()
            })
            .collect();
        let sub = det_symbolic(&minor)?;
        let mut term = m[0][col].mul(&sub).expect("shapes agree");
        if col % 2 == 1 {
            term = term.scale(&-S::one());
        }
        acc = Some(match acc {
            None => term,
            Some(a) => a.add(&term).expect("shapes agree"),
        });
        if acc.as_ref().map_or(0, DomainFn::term_count) > MAX_SYMBOLIC_TERMS {
            return Err(TermLimit);
        }
    }
    Ok(acc.unwrap_or_else(|| m[0][0].scale(&S::zero())))
}

/// `det(J Jᵀ)` where `J` holds the tuple functionals (scaled by `(2π)^{-|I|}`)
/// on an L²-orthonormal basis; computed with the inverse Gram matrix so no
/// square roots are needed.
pub fn defining_function<S: Scalar>(
    space: &FunctionSpace<S>,
    tuple: &FunctionalSpan,
    grid: &Grid,
) -> Result<DefiningFunction<S>, Error> {
    let domain = space.domain();
    if tuple.indices.is_empty() {
        return Ok(DefiningFunction::Symbolic(DomainFn::from_parts(vec![
            TrigPoly::constant(domain.dimension(), S::one());
            domain.components()
        ])));
    }
    let nb = space.len();
    let gram = space.l2_gram();
    let mut inv = Mat::zeros(nb, nb);
    for k in 0..nb {
        let mut e = vec![S::zero(); nb];
        e[k] = S::one();
        let col = S::solve(&gram, &e, 0.0).ok_or(Error::SingularGram)?;
        for (j, v) in col.into_iter().enumerate() {
            inv[(j, k)] = v;
        }
    }
    let rows = tuple
        .indices
        .iter()
        .map(|idx| {
            space
                .basis()
                .iter()
                .map(|f| f.derivative_unscaled(idx))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    let weighted: Vec<Vec<DomainFn<S>>> = rows
        .iter()
        .map(|row| {
            (0..nb)
                .map(|j| {
                    (0..nb).fold(DomainFn::zero(domain), |acc, k| {
                        acc.add(&row[k].scale(&inv[(j, k)])).expect("shapes agree")
                    })
                })
                .collect()
        })
        .collect();
    let m = rows.len();
    let mut kernel = vec![vec![DomainFn::zero(domain); m]; m];
    for a in 0..m {
        for b in a..m {
            let v = (0..nb).try_fold(DomainFn::zero(domain), |acc, j| {
                acc.add(&rows[a][j].mul(&weighted[b][j])?)
            })?;
            kernel[b][a] = v.clone();
            kernel[a][b] = v;
        }
    }
    match det_symbolic(&kernel) {
        Ok(g) => Ok(DefiningFunction::Symbolic(g)),
        Err(TermLimit) => {
            let frame = space.orthonormal_f64()?;
            let values = (0..grid.len())
                .map(|i| {
                    let comp = grid.component_of(i);
                    let x = grid.coords(i);
                    let j = Mat::from_fn(m, nb, |a, k| {
                        frame.basis()[k]
                            .derivative_unscaled(&tuple.indices[a])
                            .map(|d| d.eval(comp, &x))
                            .unwrap_or(0.0)
                    });
                    j.matmul(&j.transpose()).det()
                })
                .collect();
            Ok(DefiningFunction::Sampled(GridField::new(*grid, values)))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CoefficientModel {
    /// Pointwise values on the stratum, zero elsewhere.
    Sampled,
    /// Least-squares trigonometric fit up to the given frequency, doubled up
    /// to three times on failure.
    Trig { cutoff: i64 },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StageReport {
    pub stage: usize,
    pub max_rank: usize,
    pub order: u32,
    pub tuple: Vec<MultiIndex>,
    pub members: usize,
    pub remaining: usize,
    /// Terms of the symbolic defining function (absent when sampled).
    pub defining_terms: Option<usize>,
    pub fit_residual: f64,
    /// Frequency cutoff that succeeded (trig model).
    pub cutoff: Option<i64>,
    /// Largest `|g_k G_k|` coefficient on the grid points of `F_{k+1}`.
    pub zero_set_change: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StratifiedOperator {
    pub operator: DiffOp<f64>,
    pub stages: Vec<StageReport>,
    pub residual: Residual,
    pub symbol: SymbolReport,
}

struct StageFit {
    coefficients: Vec<Coefficient<f64>>,
    residual: f64,
    cutoff: Option<i64>,
}

/// Fits `Σ_i c_i(x) P_i f(x) = target_f(x)` on the members.
fn fit_stage(
    frame_rows: &[DMatrix<f64>],
    targets: &[DVector<f64>],
    members: &[usize],
    grid: &Grid,
    model: CoefficientModel,
    m: usize,
    tol: f64,
    stage: usize,
) -> Result<StageFit, Error> {
    let scale = targets.iter().fold(1.0f64, |s, t| s.max(t.amax()));
    match model {
        CoefficientModel::Sampled => {
            let mut fields = vec![vec![0.0; grid.len()]; m];
            let mut residual: f64 = 0.0;
            for (k, &i) in members.iter().enumerate() {
                let a = frame_rows[k].transpose();
                let c = linalg::lstsq(&a, &targets[k]);
                let r = (&a * &c - &targets[k]).amax();
                let allowed = tol * targets[k].amax().max(1.0);
                if r > allowed {
                    return Err(Error::ResidualTooLarge {
                        residual: r,
                        tol: allowed,
                        context: format!("stage {} fit at grid point {}", stage, i),
                    });
                }
                residual = residual.max(r);
                for (f, v) in fields.iter_mut().zip(c.iter()) {
                    f[i] = *v;
                }
            }
            Ok(StageFit {
                coefficients: fields
                    .into_iter()
                    .map(|v| Coefficient::Sampled(GridField::new(*grid, v)))
                    .collect(),
                residual,
                cutoff: None,
            })
        }
        CoefficientModel::Trig { cutoff } => {
            let mut cut = cutoff.max(0);
            let mut last = f64::INFINITY;
            for _ in 0..=3 {
                match fit_trig(frame_rows, targets, members, grid, m, cut) {
                    Some((coefficients, residual)) if residual <= tol * scale => {
                        return Ok(StageFit {
                            coefficients,
                            residual,
                            cutoff: Some(cut),
                        })
                    }
                    Some((_, r)) => last = r,
                    None => {}
                }
                cut = (cut * 2).max(1);
            }
            Err(Error::ResidualTooLarge {
                residual: last,
                tol: tol * scale,
                context: format!("stage {} trigonometric fit up to frequency {}", stage, cut / 2),
            })
        }
    }
}

fn fit_trig(
    frame_rows: &[DMatrix<f64>],
    targets: &[DVector<f64>],
    members: &[usize],
    grid: &Grid,
    m: usize,
    cutoff: i64,
) -> Option<(Vec<Coefficient<f64>>, f64)> {
    let dim = grid.dimension();
    let keys = crate::trig::keys_up_to(dim, cutoff);
    let nk = keys.len();
    let mut parts: Vec<Vec<TrigPoly<f64>>> = vec![Vec::new(); m];
    let mut residual: f64 = 0.0;
    for comp in 0..grid.components() {
        let local: Vec<usize> = (0..members.len())
            .filter(|&k| grid.component_of(members[k]) == comp)
            .collect();
        if local.is_empty() {
            for p in parts.iter_mut() {
                p.push(TrigPoly::zero(dim));
            }
            continue;
        }
        let nb = targets[local[0]].len();
        let rows = local.len() * nb;
        let mut a = DMatrix::zeros(rows, m * nk);
        let mut b = DVector::zeros(rows);
        for (r, &k) in local.iter().enumerate() {
            let x = grid.coords(members[k]);
            let basis_vals: Vec<f64> = keys
                .iter()
                .map(|key| key.eval(&x))
                .collect();
            for j in 0..nb {
                let row = r * nb + j;
                b[row] = targets[k][j];
                for i in 0..m {
                    let p = frame_rows[k][(i, j)];
                    for (t, bv) in basis_vals.iter().enumerate() {
                        a[(row, i * nk + t)] = p * bv;
                    }
                }
            }
        }
        let sol = linalg::lstsq(&a, &b);
        residual = residual.max((&a * &sol - &b).amax());
        for (i, p) in parts.iter_mut().enumerate() {
            let terms = keys
                .iter()
                .enumerate()
                .map(|(t, key)| (key.freq.clone(), key.phase, sol[i * nk + t]));
            p.push(TrigPoly::from_terms(dim, terms).ok()?);
        }
    }
    Some((
        parts
            .into_iter()
            .map(|p| Coefficient::Analytic(DomainFn::from_parts(p)))
            .collect(),
        residual,
    ))
}

/// Descends from the last stage to the first: fits the top stage directly,
/// then each lower stage against `E_{k+1} f / g_k`, setting
/// `E_k = E_{k+1} − g_k G_k`. Verifies `E_1` on the whole grid.
pub fn stratified_build<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    strat: &Stratification,
    reference: &DiffOp<f64>,
    tol: f64,
    model: CoefficientModel,
) -> Result<StratifiedOperator, Error> {
    let space = analyzer.space();
    let frame = analyzer.frame();
    let grid = strat.grid;
    let q = strat.max_order();
    if reference.order() <= q {
        return Err(Error::OrderTooLow {
            elliptic_order: reference.order(),
            required_above: q,
        });
    }
    let n = strat.stages.len();
    let mut current = reference.clone();
    let mut reports = vec![None; n];
    for k in (0..n).rev() {
        let stage = &strat.stages[k];
        let top = k == n - 1;
        let g = if top {
            None
        } else {
            Some(defining_function(space, &stage.tuple, &grid)?)
        };
        let g_values = g.as_ref().map(|g| g.values(&grid));
        let m = stage.tuple.rank();
        let images: Vec<GridField> = frame
            .basis()
            .iter()
            .map(|f| current.apply_on_grid(f, &grid))
            .collect::<Result<_, _>>()?;
        let mut rows = Vec::with_capacity(stage.members.len());
        let mut targets = Vec::with_capacity(stage.members.len());
        for &i in &stage.members {
            let comp = grid.component_of(i);
            let x = grid.coords(i);
            let divisor = match &g_values {
                None => 1.0,
                Some(v) => {
                    if v[i].abs() < DIVISION_FLOOR {
                        return Err(Error::MarginViolation {
                            stage: k + 1,
                            point: i,
                            value: v[i],
                        });
                    }
                    v[i]
                }
            };
            rows.push(DMatrix::from_fn(m, frame.len(), |a, j| {
                frame.basis()[j]
                    .derivative(&stage.tuple.indices[a])
                    .map(|d| d.eval(comp, &x))
                    .unwrap_or(f64::NAN)
            }));
            targets.push(DVector::from_iterator(
                frame.len(),
                images.iter().map(|im| im.get(i) / divisor),
            ));
        }
        let fit = if m == 0 {
            StageFit {
                coefficients: Vec::new(),
                residual: targets.iter().fold(0.0, |s, t| s.max(t.amax())),
                cutoff: None,
            }
        } else {
            fit_stage(&rows, &targets, &stage.members, &grid, model, m, tol, k + 1)?
        };
        let mut correction = DiffOp::zero(*space.domain());
        for (idx, c) in stage.tuple.indices.iter().zip(&fit.coefficients) {
            let c = match &g {
                None => c.clone(),
                Some(g) => c.mul(&g.as_coefficient().to_f64(), space.domain())?,
            };
            correction.add_term(idx.clone(), c)?;
        }
        let mut zero_set_change: f64 = 0.0;
        if g.is_some() {
            let f_next = strat.closed_set(k + 2);
            for (_, c) in correction.terms() {
                for i in (0..grid.len()).filter(|&i| f_next[i]) {
                    zero_set_change = zero_set_change.max(c.eval_at(&grid, i)?.abs());
                }
            }
        }
        current = current.sub(&correction)?;
        reports[k] = Some(StageReport {
            stage: k + 1,
            max_rank: stage.max_rank,
            order: stage.order(),
            tuple: stage.tuple.indices.clone(),
            members: stage.members.len(),
            remaining: stage.remaining,
            defining_terms: g.as_ref().and_then(DefiningFunction::term_count),
            fit_residual: fit.residual,
            cutoff: fit.cutoff,
            zero_set_change,
        });
    }
    let residual = current.residual_on_grid(&space.to_f64(), &grid)?;
    let symbol = current.ellipticity_check(&grid, 16, crate::diffop::DEFAULT_SYMBOL_MARGIN)?;
    if residual.sup > tol {
        return Err(Error::ResidualTooLarge {
            residual: residual.sup,
            tol,
            context: format!(
                "stratified operator at grid point {} on basis function {}",
                residual.point,
                residual.function + 1
            ),
        });
    }
    Ok(StratifiedOperator {
        operator: current,
        stages: reports.into_iter().map(|r| r.expect("every stage visited")).collect(),
        residual,
        symbol,
    })
}

/// Applies an operator and returns grid values, whatever its coefficient kinds.
pub fn apply_values<S: Scalar>(op: &DiffOp<S>, f: &DomainFn<S>, grid: &Grid) -> Result<Vec<f64>, Error> {
    Ok(match op.apply(f)? {
        Applied::Sampled(g) => g.values().to_vec(),
        Applied::Analytic(h) => (0..grid.len())
            .map(|i| h.eval(grid.component_of(i), &grid.coords(i)))
            .collect(),
    })
}
