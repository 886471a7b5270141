//! Subcommand implementations. Each returns a serializable report; the
//! binary prints summaries and writes files.

use std::collections::BTreeMap;

use ellipsis_core::diffop::{Applied, SymbolReport, DEFAULT_SYMBOL_MARGIN};
use ellipsis_core::global::rank_field;
use ellipsis_core::jet::factorial;
use ellipsis_core::pipeline::{discover_annihilator, Annihilator, Options, PipelineReport, SYMBOL_DIRECTIONS};
use ellipsis_core::pointwise::{jet_closure_order, Analyzer};
use ellipsis_core::sobolev::{
    cover_ratios, mode_divergence, norm_equivalence_constant, norm_equivalence_constant_squared, sobolev_gram,
    sobolev_inner_cover, Arc, ChartCover, CoverRatios, DEFAULT_QUADRATURE,
};
use ellipsis_core::strata::{defining_function, stratify};
use ellipsis_core::witness::{build_counterexample, refute_operator, Refutation};
use ellipsis_core::{DiffOp, FunctionSpace, Grid, MultiIndex, Phase, Scalar, TrigPoly};
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::schema::{operator_file, OperatorFile};
use crate::value::{CoeffValue, Codec};

fn grid_for(space_domain: &ellipsis_core::Domain, resolution: Option<usize>) -> Result<Grid, CliError> {
    Ok(match resolution {
        Some(r) => Grid::new(space_domain, r)?,
        None => Grid::default_for(space_domain),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointReport {
    pub component: usize,
    pub x: Vec<f64>,
    pub rank: usize,
    pub order: u32,
    pub indices: Vec<MultiIndex>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalyzeReport {
    pub k_star: u32,
    pub resolution: usize,
    pub rank_constant: bool,
    pub order_constant: bool,
    /// Points per rank.
    pub histogram: BTreeMap<usize, usize>,
    /// Points decided in exact arithmetic.
    pub exact_points: usize,
    pub points: Vec<PointReport>,
}

pub fn analyze<S: Scalar>(
    space: &FunctionSpace<S>,
    resolution: Option<usize>,
    rank_tol: f64,
) -> Result<AnalyzeReport, CliError> {
    let grid = grid_for(space.domain(), resolution)?;
    let k_star = jet_closure_order(space);
    let analyzer = Analyzer::new(space, k_star, rank_tol)?;
    let field = rank_field(&analyzer, &grid)?;
    let points = (0..grid.len())
        .map(|i| PointReport {
            component: grid.component_of(i),
            x: grid.coords(i),
            rank: field.ranks[i],
            order: field.orders[i],
            indices: field.spans[i].indices.clone(),
        })
        .collect();
    Ok(AnalyzeReport {
        k_star,
        resolution: grid.resolution(),
        rank_constant: field.is_rank_constant(),
        order_constant: field.is_order_constant(),
        histogram: field.rank_histogram(),
        exact_points: field.exact_points,
        points,
    })
}

/// Arc cover of the circle as read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverFile {
    pub arcs: Vec<Arc>,
    #[serde(default = "default_quadrature")]
    pub resolution: usize,
}

fn default_quadrature() -> usize {
    DEFAULT_QUADRATURE
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoverReport {
    pub arcs: Vec<Arc>,
    pub resolution: usize,
    /// Gram matrix of the cover inner product.
    pub gram: Vec<Vec<f64>>,
    /// Observed ratio range against the torus inner product.
    pub ratios: CoverRatios,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SobolevReport {
    pub k: u32,
    pub gram: Vec<Vec<f64>>,
    /// Exact Gram entries in exact mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram_exact: Option<Vec<Vec<CoeffValue>>>,
    pub constant: f64,
    /// `C²` when every basis element is an eigenvector of the Sobolev form.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant_squared: Option<CoeffValue>,
    /// `‖sin 2πmx‖_{2,k} / ‖sin 2πmx‖_{L²}` for `m = 1..`.
    pub ratios: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cover: Option<CoverReport>,
}

/// Fixed sample set for cover ratios: the basis plus modes up to frequency 8.
fn cover_samples(space: &FunctionSpace<f64>) -> Vec<TrigPoly<f64>> {
    let mut out: Vec<TrigPoly<f64>> = space.basis().iter().map(|f| f.part(0).clone()).collect();
    out.push(TrigPoly::constant(1, 1.0));
    for m in 1..=8 {
        for phase in [Phase::Cos, Phase::Sin] {
            out.push(TrigPoly::monomial(&[m], phase, 1.0));
        }
    }
    out
}

pub fn sobolev<S: Codec>(
    space: &FunctionSpace<S>,
    k: u32,
    modes: u32,
    cover: Option<&CoverFile>,
) -> Result<SobolevReport, CliError> {
    let gram = sobolev_gram(space, k)?;
    let to_rows = |m: &ellipsis_core::Mat<f64>| (0..m.rows()).map(|i| m.row(i).to_vec()).collect::<Vec<_>>();
    let gram_exact = S::EXACT.then(|| {
        (0..gram.rows())
            .map(|i| gram.row(i).iter().map(Codec::encode).collect())
            .collect()
    });
    let cover = match cover {
        None => None,
        Some(c) => {
            let d = space.domain();
            if d.dimension() != 1 || d.components() != 1 {
                return Err(CliError::invalid("chart covers are defined on a single circle"));
            }
            let chart = ChartCover::new(c.arcs.clone(), c.resolution)?;
            let fs = space.to_f64();
            let parts: Vec<&TrigPoly<f64>> = fs.basis().iter().map(|f| f.part(0)).collect();
            let mut g = vec![vec![0.0; parts.len()]; parts.len()];
            for i in 0..parts.len() {
                for j in 0..parts.len() {
                    g[i][j] = sobolev_inner_cover(parts[i], parts[j], k, &chart)?;
                }
            }
            Some(CoverReport {
                arcs: c.arcs.clone(),
                resolution: c.resolution,
                gram: g,
                ratios: cover_ratios(&chart, k, &cover_samples(&fs))?,
            })
        }
    };
    Ok(SobolevReport {
        k,
        gram: to_rows(&gram.to_f64()),
        gram_exact,
        constant: norm_equivalence_constant(space, k)?,
        constant_squared: norm_equivalence_constant_squared(space, k)?.map(|c| c.encode()),
        ratios: mode_divergence(k, modes)?,
        cover,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnnihilateReport {
    pub warnings: Vec<String>,
    pub pipeline: PipelineReport,
}

/// The emitted operator: the symbolic lift in the space's mode when one
/// exists, otherwise the constructed operator in float mode.
pub fn emitted_file<S: Codec>(a: &Annihilator<S>) -> OperatorFile {
    let symbol = Some(a.report.symbol.clone());
    match &a.lifted {
        Some(l) => operator_file(&l.operator, symbol),
        None => operator_file(&a.constructed, symbol),
    }
}

pub fn annihilate<S: Codec>(
    space: &FunctionSpace<S>,
    options: &Options<S>,
) -> Result<(Annihilator<S>, OperatorFile), CliError> {
    let a = discover_annihilator(space, options).map_err(CliError::from_construction)?;
    let file = emitted_file(&a);
    Ok((a, file))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Offender {
    pub point: usize,
    pub component: usize,
    pub x: Vec<f64>,
    /// 0-based basis index.
    pub function: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub resolution: usize,
    pub tol: f64,
    /// `max |P f_j(x)|` over grid points and basis functions.
    pub residual_sup: f64,
    /// Symbolic check in exact mode: every `P f_j` is identically zero.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub exact_zero: Option<bool>,
    pub symbol: SymbolReport,
    pub offenders: Vec<Offender>,
    pub passed: bool,
}

/// Evaluates `Σ_I c_I(x) ∂^I f_j(x)` at every grid point directly from the
/// coefficients and derivatives, without the operator's own application.
pub fn grid_residuals(op: &DiffOp<f64>, space: &FunctionSpace<f64>, grid: &Grid) -> Result<Vec<Vec<f64>>, CliError> {
    let coords: Vec<Vec<f64>> = (0..grid.len()).map(|i| grid.coords(i)).collect();
    let mut coeffs = Vec::new();
    for (idx, c) in op.terms() {
        let values = (0..grid.len()).map(|i| c.eval_at(grid, i)).collect::<Result<Vec<_>, _>>()?;
        coeffs.push((idx.clone(), values));
    }
    let mut out = Vec::with_capacity(space.len());
    for f in space.basis() {
        let mut acc = vec![0.0; grid.len()];
        for (idx, values) in &coeffs {
            let d = f.derivative(idx)?;
            for (i, a) in acc.iter_mut().enumerate() {
                *a += values[i] * d.eval(grid.component_of(i), &coords[i]);
            }
        }
        out.push(acc);
    }
    Ok(out)
}

fn exact_zero<S: Scalar>(op: &DiffOp<S>, space: &FunctionSpace<S>) -> Result<Option<bool>, CliError> {
    if !S::EXACT || op.sampled_grid().is_some() {
        return Ok(None);
    }
    for f in space.basis() {
        match op.apply(f)? {
            Applied::Analytic(h) if h.is_zero() => {}
            _ => return Ok(Some(false)),
        }
    }
    Ok(Some(true))
}

pub fn verify<S: Codec>(
    op: &DiffOp<S>,
    space: &FunctionSpace<S>,
    resolution: Option<usize>,
    tol: f64,
    top: usize,
) -> Result<VerifyReport, CliError> {
    if op.domain() != space.domain() {
        return Err(CliError::invalid(format!(
            "operator lives on {:?} but the space on {:?}",
            op.domain(),
            space.domain()
        )));
    }
    let grid = match (op.sampled_grid(), resolution) {
        (Some(g), Some(r)) if g.resolution() != r => {
            return Err(CliError::invalid(format!(
                "operator is sampled at resolution {}, requested {}",
                g.resolution(),
                r
            )))
        }
        (Some(g), _) => g,
        (None, r) => grid_for(space.domain(), r)?,
    };
    let fop = op.to_f64();
    let residuals = grid_residuals(&fop, &space.to_f64(), &grid)?;
    let mut all: Vec<Offender> = Vec::new();
    let mut sup = 0.0f64;
    for (j, r) in residuals.iter().enumerate() {
        for (i, v) in r.iter().enumerate() {
            sup = sup.max(v.abs());
            all.push(Offender {
                point: i,
                component: grid.component_of(i),
                x: grid.coords(i),
                function: j,
                value: *v,
            });
        }
    }
    all.sort_by(|a, b| b.value.abs().total_cmp(&a.value.abs()));
    all.truncate(top);
    let symbol = fop.ellipticity_check(&grid, SYMBOL_DIRECTIONS, DEFAULT_SYMBOL_MARGIN)?;
    let exact_zero = exact_zero(op, space)?;
    let passed = sup <= tol && symbol.passed && exact_zero != Some(false);
    Ok(VerifyReport {
        resolution: grid.resolution(),
        tol,
        residual_sup: sup,
        exact_zero,
        symbol,
        offenders: all,
        passed,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessReport {
    pub n_max: usize,
    /// Derivatives `f^{(0..=n)}(1/n)` keyed by `n`.
    pub jets: BTreeMap<usize, Vec<f64>>,
    /// Coefficients `a_0..a_d` of the refuted operator (all equal to one).
    pub coefficients: Vec<f64>,
    pub refutation: Refutation,
    /// `|a_d(1/d)|·d!`.
    pub expected: f64,
}

pub fn witness(n_max: usize, order: usize) -> Result<WitnessReport, CliError> {
    let f = build_counterexample(n_max)?;
    let mut jets = BTreeMap::new();
    for n in 2..=n_max {
        jets.insert(n, f.jets_at(1.0 / n as f64, n)?.derivatives());
    }
    let coefficients = vec![1.0; order + 1];
    let polys: Vec<TrigPoly<f64>> = coefficients.iter().map(|c| TrigPoly::constant(1, *c)).collect();
    let refutation = refute_operator(&f, &polys)?;
    Ok(WitnessReport {
        n_max,
        jets,
        coefficients,
        expected: refutation.leading.abs() * factorial(order),
        refutation,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumReport {
    pub stage: usize,
    pub max_rank: usize,
    pub order: u32,
    pub tuple: Vec<MultiIndex>,
    pub chosen_at: PointReport,
    /// Grid points of `V_k`.
    pub members: usize,
    /// Grid points left in `F_{k+1}`.
    pub remaining: usize,
    pub margin: f64,
    /// Terms of the symbolic defining function; absent when sampled.
    pub defining_terms: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratifyReport {
    pub k_star: u32,
    pub resolution: usize,
    pub max_order: u32,
    pub stages: Vec<StratumReport>,
}

pub fn stratify_space<S: Scalar>(
    space: &FunctionSpace<S>,
    resolution: Option<usize>,
    rank_tol: f64,
) -> Result<StratifyReport, CliError> {
    let grid = grid_for(space.domain(), resolution)?;
    let k_star = jet_closure_order(space);
    let analyzer = Analyzer::new(space, k_star, rank_tol)?;
    let field = rank_field(&analyzer, &grid)?;
    let strat = stratify(&analyzer, &field).map_err(CliError::from_construction)?;
    let mut stages = Vec::with_capacity(strat.stages.len());
    for (k, s) in strat.stages.iter().enumerate() {
        let g = defining_function(space, &s.tuple, &grid)?;
        let z = s.chosen_at;
        stages.push(StratumReport {
            stage: k + 1,
            max_rank: s.max_rank,
            order: s.order(),
            tuple: s.tuple.indices.clone(),
            chosen_at: PointReport {
                component: grid.component_of(z),
                x: grid.coords(z),
                rank: field.ranks[z],
                order: field.orders[z],
                indices: field.spans[z].indices.clone(),
            },
            members: s.members.len(),
            remaining: s.remaining,
            margin: s.margin,
            defining_terms: g.term_count(),
        });
    }
    Ok(StratifyReport {
        k_star,
        resolution: grid.resolution(),
        max_order: strat.max_order(),
        stages,
    })
}
