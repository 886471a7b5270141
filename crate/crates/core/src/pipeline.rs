//! End-to-end construction: analysis, choice of reference operator, the
//! constant-rank or stratified path, symbolic lifting and verification.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::diffop::{laplacian_power, Coefficient, DiffOp, Residual, SymbolReport, DEFAULT_SYMBOL_MARGIN};
use crate::error::Error;
use crate::funcspace::FunctionSpace;
use crate::global::{construct_global, rank_field, RankField};
use crate::grid::Grid;
use crate::lift::{lift, Lifted};
use crate::multi_index::MultiIndex;
use crate::pointwise::{jet_closure_order, Analyzer, DEFAULT_RANK_TOL};
use crate::scalar::Scalar;
use crate::sobolev::norm_equivalence_constant;
use crate::strata::{stratified_build, stratify, CoefficientModel, StageReport};

pub const DEFAULT_TOL: f64 = 1e-9;
pub const SYMBOL_DIRECTIONS: usize = 16;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    #[default]
    Auto,
    ConstantRank,
    Stratified,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Path {
    ConstantRank,
    Stratified,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Options<S: Scalar> {
    /// Grid resolution per axis; `None` uses [`Grid::default_for`].
    pub resolution: Option<usize>,
    pub tol: f64,
    pub rank_tol: f64,
    pub method: Method,
    pub elliptic_order: Option<u32>,
    /// Replaces the Laplacian power as reference operator.
    pub reference: Option<DiffOp<S>>,
    pub model: CoefficientModel,
    /// Attempt constant / trigonometric coefficients after construction.
    pub lift: bool,
}

impl<S: Scalar> Default for Options<S> {
    fn default() -> Self {
        Options {
            resolution: None,
            tol: DEFAULT_TOL,
            rank_tol: DEFAULT_RANK_TOL,
            method: Method::Auto,
            elliptic_order: None,
            reference: None,
            model: CoefficientModel::Sampled,
            lift: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CoverSummary {
    pub patches: usize,
    pub method_gap: f64,
    pub partition_error: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LiftSummary {
    /// `None` for constant coefficients.
    pub cutoff: Option<i64>,
    pub residual_bound: f64,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PipelineReport {
    pub functions: usize,
    pub dimension: usize,
    pub components: usize,
    pub resolution: usize,
    pub k_star: u32,
    /// Norm-equivalence constant for `k = max(k*, 1)`.
    pub norm_constant: f64,
    pub rank_min: usize,
    pub rank_max: usize,
    /// Largest spanning order `q`.
    pub max_order: u32,
    pub reference_order: u32,
    pub path: Path,
    /// Why the automatic choice left the constant-rank path.
    pub fallback: Option<String>,
    pub cover: Option<CoverSummary>,
    pub stages: Option<Vec<StageReport>>,
    /// Grid residual of the operator built by the path.
    pub constructed_residual: f64,
    pub lift: Option<LiftSummary>,
    /// Grid residual of the emitted operator.
    pub residual: Residual,
    pub symbol: SymbolReport,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Annihilator<S: Scalar> {
    pub constructed: DiffOp<f64>,
    pub lifted: Option<Lifted<S>>,
    pub report: PipelineReport,
}

impl<S: Scalar> Annihilator<S> {
    /// The lifted operator when available, otherwise the constructed one.
    pub fn operator_f64(&self) -> DiffOp<f64> {
        match &self.lifted {
            Some(l) => l.operator.to_f64(),
            None => self.constructed.clone(),
        }
    }
}

/// `Δ^{e/2}` for even `e`; `∂^e` on the circle for odd `e`.
pub fn reference_of_order<S: Scalar>(space: &FunctionSpace<S>, order: u32) -> Result<DiffOp<S>, Error> {
    let domain = *space.domain();
    if order % 2 == 0 {
        return laplacian_power(domain, order / 2);
    }
    if domain.dimension() == 1 {
        return DiffOp::from_terms(domain, [(MultiIndex::new(alloc::vec![order]), Coefficient::Constant(S::one()))]);
    }
    Err(Error::OutOfRange {
        what: "odd elliptic order in dimension above one",
        value: order as i64,
    })
}

fn choose_reference<S: Scalar>(space: &FunctionSpace<S>, q: u32, options: &Options<S>) -> Result<DiffOp<S>, Error> {
    let e = match (&options.reference, options.elliptic_order) {
        (Some(e), _) => e.clone(),
        (None, Some(order)) => reference_of_order(space, order)?,
        (None, None) => laplacian_power(*space.domain(), q / 2 + 1)?,
    };
    if e.order() <= q {
        return Err(Error::OrderTooLow {
            elliptic_order: e.order(),
            required_above: q,
        });
    }
    Ok(e)
}

fn is_path_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConstantRank { .. }
            | Error::Uncoverable { .. }
            | Error::ResidualTooLarge { .. }
            | Error::SingularDualSystem { .. }
            | Error::StageLimit { .. }
            | Error::MarginViolation { .. }
    )
}

struct Built {
    operator: DiffOp<f64>,
    path: Path,
    cover: Option<CoverSummary>,
    stages: Option<Vec<StageReport>>,
    residual: f64,
}

fn run_global<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    field: &RankField,
    reference: &DiffOp<f64>,
    tol: f64,
) -> Result<Built, Error> {
    let g = construct_global(analyzer, field, reference, tol)?;
    Ok(Built {
        cover: Some(CoverSummary {
            patches: g.cover.len(),
            method_gap: g.method_gap,
            partition_error: g.partition.max_sum_error(),
        }),
        residual: g.glued.residual.sup,
        operator: g.glued.operator,
        path: Path::ConstantRank,
        stages: None,
    })
}

fn run_strata<S: Scalar>(
    analyzer: &Analyzer<'_, S>,
    field: &RankField,
    reference: &DiffOp<f64>,
    tol: f64,
    model: CoefficientModel,
) -> Result<Built, Error> {
    let strat = stratify(analyzer, field)?;
    let out = stratified_build(analyzer, &strat, reference, tol, model)?;
    Ok(Built {
        operator: out.operator,
        path: Path::Stratified,
        cover: None,
        stages: Some(out.stages),
        residual: out.residual.sup,
    })
}

/// Builds an elliptic operator annihilating `space` and verifies it on the grid.
pub fn discover_annihilator<S: Scalar>(
    space: &FunctionSpace<S>,
    options: &Options<S>,
) -> Result<Annihilator<S>, Error> {
    let domain = space.domain();
    let grid = match options.resolution {
        Some(r) => Grid::new(domain, r)?,
        None => Grid::default_for(domain),
    };
    let k_star = jet_closure_order(space);
    let norm_constant = norm_equivalence_constant(space, k_star.max(1))?;
    let analyzer = Analyzer::new(space, k_star, options.rank_tol)?;
    let field = rank_field(&analyzer, &grid)?;
    let q = field.max_order();
    let reference = choose_reference(space, q, options)?;
    let reference_f = reference.to_f64();
    let symbol = reference_f.ellipticity_check(&grid, SYMBOL_DIRECTIONS, DEFAULT_SYMBOL_MARGIN)?;
    if !symbol.passed {
        return Err(Error::NotElliptic {
            min_modulus: symbol.min_modulus,
        });
    }
    let constant = field.is_rank_constant() && field.is_order_constant();
    let mut fallback = None;
    let built = match options.method {
        Method::ConstantRank => run_global(&analyzer, &field, &reference_f, options.tol)?,
        Method::Stratified => run_strata(&analyzer, &field, &reference_f, options.tol, options.model)?,
        Method::Auto => {
            let first = if constant {
                match run_global(&analyzer, &field, &reference_f, options.tol) {
                    Ok(b) => Some(b),
                    Err(e) if is_path_failure(&e) => {
                        fallback = Some(format!("constant-rank path failed: {}", e));
                        None
                    }
                    Err(e) => return Err(e),
                }
            } else {
                fallback = Some(String::from("rank or spanning order varies over the grid"));
                None
            };
            match first {
                Some(b) => b,
                None => run_strata(&analyzer, &field, &reference_f, options.tol, options.model).map_err(|e| {
                    if is_path_failure(&e) {
                        Error::Inconclusive(format!(
                            "{}; stratified path failed: {}",
                            fallback.clone().unwrap_or_default(),
                            e
                        ))
                    } else {
                        e
                    }
                })?,
            }
        }
    };
    let lifted = if options.lift {
        lift(space, &reference, q, options.tol)?
    } else {
        None
    };
    let emitted = match &lifted {
        Some(l) => l.operator.to_f64(),
        None => built.operator.clone(),
    };
    let residual = emitted.residual_on_grid(&space.to_f64(), &grid)?;
    if residual.sup > options.tol {
        return Err(Error::ResidualTooLarge {
            residual: residual.sup,
            tol: options.tol,
            context: String::from("final verification"),
        });
    }
    let symbol = emitted.ellipticity_check(&grid, SYMBOL_DIRECTIONS, DEFAULT_SYMBOL_MARGIN)?;
    let (rank_min, rank_max) = field.rank_range();
    let report = PipelineReport {
        functions: space.len(),
        dimension: domain.dimension(),
        components: domain.components(),
        resolution: grid.resolution(),
        k_star,
        norm_constant,
        rank_min,
        rank_max,
        max_order: q,
        reference_order: reference.order(),
        path: built.path,
        fallback,
        cover: built.cover,
        stages: built.stages,
        constructed_residual: built.residual,
        lift: lifted.as_ref().map(|l| LiftSummary {
            cutoff: l.cutoff,
            residual_bound: l.residual_bound,
        }),
        residual,
        symbol,
    };
    Ok(Annihilator {
        constructed: built.operator,
        lifted,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::Exact;
    use crate::funcspace::{Domain, DomainFn};
    use crate::trig::{Phase, TrigPoly};
    use alloc::vec;

    fn harmonic<S: Scalar>() -> FunctionSpace<S> {
        FunctionSpace::new(
            Domain::torus(1),
            vec![
                DomainFn::single(TrigPoly::monomial(&[1], Phase::Sin, S::one())),
                DomainFn::single(TrigPoly::monomial(&[1], Phase::Cos, S::one())),
            ],
        )
        .unwrap()
    }

    #[test]
    fn harmonic_pair_exact() {
        let s = harmonic::<Exact>();
        let a = discover_annihilator(&s, &Options::default()).unwrap();
        assert_eq!(a.report.path, Path::ConstantRank);
        assert_eq!(a.report.k_star, 1);
        assert_eq!(a.report.reference_order, 2);
        let l = a.lifted.unwrap();
        assert_eq!(l.residual_bound, 0.0);
        let t2 = &Exact::tau() * &Exact::tau();
        assert_eq!(
            l.operator.coefficient(&MultiIndex::zero(1)),
            Some(&Coefficient::Constant(t2))
        );
    }

    #[test]
    fn constant_space_keeps_reference() {
        let s = FunctionSpace::new(Domain::torus(1), vec![DomainFn::single(TrigPoly::constant(1, 1.0))]).unwrap();
        let a = discover_annihilator(&s, &Options::default()).unwrap();
        assert_eq!(a.operator_f64(), laplacian_power(*s.domain(), 1).unwrap());
        assert_eq!(a.report.residual.sup, 0.0);
    }

    #[test]
    fn auto_falls_back_to_strata_on_varying_order() {
        let s = FunctionSpace::new(
            Domain::torus(1),
            vec![
                DomainFn::single(TrigPoly::constant(1, 1.0)),
                DomainFn::single(TrigPoly::monomial(&[1], Phase::Sin, 1.0)),
            ],
        )
        .unwrap();
        let a = discover_annihilator(&s, &Options { lift: false, ..Options::default() }).unwrap();
        assert_eq!(a.report.path, Path::Stratified);
        assert!(a.report.fallback.is_some());
        assert!(a.report.residual.sup <= DEFAULT_TOL);
        assert_eq!(a.report.reference_order, 4);
    }

    #[test]
    fn low_override_is_rejected() {
        let s = harmonic::<f64>();
        let opts = Options {
            elliptic_order: Some(1),
            ..Options::default()
        };
        assert!(matches!(discover_annihilator(&s, &opts), Err(Error::OrderTooLow { .. })));
    }
}
