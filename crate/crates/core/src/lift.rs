//! Symbolic lifting: lower-order coefficients as constants or trigonometric
//! polynomials so that `E + Σ c_I ∂^I` annihilates the space identically.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::diffop::{Applied, Coefficient, DiffOp};
use crate::error::Error;
use crate::funcspace::{DomainFn, FunctionSpace};
use crate::linalg::Mat;
use crate::multi_index::MultiIndex;
use crate::scalar::Scalar;
use crate::trig::{keys_up_to, TrigKey, TrigPoly};

/// Frequency cutoffs tried after constant coefficients.
pub const TRIG_CUTOFFS: [i64; 3] = [1, 2, 4];
/// Columns above which a trigonometric lift is not attempted.
pub const MAX_LIFT_UNKNOWNS: usize = 400;

#[derive(Clone, Debug, PartialEq)]
pub struct Lifted<S: Scalar> {
    pub operator: DiffOp<S>,
    /// `None` for constant coefficients.
    pub cutoff: Option<i64>,
    /// `max_j Σ |coefficients of P f_j|`, a bound on the sup-norm residual.
    pub residual_bound: f64,
}

fn coefficient_bound<S: Scalar>(f: &DomainFn<S>) -> f64 {
    f.parts()
        .iter()
        .map(|p| p.terms().fold(0.0, |acc, (_, c)| acc + c.to_f64().abs()))
        .fold(0.0, f64::max)
}

/// Residual bound of a symbolic operator on every basis function; `None`
/// when some coefficient is sampled.
pub fn symbolic_residual<S: Scalar>(op: &DiffOp<S>, space: &FunctionSpace<S>) -> Result<Option<f64>, Error> {
    let mut worst: f64 = 0.0;
    for f in space.basis() {
        match op.apply(f)? {
            Applied::Analytic(h) => worst = worst.max(coefficient_bound(&h)),
            Applied::Sampled(_) => return Ok(None),
        }
    }
    Ok(Some(worst))
}

/// Per component, solves for trigonometric coefficients of `∂^I`, `|I| ≤ max_order`,
/// with frequencies `|m|∞ ≤ cutoff`.
pub fn lift_with_cutoff<S: Scalar>(
    space: &FunctionSpace<S>,
    reference: &DiffOp<S>,
    max_order: u32,
    cutoff: i64,
    tol: f64,
) -> Result<Option<Lifted<S>>, Error> {
    let domain = *space.domain();
    let dim = domain.dimension();
    if max_order >= reference.order() {
        return Err(Error::OrderTooLow {
            elliptic_order: reference.order(),
            required_above: max_order,
        });
    }
    let images = space
        .basis()
        .iter()
        .map(|f| match reference.apply(f)? {
            Applied::Analytic(h) => Ok(Some(h)),
            Applied::Sampled(_) => Ok(None),
        })
        .collect::<Result<Option<Vec<_>>, Error>>()?;
    let Some(images) = images else {
        return Ok(None);
    };
    let indices = MultiIndex::up_to(dim, max_order);
    let keys = keys_up_to(dim, cutoff);
    let unknowns = indices.len() * keys.len();
    if unknowns > MAX_LIFT_UNKNOWNS {
        return Ok(None);
    }
    let monomials: Vec<TrigPoly<S>> = keys
        .iter()
        .map(|k| TrigPoly::monomial(&k.freq, k.phase, S::one()))
        .collect();
    let derivs = space
        .basis()
        .iter()
        .map(|f| indices.iter().map(|i| f.derivative(i)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    let mut coefficients: Vec<Vec<TrigPoly<S>>> = vec![Vec::new(); indices.len()];
    for comp in 0..domain.components() {
        // columns[u][j] = (key_t · ∂^I f_j) on this component, u = (I, t)
        let mut columns: Vec<Vec<TrigPoly<S>>> = Vec::with_capacity(unknowns);
        for i in 0..indices.len() {
            for m in &monomials {
                columns.push(
                    derivs
                        .iter()
                        .map(|d| m.mul(d[i].part(comp)))
                        .collect::<Result<Vec<_>, _>>()?,
                );
            }
        }
        let mut rows: BTreeMap<(usize, TrigKey), usize> = BTreeMap::new();
        let mut note = |j: usize, k: &TrigKey| {
            let n = rows.len();
            rows.entry((j, k.clone())).or_insert(n);
        };
        for (j, h) in images.iter().enumerate() {
            for (k, _) in h.part(comp).terms() {
                note(j, k);
            }
        }
        for col in &columns {
            for (j, p) in col.iter().enumerate() {
                for (k, _) in p.terms() {
                    note(j, k);
                }
            }
        }
        let nrows = rows.len();
        let mut a = Mat::zeros(nrows, unknowns);
        let mut b = vec![S::zero(); nrows];
        for (u, col) in columns.iter().enumerate() {
            for (j, p) in col.iter().enumerate() {
                for (k, c) in p.terms() {
                    a[(rows[&(j, k.clone())], u)] = c.clone();
                }
            }
        }
        for (j, h) in images.iter().enumerate() {
            for (k, c) in h.part(comp).terms() {
                b[rows[&(j, k.clone())]] = -c.clone();
            }
        }
        let scale = a.to_f64().max_abs().max(1.0);
        let Some(x) = S::solve(&a, &b, 1e-12 * scale) else {
            return Ok(None);
        };
        for (i, coeff) in coefficients.iter_mut().enumerate() {
            let terms = keys
                .iter()
                .enumerate()
                .map(|(t, k)| (k.freq.clone(), k.phase, x[i * keys.len() + t].clone()));
            coeff.push(TrigPoly::from_terms(dim, terms)?);
        }
    }
    let mut op = reference.clone();
    for (idx, parts) in indices.into_iter().zip(coefficients) {
        if parts.iter().all(TrigPoly::is_zero) {
            continue;
        }
        let uniform = parts.iter().all(|p| p.max_freq() == 0 && *p == parts[0]);
        let c = if uniform {
            let v = parts[0]
                .terms()
                .next()
                .map(|(_, v)| v.clone())
                .unwrap_or_else(S::zero);
            Coefficient::Constant(v)
        } else {
            Coefficient::Analytic(DomainFn::from_parts(parts))
        };
        op.add_term(idx, c)?;
    }
    let residual_bound = symbolic_residual(&op, space)?.expect("symbolic operator");
    let scale = images.iter().map(coefficient_bound).fold(1.0, f64::max);
    if residual_bound > tol * scale {
        return Ok(None);
    }
    Ok(Some(Lifted {
        operator: op,
        cutoff: if cutoff == 0 { None } else { Some(cutoff) },
        residual_bound,
    }))
}

/// Constant coefficients first, then trigonometric cutoffs `1, 2, 4`.
pub fn lift<S: Scalar>(
    space: &FunctionSpace<S>,
    reference: &DiffOp<S>,
    max_order: u32,
    tol: f64,
) -> Result<Option<Lifted<S>>, Error> {
    for cutoff in core::iter::once(0).chain(TRIG_CUTOFFS) {
        if let Some(l) = lift_with_cutoff(space, reference, max_order, cutoff, tol)? {
            return Ok(Some(l));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffop::laplacian_power;
    use crate::exact::Exact;
    use crate::funcspace::Domain;
    use crate::trig::Phase;

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
    fn minus_fourth_derivative_gains_tau_to_the_fourth() {
        let s = harmonic::<Exact>();
        let d = *s.domain();
        let e = DiffOp::from_terms(
            d,
            [(MultiIndex::new(vec![4]), Coefficient::Constant(-Exact::one()))],
        )
        .unwrap();
        let l = lift(&s, &e, 1, 0.0).unwrap().unwrap();
        assert_eq!(l.cutoff, None);
        assert_eq!(l.residual_bound, 0.0);
        let t2 = &Exact::tau() * &Exact::tau();
        let t4 = &t2 * &t2;
        assert_eq!(
            l.operator.coefficient(&MultiIndex::new(vec![0])),
            Some(&Coefficient::Constant(t4))
        );
        assert_eq!(l.operator.len(), 2);
    }

    #[test]
    fn product_eigenfunction_in_float() {
        let s1 = TrigPoly::monomial(&[1, 0], Phase::Sin, 1.0);
        let s2 = TrigPoly::monomial(&[0, 1], Phase::Sin, 1.0);
        let s = FunctionSpace::new(Domain::torus(2), vec![DomainFn::single(s1.mul(&s2).unwrap())]).unwrap();
        let e = laplacian_power::<f64>(*s.domain(), 2).unwrap();
        let l = lift(&s, &e, 2, 1e-12).unwrap().unwrap();
        let Some(Coefficient::Constant(c)) = l.operator.coefficient(&MultiIndex::zero(2)) else {
            panic!("constant coefficient expected")
        };
        let want = -4.0 * core::f64::consts::TAU.powi(4);
        assert!((c - want).abs() <= 1e-10 * want.abs());
    }

    #[test]
    fn variable_coefficients_need_a_cutoff() {
        // f = 2 + cos: needs a(x) f + b(x) f' with degree-one trig coefficients
        let f = TrigPoly::constant(1, Exact::from_integer(2))
            .add(&TrigPoly::monomial(&[1], Phase::Cos, Exact::one()))
            .unwrap();
        let s = FunctionSpace::new(Domain::torus(1), vec![DomainFn::single(f)]).unwrap();
        let e = laplacian_power::<Exact>(*s.domain(), 1).unwrap();
        assert!(lift_with_cutoff(&s, &e, 0, 0, 0.0).unwrap().is_none());
        let l = lift(&s, &e, 1, 0.0).unwrap().unwrap();
        assert!(l.cutoff.is_some());
        assert_eq!(l.residual_bound, 0.0);
    }

    #[test]
    fn sampled_reference_is_not_lifted() {
        let s = harmonic::<f64>();
        let grid = crate::grid::Grid::new(s.domain(), 8).unwrap();
        let e = DiffOp::from_terms(
            *s.domain(),
            [(
                MultiIndex::new(vec![2]),
                Coefficient::Sampled(crate::grid::GridField::constant(grid, 1.0)),
            )],
        )
        .unwrap();
        assert!(lift(&s, &e, 1, 1e-9).unwrap().is_none());
    }
}
