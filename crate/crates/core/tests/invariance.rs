//! Changing the basis of a space by an invertible matrix must not change any
//! decision: closure order, rank field, spans, or the construction outcome.

use ellipsis_core::global::rank_field;
use ellipsis_core::pipeline::{discover_annihilator, Options};
use ellipsis_core::pointwise::{jet_closure_order, Analyzer, DEFAULT_RANK_TOL};
use ellipsis_core::{Domain, DomainFn, Exact, FunctionSpace, Grid, Mat, Phase, Scalar, TrigPoly};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn mono<S: Scalar>(freq: &[i64], phase: Phase) -> TrigPoly<S> {
    TrigPoly::monomial(freq, phase, S::one())
}

fn corpus<S: Scalar>() -> Vec<FunctionSpace<S>> {
    let one = |d| TrigPoly::constant(d, S::one());
    let product = mono::<S>(&[1, 0], Phase::Sin).mul(&mono(&[0, 1], Phase::Cos)).unwrap();
    vec![
        FunctionSpace::new(
            Domain::torus(1),
            vec![
                DomainFn::single(mono(&[1], Phase::Sin)),
                DomainFn::single(mono(&[1], Phase::Cos)),
            ],
        )
        .unwrap(),
        FunctionSpace::new(
            Domain::torus(1),
            vec![DomainFn::single(one(1)), DomainFn::single(mono(&[1], Phase::Sin))],
        )
        .unwrap(),
        FunctionSpace::new(
            Domain::torus(1),
            vec![
                DomainFn::single(mono(&[1], Phase::Cos)),
                DomainFn::single(mono(&[2], Phase::Sin)),
                DomainFn::single(one(1)),
            ],
        )
        .unwrap(),
        FunctionSpace::new(
            Domain::torus(2),
            vec![DomainFn::single(product), DomainFn::single(mono(&[0, 1], Phase::Sin))],
        )
        .unwrap(),
    ]
}

fn random_invertible<S: Scalar>(rng: &mut ChaCha8Rng, n: usize) -> Mat<S> {
    loop {
        let m = Mat::from_fn(n, n, |_, _| S::from_i64(rng.gen_range(-3..=3)));
        if !m.det().is_zero() {
            return m;
        }
    }
}

fn assert_same_decisions<S: Scalar>(a: &FunctionSpace<S>, b: &FunctionSpace<S>, resolution: usize) {
    assert_eq!(jet_closure_order(a), jet_closure_order(b));
    let k = jet_closure_order(a);
    let grid = Grid::new(a.domain(), resolution).unwrap();
    let fa = rank_field(&Analyzer::new(a, k, DEFAULT_RANK_TOL).unwrap(), &grid).unwrap();
    let fb = rank_field(&Analyzer::new(b, k, DEFAULT_RANK_TOL).unwrap(), &grid).unwrap();
    assert_eq!(fa.ranks, fb.ranks);
    assert_eq!(fa.orders, fb.orders);
    assert_eq!(fa.spans, fb.spans);
}

#[test]
fn float_decisions_ignore_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for s in corpus::<f64>() {
        let res = if s.domain().dimension() == 1 { 128 } else { 16 };
        for _ in 0..10 {
            let m = random_invertible::<f64>(&mut rng, s.len());
            let t = s.change_basis(&m).unwrap();
            assert_same_decisions(&s, &t, res);
        }
    }
}

#[test]
fn exact_decisions_ignore_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for s in corpus::<Exact>() {
        let res = if s.domain().dimension() == 1 { 24 } else { 12 };
        for _ in 0..3 {
            let m = random_invertible::<Exact>(&mut rng, s.len());
            let t = s.change_basis(&m).unwrap();
            assert_same_decisions(&s, &t, res);
        }
    }
}

#[test]
fn construction_outcome_ignores_basis() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for s in corpus::<f64>() {
        let res = if s.domain().dimension() == 1 { 64 } else { 16 };
        let opts = Options {
            resolution: Some(res),
            lift: false,
            ..Options::default()
        };
        let base = discover_annihilator(&s, &opts).unwrap();
        for _ in 0..3 {
            let t = s.change_basis(&random_invertible::<f64>(&mut rng, s.len())).unwrap();
            let other = discover_annihilator(&t, &opts).unwrap();
            assert_eq!(base.report.path, other.report.path);
            assert_eq!(base.report.max_order, other.report.max_order);
            assert!(base.report.residual.sup <= opts.tol);
            assert!(other.report.residual.sup <= opts.tol);
            // the operator built for one basis also annihilates the other
            assert!(base.constructed.residual_on_grid(&t, &Grid::new(s.domain(), res).unwrap()).unwrap().sup <= 1e-8);
        }
    }
}
