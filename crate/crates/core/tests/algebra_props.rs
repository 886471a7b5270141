//! Algebraic invariants of trigonometric polynomials, Sobolev forms and
//! operators. Exact arithmetic serves as the oracle for float arithmetic.

use ellipsis_core::diffop::laplacian_power;
use ellipsis_core::sobolev::{norm_equivalence_constant, sobolev_inner};
use ellipsis_core::{Coefficient, DiffOp, Domain, DomainFn, Exact, FunctionSpace, MultiIndex, Phase, TrigPoly};
use proptest::prelude::*;

const CASES: u32 = 500;

type Term = (Vec<i64>, bool, i64, i64);

fn terms(dim: usize) -> impl Strategy<Value = Vec<Term>> {
    prop::collection::vec(
        (
            prop::collection::vec(-2i64..=2, dim),
            any::<bool>(),
            -6i64..=6,
            1i64..=4,
        ),
        0..5,
    )
}

fn build(dim: usize, t: &[Term]) -> TrigPoly<Exact> {
    TrigPoly::from_terms(
        dim,
        t.iter().map(|(f, s, n, d)| {
            let phase = if *s { Phase::Sin } else { Phase::Cos };
            (f.clone(), phase, Exact::from_ratio(*n, *d))
        }),
    )
    .unwrap()
}

fn poly(dim: usize) -> impl Strategy<Value = TrigPoly<Exact>> {
    terms(dim).prop_map(move |t| build(dim, &t))
}

fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, dim)
}

fn close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: CASES, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn mixed_partials_commute(f in poly(2)) {
        let xy = f.partial(0).unwrap().partial(1).unwrap();
        let yx = f.partial(1).unwrap().partial(0).unwrap();
        prop_assert_eq!(xy, yx);
    }

    #[test]
    fn parseval(f in poly(2)) {
        let direct = f.l2_inner(&f).unwrap();
        let mut sum = Exact::zero();
        for (k, c) in f.terms() {
            let w = if k.is_zero_freq() { Exact::one() } else { Exact::from_ratio(1, 2) };
            sum = &sum + &(&(c * c) * &w);
        }
        prop_assert_eq!(direct, sum);
    }

    #[test]
    fn canonical_form_is_idempotent(f in poly(2), g in poly(2)) {
        let p = f.mul(&g).unwrap();
        prop_assert_eq!(p.recanonicalize(), p.clone());
        let d = p.partial(1).unwrap();
        prop_assert_eq!(d.recanonicalize(), d.clone());
        for (k, _) in p.terms() {
            prop_assert!(!(k.is_zero_freq() && k.phase == Phase::Sin));
            prop_assert!(k.freq.iter().find(|&&m| m != 0).is_none_or(|&m| m > 0));
        }
    }

    #[test]
    fn evaluation_is_multiplicative(f in poly(2), g in poly(2), x in point(2)) {
        let fg = f.mul(&g).unwrap().eval(&x);
        let scale = f.to_f64().terms().map(|(_, c)| c.abs()).sum::<f64>()
            * g.to_f64().terms().map(|(_, c)| c.abs()).sum::<f64>();
        prop_assert!((fg - f.eval(&x) * g.eval(&x)).abs() <= 1e-12 * scale.max(1.0));
    }

    #[test]
    fn float_agrees_with_exact(f in poly(2), g in poly(2), x in point(2)) {
        let (ff, gf) = (f.to_f64(), g.to_f64());
        prop_assert!(close(ff.l2_inner(&gf).unwrap(), f.l2_inner(&g).unwrap().to_f64(), 1e-12));
        prop_assert!(close(
            sobolev_inner(&ff, &gf, 2).unwrap(),
            sobolev_inner(&f, &g, 2).unwrap().to_f64(),
            1e-12
        ));
        let p = ff.mul(&gf).unwrap().partial(0).unwrap();
        let q = f.mul(&g).unwrap().partial(0).unwrap().to_f64();
        prop_assert!(close(p.eval(&x), q.eval(&x), 1e-11));
    }

    #[test]
    fn sobolev_order_zero_is_l2(f in poly(2), g in poly(2)) {
        prop_assert_eq!(sobolev_inner(&f, &g, 0).unwrap(), f.l2_inner(&g).unwrap());
    }

    #[test]
    fn sobolev_norm_is_monotone(f in poly(2), k in 0u32..3) {
        let a = sobolev_inner(&f, &f, k).unwrap();
        let b = sobolev_inner(&f, &f, k + 1).unwrap();
        prop_assert!(b.cmp_value(&a).is_ge());
        // equality exactly when f is constant
        let constant = f.terms().all(|(key, _)| key.is_zero_freq());
        prop_assert_eq!(a == b, constant);
    }

    #[test]
    fn sobolev_form_is_symmetric_and_bilinear(
        f in poly(1), g in poly(1), h in poly(1),
        a in -5i64..=5, b in -5i64..=5, k in 0u32..3,
    ) {
        let (a, b) = (Exact::from_integer(a), Exact::from_integer(b));
        prop_assert_eq!(sobolev_inner(&f, &g, k).unwrap(), sobolev_inner(&g, &f, k).unwrap());
        let comb = f.scale(&a).add(&g.scale(&b)).unwrap();
        let lhs = sobolev_inner(&comb, &h, k).unwrap();
        let rhs = &(&a * &sobolev_inner(&f, &h, k).unwrap()) + &(&b * &sobolev_inner(&g, &h, k).unwrap());
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn norm_constant_at_least_one(t in terms(1), k in 1u32..3) {
        let f = build(1, &t).add(&TrigPoly::constant(1, Exact::one())).unwrap();
        prop_assume!(!f.is_zero());
        let s = FunctionSpace::new(Domain::torus(1), vec![DomainFn::single(f.clone())]).unwrap();
        let c = norm_equivalence_constant(&s, k).unwrap();
        let constant = f.terms().all(|(key, _)| key.is_zero_freq());
        prop_assert!(c >= 1.0 - 1e-12);
        prop_assert_eq!((c - 1.0).abs() < 1e-12, constant);
    }

    #[test]
    fn operators_are_linear(
        f in poly(2), g in poly(2), c in poly(2),
        a in -4i64..=4, b in -4i64..=4,
    ) {
        let d = Domain::torus(2);
        let op = DiffOp::from_terms(d, [
            (MultiIndex::new(vec![2, 0]), Coefficient::Constant(Exact::one())),
            (MultiIndex::new(vec![0, 1]), Coefficient::Analytic(DomainFn::single(c))),
        ]).unwrap();
        let (a, b) = (Exact::from_integer(a), Exact::from_integer(b));
        let (ff, gf) = (DomainFn::single(f), DomainFn::single(g));
        let apply = |h: &DomainFn<Exact>| match op.apply(h).unwrap() {
            ellipsis_core::diffop::Applied::Analytic(r) => r,
            ellipsis_core::diffop::Applied::Sampled(_) => unreachable!(),
        };
        let lhs = apply(&ff.scale(&a).add(&gf.scale(&b)).unwrap());
        let rhs = apply(&ff).scale(&a).add(&apply(&gf).scale(&b)).unwrap();
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn laplacian_powers_have_pure_mode_eigenvalues(
        m in prop::collection::vec(-3i64..=3, 2), sin in any::<bool>(), p in 1u32..3,
    ) {
        let phase = if sin { Phase::Sin } else { Phase::Cos };
        let e = DomainFn::single(TrigPoly::monomial(&m, phase, Exact::one()));
        let op = laplacian_power::<Exact>(Domain::torus(2), p).unwrap();
        let ellipsis_core::diffop::Applied::Analytic(r) = op.apply(&e).unwrap() else { unreachable!() };
        let m2 = m.iter().map(|v| v * v).sum::<i64>();
        let t2 = &Exact::tau() * &Exact::tau();
        let lambda = -&(&t2 * &Exact::from_integer(m2));
        let mut want = Exact::one();
        for _ in 0..p {
            want = &want * &lambda;
        }
        prop_assert_eq!(r, e.scale(&want));
    }
}
