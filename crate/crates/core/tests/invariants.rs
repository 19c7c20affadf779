use proptest::prelude::*;
use purity_core::metrics::variation_distance;
use purity_core::operator::evolve;
use purity_core::static_error::{delta, delta_expanded, PerturbedStatePair};
use purity_core::stats::spearman;
use purity_core::*;

fn hermitian(d: usize) -> impl Strategy<Value = HermitianOperator> {
    prop::collection::vec(-2.0f64..2.0, 2 * d * d).prop_map(move |xs| {
        let m = ComplexMatrix::from_fn(d, d, |i, j| C64::new(xs[i * d + j], xs[d * d + i * d + j]));
        HermitianOperator::new((&m + m.adjoint()) * C64::new(0.5, 0.0)).unwrap()
    })
}

fn state(d: usize) -> impl Strategy<Value = PureState> {
    prop::collection::vec(-1.0f64..1.0, 2 * d)
        .prop_filter("nonzero", |xs| xs.iter().map(|x| x * x).sum::<f64>() > 1e-3)
        .prop_map(move |xs| {
            PureState::normalized(ComplexVector::from_fn(d, |i, _| C64::new(xs[i], xs[d + i]))).unwrap()
        })
}

fn system_parts() -> impl Strategy<Value = (HermitianOperator, HermitianOperator, PureState)> {
    (2usize..7).prop_flat_map(|d| (hermitian(d), hermitian(d), state(d)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn evolution_conserves_norm((h, _, psi) in system_parts(), t in -50.0f64..50.0) {
        let out = evolve(&h, &psi, t).unwrap();
        prop_assert!((out.amplitudes().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn evolution_is_a_group((h, _, psi) in system_parts(), t1 in -10.0f64..10.0, t2 in -10.0f64..10.0) {
        let joint = evolve(&h, &psi, t1 + t2).unwrap();
        let stepped = evolve(&h, &evolve(&h, &psi, t1).unwrap(), t2).unwrap();
        prop_assert!((joint.amplitudes() - stepped.amplitudes()).norm() < 1e-10);
    }

    #[test]
    fn energy_is_conserved((h, _, psi) in system_parts(), t in 0.0f64..20.0) {
        let e0 = expectation(&h, &psi).unwrap();
        let et = expectation(&h, &evolve(&h, &psi, t).unwrap()).unwrap();
        prop_assert!((e0 - et).abs() < 1e-10);
    }

    #[test]
    fn purity_is_bounded_and_affine_invariant((a, _, _) in system_parts(), shift in -5.0f64..5.0, scale in 0.1f64..10.0) {
        let d = a.dim() as f64;
        let eta = purity(&a).unwrap();
        prop_assert!(eta >= 1.0 / d - 1e-12 && eta <= 1.0 + 1e-12);
        let moved = a.scaled(scale).shifted(shift);
        prop_assert!((purity(&moved).unwrap() - eta).abs() < 1e-9);
    }

    #[test]
    fn purity_is_unitarily_invariant((a, h, _) in system_parts()) {
        let u = h.spectrum().unwrap().vectors.clone();
        let rotated = a.conjugated(&u).unwrap();
        prop_assert!((purity(&rotated).unwrap() - purity(&a).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn static_error_ignores_identity_shifts(
        (a, _, psi) in system_parts(),
        shift in -5.0f64..5.0,
        gamma in 0.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let perp = purity_core::ensemble::orthogonal_companion(&mut SeedSpec::new(seed).rng(), &psi).unwrap();
        let pair = PerturbedStatePair::new(psi, perp, gamma).unwrap();
        let base = delta(&a, &pair).unwrap();
        prop_assert!((delta(&a.shifted(shift), &pair).unwrap() - base).abs() < 1e-10);
        prop_assert!((delta_expanded(&a, &pair).unwrap() - base).abs() < 1e-10);
    }

    #[test]
    fn variation_distance_is_a_bounded_metric(
        raw in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..10)
    ) {
        let norm = |v: Vec<f64>| { let s: f64 = v.iter().sum(); v.into_iter().map(|x| x / s).collect::<Vec<_>>() };
        prop_assume!(raw.iter().map(|r| r.0).sum::<f64>() > 1e-3 && raw.iter().map(|r| r.1).sum::<f64>() > 1e-3);
        let p = norm(raw.iter().map(|r| r.0).collect());
        let q = norm(raw.iter().map(|r| r.1).collect());
        let dpq = variation_distance(&p, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&dpq));
        prop_assert!((dpq - variation_distance(&q, &p).unwrap()).abs() < 1e-15);
        prop_assert!(variation_distance(&p, &p).unwrap() < 1e-15);
    }

    #[test]
    fn spearman_is_rank_invariant(xs in prop::collection::vec(-10.0f64..10.0, 3..12)) {
        let ys: Vec<f64> = xs.iter().map(|x| x.powi(3) + 2.0).collect();
        let idx: Vec<f64> = (0..xs.len()).map(|i| i as f64).collect();
        let r = spearman(&idx, &xs);
        prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
        prop_assert!((spearman(&idx, &ys) - r).abs() < 1e-12);
    }
}
