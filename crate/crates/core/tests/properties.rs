use proptest::prelude::*;

use h1stiefel::geometry::{norm_sandwich_check, schatten_norm, NormSpec};
use h1stiefel::grassmann::{act_grassmann, delta_p, grassmann_equivalence, lie_split_grassmann};
use h1stiefel::group_u::{exp_skew, group_residual, lie_residual, SkewOperator};
use h1stiefel::matrix_io::{matrix_to_json, parse_matrix};
use h1stiefel::sample::{self, trial_rng};
use h1stiefel::stiefel::{
    act, binomial_tail, lie_split_stiefel, operator_to_frame, projection_of, stiefel_residual, tangent_project,
    ReferenceFrame,
};
use h1stiefel::two_norm_space::{build_space, h1_operator_norm, SpaceSpec};

fn space(points: usize, spacing: f64, rank: usize) -> ReferenceFrame {
    let g = build_space(&SpaceSpec::new(1, points, spacing)).unwrap();
    ReferenceFrame::smooth(&g, rank).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn group_action_stays_on_the_manifold(
        seed in any::<u64>(),
        points in 4usize..12,
        spacing in 0.05f64..2.0,
        rank in 1usize..4,
        scale in 0.01f64..3.0,
    ) {
        let r = space(points, spacing, rank);
        let g = r.gram();
        let mut rng = trial_rng(seed, 0, 0);
        let v = sample::random_stiefel(&mut rng, &r);
        let x = SkewOperator::random(&mut rng, g, scale);
        prop_assert!(lie_residual(x.matrix(), g) < 1e-12);
        let u = exp_skew(&x, g).unwrap();
        prop_assert!(group_residual(u.matrix(), g) < 1e-10);
        let w = act(&u, &v).unwrap();
        prop_assert!(stiefel_residual(w.matrix(), &r) < 1e-9);
        let back = act(&u.inverse(g), &w).unwrap();
        prop_assert!((back.matrix() - v.matrix()).norm() < 1e-9);
        let frame = operator_to_frame(&w).unwrap();
        prop_assert!((frame.matrix() - w.matrix() * r.xi()).norm() < 1e-12);
    }

    #[test]
    fn projections_and_splits(
        seed in any::<u64>(),
        points in 4usize..12,
        rank in 1usize..4,
    ) {
        let r = space(points, 0.3, rank);
        let g = r.gram();
        let mut rng = trial_rng(seed, 1, 0);
        let v = sample::random_stiefel(&mut rng, &r);
        let p = projection_of(&v).unwrap();
        let pm = p.matrix();
        prop_assert!((pm * pm - pm).norm() < 1e-10 * pm.norm());
        prop_assert!((pm.trace().re - rank as f64).abs() < 1e-9);

        let x = SkewOperator::random(&mut rng, g, 1.0);
        let (xg, xh) = lie_split_stiefel(&x, &p);
        prop_assert!((xg.matrix() + xh.matrix() - x.matrix()).norm() < 1e-12 * x.matrix().norm());
        prop_assert!((xg.matrix() * pm).norm() < 1e-10 * x.matrix().norm());
        let (xd, _) = lie_split_grassmann(&x, &p);
        prop_assert!(delta_p(xd.matrix(), &p).norm() < 1e-10 * x.matrix().norm());

        let y = sample::complex_gaussian(&mut rng, g.n(), g.n());
        let e = tangent_project(&y, &v);
        prop_assert!((tangent_project(&e, &v) - &e).norm() < 1e-10 * e.norm().max(1.0));

        let u = sample::random_group_element(&mut rng, g, 1.0);
        let q = act_grassmann(&u, &p).unwrap();
        prop_assert!((q.matrix() * q.matrix() - q.matrix()).norm() < 1e-9 * q.matrix().norm());
    }

    #[test]
    fn norms_are_ordered(seed in any::<u64>(), rank in 1usize..4) {
        let r = space(10, 0.2, rank);
        let g = r.gram();
        let mut rng = trial_rng(seed, 2, 0);
        let v1 = sample::random_stiefel(&mut rng, &r);
        let v2 = sample::random_stiefel(&mut rng, &r);
        let d = v1.matrix() - v2.matrix();
        let op = h1_operator_norm(&d, g).unwrap();
        let s2 = schatten_norm(&d, NormSpec::Schatten(2.0), g).unwrap();
        let s1 = schatten_norm(&d, NormSpec::Schatten(1.0), g).unwrap();
        prop_assert!(op <= s2 * (1.0 + 1e-12) && s2 <= s1 * (1.0 + 1e-12));
        prop_assert!((schatten_norm(&d, NormSpec::OperatorH1, g).unwrap() - op).abs() < 1e-10 * op);
        for spec in [NormSpec::Schatten(1.5), NormSpec::Schatten(f64::INFINITY)] {
            prop_assert!(norm_sandwich_check(&v1, &v2, spec).unwrap().ok);
        }
    }

    #[test]
    fn rotations_on_s_are_equivalent(seed in any::<u64>(), rank in 1usize..4) {
        let r = space(8, 0.5, rank);
        let mut rng = trial_rng(seed, 3, 0);
        let v = sample::random_stiefel(&mut rng, &r);
        let rot = sample::rotation_of_s(&mut rng, &r);
        let w = h1stiefel::stiefel::StiefelOperator::from_matrix(v.matrix() * rot.matrix(), &r, 1e-9).unwrap();
        prop_assert!(grassmann_equivalence(&v, &w).unwrap().is_equivalent());
    }

    #[test]
    fn binomial_tail_decreases(s in 0usize..500) {
        prop_assert!(binomial_tail(s + 1) < binomial_tail(s));
        prop_assert!(binomial_tail(s) <= 1.0);
    }

    #[test]
    fn matrix_json_round_trips(seed in any::<u64>(), rows in 1usize..6, cols in 1usize..6) {
        let mut rng = trial_rng(seed, 4, 0);
        let m = sample::complex_gaussian(&mut rng, rows, cols);
        prop_assert_eq!(parse_matrix(&matrix_to_json(&m).to_string()).unwrap(), m);
    }
}
