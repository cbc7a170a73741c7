//! Main implementations against the independent oracles, over many random
//! instances and a few different spaces.

use h1stiefel::group_u::{frame_unitary, group_residual};
use h1stiefel::oracle::{adjoint_by_definition, h1_norm_by_sampling, pinv_on_range, sqrt_eig};
use h1stiefel::sample::{self, trial_rng};
use h1stiefel::stiefel::{cross_section, radius_r, sqrt_f, sqrt_f_argument, ReferenceFrame};
use h1stiefel::two_norm_space::{adjoint_h1, adjoint_l2, build_space, h1_operator_norm, GramPair, SpaceSpec};

const INSTANCES: u32 = 100;

fn spaces() -> Vec<GramPair> {
    [SpaceSpec::new(1, 16, 0.25), SpaceSpec::new(1, 9, 0.1), SpaceSpec::new(2, 4, 0.5)]
        .iter()
        .map(|s| build_space(s).unwrap())
        .collect()
}

#[test]
fn adjoints_match_their_definition() {
    for (k, g) in spaces().iter().enumerate() {
        for i in 0..INSTANCES {
            let mut rng = trial_rng(1, k as u32, i);
            let a = sample::complex_gaussian(&mut rng, g.n(), g.n());
            let fast = adjoint_l2(&a, g).unwrap();
            let slow = adjoint_by_definition(&a, g).unwrap();
            assert!((fast - slow).norm() <= 1e-10 * a.norm());
        }
    }
}

#[test]
fn h1_norm_dominates_sampled_ratios() {
    let g = &spaces()[0];
    for i in 0..INSTANCES {
        let mut rng = trial_rng(2, 0, i);
        let a = sample::complex_gaussian(&mut rng, g.n(), g.n());
        let exact = h1_operator_norm(&a, g).unwrap();
        let sampled = h1_norm_by_sampling(&a, g, 16, &mut rng);
        assert!(sampled <= exact * (1.0 + 1e-12));
        assert!(sampled >= 0.1 * exact);
        // ||A||_H1 = ||A^#||_H1 for the H1 adjoint
        let adj = adjoint_h1(&a, g).unwrap();
        assert!((h1_operator_norm(&adj, g).unwrap() - exact).abs() <= 1e-9 * exact);
    }
}

#[test]
fn binomial_square_root_matches_eigen_root() {
    for (k, g) in spaces().iter().enumerate() {
        let reference = ReferenceFrame::smooth(g, 2).unwrap();
        for i in 0..INSTANCES {
            let mut rng = trial_rng(3, k as u32, i);
            let v = sample::random_stiefel(&mut rng, &reference);
            let w = sample::sqrt_pair(&mut rng, &v, 0.8);
            let a = sqrt_f_argument(&v, &w).unwrap();
            let root = sqrt_f(&v, &w).unwrap();
            assert!((&root - sqrt_eig(&a, g).unwrap()).norm() <= 1e-8);
        }
    }
}

#[test]
fn cross_section_and_pseudo_inverse() {
    let g = &spaces()[0];
    let reference = ReferenceFrame::smooth(g, 2).unwrap();
    for i in 0..INSTANCES {
        let mut rng = trial_rng(4, 0, i);
        let v = sample::random_stiefel(&mut rng, &reference);
        let v1 = sample::nearby_stiefel(&mut rng, &v, radius_r(&v));
        let cs = cross_section(&v, &v1).unwrap();
        assert!((cs.sigma.matrix() * v.matrix() - v1.matrix()).norm() <= 1e-9);
        assert!(group_residual(cs.sigma.matrix(), g) <= 1e-9);

        // T1 maps range(P) onto range(P1): P1 T1 = T1 and T1 vanishes off P
        assert!((&cs.p1 * &cs.t1 - &cs.t1).norm() <= 1e-9);
        let pinv = pinv_on_range(&cs.p, &(&cs.p * &cs.p1 * &cs.p), g).unwrap();
        assert!((&cs.p * &cs.p1 * &cs.p * &pinv - &cs.p).norm() <= 1e-8);
    }
}

#[test]
fn frame_unitary_moves_frames() {
    for (k, g) in spaces().iter().enumerate() {
        for i in 0..INSTANCES {
            let mut rng = trial_rng(5, k as u32, i);
            let f0 = sample::random_frame(&mut rng, g, 3);
            let f1 = sample::random_frame(&mut rng, g, 3);
            let u = frame_unitary(f0.matrix(), f1.matrix(), g).unwrap();
            assert!((u.matrix() * f0.matrix() - f1.matrix()).norm() <= 1e-9);
            assert!(group_residual(u.matrix(), g) <= 1e-10);
        }
    }
}
