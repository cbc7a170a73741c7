//! Random test inputs: Gaussian matrices, frames, Stiefel points near a given
//! point, projections and group elements.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grassmann::{act_grassmann, ProjectionOperator};
use crate::group_u::{exp_skew, GroupElement, SkewOperator};
use crate::linalg::{complete_basis, CMat, C64};
use crate::stiefel::{act, frame_to_operator, ReferenceFrame, StiefelFrame, StiefelOperator};
use crate::two_norm_space::{h1_operator_norm, GramPair};

/// Independent generator for trial `index` of a run seeded with `seed`.
/// Each `(stream, index)` pair gets its own ChaCha stream, so results do not
/// depend on the order trials are evaluated in.
pub fn trial_rng(seed: u64, stream: u32, index: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((stream as u64) << 32) | index as u64);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMat {
    CMat::from_fn(rows, cols, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
}

/// Uniform point on the unit sphere of `R^len`.
pub fn unit_vector<R: Rng + ?Sized>(rng: &mut R, len: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..len).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// L2-orthonormal frame with `k` columns.
pub fn random_frame<R: Rng + ?Sized>(rng: &mut R, g: &GramPair, k: usize) -> StiefelFrame {
    loop {
        let z = complex_gaussian(rng, g.n(), k);
        let q = complete_basis(&CMat::zeros(g.n(), 0), &z, g.gl2(), 1e-8, k);
        if q.ncols() == k {
            return StiefelFrame::new(q, g).expect("Gram-Schmidt output is orthonormal");
        }
    }
}

pub fn random_stiefel<R: Rng + ?Sized>(rng: &mut R, reference: &ReferenceFrame) -> StiefelOperator {
    let phi = random_frame(rng, reference.gram(), reference.rank());
    frame_to_operator(&phi, reference).expect("random frame is orthonormal")
}

pub fn random_projection<R: Rng + ?Sized>(rng: &mut R, g: &GramPair, rank: usize) -> ProjectionOperator {
    let h = random_frame(rng, g, rank);
    crate::grassmann::projection_from_frame(h.matrix(), g).expect("random frame is orthonormal")
}

pub fn random_group_element<R: Rng + ?Sized>(rng: &mut R, g: &GramPair, scale: f64) -> GroupElement {
    exp_skew(&SkewOperator::random(rng, g, scale), g).expect("exponential of a bounded generator")
}

/// Point `g(t)` along `t -> e^{tX} . base` whose distance to the base is just
/// below `target`, found by bracketing and bisection in `t`.
fn along_orbit<T, F, D>(g: &GramPair, x: &SkewOperator, target: f64, mut apply: F, dist: D) -> Option<T>
where
    F: FnMut(&GroupElement) -> Option<T>,
    D: Fn(&T) -> f64,
{
    let mut eval = |t: f64| -> Option<(T, f64)> {
        let u = exp_skew(&x.scale(t), g).ok()?;
        let point = apply(&u)?;
        let d = dist(&point);
        Some((point, d))
    };
    let mut hi = 1e-3;
    while eval(hi)?.1 < target {
        hi *= 2.0;
        if hi > 1e3 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..48 {
        let mid = 0.5 * (lo + hi);
        if eval(mid)?.1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    eval(lo).map(|(p, _)| p)
}

/// `e^{tX} V` at H1 distance just below `target` from `V`, for a random
/// generator `X`.
pub fn stiefel_at_distance<R: Rng + ?Sized>(rng: &mut R, v: &StiefelOperator, target: f64) -> StiefelOperator {
    let g = v.gram();
    loop {
        let x = SkewOperator::random(rng, g, 1.0);
        let found = along_orbit(
            g,
            &x,
            target,
            |u| act(u, v).ok(),
            |w: &StiefelOperator| h1_operator_norm(&(w.matrix() - v.matrix()), g).unwrap(),
        );
        if let Some(w) = found {
            return w;
        }
    }
}

/// A Stiefel point at a random distance in `[max_dist / 2, max_dist)` from `v`.
pub fn nearby_stiefel<R: Rng + ?Sized>(rng: &mut R, v: &StiefelOperator, max_dist: f64) -> StiefelOperator {
    let frac: f64 = rng.random_range(0.5..0.999);
    stiefel_at_distance(rng, v, frac * max_dist)
}

/// `e^{tX} P e^{-tX}` at H1 distance just below `target` from `P`.
pub fn projection_at_distance<R: Rng + ?Sized>(rng: &mut R, p: &ProjectionOperator, target: f64) -> ProjectionOperator {
    let g = p.gram();
    loop {
        let x = SkewOperator::random(rng, g, 1.0);
        let found = along_orbit(
            g,
            &x,
            target,
            |u| act_grassmann(u, p).ok(),
            |q: &ProjectionOperator| h1_operator_norm(&(q.matrix() - p.matrix()), g).unwrap(),
        );
        if let Some(q) = found {
            return q;
        }
    }
}

/// A point `W = e^{tX} V` for which the series argument of
/// [`crate::stiefel::sqrt_f`] has L2 norm at most `rho_max`, halving `t`
/// from 1 as needed.
pub fn sqrt_pair<R: Rng + ?Sized>(rng: &mut R, v: &StiefelOperator, rho_max: f64) -> StiefelOperator {
    let g = v.gram();
    let x = SkewOperator::random(rng, g, 1.0);
    let mut t = 1.0;
    loop {
        if let Ok(u) = exp_skew(&x.scale(t), g) {
            if let Ok(w) = act(&u, v) {
                if crate::stiefel::sqrt_f_rho(v, &w).is_ok_and(|rho| rho <= rho_max) {
                    return w;
                }
            }
        }
        t *= 0.5;
    }
}

/// Group element acting on `S` by a random unitary `Q` in the `Xi` basis and
/// as the identity on the L2-complement of `S`.
pub fn rotation_of_s<R: Rng + ?Sized>(rng: &mut R, reference: &ReferenceFrame) -> GroupElement {
    let k = reference.rank();
    let g = reference.gram();
    let q = loop {
        let z = complex_gaussian(rng, k, k);
        let q = complete_basis(&CMat::zeros(k, 0), &z, &CMat::identity(k, k), 1e-8, k);
        if q.ncols() == k {
            break q;
        }
    };
    let xi = reference.xi();
    let u = xi * q * xi.adjoint() * g.gl2() + CMat::identity(g.n(), g.n()) - reference.projector();
    GroupElement::new(u, g, 1e-9).expect("unitary on S, identity elsewhere")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::two_norm_space::{build_space, orthonormality_residual, SpaceSpec};
    use rand::RngCore;

    #[test]
    fn trial_streams_are_independent_of_order() {
        let a: Vec<u64> = (0..4).map(|i| trial_rng(42, 0, i).next_u64()).collect();
        let b: Vec<u64> = (0..4).rev().map(|i| trial_rng(42, 0, i).next_u64()).collect();
        assert_eq!(a, b.into_iter().rev().collect::<Vec<_>>());
        assert_ne!(trial_rng(42, 0, 0).next_u64(), trial_rng(42, 1, 0).next_u64());
        assert_ne!(trial_rng(42, 0, 0).next_u64(), trial_rng(43, 0, 0).next_u64());
    }

    #[test]
    fn frames_and_distances() {
        let g = build_space(&SpaceSpec::new(1, 16, 0.25)).unwrap();
        let mut rng = trial_rng(1, 0, 0);
        let f = random_frame(&mut rng, &g, 3);
        assert!(orthonormality_residual(f.matrix(), &g) < 1e-12);
        let r = ReferenceFrame::smooth(&g, 2).unwrap();
        let v = random_stiefel(&mut rng, &r);
        let w = stiefel_at_distance(&mut rng, &v, 0.01);
        let d = h1_operator_norm(&(w.matrix() - v.matrix()), &g).unwrap();
        assert!(d < 0.01 && d > 0.0099);
        let u = unit_vector(&mut rng, 5);
        assert!((u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-14);
    }
}
