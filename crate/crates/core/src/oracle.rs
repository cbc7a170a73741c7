//! Naive reference implementations used to cross-check the main routes.
//!
//! Nothing here shares arithmetic with the production paths: the Gram
//! factor is the Hermitian square root from an eigendecomposition (the main
//! code uses Cholesky), adjoints come from LU solves of the defining
//! equations, and restricted inverses come from an SVD pseudo-inverse.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, CMat, CVec, C64};
use crate::two_norm_space::GramPair;

/// Hermitian square root and inverse square root of a positive definite `G`.
pub fn gram_sqrt(gm: &CMat) -> (CMat, CMat) {
    let eig = nalgebra::SymmetricEigen::new((gm + gm.adjoint()) * c(0.5));
    let n = gm.nrows();
    let mut s = CMat::zeros(n, n);
    let mut si = CMat::zeros(n, n);
    for k in 0..n {
        let v = eig.eigenvectors.column(k);
        let lam = eig.eigenvalues[k];
        let outer = v * v.adjoint();
        s += &outer * c(lam.sqrt());
        si += &outer * c(1.0 / lam.sqrt());
    }
    (s, si)
}

/// Square root of an L2-self-adjoint positive semidefinite operator by
/// eigendecomposition of `GL2^{1/2} A GL2^{-1/2}`.
pub fn sqrt_eig(a: &CMat, g: &GramPair) -> Result<CMat> {
    let gl2 = g.gl2();
    let residual = (gl2 * a - a.adjoint() * gl2).norm() / gl2.norm();
    if residual > 1e-8 {
        return Err(Error::NotSelfAdjoint { residual });
    }
    let (half, half_inv) = gram_sqrt(gl2);
    let h = &half * a * &half_inv;
    let eig = nalgebra::SymmetricEigen::new((&h + h.adjoint()) * c(0.5));
    let n = a.nrows();
    let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min < -1e-10 {
        let max = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        return Err(Error::SpectrumOutOfRange { min, max });
    }
    let mut root = CMat::zeros(n, n);
    for k in 0..n {
        let lam = eig.eigenvalues[k];
        let r = if lam < 1e-14 { 0.0 } else { lam.sqrt() };
        let v = eig.eigenvectors.column(k);
        root += v * v.adjoint() * c(r);
    }
    Ok(&half_inv * root * &half)
}

/// Solves `<A e_i, e_j>_L2 = <e_i, B e_j>_L2` for `B` one column at a time.
pub fn adjoint_by_definition(a: &CMat, g: &GramPair) -> Result<CMat> {
    let n = g.n();
    let gl2 = g.gl2();
    let lu = gl2.clone().lu();
    let mut b = CMat::zeros(n, n);
    for j in 0..n {
        // (GL2 b_j)_i = conj(<A e_i, e_j>) = conj(e_j^H GL2 A e_i)
        let mut rhs = CVec::zeros(n);
        for i in 0..n {
            let mut ej_gl2_a_ei = C64::new(0.0, 0.0);
            for k in 0..n {
                ej_gl2_a_ei += gl2[(j, k)] * a[(k, i)];
            }
            rhs[i] = ej_gl2_a_ei.conj();
        }
        let col = lu.solve(&rhs).ok_or(Error::Singular)?;
        b.set_column(j, &col);
    }
    Ok(b)
}

/// Inverse of `A` restricted to `range(P)`, extended by zero on the
/// L2-complement. `A` must leave `range(P)` invariant.
pub fn pinv_on_range(p: &CMat, a: &CMat, g: &GramPair) -> Result<CMat> {
    let n = g.n();
    let id = CMat::identity(n, n);
    let leak = ((&id - p) * a * p).norm();
    if leak > 1e-10 * a.norm().max(1.0) {
        return Err(Error::InvalidArgument(format!(
            "operator does not leave range(P) invariant (leak {leak:.3e})"
        )));
    }
    let (half, half_inv) = gram_sqrt(g.gl2());
    let m = &half * (p * a * p) * &half_inv;
    let rank = p.trace().re.round() as usize;
    let svd = m.svd(true, true);
    let u = svd.u.unwrap();
    let vt = svd.v_t.unwrap();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| svd.singular_values[y].total_cmp(&svd.singular_values[x]));
    let mut pinv = CMat::zeros(n, n);
    for (count, &k) in order.iter().enumerate() {
        let s = svd.singular_values[k];
        if count >= rank {
            break;
        }
        if s < 1e-12 {
            return Err(Error::RankDeficiency { eigenvalue: s });
        }
        pinv += vt.row(k).adjoint() * u.column(k).adjoint() * c(1.0 / s);
    }
    Ok(&half_inv * pinv * &half)
}

/// Lower bound for the H1 operator norm from random trial vectors.
pub fn h1_norm_by_sampling<R: Rng + ?Sized>(a: &CMat, g: &GramPair, samples: usize, rng: &mut R) -> f64 {
    let n = g.n();
    let gh1 = g.gh1();
    let mut best = 0.0f64;
    for _ in 0..samples {
        let x = CVec::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        let ax = a * &x;
        let num = ax.dotc(&(gh1 * &ax)).re;
        let den = x.dotc(&(gh1 * &x)).re;
        best = best.max((num / den).sqrt());
    }
    best
}

/// `binom(1/2, k)` from the product formula.
pub fn binomial_half(k: usize) -> f64 {
    let mut num = 1.0;
    let mut den = 1.0;
    for j in 0..k {
        num *= 0.5 - j as f64;
        den *= (j + 1) as f64;
    }
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::identity;
    use crate::two_norm_space::{adjoint_l2, build_space, SpaceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn sqrt_of_identity_and_scaled_projection() {
        let g = build_space(&SpaceSpec::new(1, 6, 0.5)).unwrap();
        let r = sqrt_eig(&identity(6), &g).unwrap();
        assert!((r - identity(6)).norm() < 1e-13);

        let mut v = CVec::from_fn(6, |i, _| C64::new(1.0 + i as f64, 0.5));
        let nv = v.dotc(&(g.gl2() * &v)).re.sqrt();
        v /= c(nv);
        let p = &v * (v.adjoint() * g.gl2());
        let r = sqrt_eig(&(&p * c(4.0)), &g).unwrap();
        assert!((r - &p * c(2.0)).norm() < 1e-12);
    }

    #[test]
    fn sqrt_self_check_on_random_psd() {
        let g = build_space(&SpaceSpec::new(1, 8, 0.3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let z = CMat::from_fn(8, 8, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
            // Z Z^* is L2-self-adjoint and PSD
            let a = &z * adjoint_l2(&z, &g).unwrap();
            let r = sqrt_eig(&a, &g).unwrap();
            assert!((&r * &r - &a).norm() <= 1e-10 * a.norm());
        }
    }

    #[test]
    fn sqrt_rejects_non_self_adjoint() {
        let g = build_space(&SpaceSpec::new(1, 3, 1.0)).unwrap();
        let mut a = identity(3);
        a[(0, 1)] = c(1.0);
        assert!(matches!(sqrt_eig(&a, &g), Err(Error::NotSelfAdjoint { .. })));
    }

    #[test]
    fn adjoint_oracle_matches_examples() {
        let gl2 = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(2.0)]));
        let g = GramPair::from_matrices(gl2.clone(), gl2 * c(2.0)).unwrap();
        let a = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        let expect = CMat::from_row_slice(2, 2, &[c(0.0), c(0.0), c(0.5), c(0.0)]);
        assert!((adjoint_by_definition(&a, &g).unwrap() - expect).norm() < 1e-15);
        assert!((adjoint_by_definition(&identity(2), &g).unwrap() - identity(2)).norm() < 1e-15);
    }

    #[test]
    fn pinv_examples() {
        let g = build_space(&SpaceSpec::new(1, 5, 0.5)).unwrap();
        let mut p = CMat::zeros(5, 5);
        p[(0, 0)] = c(1.0);
        p[(1, 1)] = c(1.0);
        assert!((pinv_on_range(&p, &p, &g).unwrap() - &p).norm() < 1e-13);
        let two_p = &p * c(2.0);
        assert!((pinv_on_range(&p, &two_p, &g).unwrap() - &p * c(0.5)).norm() < 1e-13);
    }

    #[test]
    fn binomial_coefficients() {
        assert_eq!(binomial_half(0), 1.0);
        assert_eq!(binomial_half(1), 0.5);
        assert_eq!(binomial_half(2), -0.125);
        assert!((binomial_half(3) - 0.0625).abs() < 1e-16);
    }
}
