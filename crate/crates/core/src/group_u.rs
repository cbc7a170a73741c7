//! The group of invertible operators that are isometric for L2, its Lie
//! algebra of L2-skew operators, the exponential, and the explicit unitary
//! carrying one L2-orthonormal frame onto another.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{c, complete_basis, expm, hstack, CMat, CVec, C64};
use crate::two_norm_space::{adjoint_l2, orthonormality_residual, GramPair};

/// Default relative tolerance for group and Lie algebra membership.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Reciprocal condition numbers at or below this count as singular.
pub const RCOND_MIN: f64 = 1e-12;
/// Residual norm below which a Gram-Schmidt candidate is treated as dependent.
pub const RANK_DROP_TOL: f64 = 1e-12;
/// Orthonormality tolerance on inputs of [`frame_unitary`].
pub const FRAME_INPUT_TOL: f64 = 1e-8;

/// An element of the group: `U^H GL2 U = GL2` and `U` invertible.
#[derive(Debug, Clone)]
pub struct GroupElement {
    u: CMat,
}

/// An element of the Lie algebra: `X^H GL2 + GL2 X = 0`.
#[derive(Debug, Clone)]
pub struct SkewOperator {
    x: CMat,
}

/// `||A^H GL2 A - GL2||_F / ||GL2||_F`.
pub fn group_residual(a: &CMat, g: &GramPair) -> f64 {
    let gl2 = g.gl2();
    (a.adjoint() * gl2 * a - gl2).norm() / gl2.norm()
}

/// `||X^H GL2 + GL2 X||_F / ||GL2||_F`.
pub fn lie_residual(x: &CMat, g: &GramPair) -> f64 {
    let gl2 = g.gl2();
    (x.adjoint() * gl2 + gl2 * x).norm() / gl2.norm()
}

fn reciprocal_condition(a: &CMat) -> f64 {
    let s = a.singular_values();
    let max = s.iter().cloned().fold(0.0, f64::max);
    let min = s.iter().cloned().fold(f64::INFINITY, f64::min);
    if max == 0.0 {
        0.0
    } else {
        min / max
    }
}

pub fn is_group_member(a: &CMat, g: &GramPair, tol: f64) -> bool {
    if g.check_square(a).is_err() {
        return false;
    }
    reciprocal_condition(a) > RCOND_MIN && group_residual(a, g) <= tol
}

pub fn is_lie_algebra_member(x: &CMat, g: &GramPair, tol: f64) -> bool {
    g.check_square(x).is_ok() && lie_residual(x, g) <= tol
}

impl GroupElement {
    /// Wraps `u` after checking membership at `tol`.
    pub fn new(u: CMat, g: &GramPair, tol: f64) -> Result<Self> {
        g.check_square(&u)?;
        if reciprocal_condition(&u) <= RCOND_MIN {
            return Err(Error::Singular);
        }
        let residual = group_residual(&u, g);
        if residual > tol {
            return Err(Error::NotInGroup { residual });
        }
        Ok(GroupElement { u })
    }

    /// Wraps without checking; callers guarantee membership by construction.
    pub(crate) fn trusted(u: CMat) -> Self {
        GroupElement { u }
    }

    pub fn identity(n: usize) -> Self {
        GroupElement {
            u: CMat::identity(n, n),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.u
    }

    pub fn into_matrix(self) -> CMat {
        self.u
    }

    /// `U^{-1}`, which for members coincides with the L2-adjoint.
    pub fn inverse(&self, g: &GramPair) -> GroupElement {
        GroupElement {
            u: adjoint_l2(&self.u, g).expect("group element has the space dimension"),
        }
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            u: &self.u * &other.u,
        }
    }
}

impl SkewOperator {
    pub fn new(x: CMat, g: &GramPair, tol: f64) -> Result<Self> {
        g.check_square(&x)?;
        let residual = lie_residual(&x, g);
        if residual > tol {
            return Err(Error::NotInLieAlgebra { residual });
        }
        Ok(SkewOperator { x })
    }

    pub(crate) fn trusted(x: CMat) -> Self {
        SkewOperator { x }
    }

    pub fn zero(n: usize) -> Self {
        SkewOperator { x: CMat::zeros(n, n) }
    }

    /// `GL2^{-1} S` for a skew-Hermitian `S`; every element has this form.
    pub fn from_skew_hermitian(s: &CMat, g: &GramPair) -> Result<Self> {
        g.check_square(s)?;
        let skew = (s - s.adjoint()) * c(0.5);
        Ok(SkewOperator { x: g.solve_l2(&skew) })
    }

    /// Random element with entries of `S` drawn from a complex Gaussian.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, g: &GramPair, scale: f64) -> Self {
        let n = g.n();
        let z = CMat::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        let s = (&z - z.adjoint()) * c(0.5 * scale);
        SkewOperator { x: g.solve_l2(&s) }
    }

    pub fn matrix(&self) -> &CMat {
        &self.x
    }

    pub fn into_matrix(self) -> CMat {
        self.x
    }

    pub fn scale(&self, t: f64) -> SkewOperator {
        SkewOperator { x: &self.x * c(t) }
    }

    pub fn add(&self, other: &SkewOperator) -> SkewOperator {
        SkewOperator { x: &self.x + &other.x }
    }

    /// `[X, Y] = XY - YX`.
    pub fn bracket(&self, other: &SkewOperator) -> SkewOperator {
        SkewOperator {
            x: &self.x * &other.x - &other.x * &self.x,
        }
    }
}

/// `e^X` by scaling and squaring; the result is checked for membership.
pub fn exp_skew(x: &SkewOperator, g: &GramPair) -> Result<GroupElement> {
    g.check_square(x.matrix())?;
    let u = expm(x.matrix())?;
    GroupElement::new(u, g, MEMBERSHIP_TOL)
}

/// Builds `U` in the group with `U F0 = F1` column by column.
///
/// Both families are completed to L2-orthonormal bases of
/// `S0 = span(F0, F1)`, the first by the residuals of `F1` and the second by
/// the residuals of `F0` (pivoted modified Gram-Schmidt). `U` maps the first
/// basis onto the second and is the identity on the L2-orthocomplement of `S0`.
pub fn frame_unitary(f0: &CMat, f1: &CMat, g: &GramPair) -> Result<GroupElement> {
    g.check_rows(f0)?;
    if f0.shape() != f1.shape() {
        return Err(Error::DimensionMismatch {
            expected: crate::error::shape_of(f0),
            found: crate::error::shape_of(f1),
        });
    }
    for f in [f0, f1] {
        let residual = orthonormality_residual(f, g);
        if residual > FRAME_INPUT_TOL {
            return Err(Error::NotOrthonormal { residual });
        }
    }
    let n = g.n();
    if (f1 - f0).norm() <= 1e-14 {
        return Ok(GroupElement::identity(n));
    }
    let k = f0.ncols();
    let alpha = complete_basis(f0, f1, g.gl2(), RANK_DROP_TOL, k);
    let beta = complete_basis(f1, f0, g.gl2(), RANK_DROP_TOL, alpha.ncols());
    if beta.ncols() != alpha.ncols() {
        return Err(Error::RankDeficiency {
            eigenvalue: RANK_DROP_TOL,
        });
    }
    let a = hstack(f0, &alpha);
    let b = hstack(f1, &beta);
    // U = I + (B - A) A^H GL2
    let u = CMat::identity(n, n) + (&b - &a) * (a.adjoint() * g.gl2());
    Ok(GroupElement::trusted(u))
}

/// Probe vectors: the L2-normalized coordinate vectors followed by
/// `random_probes` random L2-unit vectors.
pub fn membership_probes<R: Rng + ?Sized>(g: &GramPair, random_probes: usize, rng: &mut R) -> Vec<CVec> {
    let n = g.n();
    let mut out = Vec::with_capacity(n + random_probes);
    let normalize = |v: CVec| {
        let nv = (v.adjoint() * g.gl2() * &v)[(0, 0)].re.sqrt();
        v / c(nv)
    };
    for i in 0..n {
        let mut e = CVec::zeros(n);
        e[i] = c(1.0);
        out.push(normalize(e));
    }
    for _ in 0..random_probes {
        let v = CVec::from_fn(n, |_, _| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)));
        out.push(normalize(v));
    }
    out
}

/// Maximum over probe vectors of `|<U phi, U phi>_L2 - ||phi||_L2^2|`, the
/// degree-2 polynomials whose common zero set inside `Gl(H1)` is the group.
pub fn algebraic_membership_residual<R: Rng + ?Sized>(
    u: &CMat,
    g: &GramPair,
    probes: usize,
    rng: &mut R,
) -> Result<f64> {
    g.check_square(u)?;
    if reciprocal_condition(u) <= RCOND_MIN {
        return Err(Error::Singular);
    }
    let gl2 = g.gl2();
    let mut worst = 0.0f64;
    for phi in membership_probes(g, probes, rng) {
        let uphi = u * &phi;
        let lhs = uphi.dotc(&(gl2 * &uphi));
        let rhs = phi.dotc(&(gl2 * &phi));
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, ONE, ZERO};
    use crate::two_norm_space::{build_space, SpaceSpec};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_pair(n: usize) -> GramPair {
        GramPair::from_matrices(identity(n), identity(n) * c(2.0)).unwrap()
    }

    #[test]
    fn identity_is_member_and_dilation_is_not() {
        let g = unit_pair(3);
        assert!(is_group_member(&identity(3), &g, 1e-12));
        let mut d = identity(3);
        d[(0, 0)] = c(2.0);
        assert!(!is_group_member(&d, &g, 1e-6));
        assert!(!is_group_member(&CMat::zeros(3, 3), &g, 1.0));
        assert!(!is_group_member(&identity(2), &g, 1.0));
    }

    #[test]
    fn lie_algebra_examples() {
        let g = unit_pair(2);
        assert!(is_lie_algebra_member(&CMat::zeros(2, 2), &g, 1e-12));
        let h = CMat::from_row_slice(2, 2, &[c(1.0), c(2.0), c(2.0), c(-1.0)]);
        assert!(!is_lie_algebra_member(&h, &g, 1e-6));

        let gs = build_space(&SpaceSpec::new(1, 5, 0.3)).unwrap();
        let s = CMat::from_fn(5, 5, |i, j| C64::new(i as f64 - j as f64, (i + j) as f64));
        let x = SkewOperator::from_skew_hermitian(&s, &gs).unwrap();
        assert!(is_lie_algebra_member(x.matrix(), &gs, 1e-12));
    }

    #[test]
    fn exp_of_zero_and_planar_rotation() {
        let g = unit_pair(2);
        let e = exp_skew(&SkewOperator::zero(2), &g).unwrap();
        assert!((e.matrix() - identity(2)).norm() < 1e-15);

        let th = std::f64::consts::FRAC_PI_2;
        let x = SkewOperator::new(CMat::from_row_slice(2, 2, &[ZERO, c(-th), c(th), ZERO]), &g, 1e-12).unwrap();
        let r = exp_skew(&x, &g).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[ZERO, c(-1.0), ONE, ZERO]);
        assert!((r.matrix() - expect).norm() < 1e-14);
    }

    #[test]
    fn exp_preserves_l2_form_and_inverts() {
        let g = build_space(&SpaceSpec::new(1, 12, 0.25)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let x = SkewOperator::random(&mut rng, &g, 1.0);
            for t in [0.5, 1.0] {
                let u = exp_skew(&x.scale(t), &g).unwrap();
                assert!(group_residual(u.matrix(), &g) <= 1e-10);
                let v = exp_skew(&x.scale(-t), &g).unwrap();
                assert!((u.matrix() * v.matrix() - identity(12)).norm() <= 1e-10);
                assert!((u.inverse(&g).matrix() - v.matrix()).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn frame_unitary_swaps_basis_vectors() {
        let g = unit_pair(2);
        let e1 = CMat::from_column_slice(2, 1, &[ONE, ZERO]);
        let e2 = CMat::from_column_slice(2, 1, &[ZERO, ONE]);
        let u = frame_unitary(&e1, &e2, &g).unwrap();
        assert!((u.matrix() * &e1 - &e2).norm() < 1e-15);
        assert!((u.matrix().adjoint() * u.matrix() - identity(2)).norm() < 1e-15);
        let same = frame_unitary(&e1, &e1, &g).unwrap();
        assert_eq!(same.matrix(), &identity(2));
    }

    #[test]
    fn frame_unitary_rejects_non_orthonormal() {
        let g = unit_pair(2);
        let good = CMat::from_column_slice(2, 1, &[ONE, ZERO]);
        let bad = CMat::from_column_slice(2, 1, &[c(2.0), ZERO]);
        assert!(matches!(frame_unitary(&good, &bad, &g), Err(Error::NotOrthonormal { .. })));
    }

    #[test]
    fn algebraic_residual_examples() {
        let g = unit_pair(4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(algebraic_membership_residual(&identity(4), &g, 10, &mut rng).unwrap(), 0.0);
        let mut d = identity(4);
        d[(0, 0)] = c(2.0);
        assert!(algebraic_membership_residual(&d, &g, 10, &mut rng).unwrap() >= 1.0);
        assert!(matches!(
            algebraic_membership_residual(&CMat::zeros(4, 4), &g, 1, &mut rng),
            Err(Error::Singular)
        ));
    }
}
