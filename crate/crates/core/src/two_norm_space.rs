//! Finite-dimensional model of the pair (H1, L2): a periodic grid, the two
//! Gram matrices, and the adjoints and norms they induce.
//!
//! Coefficient vectors `x` represent grid functions. The L2 inner product is
//! `<x, y>_L2 = y^H GL2 x` and the H1 inner product is `y^H GH1 x` with
//! `GH1 = GL2 + sum_a D_a^H GL2 D_a`, so `||x||_L2 <= ||x||_H1` always.

use std::sync::Arc;

use nalgebra::{Cholesky, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{shape_of, Error, Result};
use crate::linalg::{c, hermitian_eigen, identity, spectral_norm, CMat, CVec, C64};

/// Absolute floor for positive-semidefiniteness checks.
pub const PSD_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Periodic,
}

/// Uniform grid on a periodic box of dimension 1, 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceSpec {
    #[serde(default = "default_dim")]
    pub domain_dim: usize,
    pub grid_points: usize,
    pub spacing: f64,
    #[serde(default)]
    pub boundary: Boundary,
}

fn default_dim() -> usize {
    1
}

impl Default for SpaceSpec {
    fn default() -> Self {
        SpaceSpec {
            domain_dim: 1,
            grid_points: 16,
            spacing: 0.25,
            boundary: Boundary::Periodic,
        }
    }
}

impl SpaceSpec {
    pub fn new(domain_dim: usize, grid_points: usize, spacing: f64) -> Self {
        SpaceSpec {
            domain_dim,
            grid_points,
            spacing,
            boundary: Boundary::Periodic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.domain_dim) {
            return Err(Error::InvalidSpace(format!(
                "domain_dim must be 1, 2 or 3 (got {})",
                self.domain_dim
            )));
        }
        if self.grid_points < 2 {
            return Err(Error::InvalidSpace(format!(
                "grid_points must be at least 2 (got {})",
                self.grid_points
            )));
        }
        if !(self.spacing > 0.0 && self.spacing.is_finite()) {
            return Err(Error::InvalidSpace(format!(
                "spacing must be positive (got {})",
                self.spacing
            )));
        }
        Ok(())
    }

    /// Total number of coefficients, `m^d`.
    pub fn dim(&self) -> usize {
        self.grid_points.pow(self.domain_dim as u32)
    }
}

struct GramInner {
    spec: Option<SpaceSpec>,
    gl2: CMat,
    gh1: CMat,
    derivs: Vec<CMat>,
    l2_chol: Cholesky<C64, Dyn>,
    l2_factor: CMat,
    l2_factor_inv: CMat,
    h1_chol: Cholesky<C64, Dyn>,
    h1_factor: CMat,
    h1_factor_inv: CMat,
}

/// The two Gram matrices together with their cached Cholesky factors.
///
/// Cloning is cheap; the matrices live behind an `Arc`.
#[derive(Clone)]
pub struct GramPair {
    inner: Arc<GramInner>,
}

impl std::fmt::Debug for GramPair {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GramPair")
            .field("n", &self.n())
            .field("spec", &self.inner.spec)
            .finish()
    }
}

fn upper_factor(g: &CMat, which: &'static str) -> Result<(Cholesky<C64, Dyn>, CMat, CMat)> {
    let chol = Cholesky::new(g.clone()).ok_or(Error::NotPositiveDefinite(which))?;
    // G = L L^H = R^H R with R = L^H
    let r = chol.l().adjoint();
    let r_inv = r
        .clone()
        .try_inverse()
        .ok_or(Error::NotPositiveDefinite(which))?;
    Ok((chol, r, r_inv))
}

impl GramPair {
    /// Builds a pair from explicit Gram matrices. Both must be Hermitian
    /// positive definite with `GH1 - GL2` positive semidefinite.
    pub fn from_matrices(gl2: CMat, gh1: CMat) -> Result<Self> {
        Self::assemble(None, gl2, gh1, Vec::new())
    }

    fn assemble(spec: Option<SpaceSpec>, gl2: CMat, gh1: CMat, derivs: Vec<CMat>) -> Result<Self> {
        let n = gl2.nrows();
        if !gl2.is_square() || gh1.shape() != (n, n) || n == 0 {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n}"),
                found: shape_of(&gh1),
            });
        }
        for (m, which) in [(&gl2, "GL2"), (&gh1, "GH1")] {
            if (m - m.adjoint()).norm() > 1e-12 * m.norm().max(1.0) {
                return Err(Error::NotPositiveDefinite(which));
            }
        }
        let (vals, _) = hermitian_eigen(&(&gh1 - &gl2));
        if vals[0] < -PSD_TOL * gh1.norm().max(1.0) {
            return Err(Error::NotPositiveDefinite("GH1 - GL2"));
        }
        let (l2_chol, l2_factor, l2_factor_inv) = upper_factor(&gl2, "GL2")?;
        let (h1_chol, h1_factor, h1_factor_inv) = upper_factor(&gh1, "GH1")?;
        Ok(GramPair {
            inner: Arc::new(GramInner {
                spec,
                gl2,
                gh1,
                derivs,
                l2_chol,
                l2_factor,
                l2_factor_inv,
                h1_chol,
                h1_factor,
                h1_factor_inv,
            }),
        })
    }

    pub fn n(&self) -> usize {
        self.inner.gl2.nrows()
    }

    pub fn spec(&self) -> Option<&SpaceSpec> {
        self.inner.spec.as_ref()
    }

    pub fn gl2(&self) -> &CMat {
        &self.inner.gl2
    }

    pub fn gh1(&self) -> &CMat {
        &self.inner.gh1
    }

    /// Finite-difference derivative operators used to assemble `GH1`.
    pub fn derivatives(&self) -> &[CMat] {
        &self.inner.derivs
    }

    /// `GL2^{-1} B`.
    pub fn solve_l2(&self, b: &CMat) -> CMat {
        self.inner.l2_chol.solve(b)
    }

    /// `GH1^{-1} B`.
    pub fn solve_h1(&self, b: &CMat) -> CMat {
        self.inner.h1_chol.solve(b)
    }

    /// Matrix of `A` in an L2-orthonormal basis: `R A R^{-1}` with `GL2 = R^H R`.
    pub fn to_l2_coords(&self, a: &CMat) -> CMat {
        &self.inner.l2_factor * a * &self.inner.l2_factor_inv
    }

    pub fn from_l2_coords(&self, m: &CMat) -> CMat {
        &self.inner.l2_factor_inv * m * &self.inner.l2_factor
    }

    /// Matrix of `A` in an H1-orthonormal basis: `R A R^{-1}` with `GH1 = R^H R`.
    pub fn to_h1_coords(&self, a: &CMat) -> CMat {
        &self.inner.h1_factor * a * &self.inner.h1_factor_inv
    }

    /// Columns of an n x k block expressed in an L2-orthonormal basis.
    pub fn l2_factor(&self) -> &CMat {
        &self.inner.l2_factor
    }

    pub fn l2_factor_inv(&self) -> &CMat {
        &self.inner.l2_factor_inv
    }

    pub fn identity(&self) -> CMat {
        identity(self.n())
    }

    /// True when both values share the same underlying matrices.
    pub fn same_as(&self, other: &GramPair) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.gl2 == other.inner.gl2 && self.inner.gh1 == other.inner.gh1)
    }

    pub(crate) fn check_square(&self, a: &CMat) -> Result<()> {
        let n = self.n();
        if a.shape() != (n, n) {
            return Err(Error::DimensionMismatch {
                expected: format!("{n}x{n}"),
                found: shape_of(a),
            });
        }
        Ok(())
    }

    pub(crate) fn check_rows(&self, a: &CMat) -> Result<()> {
        if a.nrows() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} rows", self.n()),
                found: shape_of(a),
            });
        }
        Ok(())
    }
}

/// Periodic forward difference along `axis` on a `m^d` grid, axis 0 fastest.
fn forward_difference(spec: &SpaceSpec, axis: usize) -> CMat {
    let m = spec.grid_points;
    let n = spec.dim();
    let stride = m.pow(axis as u32);
    let inv_h = 1.0 / spec.spacing;
    let mut d = CMat::zeros(n, n);
    for j in 0..n {
        let coord = (j / stride) % m;
        let next = if coord + 1 == m {
            j + stride - m * stride
        } else {
            j + stride
        };
        d[(j, next)] += c(inv_h);
        d[(j, j)] -= c(inv_h);
    }
    d
}

/// Discretizes (H1, L2) on a uniform periodic grid.
///
/// `GL2 = h^d I`, `D_a` is the periodic forward difference along axis `a`, and
/// `GH1 = GL2 + sum_a D_a^H GL2 D_a`.
pub fn build_space(spec: &SpaceSpec) -> Result<GramPair> {
    spec.validate()?;
    let n = spec.dim();
    let weight = spec.spacing.powi(spec.domain_dim as i32);
    let gl2 = identity(n) * c(weight);
    let derivs: Vec<CMat> = (0..spec.domain_dim)
        .map(|a| forward_difference(spec, a))
        .collect();
    let mut gh1 = gl2.clone();
    for d in &derivs {
        gh1 += d.adjoint() * &gl2 * d;
    }
    GramPair::assemble(Some(*spec), gl2, gh1, derivs)
}

fn check_vec(x: &CVec, g: &GramPair) -> Result<()> {
    if x.len() != g.n() {
        return Err(Error::DimensionMismatch {
            expected: format!("length {}", g.n()),
            found: format!("length {}", x.len()),
        });
    }
    Ok(())
}

/// `<x, y>_L2 = y^H GL2 x`, linear in the first argument.
pub fn inner_l2(x: &CVec, y: &CVec, g: &GramPair) -> Result<C64> {
    check_vec(x, g)?;
    check_vec(y, g)?;
    Ok((y.adjoint() * (g.gl2() * x))[(0, 0)])
}

/// `<x, y>_H1 = y^H GH1 x`.
pub fn inner_h1(x: &CVec, y: &CVec, g: &GramPair) -> Result<C64> {
    check_vec(x, g)?;
    check_vec(y, g)?;
    Ok((y.adjoint() * (g.gh1() * x))[(0, 0)])
}

pub fn norm_l2(x: &CVec, g: &GramPair) -> Result<f64> {
    Ok(inner_l2(x, x, g)?.re.max(0.0).sqrt())
}

pub fn norm_h1(x: &CVec, g: &GramPair) -> Result<f64> {
    Ok(inner_h1(x, x, g)?.re.max(0.0).sqrt())
}

/// Column-wise H1 norms of an n x k block.
pub(crate) fn column_norms_h1(m: &CMat, g: &GramPair) -> Vec<f64> {
    let gm = g.gh1() * m;
    (0..m.ncols())
        .map(|j| m.column(j).dotc(&gm.column(j)).re.max(0.0).sqrt())
        .collect()
}

/// L2-adjoint `GL2^{-1} A^H GL2`, characterized by `<Ax, y>_L2 = <x, A* y>_L2`.
pub fn adjoint_l2(a: &CMat, g: &GramPair) -> Result<CMat> {
    g.check_square(a)?;
    Ok(g.solve_l2(&(a.adjoint() * g.gl2())))
}

/// H1-adjoint `GH1^{-1} A^H GH1`.
pub fn adjoint_h1(a: &CMat, g: &GramPair) -> Result<CMat> {
    g.check_square(a)?;
    Ok(g.solve_h1(&(a.adjoint() * g.gh1())))
}

/// Operator norm of `A` acting on H1.
pub fn h1_operator_norm(a: &CMat, g: &GramPair) -> Result<f64> {
    g.check_square(a)?;
    Ok(spectral_norm(&g.to_h1_coords(a)))
}

/// Operator norm of `A` acting on L2.
pub fn l2_operator_norm(a: &CMat, g: &GramPair) -> Result<f64> {
    g.check_square(a)?;
    Ok(spectral_norm(&g.to_l2_coords(a)))
}

/// `||F^H GL2 F - I||_F` for an n x k block.
pub fn orthonormality_residual(f: &CMat, g: &GramPair) -> f64 {
    (f.adjoint() * g.gl2() * f - identity(f.ncols())).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{ONE, ZERO};

    #[test]
    fn rejects_bad_specs() {
        assert!(build_space(&SpaceSpec::new(1, 1, 0.5)).is_err());
        assert!(build_space(&SpaceSpec::new(1, 4, 0.0)).is_err());
        assert!(build_space(&SpaceSpec::new(1, 4, -1.0)).is_err());
        assert!(build_space(&SpaceSpec::new(4, 2, 1.0)).is_err());
        assert!(build_space(&SpaceSpec::new(0, 2, 1.0)).is_err());
    }

    #[test]
    fn l2_gram_is_scaled_identity() {
        let g = build_space(&SpaceSpec::new(1, 4, 0.5)).unwrap();
        assert!((g.gl2() - identity(4) * c(0.5)).norm() == 0.0);
    }

    #[test]
    fn two_point_grid_h1_gram() {
        let g = build_space(&SpaceSpec::new(1, 2, 1.0)).unwrap();
        let d = CMat::from_row_slice(2, 2, &[c(-1.0), ONE, ONE, c(-1.0)]);
        assert!((&g.derivatives()[0] - &d).norm() < 1e-15);
        let expect = CMat::from_row_slice(2, 2, &[c(3.0), c(-2.0), c(-2.0), c(3.0)]);
        assert!((g.gh1() - expect).norm() < 1e-14);
    }

    #[test]
    fn h1_dominates_l2_in_all_dimensions() {
        for d in 1..=3 {
            let g = build_space(&SpaceSpec::new(d, 3, 0.7)).unwrap();
            let (vals, _) = hermitian_eigen(&(g.gh1() - g.gl2()));
            assert!(vals[0] >= -PSD_TOL);
            assert_eq!(g.derivatives().len(), d);
        }
    }

    #[test]
    fn difference_wraps_around_each_axis() {
        let spec = SpaceSpec::new(2, 3, 1.0);
        let d1 = forward_difference(&spec, 1);
        // grid point (i0, i1) = (0, 2) sits at index 6 and wraps to (0, 0)
        assert_eq!(d1[(6, 0)], ONE);
        assert_eq!(d1[(6, 6)], c(-1.0));
        // constants are annihilated
        let ones = CVec::from_element(9, ONE);
        assert!((&d1 * ones).norm() < 1e-15);
    }

    #[test]
    fn basis_inner_products() {
        let g = build_space(&SpaceSpec::new(1, 4, 0.25)).unwrap();
        let e1 = CVec::from_fn(4, |i, _| if i == 0 { ONE } else { ZERO });
        assert!((inner_l2(&e1, &e1, &g).unwrap() - c(0.25)).norm() < 1e-15);

        let gl2 = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(2.0)]));
        let gp = GramPair::from_matrices(gl2.clone(), gl2 * c(2.0)).unwrap();
        let e2 = CVec::from_vec(vec![ZERO, ONE]);
        assert_eq!(inner_l2(&e2, &e2, &gp).unwrap(), c(2.0));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = build_space(&SpaceSpec::new(1, 4, 0.25)).unwrap();
        let x = CVec::zeros(3);
        let y = CVec::zeros(4);
        assert!(matches!(inner_l2(&x, &y, &g), Err(Error::DimensionMismatch { .. })));
        assert!(adjoint_l2(&CMat::zeros(3, 3), &g).is_err());
    }

    #[test]
    fn adjoint_examples() {
        let gl2 = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), c(2.0)]));
        let g = GramPair::from_matrices(gl2.clone(), gl2 * c(3.0)).unwrap();
        let a = CMat::from_row_slice(2, 2, &[ZERO, ONE, ZERO, ZERO]);
        let expect = CMat::from_row_slice(2, 2, &[ZERO, ZERO, c(0.5), ZERO]);
        assert!((adjoint_l2(&a, &g).unwrap() - expect).norm() < 1e-15);
        assert!((adjoint_l2(&identity(2), &g).unwrap() - identity(2)).norm() < 1e-15);

        let unit = GramPair::from_matrices(identity(2), identity(2) * c(2.0)).unwrap();
        let b = CMat::from_row_slice(2, 2, &[C64::new(1.0, 2.0), c(3.0), C64::new(0.0, -1.0), c(4.0)]);
        assert!((adjoint_l2(&b, &unit).unwrap() - b.adjoint()).norm() < 1e-15);
    }

    #[test]
    fn operator_norm_of_scaled_identity() {
        let g = build_space(&SpaceSpec::new(1, 6, 0.3)).unwrap();
        assert!((h1_operator_norm(&identity(6), &g).unwrap() - 1.0).abs() < 1e-12);
        let a = identity(6) * C64::new(0.0, -2.5);
        assert!((h1_operator_norm(&a, &g).unwrap() - 2.5).abs() < 1e-12);
    }

    #[test]
    fn rejects_h1_smaller_than_l2() {
        let gl2 = identity(2) * c(2.0);
        assert!(matches!(
            GramPair::from_matrices(gl2, identity(2)),
            Err(Error::NotPositiveDefinite("GH1 - GL2"))
        ));
    }
}
