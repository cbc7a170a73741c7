//! Dense complex matrix helpers shared by the manifold modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

#[inline]
pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn frobenius(m: &CMat) -> f64 {
    m.norm()
}

/// Largest singular value (Euclidean operator norm of the coefficient matrix).
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Singular values in descending order.
pub fn singular_values_desc(m: &CMat) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().cloned().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitian_part(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    (values, vectors)
}

/// Maximum absolute column sum.
pub(crate) fn norm_one(m: &CMat) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring of the Taylor series.
pub fn expm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let norm = norm_one(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a * c(0.5f64.powi(squarings as i32));
    let mut sum = identity(n);
    let mut term = identity(n);
    let mut converged = false;
    for k in 1..=60 {
        term = &term * &scaled * c(1.0 / k as f64);
        sum += &term;
        if norm_one(&term) <= f64::EPSILON * 0.25 * norm_one(&sum) {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::SeriesNotConverged {
            terms: 60,
            tail: norm_one(&term),
        });
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    Ok(sum)
}

/// Weighted inner product `y^H G x`.
#[inline]
pub(crate) fn gram_inner(gram: &CMat, x: &CVec, y: &CVec) -> C64 {
    (y.adjoint() * (gram * x))[(0, 0)]
}

/// Extends the `G`-orthonormal columns of `basis` with vectors drawn from
/// `candidates`, using modified Gram-Schmidt with pivoting on the largest
/// residual norm (ties go to the lowest index). Residuals below `drop_tol`
/// are discarded. At most `max_new` vectors are added.
///
/// Returns only the new vectors, as columns.
pub(crate) fn complete_basis(
    basis: &CMat,
    candidates: &CMat,
    gram: &CMat,
    drop_tol: f64,
    max_new: usize,
) -> CMat {
    let n = gram.nrows();
    let mut accepted: Vec<CVec> = basis.column_iter().map(|c| c.into_owned()).collect();
    let mut remaining: Vec<CVec> = candidates
        .column_iter()
        .map(|col| {
            let mut v = col.into_owned();
            for _ in 0..2 {
                for q in &accepted {
                    let coef = gram_inner(gram, &v, q);
                    v -= q * coef;
                }
            }
            v
        })
        .collect();

    let mut added: Vec<CVec> = Vec::new();
    while added.len() < max_new && !remaining.is_empty() {
        let mut best = 0usize;
        let mut best_norm = -1.0f64;
        for (i, v) in remaining.iter().enumerate() {
            let nv = gram_inner(gram, v, v).re.max(0.0).sqrt();
            if nv > best_norm {
                best_norm = nv;
                best = i;
            }
        }
        if best_norm < drop_tol {
            break;
        }
        let mut v = remaining.remove(best);
        for q in &accepted {
            let coef = gram_inner(gram, &v, q);
            v -= q * coef;
        }
        let nv = gram_inner(gram, &v, &v).re.max(0.0).sqrt();
        if nv < drop_tol {
            continue;
        }
        v /= c(nv);
        for r in remaining.iter_mut() {
            let coef = gram_inner(gram, r, &v);
            *r -= &v * coef;
        }
        accepted.push(v.clone());
        added.push(v);
    }

    let mut out = CMat::zeros(n, added.len());
    for (j, v) in added.iter().enumerate() {
        out.set_column(j, v);
    }
    out
}

/// Horizontal concatenation of two blocks with equal row counts.
pub(crate) fn hstack(a: &CMat, b: &CMat) -> CMat {
    let mut out = CMat::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm_of_zero_is_identity() {
        let e = expm(&CMat::zeros(3, 3)).unwrap();
        assert!((e - identity(3)).norm() < 1e-15);
    }

    #[test]
    fn expm_of_planar_generator_rotates() {
        let theta = std::f64::consts::FRAC_PI_2;
        let x = CMat::from_row_slice(2, 2, &[ZERO, c(-theta), c(theta), ZERO]);
        let e = expm(&x).unwrap();
        let expect = CMat::from_row_slice(2, 2, &[ZERO, c(-1.0), ONE, ZERO]);
        assert!((e - expect).norm() < 1e-14);
    }

    #[test]
    fn expm_large_argument_matches_diagonal() {
        let d = CMat::from_diagonal(&CVec::from_vec(vec![c(3.0), c(-2.0), C64::new(0.0, 7.0)]));
        let e = expm(&d).unwrap();
        assert!((e[(0, 0)] - c(3f64.exp())).norm() < 1e-12 * 3f64.exp());
        assert!((e[(1, 1)] - c((-2f64).exp())).norm() < 1e-14);
        assert!((e[(2, 2)] - C64::new(0.0, 7.0).exp()).norm() < 1e-13);
    }

    #[test]
    fn completion_pivots_and_drops_dependent_candidates() {
        let g = identity(3);
        let basis = CMat::from_column_slice(3, 1, &[ONE, ZERO, ZERO]);
        // second candidate duplicates the first basis vector and must be dropped
        let cand = CMat::from_column_slice(3, 3, &[c(1.0), c(0.1), ZERO, c(2.0), ZERO, ZERO, ZERO, ZERO, c(3.0)]);
        let added = complete_basis(&basis, &cand, &g, 1e-12, 3);
        assert_eq!(added.ncols(), 2);
        // largest residual (third candidate, norm 3) is picked first
        assert!((added[(2, 0)] - ONE).norm() < 1e-14);
        let full = hstack(&basis, &added);
        assert!((full.adjoint() * &full - identity(3)).norm() < 1e-14);
    }

    #[test]
    fn hermitian_eigen_is_sorted() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(2.0), c(-1.0), c(0.5)]));
        let (vals, vecs) = hermitian_eigen(&m);
        assert_eq!(vals, vec![-1.0, 0.5, 2.0]);
        let recon = &vecs * CMat::from_diagonal(&CVec::from_iterator(3, vals.iter().map(|&v| c(v)))) * vecs.adjoint();
        assert!((recon - m).norm() < 1e-14);
    }
}
