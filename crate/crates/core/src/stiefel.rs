//! The Stiefel manifold of L2-orthonormal N-tuples in H1, presented either as
//! frames `Phi` (n x N) or as L2-partial isometries `V = Phi Xi^H GL2` with a
//! fixed initial space `S = span(Xi)`.
//!
//! Besides the two presentations this module holds the group action, the
//! binomial-series square root, the local cross sections of the orbit map
//! `U -> U V` with their explicit radius, and the tangent maps at `V`.

use std::sync::Arc;

use crate::error::{shape_of, Error, Result};
use crate::grassmann::ProjectionOperator;
use crate::group_u::{frame_unitary, GroupElement, SkewOperator};
use crate::linalg::{c, complete_basis, hermitian_eigen, identity, CMat, C64};
use crate::two_norm_space::{
    adjoint_l2, column_norms_h1, h1_operator_norm, l2_operator_norm, orthonormality_residual, GramPair,
};

/// Orthonormality tolerance for frames.
pub const FRAME_TOL: f64 = 1e-10;
/// Tolerance for recognising an operator as a point of St(S).
pub const STIEFEL_TOL: f64 = 1e-8;
/// Tolerance on outputs of the action and the cross sections.
pub const SECTION_TOL: f64 = 1e-9;
/// Eigenvalue cutoff for restricted inverse square roots.
pub const EIG_CUTOFF: f64 = 1e-12;
/// Default tolerance and term budget for the binomial square root.
pub const SQRT_TOL: f64 = 1e-13;
pub const SQRT_KMAX: usize = 20_000;

struct ReferenceInner {
    xi: CMat,
    c: f64,
    projector: CMat,
    gram: GramPair,
}

/// L2-orthonormal basis `xi_1..xi_N` of the initial space `S`, together with
/// `C = max_i ||xi_i||_H1`.
#[derive(Clone)]
pub struct ReferenceFrame {
    inner: Arc<ReferenceInner>,
}

impl std::fmt::Debug for ReferenceFrame {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ReferenceFrame")
            .field("n", &self.inner.xi.nrows())
            .field("N", &self.inner.xi.ncols())
            .field("C", &self.inner.c)
            .finish()
    }
}

impl ReferenceFrame {
    pub fn new(xi: CMat, g: &GramPair) -> Result<Self> {
        g.check_rows(&xi)?;
        if xi.ncols() == 0 || xi.ncols() > g.n() {
            return Err(Error::InvalidArgument(format!(
                "reference frame needs 1..={} columns, got {}",
                g.n(),
                xi.ncols()
            )));
        }
        let residual = orthonormality_residual(&xi, g);
        if residual > FRAME_TOL {
            return Err(Error::NotOrthonormal { residual });
        }
        let c_const = column_norms_h1(&xi, g).into_iter().fold(0.0, f64::max);
        let projector = &xi * (xi.adjoint() * g.gl2());
        Ok(ReferenceFrame {
            inner: Arc::new(ReferenceInner {
                xi,
                c: c_const,
                projector,
                gram: g.clone(),
            }),
        })
    }

    /// The `count` lowest-frequency Fourier modes of the grid, L2-normalized.
    /// Without grid information the first coordinate vectors are used.
    pub fn smooth(g: &GramPair, count: usize) -> Result<Self> {
        if count == 0 || count > g.n() {
            return Err(Error::InvalidArgument(format!(
                "reference frame needs 1..={} columns, got {count}",
                g.n()
            )));
        }
        let n = g.n();
        let xi = match g.spec() {
            Some(spec) => {
                let m = spec.grid_points;
                let d = spec.domain_dim;
                let signed = |f: usize| if f <= m / 2 { f as i64 } else { f as i64 - m as i64 };
                let mut modes: Vec<Vec<i64>> = (0..n)
                    .map(|idx| (0..d).map(|a| signed((idx / m.pow(a as u32)) % m)).collect())
                    .collect();
                modes.sort_by_key(|k| (k.iter().map(|v| v * v).sum::<i64>(), k.clone()));
                let mut xi = CMat::zeros(n, count);
                for (col, k) in modes.iter().take(count).enumerate() {
                    for j in 0..n {
                        let phase: f64 = (0..d)
                            .map(|a| {
                                let coord = (j / m.pow(a as u32)) % m;
                                2.0 * std::f64::consts::PI * (k[a] as f64) * coord as f64 / m as f64
                            })
                            .sum();
                        xi[(j, col)] = C64::from_polar(1.0, phase);
                    }
                }
                // normalize each column in L2
                let gx = g.gl2() * &xi;
                for j in 0..count {
                    let nrm = xi.column(j).dotc(&gx.column(j)).re.sqrt();
                    xi.column_mut(j).scale_mut(1.0 / nrm);
                }
                xi
            }
            None => complete_basis(&CMat::zeros(n, 0), &identity(n), g.gl2(), 1e-12, count),
        };
        ReferenceFrame::new(xi, g)
    }

    pub fn xi(&self) -> &CMat {
        &self.inner.xi
    }

    /// `C = max_i ||xi_i||_H1`.
    pub fn c(&self) -> f64 {
        self.inner.c
    }

    /// Dimension `N` of the initial space.
    pub fn rank(&self) -> usize {
        self.inner.xi.ncols()
    }

    pub fn gram(&self) -> &GramPair {
        &self.inner.gram
    }

    /// L2-orthogonal projection onto `S`.
    pub fn projector(&self) -> &CMat {
        &self.inner.projector
    }

    pub fn same_as(&self, other: &ReferenceFrame) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner) || self.inner.xi == other.inner.xi
    }
}

/// N-tuple presentation: columns L2-orthonormal.
#[derive(Debug, Clone)]
pub struct StiefelFrame {
    phi: CMat,
}

impl StiefelFrame {
    pub fn new(phi: CMat, g: &GramPair) -> Result<Self> {
        Self::with_tol(phi, g, FRAME_TOL)
    }

    pub fn with_tol(phi: CMat, g: &GramPair, tol: f64) -> Result<Self> {
        g.check_rows(&phi)?;
        let residual = orthonormality_residual(&phi, g);
        if residual > tol {
            return Err(Error::NotOrthonormal { residual });
        }
        Ok(StiefelFrame { phi })
    }

    pub fn matrix(&self) -> &CMat {
        &self.phi
    }

    pub fn into_matrix(self) -> CMat {
        self.phi
    }
}

/// Operator presentation `V = sum_i <., xi_i>_L2 phi_i`.
#[derive(Debug, Clone)]
pub struct StiefelOperator {
    v: CMat,
    reference: ReferenceFrame,
}

/// Largest of the kernel residual `||V (I - Pi_S)||_F` and the isometry
/// residual `||(V Xi)^H GL2 (V Xi) - I||_F`.
pub fn stiefel_residual(v: &CMat, reference: &ReferenceFrame) -> f64 {
    let g = reference.gram();
    let kernel = (v - v * reference.projector()).norm();
    let iso = orthonormality_residual(&(v * reference.xi()), g);
    kernel.max(iso)
}

impl StiefelOperator {
    pub fn from_matrix(v: CMat, reference: &ReferenceFrame, tol: f64) -> Result<Self> {
        reference.gram().check_square(&v)?;
        let residual = stiefel_residual(&v, reference);
        if residual > tol {
            return Err(Error::NotStiefel { residual });
        }
        Ok(StiefelOperator {
            v,
            reference: reference.clone(),
        })
    }

    pub(crate) fn trusted(v: CMat, reference: &ReferenceFrame) -> Self {
        StiefelOperator {
            v,
            reference: reference.clone(),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.v
    }

    pub fn reference(&self) -> &ReferenceFrame {
        &self.reference
    }

    pub fn gram(&self) -> &GramPair {
        self.reference.gram()
    }

    pub fn rank(&self) -> usize {
        self.reference.rank()
    }

    /// `phi_i = V xi_i`.
    pub fn frame(&self) -> StiefelFrame {
        StiefelFrame {
            phi: &self.v * self.reference.xi(),
        }
    }

    /// L2-adjoint `V*`.
    pub fn adjoint(&self) -> CMat {
        adjoint_l2(&self.v, self.gram()).expect("square by construction")
    }

    /// Operator norm on H1.
    pub fn h1_norm(&self) -> f64 {
        h1_operator_norm(&self.v, self.gram()).expect("square by construction")
    }
}

fn same_reference(a: &ReferenceFrame, b: &ReferenceFrame) -> Result<()> {
    if a.same_as(b) {
        Ok(())
    } else {
        Err(Error::ReferenceMismatch)
    }
}

/// `V_Phi = Phi Xi^H GL2`.
pub fn frame_to_operator(phi: &StiefelFrame, reference: &ReferenceFrame) -> Result<StiefelOperator> {
    let g = reference.gram();
    g.check_rows(phi.matrix())?;
    if phi.matrix().ncols() != reference.rank() {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", g.n(), reference.rank()),
            found: shape_of(phi.matrix()),
        });
    }
    let residual = orthonormality_residual(phi.matrix(), g);
    if residual > FRAME_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    let v = phi.matrix() * (reference.xi().adjoint() * g.gl2());
    Ok(StiefelOperator::trusted(v, reference))
}

/// Recovers `phi_i = V xi_i` after re-checking the St(S) invariants.
pub fn operator_to_frame(v: &StiefelOperator) -> Result<StiefelFrame> {
    let residual = stiefel_residual(v.matrix(), v.reference());
    if residual > STIEFEL_TOL {
        return Err(Error::NotStiefel { residual });
    }
    Ok(v.frame())
}

/// `d(Phi, Psi) = (sum_i ||phi_i - psi_i||_H1^2)^{1/2}`.
pub fn tuple_metric(phi: &StiefelFrame, psi: &StiefelFrame, g: &GramPair) -> Result<f64> {
    if phi.matrix().shape() != psi.matrix().shape() {
        return Err(Error::DimensionMismatch {
            expected: shape_of(phi.matrix()),
            found: shape_of(psi.matrix()),
        });
    }
    g.check_rows(phi.matrix())?;
    let diff = phi.matrix() - psi.matrix();
    Ok(column_norms_h1(&diff, g).iter().map(|x| x * x).sum::<f64>().sqrt())
}

/// Both sides of the bi-Lipschitz comparison between the tuple metric and the
/// H1 operator norm on St(S).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricEquivalence {
    pub d: f64,
    pub opnorm: f64,
    /// `||V_Phi - V_Psi|| <= sqrt(N) d`
    pub lower_ok: bool,
    /// `d <= sqrt(N) C ||V_Phi - V_Psi||`
    pub upper_ok: bool,
}

pub const METRIC_SLACK: f64 = 1e-10;

pub fn metric_equivalence_report(
    phi: &StiefelFrame,
    psi: &StiefelFrame,
    reference: &ReferenceFrame,
) -> Result<MetricEquivalence> {
    let g = reference.gram();
    let d = tuple_metric(phi, psi, g)?;
    let v_phi = frame_to_operator(phi, reference)?;
    let v_psi = frame_to_operator(psi, reference)?;
    let opnorm = h1_operator_norm(&(v_phi.matrix() - v_psi.matrix()), g)?;
    let root_n = (reference.rank() as f64).sqrt();
    Ok(MetricEquivalence {
        d,
        opnorm,
        lower_ok: opnorm <= root_n * d + METRIC_SLACK,
        upper_ok: d <= root_n * reference.c() * opnorm + METRIC_SLACK,
    })
}

/// `U . V = U V`.
pub fn act(u: &GroupElement, v: &StiefelOperator) -> Result<StiefelOperator> {
    v.gram().check_square(u.matrix())?;
    StiefelOperator::from_matrix(u.matrix() * v.matrix(), v.reference(), SECTION_TOL)
}

// ---------------------------------------------------------------------------
// Binomial series square root
// ---------------------------------------------------------------------------

/// `sum_{k > s} |binom(1/2, k)|`, in closed form `binom(2s, s) / 4^s`.
pub fn binomial_tail(s: usize) -> f64 {
    (1..=s).fold(1.0, |acc, j| acc * (2 * j - 1) as f64 / (2 * j) as f64)
}

/// Iterator over `binom(1/2, k)` for `k = 1, 2, ...`.
#[derive(Debug, Clone)]
pub struct BinomialHalf {
    k: usize,
    current: f64,
}

impl Default for BinomialHalf {
    fn default() -> Self {
        BinomialHalf { k: 0, current: 1.0 }
    }
}

impl Iterator for BinomialHalf {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        // c_{k+1} = c_k (1/2 - k) / (k + 1)
        self.current *= (0.5 - self.k as f64) / (self.k + 1) as f64;
        self.k += 1;
        Some(self.current)
    }
}

/// Result of a truncated binomial series.
#[derive(Debug, Clone)]
pub struct SeriesRoot {
    pub root: CMat,
    pub terms: usize,
    pub tail_bound: f64,
    /// L2 operator norm of the series argument.
    pub rho: f64,
}

/// Bound on `|| sum_{k>s} c_k B^k ||_L2` given `rho = ||B||_L2 <= 1`.
pub fn series_tail_bound(s: usize, rho: f64) -> f64 {
    let plain = binomial_tail(s);
    if rho < 1.0 - 1e-12 {
        let c_next = BinomialHalf::default().nth(s).unwrap().abs();
        let geo = c_next * ((s + 1) as f64 * rho.ln()).exp() / (1.0 - rho);
        geo.min(plain)
    } else {
        plain
    }
}

/// Checks that `B` is L2-self-adjoint with L2-spectrum in `[-1, 0]`, and
/// returns its L2 operator norm.
fn check_series_argument(b: &CMat, g: &GramPair) -> Result<f64> {
    g.check_square(b)?;
    let gl2 = g.gl2();
    let residual = (gl2 * b - b.adjoint() * gl2).norm() / gl2.norm();
    if residual > 1e-8 {
        return Err(Error::NotSelfAdjoint { residual });
    }
    let (vals, _) = hermitian_eigen(&g.to_l2_coords(b));
    let (min, max) = (vals[0], vals[vals.len() - 1]);
    if min < -1.0 - 1e-10 || max > 1e-10 {
        return Err(Error::SpectrumOutOfRange { min, max });
    }
    Ok(min.abs().max(max.abs()))
}

/// `unit + sum_{k=1}^{s} c_k B^k` with no validation.
pub fn binomial_partial_sum(b: &CMat, unit: &CMat, s: usize) -> CMat {
    let mut sum = unit.clone();
    let mut power = unit.clone();
    for ck in BinomialHalf::default().take(s) {
        power = &power * b;
        sum += &power * c(ck);
    }
    sum
}

fn binomial_series(b: &CMat, unit: &CMat, g: &GramPair, tol: f64, kmax: usize) -> Result<SeriesRoot> {
    let rho = check_series_argument(b, g)?;
    let mut sum = unit.clone();
    let mut power = unit.clone();
    let mut coeffs = BinomialHalf::default();
    let mut tail = series_tail_bound(0, rho);
    let mut terms = 0;
    while tail > tol {
        if terms == kmax {
            return Err(Error::SeriesNotConverged { terms, tail });
        }
        let ck = coeffs.next().unwrap();
        power = &power * b;
        sum += &power * c(ck);
        terms += 1;
        tail = series_tail_bound(terms, rho);
        if power.norm() == 0.0 {
            tail = 0.0;
        }
    }
    Ok(SeriesRoot {
        root: sum,
        terms,
        tail_bound: tail,
        rho,
    })
}

/// `(I + B)^{1/2} = I + sum_k binom(1/2, k) B^k` for an L2-self-adjoint `B`
/// with `-I <= B <= 0`, truncated once the tail bound drops below `tol`.
pub fn binomial_sqrt(b: &CMat, g: &GramPair, tol: f64, kmax: usize) -> Result<CMat> {
    binomial_sqrt_detailed(b, g, tol, kmax).map(|s| s.root)
}

pub fn binomial_sqrt_detailed(b: &CMat, g: &GramPair, tol: f64, kmax: usize) -> Result<SeriesRoot> {
    binomial_series(b, &identity(g.n()), g, tol, kmax)
}

/// `A = (I - P)(I - Q)(I - P)` with `P = V V*`, `Q = W W*`.
pub fn sqrt_f_argument(v: &StiefelOperator, w: &StiefelOperator) -> Result<CMat> {
    same_reference(v.reference(), w.reference())?;
    let n = v.gram().n();
    let id = identity(n);
    let p = v.matrix() * v.adjoint();
    let q = w.matrix() * w.adjoint();
    let ip = &id - &p;
    Ok(&ip * (&id - &q) * &ip)
}

/// `F(W) = ((I - VV*)(I - WW*)(I - VV*))^{1/2}` by the binomial series.
///
/// `A` vanishes on `range(P)` and commutes with `P`, so the series is run on
/// `range(I - P)` with `I - P` as its unit: `F = (I - P) + sum c_k B^k`,
/// `B = A - (I - P)`. There `||B||_L2 < 1` exactly when
/// `||(I-P) - (I-P)(I-Q)(I-P)|| < 1`, which makes the tail geometric.
pub fn sqrt_f(v: &StiefelOperator, w: &StiefelOperator) -> Result<CMat> {
    sqrt_f_with(v, w, SQRT_TOL, SQRT_KMAX).map(|s| s.root)
}

pub fn sqrt_f_with(v: &StiefelOperator, w: &StiefelOperator, tol: f64, kmax: usize) -> Result<SeriesRoot> {
    let a = sqrt_f_argument(v, w)?;
    let n = v.gram().n();
    let unit = identity(n) - v.matrix() * v.adjoint();
    let b = &a - &unit;
    binomial_series(&b, &unit, v.gram(), tol, kmax)
}

// ---------------------------------------------------------------------------
// Projections and the radius r_V
// ---------------------------------------------------------------------------

/// `P = V V*`, the L2-orthogonal projection onto `range(V)`.
pub fn projection_of(v: &StiefelOperator) -> Result<ProjectionOperator> {
    let p = v.matrix() * v.adjoint();
    ProjectionOperator::new(p, v.rank(), v.gram())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzReport {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `||P1 - P2|| <= N C (C ||V1|| + 1) ||V1 - V2||` in the H1 operator norm.
pub fn projection_lipschitz_report(v1: &StiefelOperator, v2: &StiefelOperator) -> Result<LipschitzReport> {
    same_reference(v1.reference(), v2.reference())?;
    let g = v1.gram();
    let p1 = projection_of(v1)?;
    let p2 = projection_of(v2)?;
    let lhs = h1_operator_norm(&(p1.matrix() - p2.matrix()), g)?;
    let cc = v1.reference().c();
    let nn = v1.rank() as f64;
    let rhs = nn * cc * (cc * v1.h1_norm() + 1.0) * h1_operator_norm(&(v1.matrix() - v2.matrix()), g)?;
    Ok(LipschitzReport {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-10,
    })
}

/// `min{1, 1 / (C^2 N^2 (1 + ||V||) (1 + CN + CN||V||)^2)}`.
pub fn radius_formula(c_const: f64, n: usize, v_norm: f64) -> f64 {
    let cn = c_const * n as f64;
    let denom = cn * cn * (1.0 + v_norm) * (1.0 + cn + cn * v_norm).powi(2);
    (1.0 / denom).min(1.0)
}

/// Radius of the neighborhood of `V` on which the cross section is defined.
pub fn radius_r(v: &StiefelOperator) -> f64 {
    radius_formula(v.reference().c(), v.rank(), v.h1_norm())
}

// ---------------------------------------------------------------------------
// Local cross sections
// ---------------------------------------------------------------------------

/// Inverse square root of `op` restricted to `range(proj)`, zero on the
/// L2-complement. `op` must be L2-self-adjoint and leave `range(proj)`
/// invariant.
pub(crate) fn restricted_inv_sqrt(proj: &CMat, op: &CMat, g: &GramPair) -> Result<CMat> {
    let n = g.n();
    let (pvals, pvecs) = hermitian_eigen(&g.to_l2_coords(proj));
    let cols: Vec<usize> = (0..n).filter(|&k| pvals[k] > 0.5).collect();
    if cols.is_empty() {
        return Ok(CMat::zeros(n, n));
    }
    let basis = CMat::from_fn(n, cols.len(), |r, k| pvecs[(r, cols[k])]);
    let compressed = basis.adjoint() * g.to_l2_coords(op) * &basis;
    let (vals, vecs) = hermitian_eigen(&compressed);
    if vals[0] < EIG_CUTOFF {
        return Err(Error::RankDeficiency { eigenvalue: vals[0] });
    }
    let r = cols.len();
    let mut inv_sqrt = CMat::zeros(r, r);
    for (k, lam) in vals.iter().enumerate() {
        let v = vecs.column(k);
        inv_sqrt += v * v.adjoint() * c(1.0 / lam.sqrt());
    }
    Ok(g.from_l2_coords(&(&basis * inv_sqrt * basis.adjoint())))
}

/// Every intermediate of the cross section construction at `V`.
#[derive(Debug, Clone)]
pub struct CrossSection {
    pub sigma: GroupElement,
    pub p: CMat,
    pub p1: CMat,
    pub t1: CMat,
    pub t2: CMat,
    pub w: CMat,
    /// `||P - PP1P||`, `||P1 - P1PP1||`, and the two `I - P` analogs.
    pub bounds: [f64; 4],
    pub distance: f64,
    pub radius: f64,
}

pub const BOUND_NAMES: [&str; 4] = [
    "||P - P P1 P||",
    "||P1 - P1 P P1||",
    "||(I-P) - (I-P)(I-P1)(I-P)||",
    "||(I-P1) - (I-P1)(I-P)(I-P1)||",
];

/// `sigma(V1) = W T` with `T = P1 (P P1 P)^{-1/2} + (I-P1)((I-P)(I-P1)(I-P))^{-1/2}`
/// and `W = V1 V* T* + I - P1`, so that `sigma(V1) V = V1`.
pub fn cross_section(v: &StiefelOperator, v1: &StiefelOperator) -> Result<CrossSection> {
    same_reference(v.reference(), v1.reference())?;
    let g = v.gram();
    let n = g.n();
    let id = identity(n);

    let radius = radius_r(v);
    let distance = h1_operator_norm(&(v1.matrix() - v.matrix()), g)?;
    if distance >= radius {
        return Err(Error::NeighborhoodViolation {
            what: "||V1 - V||",
            value: distance,
            bound: radius,
        });
    }

    let v_adj = v.adjoint();
    let p = v.matrix() * &v_adj;
    let p1 = v1.matrix() * v1.adjoint();
    let ip = &id - &p;
    let ip1 = &id - &p1;

    let pp1p = &p * &p1 * &p;
    let p1pp1 = &p1 * &p * &p1;
    let qq = &ip * &ip1 * &ip;
    let qq1 = &ip1 * &ip * &ip1;
    let bounds = [
        h1_operator_norm(&(&p - &pp1p), g)?,
        h1_operator_norm(&(&p1 - &p1pp1), g)?,
        h1_operator_norm(&(&ip - &qq), g)?,
        h1_operator_norm(&(&ip1 - &qq1), g)?,
    ];
    for (value, what) in bounds.iter().zip(BOUND_NAMES) {
        if *value >= 1.0 {
            return Err(Error::NeighborhoodViolation {
                what,
                value: *value,
                bound: 1.0,
            });
        }
    }

    let t1 = &p1 * restricted_inv_sqrt(&p, &pp1p, g)?;
    let t2 = &ip1 * restricted_inv_sqrt(&ip, &qq, g)?;
    let t = &t1 + &t2;
    let t_adj = adjoint_l2(&t, g)?;
    let w = v1.matrix() * &v_adj * &t_adj + &ip1;
    let sigma = GroupElement::new(&w * &t, g, SECTION_TOL)?;
    Ok(CrossSection {
        sigma,
        p,
        p1,
        t1,
        t2,
        w,
        bounds,
        distance,
        radius,
    })
}

pub fn cross_section_sigma(v: &StiefelOperator, v1: &StiefelOperator) -> Result<GroupElement> {
    cross_section(v, v1).map(|s| s.sigma)
}

/// Radius `r_V / ||U^{-1}||` of the translated neighborhood around `V0 = U V`,
/// with `U = frame_unitary(V-frame, V0-frame)`.
pub fn translated_radius(v: &StiefelOperator, v0: &StiefelOperator) -> Result<(GroupElement, f64)> {
    same_reference(v.reference(), v0.reference())?;
    let g = v.gram();
    let u = frame_unitary(v.frame().matrix(), v0.frame().matrix(), g)?;
    let u_inv_norm = h1_operator_norm(u.inverse(g).matrix(), g)?;
    Ok((u.clone(), radius_r(v) / u_inv_norm))
}

/// `U sigma(U^{-1} V1)`: a section of `U -> U V` around `V0 = U V`.
pub fn translated_section(v: &StiefelOperator, v0: &StiefelOperator, v1: &StiefelOperator) -> Result<GroupElement> {
    same_reference(v.reference(), v1.reference())?;
    let g = v.gram();
    let (u, radius) = translated_radius(v, v0)?;
    let distance = h1_operator_norm(&(v1.matrix() - v0.matrix()), g)?;
    if distance >= radius {
        return Err(Error::NeighborhoodViolation {
            what: "||V1 - V0||",
            value: distance,
            bound: radius,
        });
    }
    let u_inv = u.inverse(g);
    let pulled = StiefelOperator::from_matrix(u_inv.matrix() * v1.matrix(), v.reference(), SECTION_TOL)?;
    let sigma = cross_section_sigma(v, &pulled)?;
    Ok(u.compose(&sigma))
}

// ---------------------------------------------------------------------------
// Tangent calculus
// ---------------------------------------------------------------------------

/// Differential of `U -> U V` at the identity: `X -> X V`.
pub fn delta_v(x: &SkewOperator, v: &StiefelOperator) -> CMat {
    x.matrix() * v.matrix()
}

/// `K(Y) = Y V*`.
pub fn k_map(y: &CMat, v: &StiefelOperator) -> CMat {
    y * v.adjoint()
}

/// `K(Y) = P Y V* + (I - P) Y V*`, the two-term form. Equal to [`k_map`].
pub fn k_map_two_term(y: &CMat, v: &StiefelOperator) -> CMat {
    let v_adj = v.adjoint();
    let p = v.matrix() * &v_adj;
    let ip = identity(p.nrows()) - &p;
    &p * y * &v_adj + ip * y * &v_adj
}

/// `E(Y) = delta_V(K(Y)) = Y V* V`, an idempotent onto the range of `delta_V`.
pub fn tangent_project(y: &CMat, v: &StiefelOperator) -> CMat {
    y * v.adjoint() * v.matrix()
}

/// Splits `X` into `Xg = (I-P) X (I-P)`, which annihilates `P`, and
/// `Xh = X - Xg` with `(I-P) Xh (I-P) = 0`.
pub fn lie_split_stiefel(x: &SkewOperator, p: &ProjectionOperator) -> (SkewOperator, SkewOperator) {
    let ip = identity(p.matrix().nrows()) - p.matrix();
    let xg = &ip * x.matrix() * &ip;
    let xh = x.matrix() - &xg;
    (SkewOperator::trusted(xg), SkewOperator::trusted(xh))
}

// ---------------------------------------------------------------------------
// Multiconfiguration variational space
// ---------------------------------------------------------------------------

fn binomial(k: usize, n: usize) -> usize {
    if n > k {
        return 0;
    }
    (0..n).fold(1usize, |acc, i| acc * (k - i) / (i + 1))
}

/// Membership in `S^{binom(K,N)} x C_K`: `coeffs` is a real unit vector of
/// length `binom(K, N) + 1` and `phi` is an L2-orthonormal K-frame.
pub fn mcscf_validate(coeffs: &[C64], phi: &CMat, k: usize, n: usize, g: &GramPair, tol: f64) -> Result<bool> {
    if n == 0 || n >= k {
        return Err(Error::InvalidArgument(format!("need 0 < N < K, got N = {n}, K = {k}")));
    }
    let expected = binomial(k, n) + 1;
    if coeffs.len() != expected {
        return Err(Error::DimensionMismatch {
            expected: format!("{expected} coefficients"),
            found: format!("{} coefficients", coeffs.len()),
        });
    }
    g.check_rows(phi)?;
    if phi.ncols() != k {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{k}", g.n()),
            found: shape_of(phi),
        });
    }
    let real = coeffs.iter().all(|z| z.im.abs() <= tol);
    let norm = coeffs.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    Ok(real && (norm - 1.0).abs() <= tol && orthonormality_residual(phi, g) <= tol)
}

/// H1 operator norm of `V*`, bounded by `C N`.
pub fn adjoint_h1_norm(v: &StiefelOperator) -> f64 {
    h1_operator_norm(&v.adjoint(), v.gram()).expect("square by construction")
}

/// L2 operator norm of the series argument used by [`sqrt_f`].
pub fn sqrt_f_rho(v: &StiefelOperator, w: &StiefelOperator) -> Result<f64> {
    let a = sqrt_f_argument(v, w)?;
    let unit = identity(v.gram().n()) - v.matrix() * v.adjoint();
    l2_operator_norm(&(a - unit), v.gram())
}
