//! The Grassmann manifold of rank-N L2-orthogonal projections, the quotient
//! maps between it and St(S), the conjugation action with its local cross
//! sections, and the `delta_P` tangent calculus.

use crate::error::{Error, Result};
use crate::group_u::{frame_unitary, GroupElement, SkewOperator};
use crate::linalg::{hermitian_eigen, identity, CMat};
use crate::stiefel::{
    cross_section_sigma, radius_r, restricted_inv_sqrt, ReferenceFrame, StiefelOperator, SECTION_TOL,
};
use crate::two_norm_space::{h1_operator_norm, orthonormality_residual, GramPair};

/// Tolerance for idempotence and self-adjointness of a projection.
pub const PROJECTION_TOL: f64 = 1e-10;
/// Tolerance on `trace(P) = N`.
pub const TRACE_TOL: f64 = 1e-8;
/// Threshold on `||P - P1||_F` below which two Stiefel points are equivalent.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

/// A rank-N L2-orthogonal projection `P = P^2 = P*`.
#[derive(Debug, Clone)]
pub struct ProjectionOperator {
    p: CMat,
    rank: usize,
    gram: GramPair,
}

/// Largest of `||P^2 - P||_F`, `||P* - P||_F` and `|trace P - N|`, each
/// divided by its tolerance. At most one means all three invariants hold.
fn projection_violation(p: &CMat, rank: usize, g: &GramPair) -> (f64, f64) {
    let idem = (p * p - p).norm();
    let adj = (g.solve_l2(&(p.adjoint() * g.gl2())) - p).norm();
    let trace = (p.trace().re - rank as f64).abs();
    let residual = idem.max(adj).max(trace);
    let scaled = (idem / PROJECTION_TOL).max(adj / PROJECTION_TOL).max(trace / TRACE_TOL);
    (scaled, residual)
}

impl ProjectionOperator {
    pub fn new(p: CMat, rank: usize, g: &GramPair) -> Result<Self> {
        g.check_square(&p)?;
        let (scaled, residual) = projection_violation(&p, rank, g);
        if scaled > 1.0 {
            return Err(Error::NotProjection { rank, residual });
        }
        Ok(ProjectionOperator {
            p,
            rank,
            gram: g.clone(),
        })
    }

    pub fn matrix(&self) -> &CMat {
        &self.p
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn gram(&self) -> &GramPair {
        &self.gram
    }

    /// `I - P`.
    pub fn complement(&self) -> CMat {
        identity(self.p.nrows()) - &self.p
    }

    /// An L2-orthonormal basis of `range(P)`, as n x N columns.
    pub fn range_basis(&self) -> CMat {
        let g = &self.gram;
        let n = g.n();
        let (_, vecs) = hermitian_eigen(&g.to_l2_coords(&self.p));
        // eigenvalues ascend, so the range sits in the last N columns
        let top = vecs.columns(n - self.rank, self.rank).into_owned();
        g.l2_factor_inv() * top
    }
}

/// `P = H H^H GL2` for an L2-orthonormal `H`.
pub fn projection_from_frame(h: &CMat, g: &GramPair) -> Result<ProjectionOperator> {
    g.check_rows(h)?;
    let residual = orthonormality_residual(h, g);
    if residual > PROJECTION_TOL {
        return Err(Error::NotOrthonormal { residual });
    }
    ProjectionOperator::new(h * (h.adjoint() * g.gl2()), h.ncols(), g)
}

/// `phi(V) = V V*`.
pub fn phi(v: &StiefelOperator) -> Result<ProjectionOperator> {
    crate::stiefel::projection_of(v)
}

fn check_pair(p: &ProjectionOperator, p1: &ProjectionOperator) -> Result<()> {
    if !p.gram.same_as(&p1.gram) {
        return Err(Error::InvalidArgument("projections live on different spaces".into()));
    }
    if p.rank != p1.rank {
        return Err(Error::DimensionMismatch {
            expected: format!("rank {}", p.rank),
            found: format!("rank {}", p1.rank),
        });
    }
    Ok(())
}

/// Local inverse of `phi` around `P`. The unitary `U` with `U(S) = range(P)`
/// is built once and reused for every `P1`.
#[derive(Debug, Clone)]
pub struct PsiChart {
    base: ProjectionOperator,
    reference: ReferenceFrame,
    unitary: GroupElement,
    radius: f64,
}

impl PsiChart {
    pub fn new(p: &ProjectionOperator, reference: &ReferenceFrame) -> Result<Self> {
        let g = reference.gram();
        if !p.gram.same_as(g) {
            return Err(Error::InvalidArgument("projection and reference frame live on different spaces".into()));
        }
        if p.rank != reference.rank() {
            return Err(Error::DimensionMismatch {
                expected: format!("rank {}", reference.rank()),
                found: format!("rank {}", p.rank),
            });
        }
        let unitary = frame_unitary(reference.xi(), &p.range_basis(), g)?;
        let radius = 1.0 / (h1_operator_norm(p.matrix(), g)? + 1.0).powi(2);
        Ok(PsiChart {
            base: p.clone(),
            reference: reference.clone(),
            unitary,
            radius,
        })
    }

    pub fn base(&self) -> &ProjectionOperator {
        &self.base
    }

    /// `1 / (||P|| + 1)^2`.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn unitary(&self) -> &GroupElement {
        &self.unitary
    }

    /// `psi(P1) = T1(P1) U` with `T1(P1) = P1 (P P1 P)^{-1/2}`.
    pub fn section(&self, p1: &ProjectionOperator) -> Result<StiefelOperator> {
        check_pair(&self.base, p1)?;
        let g = self.reference.gram();
        let p = self.base.matrix();
        let q = p1.matrix();
        let distance = h1_operator_norm(&(q - p), g)?;
        if distance >= self.radius {
            return Err(Error::NeighborhoodViolation {
                what: "||P1 - P||",
                value: distance,
                bound: self.radius,
            });
        }
        let pqp = p * q * p;
        let qpq = q * p * q;
        for (what, value) in [
            ("||P - P P1 P||", h1_operator_norm(&(p - &pqp), g)?),
            ("||P1 - P1 P P1||", h1_operator_norm(&(q - &qpq), g)?),
        ] {
            if value >= 1.0 {
                return Err(Error::NeighborhoodViolation { what, value, bound: 1.0 });
            }
        }
        let t1 = q * restricted_inv_sqrt(p, &pqp, g)?;
        StiefelOperator::from_matrix(t1 * self.unitary.matrix() * self.reference.projector(), &self.reference, SECTION_TOL)
    }
}

pub fn psi_section(p: &ProjectionOperator, p1: &ProjectionOperator, reference: &ReferenceFrame) -> Result<StiefelOperator> {
    PsiChart::new(p, reference)?.section(p1)
}

/// Outcome of comparing two Stiefel points modulo the unitary group of `S`.
#[derive(Debug, Clone)]
pub enum Equivalence {
    /// `U = V1* V + (I - Pi_S)` with `V1 U = V`.
    Equivalent(GroupElement),
    Inequivalent { distance: f64 },
}

impl Equivalence {
    pub fn is_equivalent(&self) -> bool {
        matches!(self, Equivalence::Equivalent(_))
    }
}

pub fn grassmann_equivalence(v: &StiefelOperator, v1: &StiefelOperator) -> Result<Equivalence> {
    if !v.reference().same_as(v1.reference()) {
        return Err(Error::ReferenceMismatch);
    }
    let p = v.matrix() * v.adjoint();
    let p1 = v1.matrix() * v1.adjoint();
    let distance = (&p - &p1).norm();
    if distance > EQUIVALENCE_TOL {
        return Ok(Equivalence::Inequivalent { distance });
    }
    let n = v.gram().n();
    let u = v1.adjoint() * v.matrix() + identity(n) - v.reference().projector();
    Ok(Equivalence::Equivalent(GroupElement::new(u, v.gram(), SECTION_TOL)?))
}

/// `U . P = U P U^{-1}`.
pub fn act_grassmann(u: &GroupElement, p: &ProjectionOperator) -> Result<ProjectionOperator> {
    let g = &p.gram;
    g.check_square(u.matrix())?;
    let q = u.matrix() * p.matrix() * u.inverse(g).matrix();
    ProjectionOperator::new(q, p.rank, g)
}

/// A unitary with `U P U^{-1} = P1`, from the orthonormal bases of the two
/// ranges.
pub fn conjugating_unitary(p: &ProjectionOperator, p1: &ProjectionOperator) -> Result<GroupElement> {
    check_pair(p, p1)?;
    frame_unitary(&p.range_basis(), &p1.range_basis(), &p.gram)
}

/// Most halvings of the starting radius in [`admissible_radius`].
pub const MAX_HALVINGS: usize = 20;

/// Fraction of the probed radius returned by [`admissible_radius`]. Probes
/// sample only a few directions, and `psi` stretches some others further.
pub const ADMISSIBLE_MARGIN: f64 = 0.5;

/// Radius `r*` around `P` on which [`section_pi_p`] is expected to succeed.
///
/// Starts from `min(1/(||P||+1)^2, r_V)` with `V = psi(P)` and halves until
/// the section is defined at a fixed set of probe projections at distance
/// `0.99 r` from `P`, then returns `ADMISSIBLE_MARGIN * r`.
pub fn admissible_radius(p: &ProjectionOperator, reference: &ReferenceFrame) -> Result<f64> {
    let chart = PsiChart::new(p, reference)?;
    let v = chart.section(p)?;
    let rv = radius_r(&v);
    let g = reference.gram();
    let mut r = chart.radius().min(rv);
    let probes = probe_generators(g);
    for _ in 0..=MAX_HALVINGS {
        let fits = probes.iter().all(|x| match probe_at(p, x, 0.99 * r) {
            Some(q) => chart
                .section(&q)
                .and_then(|w| h1_operator_norm(&(w.matrix() - v.matrix()), g))
                .map(|d| d < rv)
                .unwrap_or(false),
            None => true,
        });
        if fits {
            return Ok(ADMISSIBLE_MARGIN * r);
        }
        r *= 0.5;
    }
    Err(Error::NeighborhoodViolation {
        what: "admissible radius",
        value: r,
        bound: 0.0,
    })
}

fn probe_generators(g: &GramPair) -> Vec<SkewOperator> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0x5eed);
    (0..4).map(|_| SkewOperator::random(&mut rng, g, 1.0)).collect()
}

/// `e^{tX} P e^{-tX}` with `t` chosen so the H1 distance to `P` is just
/// below `target`.
fn probe_at(p: &ProjectionOperator, x: &SkewOperator, target: f64) -> Option<ProjectionOperator> {
    let g = &p.gram;
    let conj = |t: f64| -> Option<(ProjectionOperator, f64)> {
        let u = crate::group_u::exp_skew(&x.scale(t), g).ok()?;
        let q = act_grassmann(&u, p).ok()?;
        let d = h1_operator_norm(&(q.matrix() - p.matrix()), g).ok()?;
        Some((q, d))
    };
    let mut hi = 1e-3;
    loop {
        let (_, d) = conj(hi)?;
        if d >= target {
            break;
        }
        hi *= 2.0;
        if hi > 1e3 {
            return None;
        }
    }
    let mut lo = 0.0;
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if conj(mid)?.1 < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    conj(lo).map(|(q, _)| q)
}

/// A local section of `pi_P(U) = U P U^{-1}`: `sigma(psi(P1))` relative to
/// `V = psi(P)`.
pub fn section_pi_p(p: &ProjectionOperator, p1: &ProjectionOperator, reference: &ReferenceFrame) -> Result<GroupElement> {
    let chart = PsiChart::new(p, reference)?;
    let v = chart.section(p)?;
    let rv = radius_r(&v);
    let g = reference.gram();
    let start = chart.radius().min(rv);
    let distance = h1_operator_norm(&(p1.matrix() - p.matrix()), g)?;
    if distance >= start {
        return Err(Error::NeighborhoodViolation {
            what: "||P1 - P||",
            value: distance,
            bound: start,
        });
    }
    let v1 = chart.section(p1)?;
    let gap = h1_operator_norm(&(v1.matrix() - v.matrix()), g)?;
    if gap >= rv {
        return Err(Error::NeighborhoodViolation {
            what: "||psi(P1) - psi(P)||",
            value: gap,
            bound: rv,
        });
    }
    cross_section_sigma(&v, &v1)
}

/// `delta_P(Y) = Y P - P Y`.
pub fn delta_p(y: &CMat, p: &ProjectionOperator) -> CMat {
    y * p.matrix() - p.matrix() * y
}

/// `E(Y) = delta_P(delta_P(Y))`.
pub fn tangent_project_grassmann(y: &CMat, p: &ProjectionOperator) -> CMat {
    delta_p(&delta_p(y, p), p)
}

/// `Xdiag = P X P + (I-P) X (I-P)`, commuting with `P`, and the co-diagonal
/// remainder.
pub fn lie_split_grassmann(x: &SkewOperator, p: &ProjectionOperator) -> (SkewOperator, SkewOperator) {
    let pm = p.matrix();
    let ip = p.complement();
    let diag = pm * x.matrix() * pm + &ip * x.matrix() * &ip;
    let codiag = x.matrix() - &diag;
    (SkewOperator::trusted(diag), SkewOperator::trusted(codiag))
}
