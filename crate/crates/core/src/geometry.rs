//! Finsler and Riemannian structures on St(S) and the Grassmannian: Schatten
//! norms taken with respect to H1, curve lengths, and an upper bound for the
//! induced distance from a one-parameter curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grassmann::{delta_p, ProjectionOperator};
use crate::group_u::{frame_unitary, GroupElement, SkewOperator};
use crate::linalg::{c, expm, identity, singular_values_desc, spectral_norm, CMat};
use crate::stiefel::{cross_section_sigma, radius_r, StiefelOperator};
use crate::two_norm_space::{adjoint_h1, h1_operator_norm, GramPair};

/// Singular values at or below this count as zero.
pub const RANK_TOL: f64 = 1e-10;
/// Slack allowed in the norm inequalities.
pub const NORM_SLACK: f64 = 1e-10;
/// Default number of quadrature intervals for curve lengths.
pub const DEFAULT_STEPS: usize = 64;

/// Which symmetric norm measures tangent vectors.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "NormSpecRepr", into = "NormSpecRepr")]
pub enum NormSpec {
    /// Operator norm on H1, the largest singular value.
    #[default]
    OperatorH1,
    /// `(sum s_j^p)^{1/p}`; `p = inf` gives the operator norm.
    Schatten(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum Exponent {
    Number(f64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
struct NormSpecRepr {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    p: Option<Exponent>,
}

impl TryFrom<NormSpecRepr> for NormSpec {
    type Error = Error;

    fn try_from(r: NormSpecRepr) -> Result<Self> {
        let spec = match r.kind.as_str() {
            "operator_h1" => NormSpec::OperatorH1,
            "schatten_p" => {
                let p = match r.p {
                    Some(Exponent::Number(p)) => p,
                    Some(Exponent::Text(s)) if s == "inf" => f64::INFINITY,
                    Some(Exponent::Text(s)) => return Err(Error::InvalidNorm(format!("p = {s:?}"))),
                    None => return Err(Error::InvalidNorm("schatten_p needs p".into())),
                };
                NormSpec::Schatten(p)
            }
            other => return Err(Error::InvalidNorm(format!("unknown kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl From<NormSpec> for NormSpecRepr {
    fn from(s: NormSpec) -> Self {
        match s {
            NormSpec::OperatorH1 => NormSpecRepr {
                kind: "operator_h1".into(),
                p: None,
            },
            NormSpec::Schatten(p) => NormSpecRepr {
                kind: "schatten_p".into(),
                p: Some(if p.is_infinite() {
                    Exponent::Text("inf".into())
                } else {
                    Exponent::Number(p)
                }),
            },
        }
    }
}

impl NormSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NormSpec::OperatorH1 => Ok(()),
            NormSpec::Schatten(p) if p >= 1.0 => Ok(()),
            NormSpec::Schatten(p) => Err(Error::InvalidNorm(format!("p = {p} is below 1"))),
        }
    }

    /// Short name used in report files.
    pub fn label(&self) -> String {
        match *self {
            NormSpec::OperatorH1 => "operator_h1".into(),
            NormSpec::Schatten(p) if p.is_infinite() => "schatten_inf".into(),
            NormSpec::Schatten(p) => format!("schatten_{p}"),
        }
    }

    /// Applies the norm to a list of singular values.
    pub fn of_singular_values(&self, s: &[f64]) -> f64 {
        match *self {
            NormSpec::OperatorH1 => s.iter().cloned().fold(0.0, f64::max),
            NormSpec::Schatten(p) if p.is_infinite() => s.iter().cloned().fold(0.0, f64::max),
            NormSpec::Schatten(1.0) => s.iter().sum(),
            NormSpec::Schatten(2.0) => s.iter().map(|x| x * x).sum::<f64>().sqrt(),
            NormSpec::Schatten(p) => {
                // scale by the largest value to keep s^p finite
                let top = s.iter().cloned().fold(0.0, f64::max);
                if top == 0.0 {
                    return 0.0;
                }
                top * s.iter().map(|x| (x / top).powf(p)).sum::<f64>().powf(1.0 / p)
            }
        }
    }
}

/// Singular values of `A` as an operator on H1, descending.
pub fn h1_singular_values(a: &CMat, g: &GramPair) -> Result<Vec<f64>> {
    g.check_square(a)?;
    Ok(singular_values_desc(&g.to_h1_coords(a)))
}

pub fn schatten_norm(a: &CMat, spec: NormSpec, g: &GramPair) -> Result<f64> {
    spec.validate()?;
    Ok(spec.of_singular_values(&h1_singular_values(a, g)?))
}

/// The chain `||D|| <= ||D||_S <= sum s_j <= 2N ||D||` for `D = V1 - V2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SandwichReport {
    pub lhs: f64,
    pub mid: f64,
    pub sum: f64,
    pub rhs: f64,
    /// Singular values of `D` above [`RANK_TOL`].
    pub rank: usize,
    pub ok: bool,
}

pub fn norm_sandwich_check(v1: &StiefelOperator, v2: &StiefelOperator, spec: NormSpec) -> Result<SandwichReport> {
    if !v1.reference().same_as(v2.reference()) {
        return Err(Error::ReferenceMismatch);
    }
    let g = v1.gram();
    let s = h1_singular_values(&(v1.matrix() - v2.matrix()), g)?;
    let lhs = s.first().cloned().unwrap_or(0.0);
    let mid = spec.of_singular_values(&s);
    let sum: f64 = s.iter().sum();
    let rhs = 2.0 * v1.rank() as f64 * lhs;
    let rank = s.iter().filter(|x| **x > RANK_TOL).count();
    let ok = lhs <= mid + NORM_SLACK && mid <= sum + NORM_SLACK && sum <= rhs + NORM_SLACK && rank <= 2 * v1.rank();
    Ok(SandwichReport {
        lhs,
        mid,
        sum,
        rhs,
        rank,
        ok,
    })
}

/// `||X V||_S`.
pub fn finsler_norm_stiefel(x: &SkewOperator, v: &StiefelOperator, spec: NormSpec) -> Result<f64> {
    schatten_norm(&(x.matrix() * v.matrix()), spec, v.gram())
}

/// `||X P - P X||_S`.
pub fn finsler_norm_grassmann(x: &SkewOperator, p: &ProjectionOperator, spec: NormSpec) -> Result<f64> {
    schatten_norm(&delta_p(x.matrix(), p), spec, p.gram())
}

fn trace_pairing(a: &CMat, b: &CMat, g: &GramPair) -> Result<f64> {
    Ok((a * adjoint_h1(b, g)?).trace().re)
}

/// `Re Tr(XV (YV)*)`, the adjoint taken in H1.
pub fn riemannian_inner_stiefel(x: &SkewOperator, y: &SkewOperator, v: &StiefelOperator) -> Result<f64> {
    trace_pairing(&(x.matrix() * v.matrix()), &(y.matrix() * v.matrix()), v.gram())
}

/// `Re Tr((XP - PX)(YP - PY)*)`, the adjoint taken in H1.
pub fn riemannian_inner_grassmann(x: &SkewOperator, y: &SkewOperator, p: &ProjectionOperator) -> Result<f64> {
    trace_pairing(&delta_p(x.matrix(), p), &delta_p(y.matrix(), p), p.gram())
}

#[derive(Debug, Clone)]
pub struct CurveSample {
    pub t: f64,
    pub point: CMat,
    pub velocity: CMat,
}

/// Samples of a curve on `[0, 1]` with strictly increasing parameters.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    samples: Vec<CurveSample>,
}

impl CurveSamples {
    pub fn new(samples: Vec<CurveSample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidCurve("need at least two samples".into()));
        }
        if samples[0].t != 0.0 || samples[samples.len() - 1].t != 1.0 {
            return Err(Error::InvalidCurve("parameters must run from 0 to 1".into()));
        }
        if let Some(w) = samples.windows(2).find(|w| w[1].t <= w[0].t) {
            return Err(Error::InvalidCurve(format!(
                "parameters not strictly increasing at t = {}",
                w[1].t
            )));
        }
        Ok(CurveSamples { samples })
    }

    pub fn samples(&self) -> &[CurveSample] {
        &self.samples
    }

    /// Number of quadrature intervals.
    pub fn steps(&self) -> usize {
        self.samples.len() - 1
    }
}

/// `L = int_0^1 ||gamma'(t)|| dt` by the composite trapezoid rule.
pub fn curve_length(curve: &CurveSamples, spec: NormSpec, g: &GramPair) -> Result<f64> {
    let speeds = curve
        .samples
        .iter()
        .map(|s| schatten_norm(&s.velocity, spec, g))
        .collect::<Result<Vec<_>>>()?;
    Ok(curve
        .samples
        .windows(2)
        .zip(speeds.windows(2))
        .map(|(s, f)| (s[1].t - s[0].t) * 0.5 * (f[0] + f[1]))
        .sum())
}

/// `gamma(t) = e^{tX} V0` with velocity `X gamma(t)` at `steps + 1` equally
/// spaced parameters.
pub fn one_parameter_curve(x: &CMat, v0: &CMat, steps: usize) -> Result<CurveSamples> {
    if steps == 0 {
        return Err(Error::InvalidCurve("need at least one step".into()));
    }
    let step = expm(&(x * c(1.0 / steps as f64)))?;
    let mut point = v0.clone();
    let mut samples = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i > 0 {
            point = &step * &point;
        }
        samples.push(CurveSample {
            t: i as f64 / steps as f64,
            velocity: x * &point,
            point: point.clone(),
        });
    }
    CurveSamples::new(samples)
}

/// Largest number of square roots taken by [`log_unitary`].
const MAX_SQRT: usize = 64;

/// Principal square root by the Denman-Beavers iteration.
fn sqrtm(a: &CMat) -> Result<CMat> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = identity(n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().ok_or(Error::Singular)?;
        let z_inv = z.clone().try_inverse().ok_or(Error::Singular)?;
        let y_next = (&y + z_inv) * c(0.5);
        let z_next = (&z + y_inv) * c(0.5);
        let change = (&y_next - &y).norm();
        y = y_next;
        z = z_next;
        if change <= 1e-15 * y.norm() {
            return Ok(y);
        }
    }
    Err(Error::SeriesNotConverged {
        terms: 100,
        tail: f64::NAN,
    })
}

/// Principal logarithm of a group element with `||U - I||_H1 < 1`, by inverse
/// scaling and squaring followed by the Mercator series.
pub fn log_unitary(u: &GroupElement, g: &GramPair) -> Result<SkewOperator> {
    let n = g.n();
    let id = identity(n);
    let distance = h1_operator_norm(&(u.matrix() - &id), g)?;
    if distance >= 1.0 {
        return Err(Error::LogUnavailable { distance });
    }
    // in an L2-orthonormal basis U is a plain unitary matrix
    let mut a = g.to_l2_coords(u.matrix());
    let mut roots = 0;
    while spectral_norm(&(&a - &id)) > 0.25 {
        if roots == MAX_SQRT {
            return Err(Error::LogUnavailable { distance });
        }
        a = sqrtm(&a)?;
        roots += 1;
    }
    let z = &a - &id;
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut converged = false;
    for k in 2..200 {
        power = &power * &z;
        let sign = if k % 2 == 0 { -1.0 } else { 1.0 };
        let term = &power * c(sign / k as f64);
        sum += &term;
        if term.norm() <= f64::EPSILON * 0.25 * sum.norm().max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    if !converged && z.norm() > 0.0 {
        return Err(Error::SeriesNotConverged {
            terms: 200,
            tail: power.norm(),
        });
    }
    let x = g.from_l2_coords(&(sum * c(2f64.powi(roots as i32))));
    SkewOperator::new(x, g, 1e-8)
}

/// Result of [`distance_upper_detailed`].
#[derive(Debug, Clone)]
pub struct DistanceUpper {
    pub length: f64,
    pub generator: SkewOperator,
    /// `||gamma(1) - V1||_F`.
    pub endpoint_residual: f64,
}

/// Tolerance for the curve endpoint to match the target.
pub const ENDPOINT_TOL: f64 = 1e-8;

/// Length of `t -> e^{tX} V0` with `e^X V0 = V1`: an upper bound for the
/// Finsler distance. `e^X` is the local cross section at `V0` when `V1` lies
/// within `r_{V0}`, and the frame completion unitary otherwise.
pub fn distance_upper_detailed(
    v0: &StiefelOperator,
    v1: &StiefelOperator,
    spec: NormSpec,
    steps: usize,
) -> Result<DistanceUpper> {
    if !v0.reference().same_as(v1.reference()) {
        return Err(Error::ReferenceMismatch);
    }
    let g = v0.gram();
    if v0.matrix() == v1.matrix() {
        return Ok(DistanceUpper {
            length: 0.0,
            generator: SkewOperator::zero(g.n()),
            endpoint_residual: 0.0,
        });
    }
    let gap = h1_operator_norm(&(v1.matrix() - v0.matrix()), g)?;
    let u = if gap < radius_r(v0) {
        cross_section_sigma(v0, v1)?
    } else {
        frame_unitary(v0.frame().matrix(), v1.frame().matrix(), g)?
    };
    let x = log_unitary(&u, g)?;
    let curve = one_parameter_curve(x.matrix(), v0.matrix(), steps)?;
    let end = &curve.samples()[curve.steps()].point;
    let endpoint_residual = (end - v1.matrix()).norm();
    if endpoint_residual > ENDPOINT_TOL {
        return Err(Error::InvalidCurve(format!(
            "curve ends {endpoint_residual:.3e} away from the target"
        )));
    }
    let length = curve_length(&curve, spec, g)?;
    Ok(DistanceUpper {
        length,
        generator: x,
        endpoint_residual,
    })
}

pub fn distance_upper(v0: &StiefelOperator, v1: &StiefelOperator, spec: NormSpec, steps: usize) -> Result<f64> {
    distance_upper_detailed(v0, v1, spec, steps).map(|d| d.length)
}

/// Column order of curve report rows.
pub const CURVE_CSV_HEADER: &str = "curve_id,spec,steps,length";

/// Floats in report files: 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub curve_id: String,
    pub spec: NormSpec,
    pub steps: usize,
    pub length: f64,
}

impl CurveRow {
    pub fn to_csv(&self) -> String {
        format!("{},{},{},{}", self.curve_id, self.spec.label(), self.steps, format_real(self.length))
    }
}
