//! Randomized property suites. Each suite runs `config.trials` independent
//! trials, every trial drawing from its own generator, and reports the number
//! of checks, the largest residual and whether everything held.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use h1stiefel::geometry::{
    distance_upper, finsler_norm_stiefel, norm_sandwich_check, one_parameter_curve, curve_length,
    riemannian_inner_grassmann, riemannian_inner_stiefel, NormSpec, DEFAULT_STEPS,
};
use h1stiefel::grassmann::{
    admissible_radius, delta_p, grassmann_equivalence, lie_split_grassmann, section_pi_p,
    tangent_project_grassmann, Equivalence, PsiChart,
};
use h1stiefel::group_u::{exp_skew, frame_unitary, group_residual, lie_residual, SkewOperator};
use h1stiefel::linalg::{c, hermitian_eigen, identity, CMat, ONE, ZERO};
use h1stiefel::oracle::{adjoint_by_definition, h1_norm_by_sampling, sqrt_eig};
use h1stiefel::sample::{self, trial_rng};
use h1stiefel::stiefel::{
    act, adjoint_h1_norm, cross_section, delta_v, frame_to_operator, k_map, k_map_two_term,
    lie_split_stiefel, metric_equivalence_report, projection_lipschitz_report, projection_of, radius_r,
    sqrt_f, sqrt_f_argument, stiefel_residual, tangent_project, ReferenceFrame, StiefelFrame, StiefelOperator,
};
use h1stiefel::trials::run_trials;
use h1stiefel::two_norm_space::{adjoint_l2, h1_operator_norm, GramPair};

use crate::config::{RunConfig, Setup};

/// One verified property.
#[derive(Debug, Clone)]
pub enum Check {
    /// A residual that must not exceed its tolerance.
    Residual { name: &'static str, value: f64, tol: f64 },
    /// An inequality or flag.
    Holds { name: &'static str, ok: bool },
}

impl Check {
    fn residual(name: &'static str, value: f64, tol: f64) -> Check {
        Check::Residual { name, value, tol }
    }

    fn holds(name: &'static str, ok: bool) -> Check {
        Check::Holds { name, ok }
    }

    pub fn passed(&self) -> bool {
        match *self {
            Check::Residual { value, tol, .. } => value <= tol,
            Check::Holds { ok, .. } => ok,
        }
    }

    fn describe(&self) -> String {
        match *self {
            Check::Residual { name, value, tol } => format!("{name}: {value:.3e} > {tol:.1e}"),
            Check::Holds { name, .. } => format!("{name} does not hold"),
        }
    }
}

type TrialResult = Result<Vec<Check>, h1stiefel::Error>;

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub suite: &'static str,
    pub checks: usize,
    pub max_residual: f64,
    pub pass: bool,
    /// First few failures, for diagnostics.
    pub failures: Vec<String>,
}

const MAX_LISTED_FAILURES: usize = 5;

fn collect(suite: &'static str, outcomes: Vec<TrialResult>) -> SuiteReport {
    let mut checks = 0;
    let mut max_residual = 0.0f64;
    let mut failures = Vec::new();
    let mut pass = true;
    for (trial, outcome) in outcomes.into_iter().enumerate() {
        match outcome {
            Ok(list) => {
                for check in list {
                    checks += 1;
                    if let Check::Residual { value, .. } = check {
                        max_residual = if value.is_nan() { f64::NAN } else { max_residual.max(value) };
                    }
                    if !check.passed() {
                        pass = false;
                        if failures.len() < MAX_LISTED_FAILURES {
                            failures.push(format!("trial {trial}: {}", check.describe()));
                        }
                    }
                }
            }
            Err(e) => {
                checks += 1;
                pass = false;
                if failures.len() < MAX_LISTED_FAILURES {
                    failures.push(format!("trial {trial}: {e}"));
                }
            }
        }
    }
    SuiteReport {
        suite,
        checks,
        max_residual,
        pass,
        failures,
    }
}

/// A suite: a name and a trial body.
pub struct Suite {
    pub name: &'static str,
    pub run: fn(&RunConfig, &Setup, &mut ChaCha8Rng) -> TrialResult,
}

pub const SUITES: [Suite; 11] = [
    Suite { name: "group_law", run: group_law },
    Suite { name: "transitivity", run: transitivity },
    Suite { name: "cross_section", run: cross_section_suite },
    Suite { name: "square_root", run: square_root },
    Suite { name: "grassmann", run: grassmann },
    Suite { name: "tangent", run: tangent },
    Suite { name: "norm_sandwich", run: norm_sandwich },
    Suite { name: "metric_equivalence", run: metric_equivalence },
    Suite { name: "geometry", run: geometry },
    Suite { name: "stiefel_action", run: stiefel_action },
    Suite { name: "oracle_agreement", run: oracle_agreement },
];

pub fn run_suite(index: usize, config: &RunConfig, setup: &Setup) -> SuiteReport {
    let suite = &SUITES[index];
    let outcomes = run_trials(config.trials, |i| {
        let mut rng = trial_rng(config.seed, index as u32, i as u32);
        (suite.run)(config, setup, &mut rng)
    });
    collect(suite.name, outcomes)
}

pub fn run_named(name: &str, config: &RunConfig, setup: &Setup) -> Option<SuiteReport> {
    SUITES.iter().position(|s| s.name == name).map(|i| run_suite(i, config, setup))
}

pub fn run_all(config: &RunConfig, setup: &Setup) -> Vec<SuiteReport> {
    (0..SUITES.len()).map(|i| run_suite(i, config, setup)).collect()
}

fn rel(value: f64, scale: f64) -> f64 {
    value / scale.max(f64::MIN_POSITIVE)
}

fn group_law(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let tol = config.tol("group");
    let x = SkewOperator::random(rng, g, 1.0);
    let y = SkewOperator::random(rng, g, 1.0);
    let u = exp_skew(&x, g)?;
    let w = exp_skew(&y, g)?;
    let product = u.compose(&w);
    let inverse = u.inverse(g);
    let n = g.n();
    Ok(vec![
        Check::residual("lie residual of X", lie_residual(x.matrix(), g), config.tol("lie")),
        Check::residual("group residual of e^X", group_residual(u.matrix(), g), tol),
        Check::residual("group residual of a product", group_residual(product.matrix(), g), tol),
        Check::residual("group residual of an inverse", group_residual(inverse.matrix(), g), tol),
        Check::residual("||U U^-1 - I||_F", (u.matrix() * inverse.matrix() - identity(n)).norm(), tol * n as f64),
    ])
}

fn transitivity(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let v0 = sample::random_stiefel(rng, &setup.reference);
    let v1 = sample::random_stiefel(rng, &setup.reference);
    let u = frame_unitary(v0.frame().matrix(), v1.frame().matrix(), g)?;
    Ok(vec![
        Check::residual("group residual of U", group_residual(u.matrix(), g), config.tol("group")),
        Check::residual("||U V0 - V1||_F", (u.matrix() * v0.matrix() - v1.matrix()).norm(), config.tol("transitivity")),
    ])
}

fn cross_section_suite(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let tol = config.tol("section");
    let v = sample::random_stiefel(rng, &setup.reference);
    let v1 = sample::nearby_stiefel(rng, &v, radius_r(&v));
    let cs = cross_section(&v, &v1)?;
    let n = g.n();
    let ip = identity(n) - &cs.p;
    let ip1 = identity(n) - &cs.p1;
    let t1a = adjoint_l2(&cs.t1, g)?;
    let t2a = adjoint_l2(&cs.t2, g)?;
    let mut checks = vec![
        Check::holds("||V1 - V|| < r_V", cs.distance < cs.radius),
        Check::residual("group residual of sigma", group_residual(cs.sigma.matrix(), g), tol),
        Check::residual("||sigma V - V1||_F", (cs.sigma.matrix() * v.matrix() - v1.matrix()).norm(), tol),
        Check::residual("||T1* T1 - P||_F", (&t1a * &cs.t1 - &cs.p).norm(), tol),
        Check::residual("||T1 T1* - P1||_F", (&cs.t1 * &t1a - &cs.p1).norm(), tol),
        Check::residual("||T2* T2 - (I-P)||_F", (&t2a * &cs.t2 - ip).norm(), tol),
        Check::residual("||T2 T2* - (I-P1)||_F", (&cs.t2 * &t2a - ip1).norm(), tol),
    ];
    checks.extend(cs.bounds.iter().map(|b| Check::holds("neighborhood bound < 1", *b < 1.0)));
    Ok(checks)
}

fn square_root(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let tol = config.tol("sqrt");
    let v = sample::random_stiefel(rng, &setup.reference);
    let w = sample::sqrt_pair(rng, &v, SQRT_RHO);
    let a = sqrt_f_argument(&v, &w)?;
    let root = sqrt_f(&v, &w)?;
    let oracle = sqrt_eig(&a, g)?;
    Ok(vec![
        Check::residual("||binomial - eig||_F", (&root - oracle).norm(), tol),
        Check::residual("||R^2 - A||_F", (&root * &root - &a).norm(), tol),
        Check::residual("||R* - R||_F", (adjoint_l2(&root, g)? - &root).norm(), tol),
    ])
}

/// Largest L2 norm of the series argument in sampled square-root instances.
pub const SQRT_RHO: f64 = 0.8;

fn grassmann(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let r = &setup.reference;
    let tol = config.tol("grassmann");
    let p = sample::random_projection(rng, g, r.rank());
    let chart = PsiChart::new(&p, r)?;
    let p1 = sample::projection_at_distance(rng, &p, 0.9 * chart.radius());
    let v1 = chart.section(&p1)?;
    let phi_psi = (projection_of(&v1)?.matrix() - p1.matrix()).norm();

    let rstar = admissible_radius(&p, r)?;
    let p2 = sample::projection_at_distance(rng, &p, 0.9 * rstar);
    let ug = section_pi_p(&p, &p2, r)?;
    let conj = (ug.matrix() * p.matrix() * ug.inverse(g).matrix() - p2.matrix()).norm();
    let iso = section_pi_p(&p, &p, r)?;
    let commutator = (iso.matrix() * p.matrix() - p.matrix() * iso.matrix()).norm();

    let v = sample::random_stiefel(rng, r);
    let rot = sample::rotation_of_s(rng, r);
    let v_rot = StiefelOperator::from_matrix(v.matrix() * rot.matrix(), r, 1e-9)?;
    let equiv = match grassmann_equivalence(&v, &v_rot)? {
        Equivalence::Equivalent(u) => (v_rot.matrix() * u.matrix() - v.matrix()).norm(),
        Equivalence::Inequivalent { .. } => f64::INFINITY,
    };
    let near = sample::stiefel_at_distance(rng, &v, 1e-3);
    let far = sample::random_stiefel(rng, r);
    Ok(vec![
        Check::residual("||phi(psi(P1)) - P1||_F", phi_psi, tol),
        Check::residual("||Ug P Ug^-1 - P1||_F", conj, tol),
        Check::residual("group residual of Ug", group_residual(ug.matrix(), g), tol),
        Check::residual("||[Ug(P,P), P]||_F", commutator, 1e-10),
        Check::residual("||V1 U - V|| for V1 = V rotated on S", equiv, tol),
        Check::holds("nearby point with a different range is inequivalent", !grassmann_equivalence(&v, &near)?.is_equivalent()),
        Check::holds("random pair is inequivalent", !grassmann_equivalence(&v, &far)?.is_equivalent()),
    ])
}

fn tangent(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let n = g.n();
    let tol = config.tol("tangent");
    let split_tol = config.tol("split");
    let v = sample::random_stiefel(rng, &setup.reference);
    let p = projection_of(&v)?;
    let x = SkewOperator::random(rng, g, 1.0);
    let y = sample::complex_gaussian(rng, n, n);
    let xn = x.matrix().norm();

    // delta(K(delta X)) = X V V* V
    let xv = delta_v(&x, &v);
    let dkd = k_map(&xv, &v) * v.matrix();
    let e = tangent_project(&y, &v);
    let ee = tangent_project(&e, &v);

    let d1 = delta_p(x.matrix(), &p);
    let d3 = delta_p(&delta_p(&d1, &p), &p);
    let eg = tangent_project_grassmann(&y, &p);
    let eeg = tangent_project_grassmann(&eg, &p);

    let ip = p.complement();
    let (xg, xh) = lie_split_stiefel(&x, &p);
    let (xd, xo) = lie_split_grassmann(&x, &p);
    let pm = p.matrix();
    Ok(vec![
        Check::residual("delta K delta - delta (relative)", rel((dkd - &xv).norm(), xv.norm()), tol),
        Check::residual("E E - E (Stiefel, relative)", rel((ee - &e).norm(), e.norm()), tol),
        Check::residual("K two-term form (relative)", rel((k_map(&y, &v) - k_map_two_term(&y, &v)).norm(), y.norm()), tol),
        Check::residual("delta_P^3 - delta_P (relative)", rel((d3 - &d1).norm(), d1.norm()), tol),
        Check::residual("E E - E (Grassmann, relative)", rel((eeg - &eg).norm(), eg.norm()), tol),
        Check::residual("Xg + Xh - X", rel((xg.matrix() + xh.matrix() - x.matrix()).norm(), xn), split_tol),
        Check::residual("Xg P", rel((xg.matrix() * pm).norm(), xn), split_tol),
        Check::residual("P Xg", rel((pm * xg.matrix()).norm(), xn), split_tol),
        Check::residual("(I-P) Xh (I-P)", rel((&ip * xh.matrix() * &ip).norm(), xn), split_tol),
        Check::residual("Xg in u", lie_residual(xg.matrix(), g), split_tol),
        Check::residual("Xh in u", lie_residual(xh.matrix(), g), split_tol),
        Check::residual("Xdiag + Xcodiag - X", rel((xd.matrix() + xo.matrix() - x.matrix()).norm(), xn), split_tol),
        Check::residual("[Xdiag, P]", rel((xd.matrix() * pm - pm * xd.matrix()).norm(), xn), split_tol),
        Check::residual("P Xcodiag P", rel((pm * xo.matrix() * pm).norm(), xn), split_tol),
        Check::residual("(I-P) Xcodiag (I-P)", rel((&ip * xo.matrix() * &ip).norm(), xn), split_tol),
        Check::residual("Xdiag in u", lie_residual(xd.matrix(), g), split_tol),
        Check::residual("Xcodiag in u", lie_residual(xo.matrix(), g), split_tol),
    ])
}

const SANDWICH_SPECS: [NormSpec; 3] = [
    NormSpec::Schatten(1.0),
    NormSpec::Schatten(2.0),
    NormSpec::Schatten(f64::INFINITY),
];

fn norm_sandwich(_config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let v1 = sample::random_stiefel(rng, &setup.reference);
    let v2 = sample::random_stiefel(rng, &setup.reference);
    let mut checks = Vec::new();
    for spec in SANDWICH_SPECS {
        let rep = norm_sandwich_check(&v1, &v2, spec)?;
        checks.push(Check::holds("norm sandwich", rep.ok));
        checks.push(Check::holds("at most 2N singular values", rep.rank <= 2 * v1.rank()));
    }
    Ok(checks)
}

fn metric_equivalence(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let r = &setup.reference;
    let phi = sample::random_frame(rng, g, r.rank());
    let psi = sample::random_frame(rng, g, r.rank());
    let rep = metric_equivalence_report(&phi, &psi, r)?;
    let root_n = (r.rank() as f64).sqrt();
    let slack = config.tol("metric_slack");
    Ok(vec![
        Check::holds("||V_Phi - V_Psi|| <= sqrt(N) d", rep.opnorm <= root_n * rep.d + slack),
        Check::holds("d <= sqrt(N) C ||V_Phi - V_Psi||", rep.d <= root_n * r.c() * rep.opnorm + slack),
        Check::holds("report flags", rep.lower_ok && rep.upper_ok),
    ])
}

/// The flat two-dimensional example: `GL2 = GH1 = I`, `xi = phi = e1`.
fn planar_rotation_length(theta: f64) -> Result<f64, h1stiefel::Error> {
    let flat = GramPair::from_matrices(identity(2), identity(2))?;
    let e1 = CMat::from_column_slice(2, 1, &[ONE, ZERO]);
    let r = ReferenceFrame::new(e1.clone(), &flat)?;
    let v = frame_to_operator(&StiefelFrame::new(e1, &flat)?, &r)?;
    let x = CMat::from_row_slice(2, 2, &[ZERO, c(-theta), c(theta), ZERO]);
    curve_length(&one_parameter_curve(&x, v.matrix(), DEFAULT_STEPS)?, NormSpec::Schatten(2.0), &flat)
}

/// Generator scales of the shrinking perturbation sequence, as multiples of `r_V`.
pub const SHRINKING_SEQUENCE: [f64; 6] = [0.5, 5e-2, 5e-3, 5e-4, 5e-5, 5e-6];

fn geometry(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let r = &setup.reference;
    let spec = config.norm;
    let v = sample::random_stiefel(rng, r);
    let p = projection_of(&v)?;

    let still = one_parameter_curve(&CMat::zeros(g.n(), g.n()), v.matrix(), DEFAULT_STEPS)?;
    let constant = curve_length(&still, spec, g)?;

    let theta: f64 = rng.random_range(0.1..3.0);
    let planar = (planar_rotation_length(theta)? - theta).abs();

    let xs: Vec<SkewOperator> = (0..4).map(|_| SkewOperator::random(rng, g, 1.0)).collect();
    let gram_min = |inner: &dyn Fn(&SkewOperator, &SkewOperator) -> Result<f64, h1stiefel::Error>| {
        let k = xs.len();
        let mut m = CMat::zeros(k, k);
        for i in 0..k {
            for j in 0..k {
                m[(i, j)] = c(inner(&xs[i], &xs[j])?);
            }
        }
        let asym = (&m - m.transpose()).norm() / m.norm();
        Ok::<_, h1stiefel::Error>((hermitian_eigen(&m).0[0], asym))
    };
    let (st_min, st_asym) = gram_min(&|a, b| riemannian_inner_stiefel(a, b, &v))?;
    let (gr_min, gr_asym) = gram_min(&|a, b| riemannian_inner_grassmann(a, b, &p))?;
    let finsler = finsler_norm_stiefel(&xs[0], &v, NormSpec::Schatten(2.0))?;
    let self_inner = riemannian_inner_stiefel(&xs[0], &xs[0], &v)?;

    let x = SkewOperator::random(rng, g, 1.0);
    let x = x.scale(radius_r(&v) / h1_operator_norm(x.matrix(), g)?);
    let mut lengths = Vec::new();
    for eps in SHRINKING_SEQUENCE {
        let w = act(&exp_skew(&x.scale(eps), g)?, &v)?;
        lengths.push(distance_upper(&v, &w, spec, DEFAULT_STEPS)?);
    }
    let decreasing = lengths.windows(2).all(|w| w[1] < w[0]);
    let last = *lengths.last().unwrap();

    Ok(vec![
        Check::holds("constant curve has length 0", constant == 0.0),
        Check::residual("|L(planar rotation) - theta|", planar, config.tol("curve")),
        Check::holds("Stiefel Riemannian Gram matrix is positive definite", st_min > 0.0),
        Check::holds("Grassmann Riemannian Gram matrix is positive definite", gr_min > 0.0),
        Check::residual("Stiefel Riemannian Gram asymmetry", st_asym, 1e-12),
        Check::residual("Grassmann Riemannian Gram asymmetry", gr_asym, 1e-12),
        Check::residual("<XV, XV> - ||XV||_2^2 (relative)", rel((self_inner - finsler * finsler).abs(), self_inner), 1e-10),
        Check::holds("distance_upper decreases along the sequence", decreasing),
        Check::residual("final distance_upper", last, config.tol("curve")),
    ])
}

fn stiefel_action(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let r = &setup.reference;
    let g = &setup.gram;
    let v = sample::random_stiefel(rng, r);
    let w = sample::random_stiefel(rng, r);
    let u = sample::random_group_element(rng, g, 1.0);
    let moved = act(&u, &v)?;
    let p = projection_of(&v)?;
    let lip = projection_lipschitz_report(&v, &w)?;
    Ok(vec![
        Check::residual("St(S) residual of U V", stiefel_residual(moved.matrix(), r), config.tol("section")),
        Check::residual("trace P - N", (p.matrix().trace().re - r.rank() as f64).abs(), 1e-8),
        Check::holds("projection Lipschitz bound", lip.ok),
        Check::holds("||V*|| <= C N", adjoint_h1_norm(&v) <= r.c() * r.rank() as f64 + 1e-10),
    ])
}

fn oracle_agreement(config: &RunConfig, setup: &Setup, rng: &mut ChaCha8Rng) -> TrialResult {
    let g = &setup.gram;
    let n = g.n();
    let a = sample::complex_gaussian(rng, n, n);
    let main = adjoint_l2(&a, g)?;
    let oracle = adjoint_by_definition(&a, g)?;
    let exact = h1_operator_norm(&a, g)?;
    let sampled = h1_norm_by_sampling(&a, g, 8, rng);
    Ok(vec![
        Check::residual("adjoint_l2 vs definition", rel((main - oracle).norm(), a.norm()), config.tol("adjoint_oracle")),
        Check::holds("sampled H1 norm is a lower bound", sampled <= exact * (1.0 + 1e-12)),
    ])
}
