//! Subcommands. Each writes its report files into the output directory and
//! returns whether every check passed, plus summary lines for stdout.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::value::RawValue;

use h1stiefel::geometry::{
    distance_upper, format_real, norm_sandwich_check, CurveRow, NormSpec, CURVE_CSV_HEADER, DEFAULT_STEPS,
};
use h1stiefel::group_u::{exp_skew, group_residual, SkewOperator};
use h1stiefel::linalg::identity;
use h1stiefel::oracle::sqrt_eig;
use h1stiefel::sample::{self, trial_rng};
use h1stiefel::stiefel::{
    act, binomial_partial_sum, cross_section, radius_r, series_tail_bound, sqrt_f_argument, sqrt_f_rho,
    StiefelOperator,
};
use h1stiefel::trials::run_trials;
use h1stiefel::two_norm_space::h1_operator_norm;
use h1stiefel::Error;

use crate::config::{RunConfig, Setup};
use crate::suites::{self, SHRINKING_SEQUENCE, SQRT_RHO};
use crate::CliError;

pub const VALIDATE_FILE: &str = "validate.json";
pub const SECTION_FILE: &str = "section_demo.csv";
pub const SQRT_FILE: &str = "sqrt_bench.csv";
pub const GEOMETRY_FILE: &str = "geometry.csv";
pub const SANDWICH_FILE: &str = "sandwich.csv";

pub const SECTION_HEADER: &str = "delta,sigma_residual,membership_residual,bound_slack";
pub const SQRT_HEADER: &str = "s,tail_bound,max_error_vs_oracle,error_over_tail";
pub const SANDWICH_HEADER: &str = "pair_id,spec,lhs,mid,sum,rhs,rank,ok";

/// Fractions of `r_V` probed by `section-demo`.
pub const SECTION_FRACTIONS: [f64; 4] = [0.125, 0.25, 0.5, 0.9];
/// Truncation orders reported by `sqrt-bench`.
pub const SQRT_ORDERS: [usize; 6] = [4, 8, 16, 32, 64, 128];
/// Error the truncated series must reach at the largest order.
pub const SQRT_FINAL_TOL: f64 = 1e-8;
/// Rounding floor added to the a-priori tail bound.
pub const ROUNDOFF: f64 = 1e-11;
/// Random far-away targets in `geometry`.
pub const FAR_TARGETS: usize = 3;

// Generator streams, disjoint from the suite indices.
const SECTION_STREAM: u32 = 100;
const SQRT_STREAM: u32 = 101;
const GEOMETRY_STREAM: u32 = 102;
const SANDWICH_STREAM: u32 = 103;

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub pass: bool,
    pub lines: Vec<String>,
    pub files: Vec<PathBuf>,
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let path = dir.join(name);
    std::fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(path)
}

fn real_json(x: f64) -> Box<RawValue> {
    let text = if x.is_finite() { format_real(x) } else { "null".to_string() };
    RawValue::from_string(text).expect("formatted float is valid json")
}

fn csv_real(x: f64) -> String {
    if x.is_finite() {
        format_real(x)
    } else {
        String::new()
    }
}

#[derive(Serialize)]
struct SuiteJson {
    suite: &'static str,
    checks: usize,
    max_residual: Box<RawValue>,
    pass: bool,
    failures: Vec<String>,
}

#[derive(Serialize)]
struct ValidateJson {
    seed: u64,
    trials: usize,
    pass: bool,
    suites: Vec<SuiteJson>,
}

pub fn validate(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let reports = suites::run_all(config, setup);
    let pass = reports.iter().all(|r| r.pass);
    let mut lines: Vec<String> = reports
        .iter()
        .map(|r| {
            format!(
                "{:<20} {:>6} checks  max residual {:.3e}  {}",
                r.suite,
                r.checks,
                r.max_residual,
                if r.pass { "PASS" } else { "FAIL" }
            )
        })
        .collect();
    for r in reports.iter().filter(|r| !r.pass) {
        lines.extend(r.failures.iter().map(|f| format!("  {}: {f}", r.suite)));
    }
    let doc = ValidateJson {
        seed: config.seed,
        trials: config.trials,
        pass,
        suites: reports
            .into_iter()
            .map(|r| SuiteJson {
                suite: r.suite,
                checks: r.checks,
                max_residual: real_json(r.max_residual),
                pass: r.pass,
                failures: r.failures,
            })
            .collect(),
    };
    let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
    let file = write_file(&config.output_dir, VALIDATE_FILE, &text)?;
    Ok(Outcome {
        pass,
        lines,
        files: vec![file],
    })
}

/// Aggregated cross-section residuals at one distance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SectionRow {
    pub delta: f64,
    pub sigma_residual: f64,
    pub membership_residual: f64,
    /// `1 - max bound`; positive when all four neighborhood bounds hold.
    pub bound_slack: f64,
    pub errors: usize,
}

impl SectionRow {
    pub fn passed(&self, tol: f64) -> bool {
        self.errors == 0 && self.sigma_residual <= tol && self.membership_residual <= tol && self.bound_slack > 0.0
    }
}

pub fn section_rows(config: &RunConfig, setup: &Setup) -> Vec<SectionRow> {
    let v = sample::random_stiefel(&mut trial_rng(config.seed, SECTION_STREAM, u32::MAX), &setup.reference);
    let r = radius_r(&v);
    SECTION_FRACTIONS
        .iter()
        .enumerate()
        .map(|(k, frac)| {
            let delta = frac * r;
            let results = run_trials(config.trials, |i| {
                let mut rng = trial_rng(config.seed, SECTION_STREAM, (k * config.trials + i) as u32);
                let v1 = sample::stiefel_at_distance(&mut rng, &v, delta);
                cross_section(&v, &v1).map(|cs| {
                    let sigma = (cs.sigma.matrix() * v.matrix() - v1.matrix()).norm();
                    let member = group_residual(cs.sigma.matrix(), &setup.gram);
                    let worst = cs.bounds.iter().cloned().fold(0.0, f64::max);
                    (sigma, member, 1.0 - worst)
                })
            });
            let mut row = SectionRow {
                delta,
                sigma_residual: 0.0,
                membership_residual: 0.0,
                bound_slack: 1.0,
                errors: 0,
            };
            for res in results {
                match res {
                    Ok((s, m, slack)) => {
                        row.sigma_residual = row.sigma_residual.max(s);
                        row.membership_residual = row.membership_residual.max(m);
                        row.bound_slack = row.bound_slack.min(slack);
                    }
                    Err(_) => row.errors += 1,
                }
            }
            row
        })
        .collect()
}

pub fn section_demo(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let tol = config.tol("section");
    let rows = section_rows(config, setup);
    let mut csv = format!("{SECTION_HEADER}\n");
    let mut lines = Vec::new();
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            format_real(row.delta),
            format_real(row.sigma_residual),
            format_real(row.membership_residual),
            format_real(row.bound_slack)
        )
        .unwrap();
        lines.push(format!(
            "delta {:.3e}  sigma {:.3e}  membership {:.3e}  slack {:.3e}  errors {}  {}",
            row.delta,
            row.sigma_residual,
            row.membership_residual,
            row.bound_slack,
            row.errors,
            if row.passed(tol) { "PASS" } else { "FAIL" }
        ));
    }
    let file = write_file(&config.output_dir, SECTION_FILE, &csv)?;
    Ok(Outcome {
        pass: rows.iter().all(|r| r.passed(tol)),
        lines,
        files: vec![file],
    })
}

/// Worst case over the sampled instances at one truncation order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtRow {
    pub s: usize,
    /// Largest a-priori tail bound.
    pub tail_bound: f64,
    pub max_error: f64,
    /// `max_error / tail_bound`.
    pub error_over_tail: f64,
    /// Every instance satisfies `error <= tail_bound + ROUNDOFF`.
    pub bounded: bool,
}

pub fn sqrt_rows(config: &RunConfig, setup: &Setup) -> Result<Vec<SqrtRow>, CliError> {
    let g = &setup.gram;
    let per_instance = run_trials(config.trials, |i| -> Result<Vec<(f64, f64)>, Error> {
        let mut rng = trial_rng(config.seed, SQRT_STREAM, i as u32);
        let v = sample::random_stiefel(&mut rng, &setup.reference);
        let w = sample::sqrt_pair(&mut rng, &v, SQRT_RHO);
        let a = sqrt_f_argument(&v, &w)?;
        let rho = sqrt_f_rho(&v, &w)?;
        let oracle = sqrt_eig(&a, g)?;
        let unit = identity(g.n()) - v.matrix() * v.adjoint();
        let b = &a - &unit;
        Ok(SQRT_ORDERS
            .iter()
            .map(|&s| {
                let err = (binomial_partial_sum(&b, &unit, s) - &oracle).norm();
                (err, series_tail_bound(s, rho))
            })
            .collect())
    });
    let per_instance: Vec<Vec<(f64, f64)>> = per_instance.into_iter().collect::<Result<_, _>>()?;
    Ok(SQRT_ORDERS
        .iter()
        .enumerate()
        .map(|(k, &s)| {
            let mut row = SqrtRow {
                s,
                tail_bound: 0.0,
                max_error: 0.0,
                error_over_tail: 0.0,
                bounded: true,
            };
            for inst in &per_instance {
                let (err, tail) = inst[k];
                row.tail_bound = row.tail_bound.max(tail);
                row.max_error = row.max_error.max(err);
                row.bounded &= err <= tail + ROUNDOFF;
            }
            row.error_over_tail = row.max_error / row.tail_bound;
            row
        })
        .collect())
}

/// Tail bounds strictly decrease, errors shrink with `s` (up to rounding)
/// and stay under the tail bound, and the last order reaches
/// [`SQRT_FINAL_TOL`].
pub fn sqrt_rows_pass(rows: &[SqrtRow]) -> bool {
    let monotone = rows
        .windows(2)
        .all(|w| w[1].tail_bound < w[0].tail_bound && w[1].max_error <= w[0].max_error + ROUNDOFF);
    let last = rows.last().is_some_and(|r| r.max_error <= SQRT_FINAL_TOL);
    monotone && last && rows.iter().all(|r| r.bounded)
}

pub fn sqrt_bench(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let rows = sqrt_rows(config, setup)?;
    let mut csv = format!("{SQRT_HEADER}\n");
    let mut lines = Vec::new();
    for row in &rows {
        writeln!(
            csv,
            "{},{},{},{}",
            row.s,
            format_real(row.tail_bound),
            format_real(row.max_error),
            csv_real(row.error_over_tail)
        )
        .unwrap();
        lines.push(format!(
            "s = {:>3}  tail {:.3e}  error {:.3e}  {}",
            row.s,
            row.tail_bound,
            row.max_error,
            if row.bounded { "within bound" } else { "EXCEEDS BOUND" }
        ));
    }
    let pass = sqrt_rows_pass(&rows);
    lines.push(if pass { "PASS" } else { "FAIL" }.to_string());
    let file = write_file(&config.output_dir, SQRT_FILE, &csv)?;
    Ok(Outcome {
        pass,
        lines,
        files: vec![file],
    })
}

/// One `geometry.csv` row; `length` is absent when no curve was available.
#[derive(Debug, Clone, PartialEq)]
pub struct GeometryRow {
    pub curve: CurveRow,
    pub status: String,
}

/// Curve rows for `geometry`: the constant curve, a shrinking sequence of
/// targets inside `r_V`, and random far targets, all from one base point.
pub fn geometry_rows(config: &RunConfig, setup: &Setup) -> Result<Vec<GeometryRow>, CliError> {
    let g = &setup.gram;
    let spec = config.norm;
    let mut rng = trial_rng(config.seed, GEOMETRY_STREAM, 0);
    let v = sample::random_stiefel(&mut rng, &setup.reference);
    let row = |id: String, target: &StiefelOperator| -> Result<GeometryRow, CliError> {
        let (length, status) = match distance_upper(&v, target, spec, DEFAULT_STEPS) {
            Ok(l) => (l, "ok".to_string()),
            Err(Error::LogUnavailable { .. }) => (f64::NAN, "log_unavailable".to_string()),
            Err(e) => return Err(e.into()),
        };
        Ok(GeometryRow {
            curve: CurveRow {
                curve_id: id,
                spec,
                steps: DEFAULT_STEPS,
                length,
            },
            status,
        })
    };

    let mut rows = vec![row("constant".into(), &v)?];
    let x = SkewOperator::random(&mut rng, g, 1.0);
    let x = x.scale(radius_r(&v) / h1_operator_norm(x.matrix(), g)?);
    for (i, eps) in SHRINKING_SEQUENCE.iter().enumerate() {
        let w = act(&exp_skew(&x.scale(*eps), g)?, &v)?;
        rows.push(row(format!("upper_{i}"), &w)?);
    }
    for i in 0..FAR_TARGETS {
        let w = sample::random_stiefel(&mut rng, &setup.reference);
        rows.push(row(format!("far_{i}"), &w)?);
    }
    Ok(rows)
}

pub fn geometry_rows_pass(rows: &[GeometryRow], tol: f64) -> bool {
    let lengths: Vec<f64> = rows
        .iter()
        .filter(|r| r.curve.curve_id.starts_with("upper_"))
        .map(|r| r.curve.length)
        .collect();
    let constant = rows.iter().any(|r| r.curve.curve_id == "constant" && r.curve.length == 0.0);
    constant
        && lengths.windows(2).all(|w| w[1] < w[0])
        && lengths.last().is_some_and(|l| *l <= tol)
        && rows.iter().all(|r| r.status != "ok" || r.curve.length >= 0.0)
}

const SANDWICH_SPECS: [NormSpec; 3] = [
    NormSpec::Schatten(1.0),
    NormSpec::Schatten(2.0),
    NormSpec::Schatten(f64::INFINITY),
];

pub fn geometry(config: &RunConfig, setup: &Setup) -> Result<Outcome, CliError> {
    let rows = geometry_rows(config, setup)?;
    let mut csv = format!("{CURVE_CSV_HEADER},status\n");
    let mut lines = Vec::new();
    for r in &rows {
        let line = if r.curve.length.is_finite() {
            r.curve.to_csv()
        } else {
            format!("{},{},{},", r.curve.curve_id, r.curve.spec.label(), r.curve.steps)
        };
        writeln!(csv, "{line},{}", r.status).unwrap();
        lines.push(format!("{:<10} {:.6e}  {}", r.curve.curve_id, r.curve.length, r.status));
    }
    let curves_ok = geometry_rows_pass(&rows, config.tol("curve"));

    let pairs = run_trials(config.trials, |i| {
        let mut rng = trial_rng(config.seed, SANDWICH_STREAM, i as u32);
        let v1 = sample::random_stiefel(&mut rng, &setup.reference);
        let v2 = sample::random_stiefel(&mut rng, &setup.reference);
        SANDWICH_SPECS
            .iter()
            .map(|spec| norm_sandwich_check(&v1, &v2, *spec))
            .collect::<Result<Vec<_>, _>>()
    });
    let mut sandwich = format!("{SANDWICH_HEADER}\n");
    let mut sandwich_ok = true;
    for (i, reports) in pairs.into_iter().enumerate() {
        for (spec, rep) in SANDWICH_SPECS.iter().zip(reports?) {
            sandwich_ok &= rep.ok;
            writeln!(
                sandwich,
                "{i},{},{},{},{},{},{},{}",
                spec.label(),
                format_real(rep.lhs),
                format_real(rep.mid),
                format_real(rep.sum),
                format_real(rep.rhs),
                rep.rank,
                rep.ok
            )
            .unwrap();
        }
    }
    lines.push(format!("curves {}", if curves_ok { "PASS" } else { "FAIL" }));
    lines.push(format!("norm sandwich {}", if sandwich_ok { "PASS" } else { "FAIL" }));
    let files = vec![
        write_file(&config.output_dir, GEOMETRY_FILE, &csv)?,
        write_file(&config.output_dir, SANDWICH_FILE, &sandwich)?,
    ];
    Ok(Outcome {
        pass: curves_ok && sandwich_ok,
        lines,
        files,
    })
}
