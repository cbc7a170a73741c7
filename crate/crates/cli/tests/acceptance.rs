//! Acceptance run: every criterion at full tolerance with 100 trials per
//! suite, one line per criterion. Exits nonzero if any fails.

use std::path::Path;
use std::process::Command;
use std::time::Instant;

use h1stiefel_cli::commands::{geometry_rows, geometry_rows_pass, sqrt_rows, sqrt_rows_pass};
use h1stiefel_cli::config::{RunConfig, Setup};
use h1stiefel_cli::suites::run_named;

const TRIALS: usize = 100;
/// Trials per subcommand in the determinism check.
const REPEAT_TRIALS: &str = "10";

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Verdict + 'a>);

struct Verdict {
    pass: bool,
    detail: String,
}

fn just_suite(name: &str, config: &RunConfig, setup: &Setup) -> Verdict {
    let rep = run_named(name, config, setup).expect("known suite");
    let mut detail = format!("{} checks, max residual {:.2e}", rep.checks, rep.max_residual);
    if let Some(first) = rep.failures.first() {
        detail.push_str(&format!("; {first}"));
    }
    Verdict { pass: rep.pass, detail }
}

fn square_root(config: &RunConfig, setup: &Setup) -> Verdict {
    let mut v = just_suite("square_root", config, setup);
    match sqrt_rows(config, setup) {
        Ok(rows) => {
            let ok = sqrt_rows_pass(&rows);
            v.pass &= ok;
            v.detail.push_str(&format!(
                "; sqrt-bench tail column monotone and error at s = 128 {:.2e}",
                rows.last().map_or(f64::NAN, |r| r.max_error)
            ));
        }
        Err(e) => {
            v.pass = false;
            v.detail.push_str(&format!("; sqrt-bench: {e}"));
        }
    }
    v
}

fn geometry(config: &RunConfig, setup: &Setup) -> Verdict {
    let mut v = just_suite("geometry", config, setup);
    match geometry_rows(config, setup) {
        Ok(rows) => v.pass &= geometry_rows_pass(&rows, config.tol("curve")),
        Err(e) => {
            v.pass = false;
            v.detail.push_str(&format!("; geometry report: {e}"));
        }
    }
    v
}

fn outputs(dir: &Path, command: &str) -> Vec<(String, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_h1stiefel"))
        .args([command, "--seed", "42", "--trials", REPEAT_TRIALS, "--out"])
        .arg(dir)
        .output()
        .expect("binary runs");
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files.push(("stdout".into(), status.stdout));
    files.push(("exit".into(), status.status.code().unwrap_or(-1).to_string().into_bytes()));
    files
}

fn determinism() -> Verdict {
    let root = tempfile::tempdir().unwrap();
    let mut differing = Vec::new();
    for command in ["validate", "section-demo", "sqrt-bench", "geometry"] {
        let a = outputs(&root.path().join(format!("{command}_a")), command);
        let b = outputs(&root.path().join(format!("{command}_b")), command);
        // stdout names the output directory
        let strip = |files: Vec<(String, Vec<u8>)>| -> Vec<(String, Vec<u8>)> {
            files
                .into_iter()
                .map(|(name, bytes)| {
                    if name == "stdout" {
                        let text = String::from_utf8_lossy(&bytes);
                        let kept: Vec<&str> = text.lines().filter(|l| !l.starts_with("wrote ")).collect();
                        (name, kept.join("\n").into_bytes())
                    } else {
                        (name, bytes)
                    }
                })
                .collect()
        };
        if strip(a) != strip(b) {
            differing.push(command);
        }
    }
    Verdict {
        pass: differing.is_empty(),
        detail: if differing.is_empty() {
            "4 subcommands byte-identical across two runs".into()
        } else {
            format!("outputs differ: {}", differing.join(", "))
        },
    }
}

fn main() {
    let config = RunConfig {
        trials: TRIALS,
        ..RunConfig::default()
    };
    let setup = Setup::new(&config).expect("default configuration is valid");

    let criteria: [Criterion; 10] = [
        ("group law", Box::new(|| just_suite("group_law", &config, &setup))),
        ("transitivity", Box::new(|| just_suite("transitivity", &config, &setup))),
        ("cross section", Box::new(|| just_suite("cross_section", &config, &setup))),
        ("square root", Box::new(|| square_root(&config, &setup))),
        ("grassmann sections", Box::new(|| just_suite("grassmann", &config, &setup))),
        ("tangent calculus", Box::new(|| just_suite("tangent", &config, &setup))),
        ("norm sandwich", Box::new(|| just_suite("norm_sandwich", &config, &setup))),
        ("metric equivalence", Box::new(|| just_suite("metric_equivalence", &config, &setup))),
        ("geometry", Box::new(|| geometry(&config, &setup))),
        ("cli determinism", Box::new(determinism)),
    ];

    let start = Instant::now();
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<20} {}  ({}; {:.1} s)",
            i + 1,
            name,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {} of {} criteria passed in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
