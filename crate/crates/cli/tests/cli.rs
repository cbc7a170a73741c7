use std::path::Path;
use std::process::{Command, Output};

use h1stiefel::linalg::CMat;
use h1stiefel::matrix_io::write_matrix;
use h1stiefel::sample::{random_frame, trial_rng};
use h1stiefel::two_norm_space::{build_space, SpaceSpec};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_h1stiefel"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn small_runs_pass_and_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, file) in [
        ("validate", "validate.json"),
        ("section-demo", "section_demo.csv"),
        ("sqrt-bench", "sqrt_bench.csv"),
        ("geometry", "geometry.csv"),
    ] {
        let o = run(&[cmd, "--trials", "3", "--seed", "9"], dir.path());
        assert_eq!(code(&o), 0, "{cmd}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(dir.path().join(file).is_file());
    }
    let sqrt = std::fs::read_to_string(dir.path().join("sqrt_bench.csv")).unwrap();
    assert_eq!(sqrt.lines().next(), Some("s,tail_bound,max_error_vs_oracle,error_over_tail"));
    assert_eq!(sqrt.lines().count(), 7);
}

#[test]
fn config_file_and_flag_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.json");
    let out = dir.path().join("from_config");
    std::fs::write(
        &config,
        format!(
            r#"{{"seed": 5, "trials": 50, "N": 3, "space": {{"grid_points": 8, "spacing": 0.5}},
                "norm": {{"kind": "schatten_p", "p": 2}}, "output_dir": {:?}}}"#,
            out.display().to_string()
        ),
    )
    .unwrap();
    let flagged = dir.path().join("flagged");
    let o = run(&["geometry", "--config", config.to_str().unwrap(), "--trials", "2"], &flagged);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(flagged.join("geometry.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("constant,schatten_2,64,"));
    let sandwich = std::fs::read_to_string(flagged.join("sandwich.csv")).unwrap();
    assert_eq!(sandwich.lines().count(), 1 + 2 * 3);
    assert!(!out.exists());
}

#[test]
fn reference_frame_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let g = build_space(&SpaceSpec::default()).unwrap();
    let frame = random_frame(&mut trial_rng(3, 0, 0), &g, 2);
    let path = dir.path().join("xi.json");
    write_matrix(&path, frame.matrix()).unwrap();
    let o = run(&["section-demo", "--trials", "2", "--frame", path.to_str().unwrap()], dir.path());
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let p = |name: &str| dir.path().join(name);

    std::fs::write(p("too_many.json"), r#"{"N": 17}"#).unwrap();
    std::fs::write(p("broken.json"), r#"{"seed": 1,"#).unwrap();
    std::fs::write(p("unknown.json"), r#"{"sed": 1}"#).unwrap();
    std::fs::write(p("bad_norm.json"), r#"{"norm": {"kind": "schatten_p", "p": 0.5}}"#).unwrap();
    std::fs::write(p("frame.json"), "[[[1, 0]], [[0, 0]]").unwrap();
    std::fs::write(p("nan_frame.json"), r#"[[[1, "NaN"]]]"#).unwrap();
    write_matrix(&p("wrong_shape.json"), &CMat::identity(4, 2)).unwrap();
    write_matrix(&p("dependent.json"), &CMat::zeros(16, 2)).unwrap();

    for name in ["too_many.json", "broken.json", "unknown.json", "bad_norm.json", "missing.json"] {
        let o = run(&["validate", "--config", p(name).to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 2, "{name}");
        assert!(!o.stderr.is_empty());
    }
    for name in ["frame.json", "nan_frame.json", "wrong_shape.json", "dependent.json"] {
        let o = run(&["validate", "--trials", "1", "--frame", p(name).to_str().unwrap()], dir.path());
        assert_eq!(code(&o), 2, "{name}: {}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(code(&run(&["validate", "--trials", "0"], dir.path())), 2);
    assert_eq!(code(&run(&["validate", "--seed", "-3"], dir.path())), 2);
    assert_eq!(code(&run(&["frobnicate"], dir.path())), 2);
    assert!(!p("validate.json").exists());
}
