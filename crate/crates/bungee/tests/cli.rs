//! Process-level tests of the command-line interface and its exit-code
//! contract: 0 success, 1 property violation, 2 config/parse error,
//! 3 I/O error.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bungee"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn bungee")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report_without_timings(json: &str) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(json).expect("report json");
    v.as_object_mut().unwrap().remove("timings_ms");
    v
}

#[test]
fn classify_reports_classes_per_line() {
    let out = run(&["classify", "--gen", "1/z^2", "--point", "0.5", "--point", "1+0i"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].contains("Bungee"), "{text}");
    assert!(lines[1].contains("Bounded"), "{text}");
}

#[test]
fn classify_exp_origin_escaping() {
    let out = run(&["classify", "--gen", "exp(z)", "--point", "0"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Escaping"));
}

#[test]
fn classify_square_origin_bounded() {
    let out = run(&["classify", "--gen", "z^2", "--point", "0"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("Bounded"));
}

#[test]
fn parse_error_exits_2() {
    let out = run(&["classify", "--gen", "1/z^", "--point", "0.5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_point_exits_2() {
    let out = run(&["classify", "--gen", "z^2", "--point", "not-a-point"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn bad_viewport_and_res_exit_2() {
    let out = run(&["render", "--gen", "z^2", "--viewport", "1:2:3", "--out", "/tmp/x.ppm"]);
    assert_eq!(code(&out), 2);
    let out = run(&["render", "--gen", "z^2", "--res", "9000x9000", "--out", "/tmp/x.ppm"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn missing_generator_exits_2() {
    let out = run(&["render", "--out", "/tmp/x.ppm"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn render_writes_ppm_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let ppm_path = dir.path().join("bu.ppm");
    let out = run(&[
        "render", "--gen", "1/z^2", "--viewport=-2:-2:2:2", "--res", "32x32",
        "--out", ppm_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let bytes = std::fs::read(&ppm_path).unwrap();
    assert!(bytes.starts_with(b"P6\n32 32\n255\n"));
    assert_eq!(bytes.len(), b"P6\n32 32\n255\n".len() + 32 * 32 * 3);
    let sidecar = dir.path().join("bu.json");
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&sidecar).unwrap()).unwrap();
    assert_eq!(meta["schema_version"], 1);
    assert_eq!(meta["payload"]["kind"], "render");
    assert_eq!(meta["payload"]["raster"]["width_px"], 32);
}

#[test]
fn render_single_cell_payload() {
    let dir = tempfile::tempdir().unwrap();
    let ppm_path = dir.path().join("one.ppm");
    let out = run(&[
        "render", "--gen", "z^2", "--viewport=0:0:1:1", "--res", "1x1",
        "--out", ppm_path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let bytes = std::fs::read(&ppm_path).unwrap();
    assert_eq!(bytes.len(), b"P6\n1 1\n255\n".len() + 3);
}

#[test]
fn render_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    for p in [&a, &b] {
        let out = run(&[
            "render", "--gen", "1/z^2", "--res", "24x24", "--out", p.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ja = std::fs::read_to_string(dir.path().join("a.json")).unwrap();
    let jb = std::fs::read_to_string(dir.path().join("b.json")).unwrap();
    let strip = |json: &str| {
        let mut v = report_without_timings(json);
        v["payload"]["raster"]
            .as_object_mut()
            .unwrap()
            .remove("output_path");
        v
    };
    assert_eq!(strip(&ja), strip(&jb));
}

#[test]
fn render_unwritable_path_exits_3() {
    let out = run(&[
        "render", "--gen", "z^2", "--res", "4x4",
        "--out", "/nonexistent-dir-bungee/x.ppm",
    ]);
    assert_eq!(code(&out), 3);
}

#[test]
fn verify_partition_passes() {
    let out = run(&["verify", "--gen", "z^2", "--suite", "partition", "--samples", "50"]);
    assert_eq!(code(&out), 0);
    let v = report_without_timings(&stdout(&out));
    assert_eq!(v["payload"]["all_pass"], true);
}

#[test]
fn verify_violation_exits_1() {
    // The power-map pair genuinely breaks forward invariance at this
    // horizon: the word tree finds bounded branches that vanish after one
    // application of the second generator.
    let out = run(&[
        "verify", "--gen", "exp(z)", "--gen", "exp(2*z)+2*pi*i",
        "--suite", "invariance", "--samples", "100", "--seed", "3",
    ]);
    assert_eq!(code(&out), 1);
    let v = report_without_timings(&stdout(&out));
    assert_eq!(v["payload"]["all_pass"], false);
}

#[test]
fn verify_unknown_suite_exits_2() {
    let out = run(&["verify", "--gen", "z^2", "--suite", "everything"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn verify_report_deterministic_for_seed() {
    let args = ["verify", "--gen", "1/z^2", "--suite", "union", "--samples", "60", "--seed", "11"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(report_without_timings(&stdout(&a)), report_without_timings(&stdout(&b)));
}

#[test]
fn config_file_supplies_defaults_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(&cfg_path, "gen=z^2\ndepth=12\nseed=42\n").unwrap();

    let out = run(&[
        "verify", "--config", cfg_path.to_str().unwrap(), "--suite", "partition",
        "--samples", "20",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = report_without_timings(&stdout(&out));
    assert_eq!(v["config"]["max_depth"], 12);
    assert_eq!(v["seed"], 42);
    assert_eq!(v["generators"][0], "z^2");

    let out = run(&[
        "verify", "--config", cfg_path.to_str().unwrap(), "--suite", "partition",
        "--samples", "20", "--depth", "9", "--seed", "7",
    ]);
    assert_eq!(code(&out), 0);
    let v = report_without_timings(&stdout(&out));
    assert_eq!(v["config"]["max_depth"], 9);
    assert_eq!(v["seed"], 7);
}

#[test]
fn malformed_config_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.cfg");
    std::fs::write(&cfg_path, "gen z^2\n").unwrap();
    let out = run(&["verify", "--config", cfg_path.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn invalid_threshold_combination_exits_2() {
    let out = run(&["classify", "--gen", "z^2", "--point", "0", "--escape-radius", "1", "--bound-radius", "10"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn worker_env_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.ppm");
    let b = dir.path().join("b.ppm");
    let out = run(&["render", "--gen", "1/z^2", "--res", "24x24", "--out", a.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = bin()
        .args(["render", "--gen", "1/z^2", "--res", "24x24", "--out", b.to_str().unwrap()])
        .env("BUNGEE_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn examples_unknown_name_exits_2_and_lists_names() {
    let out = run(&["examples", "does-not-exist"]);
    assert_eq!(code(&out), 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("reciprocal-square"), "{err}");
    assert!(err.contains("exp-semigroup"), "{err}");
    assert!(err.contains("exp-pair"), "{err}");
}

#[test]
fn examples_reciprocal_square_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "examples", "reciprocal-square", "--outdir", dir.path().to_str().unwrap(),
        "--samples", "60", "--seed", "7",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(Path::new(&dir.path().join("reciprocal-square.ppm")).exists());
    assert!(Path::new(&dir.path().join("reciprocal-square-boundary.ppm")).exists());
    let v = report_without_timings(&stdout(&out));
    assert_eq!(v["payload"]["kind"], "examples");
    assert_eq!(v["payload"]["all_pass"], true);
}

#[test]
fn examples_exp_pair_agreement_reported() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "examples", "exp-pair", "--lambda", "1", "--q", "2",
        "--outdir", dir.path().to_str().unwrap(), "--samples", "60", "--seed", "7",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = report_without_timings(&stdout(&out));
    let agreement = &v["payload"]["agreement"];
    assert_eq!(agreement["mutually_resolved"], agreement["bungee_agreements"]);
}
