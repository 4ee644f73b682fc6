use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn problems() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("problems")
}

fn hproj(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hproj"))
        .args(args)
        .env_remove("SOLVER_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn shrinking() -> String {
    problems().join("shrinking_line.json").display().to_string()
}

fn point_of(out: &str) -> Vec<f64> {
    let line = out.lines().find(|l| l.starts_with("point: ")).expect("point line");
    serde_json::from_str(&line["point: ".len()..]).unwrap()
}

#[test]
fn shrinking_line_converges() {
    let o = hproj(&["solve", "--problem", &shrinking(), "--tol", "1e-8"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("status: converged"));
    assert!(point_of(&stdout(&o))[0].abs() <= 2e-8);
}

#[test]
fn lambda_beyond_twice_alpha_is_rejected() {
    let p = problems().join("inner_ball.json");
    let o = hproj(&["solve", "--problem", p.to_str().unwrap(), "--lambda", "3"]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("lambda out of (0, 2*alpha)"), "{}", stderr(&o));
}

#[test]
fn min_norm_with_maps_is_rejected() {
    let p = problems().join("two_balls.json");
    let o = hproj(&["solve", "--problem", p.to_str().unwrap(), "--variant", "minnorm"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn iteration_cap_exits_two() {
    let p = problems().join("two_balls.json");
    let o = hproj(&["solve", "--problem", p.to_str().unwrap(), "--variant", "fixedpoint", "--max-iter", "5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status: max_iterations"));
}

#[test]
fn breakdown_exits_three() {
    // an expanding affine map is refused at load time, so a breakdown has to
    // come from the solver: non-finite arithmetic from a huge anchor
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("huge.json");
    std::fs::write(
        &p,
        r#"{"dim": 1, "feasible_set": {"kind": "whole_space"},
            "nonexpansive_maps": [{"kind": "affine_contraction", "params": {"m": [[-1.0]], "b": [0.0]}}],
            "x0": [1.7e308]}"#,
    )
    .unwrap();
    let o = hproj(&["solve", "--problem", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3), "{}{}", stdout(&o), stderr(&o));
}

#[test]
fn schema_errors_name_the_offending_path() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(
        &p,
        r#"{"dim": 2, "feasible_set": {"kind": "whole_space"},
            "nonexpansive_maps": [{"kind": "identity"}, {"kind": "spiral", "params": {}}],
            "x0": [0.0, 0.0]}"#,
    )
    .unwrap();
    let o = hproj(&["solve", "--problem", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("nonexpansive_maps[1]"), "{}", stderr(&o));

    std::fs::write(&p, r#"{"dim": 1, "feasible_set": {"kind": "ball", "params": {"center": [0.0], "radius": 1.0, "colour": 3}}, "x0": [0.0]}"#).unwrap();
    let o = hproj(&["solve", "--problem", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(64));
    assert!(stderr(&o).contains("feasible_set"), "{}", stderr(&o));

    let o = hproj(&["solve", "--problem", "/nonexistent/problem.json"]);
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn trace_has_one_line_per_iteration_plus_summary() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("t.jsonl");
    let o = hproj(&["solve", "--problem", &shrinking(), "--trace", t.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&t).unwrap();
    let out = stdout(&o);
    let iterations: usize = out.lines().find_map(|l| l.strip_prefix("iterations: ")).unwrap().parse().unwrap();
    assert_eq!(text.lines().count(), iterations + 1);

    let s = hproj(&["trace-summary", "--trace", t.to_str().unwrap()]);
    assert_eq!(s.status.code(), Some(0));
    let summary = stdout(&s);
    assert!(summary.contains("fejer: monotone"));
    let rows = summary.lines().skip_while(|l| !l.starts_with("n,")).skip(1).count();
    assert!((27..=30).contains(&rows), "{rows}");
    assert_eq!(rows, text.lines().count() - 1);
}

#[test]
fn traces_match_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = problems().join("two_balls.json");
    let mut bytes = Vec::new();
    for threads in ["1", "2", "4"] {
        let t = dir.path().join(format!("t{threads}.jsonl"));
        let o = hproj(&[
            "solve", "--problem", p.to_str().unwrap(), "--variant", "fixedpoint", "--threads", threads, "--trace",
            t.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        bytes.push(std::fs::read(&t).unwrap());
    }
    assert!(bytes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn threads_fall_back_to_environment() {
    let o = Command::new(env!("CARGO_BIN_EXE_hproj"))
        .args(["solve", "--problem", &shrinking()])
        .env("SOLVER_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(64));
}

#[test]
fn malformed_traces_exit_sixty_five() {
    let dir = tempfile::tempdir().unwrap();
    let t = dir.path().join("empty.jsonl");
    std::fs::write(&t, "").unwrap();
    assert_eq!(hproj(&["trace-summary", "--trace", t.to_str().unwrap()]).status.code(), Some(65));
    std::fs::write(&t, "{\"n\": 0}\nnot json\n").unwrap();
    assert_eq!(hproj(&["trace-summary", "--trace", t.to_str().unwrap()]).status.code(), Some(65));
}

#[test]
fn verify_suites() {
    let o = hproj(&["verify", "--suite", "projector", "--samples", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(stdout(&o).contains("closed form vs active set"));
    let o = hproj(&["verify", "--suite", "projections", "--samples", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert_eq!(hproj(&["verify", "--samples", "0"]).status.code(), Some(64));
    assert_eq!(hproj(&["verify", "--suite", "nonsense"]).status.code(), Some(64));
}
