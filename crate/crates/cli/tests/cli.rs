use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn mssflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mssflow"))
        .args(args)
        .env_remove("MSSFLOW_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn density_oracle_prints_the_summary_line() {
    let cfg = config("density_half_plane.toml");
    let o = mssflow(&["density", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!(line.starts_with("mode=density outcome=pass residual="), "{line}");
    assert!(line.trim_end().ends_with("max_lambda=NaN"), "{line}");
}

#[test]
fn solve_writes_all_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("annulus.toml");
    let o = mssflow(&["solve", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let fields: Vec<String> = stdout(&o).split_whitespace().map(|s| s.split('=').next().unwrap().to_string()).collect();
    assert_eq!(fields, ["mode", "outcome", "residual", "max_lambda"]);
    let monitors = std::fs::read_to_string(dir.path().join("monitors.csv")).unwrap();
    assert!(monitors.starts_with("t,max_lambda,min_star_omega,min_p_eig,area,dissipation,"));
    let report = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    assert!(report.contains("all = pass"), "{report}");
    let field = std::fs::read_to_string(dir.path().join("field.dat")).unwrap();
    assert!(field.starts_with("# n=2 m=2"));
}

#[test]
fn check_reports_a_failing_hypothesis_with_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("steep.toml");
    std::fs::write(
        &cfg,
        "mode = \"check_hypothesis\"\nh = 0.0625\n\n[domain]\nkind = \"ball\"\ncenter = [0.0, 0.0]\nradius = 1.0\n\n\
         [boundary]\nfamily = \"linear\"\noffset = [0.0]\nmatrix = [[2.0, 0.0]]\n",
    )
    .unwrap();
    let o = mssflow(&["check", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("outcome=fail"), "{}", stdout(&o));
}

#[test]
fn configuration_errors_exit_with_one() {
    let missing = mssflow(&["solve", "--config", "/nonexistent/run.toml"]);
    assert_eq!(missing.status.code(), Some(1));
    // a solve config has no [density] section
    let cfg = config("ball.toml");
    let wrong_mode = mssflow(&["density", "--config", cfg.to_str().unwrap()]);
    assert_eq!(wrong_mode.status.code(), Some(1));
    assert!(!wrong_mode.stderr.is_empty());
    let bad_flag = mssflow(&["solve", "--bogus"]);
    assert_eq!(bad_flag.status.code(), Some(1));
}

#[test]
fn thread_count_is_validated_and_does_not_change_results() {
    let cfg = config("density_plane.toml");
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mssflow"))
            .args(["density", "--config", cfg.to_str().unwrap()])
            .env("MSSFLOW_THREADS", threads)
            .output()
            .unwrap()
    };
    let (one, three) = (run("1"), run("3"));
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, three.stdout);
    assert_eq!(run("zero").status.code(), Some(1));
}
