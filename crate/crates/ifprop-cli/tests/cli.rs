//! End-to-end tests of the binary: subcommands, exit codes, and output.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ifprop(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ifprop"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn write_model(dir: &Path) {
    fs::write(
        dir.join("m.txt"),
        "VAR_A = {1,2,3}\nVAR_B = {5,6}\nVAR_C = {0,1}\nCONST_A = {2}\nN = *\n",
    )
    .unwrap();
}

#[test]
fn prepare_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    fs::create_dir(dir.path().join("src")).unwrap();
    fs::write(
        dir.path().join("src/a.c"),
        "#if (VAR_A * CONST_A > VAR_B) || defined(VAR_C)\nint a;\n#endif\n",
    )
    .unwrap();

    let output = ifprop(
        &["prepare", "--model", "m.txt", "--src", "src", "--out", "out", "--report", "rep.csv"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    assert!(stdout(&output).contains("report written"));
    let rewritten = fs::read_to_string(dir.path().join("out/a.c")).unwrap();
    assert!(rewritten
        .starts_with("#if (defined(VAR_A_eq_3) && defined(VAR_B_eq_5)) || defined(VAR_C)"));
    let report = fs::read_to_string(dir.path().join("rep.csv")).unwrap();
    assert!(report.starts_with("file,line,kind,outcome,reason,ms"));
}

#[test]
fn prepare_missing_model_flag_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let output = ifprop(&["prepare", "--src", "src", "--out", "out"], dir.path());
    assert_eq!(output.status.code(), Some(1));
    let err = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(err.contains("--model"), "{err}");
}

#[test]
fn prepare_emits_skip_warnings_with_location() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    fs::create_dir(dir.path().join("src")).unwrap();
    fs::write(dir.path().join("src/skip.c"), "#if A ## B\nint a;\n#endif\n").unwrap();

    let output = ifprop(
        &["prepare", "--model", "m.txt", "--src", "src", "--out", "out", "--report", "r.csv"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0));
    let err = String::from_utf8_lossy(&output.stderr).into_owned();
    assert!(err.contains("warning: skip.c:1: skipped:"), "{err}");
}

#[test]
fn prepare_into_nonempty_dir_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    fs::create_dir(dir.path().join("src")).unwrap();
    fs::write(dir.path().join("src/a.c"), "int a;\n").unwrap();
    fs::create_dir(dir.path().join("out")).unwrap();
    fs::write(dir.path().join("out/stale"), "x").unwrap();

    let output = ifprop(
        &["prepare", "--model", "m.txt", "--src", "src", "--out", "out"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn name_collision_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("m.txt"),
        "VAR_A = {1,2}\nVAR_A_eq_1 = {0,1}\n",
    )
    .unwrap();
    fs::create_dir(dir.path().join("src")).unwrap();
    fs::write(dir.path().join("src/a.c"), "#if VAR_A == 1\nint a;\n#endif\n").unwrap();

    let output = ifprop(
        &["prepare", "--model", "m.txt", "--src", "src", "--out", "out"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(2), "{output:?}");
}

#[test]
fn check_prints_replacement_and_verdict() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    let output = ifprop(
        &["check", "--model", "m.txt", "--cond", "(VAR_A * 2 > VAR_B) || defined(VAR_C)"],
        dir.path(),
    );
    assert_eq!(output.status.code(), Some(0));
    let out = stdout(&output);
    assert!(out.contains("(defined(VAR_A_eq_3) && defined(VAR_B_eq_5)) || defined(VAR_C)"));
    assert!(out.contains("EQUIVALENT (12 configs)"), "{out}");
}

#[test]
fn check_reports_fallback_as_not_applicable() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    let output = ifprop(&["check", "--model", "m.txt", "--cond", "N > 0 && N < 0"], dir.path());
    let out = stdout(&output);
    assert!(out.contains("defined(N) && defined(N)"), "{out}");
    assert!(out.contains("NOT APPLICABLE"), "{out}");
}

#[test]
fn check_reports_skips() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    let output = ifprop(&["check", "--model", "m.txt", "--cond", "FOO(1)"], dir.path());
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).contains("SKIPPED"), "{output:?}");
}

#[test]
fn gen_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &str| {
        [
            "gen", "--files", "2", "--conditions", "6", "--vars", "3", "--range-size", "3",
            "--seed", "9", "--out", out, "--rule-coverage",
        ]
        .map(String::from)
        .to_vec()
    };
    let a = ifprop(&args("a").iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    let b = ifprop(&args("b").iter().map(String::as_str).collect::<Vec<_>>(), dir.path());
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(
        fs::read(dir.path().join("a/src/file_0000.c")).unwrap(),
        fs::read(dir.path().join("b/src/file_0000.c")).unwrap()
    );
    assert_eq!(
        fs::read(dir.path().join("a/model.txt")).unwrap(),
        fs::read(dir.path().join("b/model.txt")).unwrap()
    );
}

#[test]
fn dump_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    write_model(dir.path());
    let first = ifprop(
        &["--dump-config", "check", "--model", "m.txt", "--cond", "1==1"],
        dir.path(),
    );
    assert_eq!(first.status.code(), Some(0));
    let out1 = stdout(&first);
    let dumped: Vec<&str> = out1.lines().next().unwrap().split_whitespace().collect();

    let second = ifprop(&dumped, dir.path());
    assert_eq!(second.status.code(), Some(0));
    assert_eq!(out1, stdout(&second), "replaying the dump reproduces the run");
}

#[test]
fn help_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let output = ifprop(&["--help"], dir.path());
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout(&output).contains("prepare"));
}
