use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_thinthick"))
}

fn code(cmd: &mut Command) -> (i32, String) {
    let out = cmd.output().unwrap();
    (
        out.status.code().unwrap(),
        String::from_utf8_lossy(&out.stdout).into_owned(),
    )
}

#[test]
fn list_and_describe() {
    let (c, text) = code(bin().arg("list"));
    assert_eq!(c, 0);
    for id in [
        "cox-continuous",
        "cox-jumps",
        "hybrid-default",
        "levy-transform",
        "levy-jumps",
    ] {
        assert!(text.contains(id));
    }
    let (c, text) = code(bin().args(["describe", "hybrid-default"]));
    assert_eq!(c, 0);
    assert!(text.contains("review_times"));
    assert_eq!(code(bin().args(["describe", "nope"])).0, 2);
}

#[test]
fn usage_errors_exit_with_two() {
    assert_eq!(
        code(bin().args(["run", "--scenario", "cox-continuous"])).0,
        2,
        "missing seed"
    );
    assert_eq!(
        code(bin().args(["run", "--scenario", "nope", "--seed", "1"])).0,
        2
    );
    assert_eq!(
        code(bin().args([
            "run",
            "--scenario",
            "cox-continuous",
            "--seed",
            "1",
            "--param",
            "bogus=1"
        ]))
        .0,
        2
    );
    assert_eq!(
        code(bin().args([
            "run",
            "--scenario",
            "cox-continuous",
            "--seed",
            "1",
            "--paths",
            "0"
        ]))
        .0,
        2
    );
    assert_eq!(code(bin().args(["run", "--seed", "x"])).0, 2);
    assert_eq!(code(bin().args(["frobnicate"])).0, 2);
}

#[test]
fn run_writes_report_and_flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small run\nscenario = cox-jumps\nseed = 3\npaths = 50000\nsteps = 50\njump_times = 0.5, 1.5\n").unwrap();
    let out = dir.path().join("out");
    let (c, _) = code(
        bin()
            .arg("run")
            .arg("--config")
            .arg(&cfg)
            .args(["--paths", "20000", "--param", "lambda=0.3"])
            .arg("--out")
            .arg(&out),
    );
    assert_eq!(c, 0);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.contains("config.paths = 20000\n"));
    assert!(summary.contains("config.param.lambda = 0.3\n"));
    assert!(summary.contains("config.param.jump_times = 0.5, 1.5\n"));
    assert!(summary.contains("verdict.all = pass\n"));
    for t in [
        "jump_law",
        "survival",
        "drift",
        "orthogonality",
        "residuals",
    ] {
        let csv = std::fs::read_to_string(out.join(format!("{t}.csv"))).unwrap();
        assert!(csv.lines().count() > 1, "{t}.csv is empty");
    }
    assert!(out.join("timing.txt").exists());
}

#[test]
fn failing_verdict_exits_with_one() {
    // A threshold no projection can meet forces the battery verdicts to fail.
    let (c, text) = code(bin().args([
        "run",
        "--scenario",
        "cox-continuous",
        "--seed",
        "2",
        "--paths",
        "2000",
        "--steps",
        "10",
        "--param",
        "threshold=0",
    ]));
    assert_eq!(c, 1);
    assert!(text.contains("verdict.all = fail"));
}
