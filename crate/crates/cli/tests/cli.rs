use std::process::Command;

fn mvsim() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mvsim"))
}

fn write_config(dir: &std::path::Path, body: &str) -> std::path::PathBuf {
    let path = dir.join("exp.toml");
    std::fs::write(&path, body).unwrap();
    path
}

const MOMENT: &str = r#"
kind = "moment"
seed = 3
horizon = 1.0
steps = [8, 16, 32]
particles = [50]
p = 2.0
replications = 2
refinement = 2
max_ratio = 2.0

[model]
name = "ou"
a = -0.5
c = -0.5
s = 0.8

[initial]
kind = "gaussian"
mean = [1.0]
sd = [0.5]
"#;

#[test]
fn passing_run_writes_reports_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MOMENT);
    let out = dir.path().join("out");
    let status = mvsim()
        .args(["moment", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .args(["--threads", "2"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("moment.csv")).unwrap();
    assert!(csv.starts_with("key,estimate,stderr,n_reps\n8,"));
    assert!(out.join("moment.svg").exists());
}

#[test]
fn results_do_not_depend_on_threads_or_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MOMENT);
    let run = |threads: &str, name: &str| {
        let out = dir.path().join(name);
        let status = mvsim()
            .args(["moment", "--no-plot", "--threads", threads, "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .status()
            .unwrap();
        assert_eq!(status.code(), Some(0));
        std::fs::read_to_string(out.join("moment.csv")).unwrap()
    };
    let a = run("1", "a");
    let b = run("4", "b");
    assert_eq!(a.replace(dir.path().join("a").to_str().unwrap(), ""),
        b.replace(dir.path().join("b").to_str().unwrap(), ""));
}

#[test]
fn failed_assertion_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let body = MOMENT.replace("max_ratio = 2.0", "max_ratio = 1.0");
    let config = write_config(dir.path(), &body);
    let status = mvsim()
        .args(["moment", "--no-plot", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn bad_input_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), MOMENT);
    let status = mvsim().args(["rate", "--config"]).arg(&config).status().unwrap();
    assert_eq!(status.code(), Some(1));
    let broken = write_config(dir.path(), &MOMENT.replace("[8, 16, 32]", "[16, 8]"));
    let status = mvsim().args(["moment", "--config"]).arg(&broken).status().unwrap();
    assert_eq!(status.code(), Some(1));
}

#[test]
fn print_config_shows_preset() {
    let out = mvsim().args(["rate", "--print-config", "--seed", "9"]).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("kind = \"rate\""));
    assert!(text.contains("seed = 9"));
}
