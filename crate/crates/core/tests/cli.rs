use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn btgf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btgf"))
        .args(args)
        .env_remove("BTGF_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("run.toml");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn run_writes_artifacts_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data.sbm]\n[train]\nepochs = 120\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let out = btgf(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("ACC"));
    for f in ["metrics.csv", "losses.csv", "bounds.csv", "embeddings.csv", "labels.txt", "checkpoint.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    assert_eq!(fs::read_to_string(a.join("losses.csv")).unwrap().lines().count(), 121);
    assert!(btgf(&["run", "--config", &cfg, "--out", b.to_str().unwrap(), "--workers", "2"]).status.success());
    assert_eq!(fs::read(a.join("labels.txt")).unwrap(), fs::read(b.join("labels.txt")).unwrap());
}

#[test]
fn missing_manifest_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\nmanifest = \"nowhere/manifest.toml\"\n");
    let out = btgf(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere/manifest.toml"));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data]\n");
    assert_eq!(btgf(&["run", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(btgf(&["verify-bounds", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(btgf(&["run", "--workers", "0"]).status.code(), Some(1));
}

#[test]
fn verify_bounds_reports_all_trials() {
    let out = btgf(&["verify-bounds", "--seed", "3"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.matches("100/100 passed").count(), 2, "{text}");
    assert!(text.contains("min gap"));
}

#[test]
fn generate_then_run_then_evaluate() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let gen = btgf(&["generate", "--seed", "2", "--out", data.to_str().unwrap()]);
    assert!(gen.status.success(), "{}", String::from_utf8_lossy(&gen.stderr));
    let cfg = write_config(dir.path(), "out = \"res\"\n[data]\nmanifest = \"data/manifest.toml\"\n[train]\nepochs = 150\n");
    assert!(btgf(&["run", "--config", &cfg]).status.success());
    let res = dir.path().join("res");
    let pred = res.join("labels.txt");
    let eval = btgf(&[
        "evaluate",
        "--pred",
        pred.to_str().unwrap(),
        "--truth",
        data.join("labels.txt").to_str().unwrap(),
    ]);
    assert!(eval.status.success());
    let text = stdout(&eval);
    assert_eq!(text.lines().next(), Some("acc,f1,nmi,ari"));
    assert_eq!(text.lines().nth(1).unwrap(), fs::read_to_string(res.join("metrics.csv")).unwrap().lines().nth(1).unwrap());
}

#[test]
fn ablate_writes_six_variants() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[data.sbm]\nblocks = [20, 20]\n[train]\nepochs = 60\n");
    let out = btgf(&["ablate", "--config", &cfg, "--repeats", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("ablation.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "variant,acc,f1,nmi,ari");
    let names: Vec<&str> = rows[1..].iter().map(|r| r.split(',').next().unwrap()).collect();
    assert_eq!(names, ["learned", "low_pass", "mix_pass", "identity", "without_l_fd", "without_l_msce"]);
}
