use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_revkde"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const CLT: &str = r#"
subcommand = "clt"
seed = 11
points = [-1.0, 0.0, 1.0]
n = 2000
replicates = 200
[chain]
kind = "ar1"
rho = 0.5
[schedule]
c = 1.0
beta = 0.22
"#;

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn clt_config_writes_two_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "clt.toml", CLT);
    let out = dir.path().join("out");
    let o = run(&["clt", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(matches!(o.status.code(), Some(0) | Some(2)), "{}", stderr(&o));
    assert!(out.join("clt_report.json").exists());
    assert!(out.join("clt_samples.csv").exists());
    assert_eq!(stderr(&o).lines().count(), 1, "{}", stderr(&o));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("clt_report.json")).unwrap()).unwrap();
    assert_eq!(report["header"]["seed"], 11);
    assert_eq!(report["config"]["n"], 2000);
    let pass = report["report"]["clt"]["diagnostics"]["pass"]["all"].as_bool().unwrap();
    assert_eq!(o.status.code(), Some(if pass { 0 } else { 2 }));

    let samples = std::fs::read_to_string(out.join("clt_samples.csv")).unwrap();
    let body: Vec<&str> = samples.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body[0], "replicate,t_1,t_2,t_3");
    assert_eq!(body.len(), 201);
}

#[test]
fn reruns_are_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "clt.toml", CLT);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    run(&["clt", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    run(&[
        "clt",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--workers",
        "4",
    ]);
    for f in ["clt_report.json", "clt_samples.csv"] {
        assert_eq!(
            std::fs::read(a.join(f)).unwrap(),
            std::fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "clt.toml", CLT);
    let out = dir.path().join("o");
    run(&[
        "clt",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "99",
        "--out",
        out.to_str().unwrap(),
    ]);
    let samples = std::fs::read_to_string(out.join("clt_samples.csv")).unwrap();
    assert!(samples.lines().any(|l| l == "# seed: 99"));
}

#[test]
fn regime_violation_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "clt.toml", &CLT.replace("beta = 0.22", "beta = 0.3"));
    let o = run(&[
        "clt",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nb_n^4 -> infinity"), "{}", stderr(&o));
    assert!(!dir.path().join("clt_report.json").exists());
}

#[test]
fn corollary_mode_rejects_small_beta() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "kde",
        "--chain",
        "ar1:0.5",
        "--n",
        "100",
        "--beta",
        "0.19",
        "--mode",
        "corollary",
        "--points",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("nb_n^5 -> 0"), "{}", stderr(&o));
}

#[test]
fn unknown_key_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "bad.toml", &format!("{CLT}\nreplicatez = 3\n"));
    let o = run(&["clt", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("replicatez"), "{}", stderr(&o));
}

#[test]
fn missing_field_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["kde", "--chain", "ar1:0.5", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing field `n`"), "{}", stderr(&o));
}

#[test]
fn mismatched_subcommand_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "clt.toml", CLT);
    let o = run(&["kde", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn run_dispatches_on_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "sim.toml",
        "subcommand = \"simulate\"\nn = 10\nseed = 1\n[chain]\nkind = \"finite\"\nvalues = [0.0, 1.0]\ntransition = [[0.8, 0.2], [0.3, 0.7]]\n",
    );
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("path.csv")).unwrap();
    let body: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(body.len(), 11);
}

#[test]
fn every_output_has_the_header_block() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert_eq!(
        run(&["simulate", "--chain", "ar1:0.3", "--n", "5", "--out", d])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["kde", "--chain", "ar1:0.3", "--n", "500", "--beta", "0.22", "--points", "-1,0,1", "--out", d])
            .status
            .code(),
        Some(0)
    );
    run(&["dependence", "--chain", "ar1:0.3", "--lags", "1..3", "--out", d]);
    for f in ["path.csv", "kde.csv", "dependence.csv"] {
        let text = std::fs::read_to_string(dir.path().join(f)).unwrap();
        let head: Vec<&str> = text.lines().take(5).collect();
        assert!(head[0].starts_with("# revkde "), "{f}");
        assert!(head[2].starts_with("# config_sha256: ") && head[2].len() == "# config_sha256: ".len() + 64);
        assert!(head[3].starts_with("# seed: "));
        assert!(head[4].starts_with("# config: {"));
    }
    let kde = std::fs::read_to_string(dir.path().join("kde.csv")).unwrap();
    assert!(kde.lines().any(|l| l == "point,fhat,expected,bias_oracle,studentized"));
    let dep = std::fs::read_to_string(dir.path().join("dependence.csv")).unwrap();
    assert!(dep
        .lines()
        .any(|l| l == "lag,eta,alpha_bar,alpha,bound_1_over_k4l,pass"));
}

#[test]
fn dependence_exit_code_follows_gate() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    // i.i.d.: every eta_k vanishes
    let o = run(&["dependence", "--chain", "ar1:0.0", "--lags", "4", "--out", d]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["dependence", "--chain", "ar1:0.9", "--lags", "4", "--out", d]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn lemma_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = run(&[
        "lemma-check",
        "--chains",
        "20",
        "--states",
        "2..6",
        "--max-lag",
        "10",
        "--seed",
        "3",
        "--out",
        d,
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("lemma_report.json")).unwrap()).unwrap();
    assert_eq!(v["report"]["cases"], 60);
    assert_eq!(v["report"]["failures"], 0);
}

#[test]
fn bad_chain_is_an_error() {
    let o = run(&[
        "simulate",
        "--chain",
        r#"{"kind":"finite","values":[0,1,2],"transition":[[0,1,0],[0,0,1],[1,0,0]]}"#,
        "--n",
        "5",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("not reversible"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
}

#[test]
fn shipped_configs_parse() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            revkde::cli::ExperimentConfig::from_path(&p).unwrap();
            seen += 1;
        }
    }
    assert!(seen >= 5);
}
