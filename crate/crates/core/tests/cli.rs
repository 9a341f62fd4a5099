use danr::harness::{write_records, EvalRecord, Metric};
use std::path::Path;
use std::process::{Command, Output};

fn danr(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_danr")).current_dir(dir).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("cfg.toml");
    std::fs::write(&path, body).unwrap();
    path.display().to_string()
}

const SMALL: &str = "[classification.generator]\nnodes_per_community = 6\ndim = 4\n\n\
                     [solve.solver]\neps_primal = 1e-3\neps_dual = 1e-3\n";

#[test]
fn gen_then_solve_writes_report_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = danr(dir.path(), &["--config", &cfg, "--out", "net", "gen"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("net/graph.json").exists());
    assert!(dir.path().join("net/test.json").exists());

    let out = danr(dir.path(), &["--config", &cfg, "--out", "run", "solve", "--graph", "net/graph.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("run/report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], serde_json::Value::Bool(true));
    let trace = std::fs::read_to_string(dir.path().join("run/trace.csv")).unwrap();
    assert!(trace.lines().count() > 1);
}

#[test]
fn hitting_the_iteration_cap_fails_only_in_strict_mode() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{SMALL}max_outer_iters = 2\n"));
    assert!(danr(dir.path(), &["--config", &cfg, "--out", "net", "gen"]).status.success());
    let relaxed = danr(dir.path(), &["--config", &cfg, "solve", "--graph", "net/graph.json"]);
    assert_eq!(relaxed.status.code(), Some(0));
    let strict = danr(dir.path(), &["--config", &cfg, "--strict", "solve", "--graph", "net/graph.json"]);
    assert_eq!(strict.status.code(), Some(2));
}

#[test]
fn bad_inputs_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let missing = danr(dir.path(), &["solve", "--graph", "nowhere.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let cfg = write_config(dir.path(), "[sweep]\nseedz = [1]\n");
    assert_eq!(danr(dir.path(), &["--config", &cfg, "gen"]).status.code(), Some(1));
}

#[test]
fn plot_renders_a_records_file() {
    let dir = tempfile::tempdir().unwrap();
    let records: Vec<EvalRecord> = (1..=3)
        .flat_map(|t| {
            ["st_danr", "none"].map(|m| EvalRecord {
                experiment: "temporal".into(),
                method: m.into(),
                seed: 0,
                lambda: 1.0,
                mu: 0.5,
                noise: None,
                snapshot: Some(t),
                metric: Metric::Mse,
                value: 0.1 * t as f64,
                clusters: 0,
                nonzero_alpha: 0,
                iterations: 10,
                converged: true,
                runtime_secs: 0.0,
                error: None,
            })
        })
        .collect();
    write_records(&dir.path().join("records.csv"), &records).unwrap();
    let out = danr(dir.path(), &["--out", "plots", "plot", "--records", "records.csv", "--kind", "mse_vs_snapshot"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(dir.path().join("plots/mse_vs_snapshot.svg")).unwrap();
    assert!(svg.contains("<svg"));
}
