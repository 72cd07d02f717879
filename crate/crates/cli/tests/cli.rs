use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tvta"));
    c.env_remove("TVTA_OUT_DIR");
    c
}

fn tmp(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("tvta-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&d);
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("exp.toml");
    std::fs::write(&p, body).unwrap();
    p
}

fn run(cmd: &str, cfg: &Path, out: &Path) -> Output {
    bin().args([cmd, "--config"]).arg(cfg).arg("--out").arg(out).args(["--no-timestamps", "--workers", "1"]).output().unwrap()
}

fn error_line(o: &Output) -> serde_json::Value {
    let err = String::from_utf8_lossy(&o.stderr);
    let line = err.lines().rev().find(|l| l.starts_with('{')).unwrap_or_else(|| panic!("no JSON error line in {err}"));
    serde_json::from_str(line).unwrap()
}

const SMALL: &str = r#"
experiment_id = "small"
workloads = ["toy"]
precisions = [8]
seeds = [0, 1]
methods = ["vta-random", "vta-surrogate"]

[dataset]
samples = 0

[tuner]
m = 1
max_k_trials_overlays = 1
max_n_trials = 32
b = 16
q_size = 32

[tuner.sa]
steps = 16
"#;

#[test]
fn unknown_key_is_a_config_error() {
    let d = tmp("unknown");
    let cfg = write_config(&d, "experiment_id = \"x\"\nbogus = 1\n");
    let o = run("dataset", &cfg, &d.join("out"));
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(error_line(&o)["error"], "config");
}

#[test]
fn missing_config_file_exits_2() {
    let d = tmp("nocfg");
    let o = run("tune", &d.join("absent.toml"), &d.join("out"));
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn guided_tuning_without_importance_exits_3() {
    let d = tmp("noimp");
    let cfg = write_config(&d, &SMALL.replace(r#"["vta-random", "vta-surrogate"]"#, r#"["tau-random"]"#));
    let o = run("tune", &cfg, &d.join("out"));
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_line(&o)["error"], "missing_prerequisite");
}

#[test]
fn report_without_traces_exits_3() {
    let d = tmp("norep");
    let cfg = write_config(&d, SMALL);
    assert_eq!(run("report", &cfg, &d.join("out")).status.code(), Some(3));
}

#[test]
fn validate_rejects_a_corrupt_trace() {
    let d = tmp("validate");
    std::fs::write(d.join("bad.jsonl"), "{\"not\": \"a record\"}\n").unwrap();
    let o = bin().arg("validate").arg(&d).output().unwrap();
    assert!(!o.status.success());
}

#[test]
fn print_config_round_trips() {
    let o = bin().args(["demo", "--print-config"]).output().unwrap();
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(tvta::ExperimentConfig::from_toml(&text).unwrap().resolve().is_ok());
}

/// Trials-to-95% recomputed from a curve CSV.
fn t95_from_csv(path: &Path) -> usize {
    let rows: Vec<(usize, f64)> = std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            let (t, g) = l.split_once(',').unwrap();
            (t.parse().unwrap(), g.parse().unwrap())
        })
        .collect();
    let last = rows.last().unwrap().1;
    rows.iter().position(|r| r.1 >= 0.95 * last).unwrap() + 1
}

#[test]
fn baseline_only_pipeline() {
    let d = tmp("pipeline");
    let cfg = write_config(&d, SMALL);
    let out = d.join("out");

    let o = run("dataset", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let ds = std::fs::read_to_string(out.join("dataset/dataset.jsonl")).unwrap();
    assert_eq!(ds.lines().count(), 1, "zero samples leaves only the header");

    let o = run("tune", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run("report", &cfg, &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = bin().arg("validate").arg(&out).output().unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    // each trace's summary agrees with its curve file
    for seed in [0, 1] {
        for m in ["vta-random", "vta-surrogate"] {
            let stem = format!("toy__{m}__p8__s{seed}");
            let t95 = t95_from_csv(&out.join("tune/curves").join(format!("{stem}.csv")));
            let trace = std::fs::read_to_string(out.join("tune/traces").join(format!("{stem}.jsonl"))).unwrap();
            let last: serde_json::Value = serde_json::from_str(trace.lines().last().unwrap()).unwrap();
            assert_eq!(last["detail"]["t95"], t95, "{stem}");
        }
    }

    // with no guided runs each baseline is compared against itself
    let conv: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("report/convergence.json")).unwrap()).unwrap();
    let rows = conv.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["speedup"], 1.0);
        assert_eq!(r["t95_ratio"], 1.0);
    }
}
