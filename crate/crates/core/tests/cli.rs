use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};

fn lonchar(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lonchar")).current_dir(dir).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn write_json(dir: &Path, name: &str, v: &Value) {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(v).unwrap()).unwrap();
}

fn config(modes: usize, chi_sq: f64, runs: u64, run_mix: f64, network: Value) -> Value {
    json!({
        "experiment": {
            "modes": modes, "chi_sq": { "fixed": chi_sq }, "runs": runs,
            "run_mix": run_mix, "seed": 7, "photon_cutoff": 6
        },
        "network": network
    })
}

fn records(path: &Path) -> Vec<Value> {
    std::fs::read_to_string(path).unwrap().lines().skip(1).map(|l| serde_json::from_str(l).unwrap()).collect()
}

#[test]
fn malformed_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{ not json").unwrap();
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "-c", "bad.json", "-o", "r.ndjson"])), 2);
    write_json(dir.path(), "unknown.json", &json!({ "experimnt": {} }));
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "-c", "unknown.json", "-o", "r.ndjson"])), 2);
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "--bogus-flag"])), 2);
}

#[test]
fn large_rbs_and_oracle_requests_are_scale_errors() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "big.json", &config(9, 0.1, 10, 0.5, json!({ "kind": "haar", "seed": 1 })));
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "-c", "big.json", "-o", "r.ndjson"])), 3);
    // characterization-only streams have no photon-number cap
    write_json(dir.path(), "big_char.json", &config(9, 0.1, 10, 1.0, json!({ "kind": "haar", "seed": 1 })));
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "-c", "big_char.json", "-o", "r.ndjson"])), 0);
    assert_eq!(code(&lonchar(dir.path(), &["oracle-check", "-c", "big.json", "-o", "o.json"])), 3);
}

#[test]
fn stream_without_characterization_runs_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "c.json", &config(3, 0.1, 50, 0.0, json!({ "kind": "haar", "seed": 2 })));
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "-c", "c.json", "-o", "r.ndjson"])), 0);
    assert_eq!(code(&lonchar(dir.path(), &["characterize", "-i", "r.ndjson", "-o", "l.json"])), 4);
    let header = json!({ "config": config(3, 0.1, 1, 1.0, json!({ "kind": "identity" })) });
    std::fs::write(dir.path().join("junk.ndjson"), format!("{header}\nnot a record\n")).unwrap();
    assert_eq!(code(&lonchar(dir.path(), &["characterize", "-i", "junk.ndjson", "-o", "l.json"])), 4);
    std::fs::write(dir.path().join("bare.ndjson"), "{\"config\":{}}\n").unwrap();
    assert_eq!(code(&lonchar(dir.path(), &["characterize", "-i", "bare.ndjson", "-o", "l.json"])), 2);
}

#[test]
fn zero_runs_gives_only_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "c.json", &config(3, 0.1, 0, 0.5, json!({ "kind": "identity" })));
    let out = lonchar(dir.path(), &["simulate", "-c", "c.json", "-o", "r.ndjson", "--summary", "s.json"]);
    assert_eq!(code(&out), 0);
    assert!(records(&dir.path().join("r.ndjson")).is_empty());
    let summary: Value = serde_json::from_slice(&std::fs::read(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["config"]["experiment"]["runs"], 0);
}

#[test]
fn vacuum_input_never_clicks() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "c.json", &config(3, 0.0, 200, 0.5, json!({ "kind": "haar", "seed": 3 })));
    assert_eq!(code(&lonchar(dir.path(), &["simulate", "-c", "c.json", "-o", "r.ndjson"])), 0);
    let recs = records(&dir.path().join("r.ndjson"));
    assert_eq!(recs.len(), 200);
    for r in &recs {
        assert!(r["bob_counts"].as_array().unwrap().iter().all(|n| n == 0));
        if let Some(a) = r.get("alice_counts") {
            assert!(a.as_array().unwrap().iter().all(|n| n == 0));
        }
    }
}

#[test]
fn reruns_are_identical_and_seed_flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "c.json", &config(3, 0.2, 300, 0.5, json!({ "kind": "haar", "seed": 4 })));
    let p = dir.path();
    lonchar(p, &["simulate", "-c", "c.json", "-o", "a.ndjson"]);
    lonchar(p, &["simulate", "-c", "c.json", "-o", "b.ndjson"]);
    lonchar(p, &["simulate", "-c", "c.json", "-o", "s.ndjson", "--seed", "99"]);
    let read = |n: &str| std::fs::read(p.join(n)).unwrap();
    assert_eq!(read("a.ndjson"), read("b.ndjson"));
    assert_ne!(read("a.ndjson"), read("s.ndjson"));
    let header: Value = serde_json::from_str(std::str::from_utf8(&read("s.ndjson")).unwrap().lines().next().unwrap()).unwrap();
    assert_eq!(header["config"]["experiment"]["seed"], 99);
}

#[test]
fn thread_count_env_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "c.json", &config(4, 0.2, 2000, 0.5, json!({ "kind": "uniform", "seed": 5, "t_sq": 0.9 })));
    let run = |threads: &str, out: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_lonchar"))
            .current_dir(dir.path())
            .env("LONCHAR_THREADS", threads)
            .args(["simulate", "-c", "c.json", "-o", out])
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        std::fs::read(dir.path().join(out)).unwrap()
    };
    assert_eq!(run("1", "one.ndjson"), run("3", "three.ndjson"));
    let bad = Command::new(env!("CARGO_BIN_EXE_lonchar"))
        .current_dir(dir.path())
        .env("LONCHAR_THREADS", "lots")
        .args(["simulate", "-c", "c.json", "-o", "x.ndjson"])
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn identity_network_estimate_has_small_off_diagonals() {
    let dir = tempfile::tempdir().unwrap();
    write_json(dir.path(), "c.json", &config(3, 0.3, 40_000, 1.0, json!({ "kind": "identity" })));
    let p = dir.path();
    assert_eq!(code(&lonchar(p, &["simulate", "-c", "c.json", "-o", "r.ndjson"])), 0);
    assert_eq!(code(&lonchar(p, &["characterize", "-i", "r.ndjson", "-o", "l.json"])), 0);
    let sidecar: Value = serde_json::from_slice(&std::fs::read(p.join("l.sigma.json")).unwrap()).unwrap();
    let rec = &sidecar["reconstruction"];
    for j in 0..3 {
        for i in 0..3 {
            let e = &rec["entries"][j][i];
            let mag = e[0].as_f64().unwrap().hypot(e[1].as_f64().unwrap());
            let sigma = rec["sigma"][j][i].as_f64().unwrap();
            if i == j {
                assert!((mag - 1.0).abs() < 3.0 * sigma, "diagonal {i}: {mag}");
            } else {
                assert!(mag < 3.0 * sigma, "entry ({j},{i}): {mag} vs sigma {sigma}");
            }
        }
    }
}

#[test]
fn sweep_csv_has_config_line_and_lossless_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = lonchar(dir.path(), &["sweep", "--modes", "10,50", "--t-sq", "0.9,1.0", "--format", "csv", "-o", "s.csv"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let mut lines = text.lines();
    let cfg: Value = serde_json::from_str(lines.next().unwrap().trim_start_matches("# ")).unwrap();
    assert_eq!(cfg["sweep"]["modes"], json!([10, 50]));
    let body = lines.collect::<Vec<_>>().join("\n");
    let mut rdr = csv::Reader::from_reader(body.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| &r[2] == "1.0") {
        assert_eq!(r[3].parse::<f64>().unwrap(), 1.0);
    }
    let f = |m: &str, t: &str| rows.iter().find(|r| &r[0] == m && &r[2] == t).unwrap()[3].parse::<f64>().unwrap();
    assert!(f("50", "0.9") < f("10", "0.9"));
}

#[test]
fn oracle_check_passes_on_small_network() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(2, 0.3, 0, 0.5, json!({ "kind": "lossy", "seed": 8, "transmissions": [0.9, 0.7] }));
    cfg["ideal"] = json!({ "kind": "haar", "seed": 8 });
    write_json(dir.path(), "c.json", &cfg);
    let out = lonchar(dir.path(), &["oracle-check", "-c", "c.json", "-o", "o.json", "--n-max", "3"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: Value = serde_json::from_slice(&std::fs::read(dir.path().join("o.json")).unwrap()).unwrap();
    assert_eq!(report["holds"], true);
    assert_eq!(report["config"]["oracle"]["n_max"], 3);
}
