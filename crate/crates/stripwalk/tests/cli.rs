use std::path::Path;
use std::process::{Command, Output};

use stripwalk::batch::Mode;
use stripwalk::records::{read_csv, tested_records};
use stripwalk::report::{build, to_json, SummaryReport};
use stripwalk_core::scenarios;

fn stripwalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stripwalk"))
        .args(args)
        .env_remove("STRIPWALK_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    assert_eq!(code(o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn single_replicate_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out in [&a, &b] {
        let o = stripwalk(&["simulate", "ranking", "--n", "200000", "--replicates", "1", "--seed", "7", "--out", p(out)]);
        assert_eq!(code(&o), 0);
    }
    let text = std::fs::read(&a).unwrap();
    assert_eq!(text, std::fs::read(&b).unwrap());
    assert_eq!(text.iter().filter(|&&c| c == b'\n').count(), 2);
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let csv = dir.path().join(format!("{threads}.csv"));
        let json = dir.path().join(format!("{threads}.json"));
        let o = stripwalk(&[
            "simulate", "picky", "--n", "50000", "--replicates", "40", "--seed", "3", "--threads", threads, "--out",
            p(&csv), "--summary", p(&json),
        ]);
        assert_eq!(code(&o), 0);
        outputs.push((std::fs::read(csv).unwrap(), std::fs::read(json).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
    let env = Command::new(env!("CARGO_BIN_EXE_stripwalk"))
        .args(["simulate", "picky", "--n", "50000", "--replicates", "40", "--seed", "3"])
        .env("STRIPWALK_THREADS", "2")
        .output()
        .unwrap();
    assert_eq!(env.stdout, outputs[0].1);
}

#[test]
fn summary_round_trips_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    for (mode, id) in [("shared", "ranking"), ("separate", "ranking")] {
        let csv = dir.path().join(format!("{mode}.csv"));
        let json = dir.path().join(format!("{mode}.json"));
        let o = stripwalk(&[
            "simulate", id, "--mode", mode, "--n", "100000", "--replicates", "60", "--seed", "11", "--engine", "exact",
            "--out", p(&csv), "--summary", p(&json),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
        assert_eq!(rows.len(), if mode == "shared" { 60 } else { 120 });
        let tested = tested_records(&rows).unwrap();
        let mode = if mode == "shared" { Mode::Shared } else { Mode::Separate };
        let rebuilt = build(id, &scenarios::get(id).unwrap().scenario, mode, "exact", 100_000, &tested, 0.05).unwrap();
        let written = std::fs::read_to_string(&json).unwrap();
        assert_eq!(to_json(&rebuilt), written);
        let parsed: SummaryReport = serde_json::from_str(&written).unwrap();
        let rejected = rows.iter().filter(|r| r.reject).count() as f64;
        if mode == Mode::Shared {
            assert_eq!(parsed.reject_rate, rejected / 60.0);
        }
    }
}

#[test]
fn separate_builtin_writes_two_rows_per_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let o = stripwalk(&["simulate", "ranking-separate", "--n", "100000", "--replicates", "3", "--out", p(&csv)]);
    let summary = stdout_json(&o);
    assert_eq!(summary["mode"], "separate");
    let rows = read_csv(std::fs::File::open(&csv).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.replicate).collect::<Vec<_>>(), [0, 0, 1, 1, 2, 2]);
    assert!(rows.iter().all(|r| r.record.n0 == 0 || r.record.n1 == 0));
    assert!(summary["warnings"][0].as_str().unwrap().contains("replicates"));
}

#[test]
fn theory_examples() {
    let r = stdout_json(&stripwalk(&["theory", "ranking", "--alpha", "0.05", "--d-inf", "0.5"]));
    assert!((r["delta"].as_f64().unwrap() + 1.037833).abs() < 1e-6);
    assert!((r["asym_reject_prob"].as_f64().unwrap() - 0.1795898).abs() < 1e-6);
    assert_eq!(r["V1"].as_array().unwrap().len(), 3);
    let z = stdout_json(&stripwalk(&["theory", "ranking", "--d-inf", "0"]));
    assert!((z["asym_reject_prob"].as_f64().unwrap() - 0.05).abs() < 1e-10);
    let picky = stdout_json(&stripwalk(&["theory", "picky", "--power-iters", "200000"]));
    assert!((picky["asym_reject_prob"].as_f64().unwrap() - 0.1536348).abs() < 1e-6);
    assert!(picky["power"]["estimate"].as_f64().unwrap() < 0.01);
}

#[test]
fn sweep_reject_prob() {
    let o = stripwalk(&["sweep", "ranking", "--kind", "reject-prob", "--from", "0", "--to", "3", "--steps", "50"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("d_inf,value,stderr"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 50);
    assert!((values[0] - 0.05).abs() < 1e-10);
    assert!(values.windows(2).all(|w| w[1] > w[0]));

    let o = stripwalk(&["sweep", "ranking", "--kind", "reject-prob", "--from", "0", "--to", "3", "--steps", "61"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let row = text.lines().nth(11).unwrap();
    let cols: Vec<f64> = row.split(',').map(|c| c.parse().unwrap()).collect();
    assert!((cols[0] - 0.5).abs() < 1e-12 && (cols[1] - 0.1795898).abs() < 1e-6);
}

#[test]
fn sweep_is_deterministic() {
    let args = ["sweep", "picky", "--kind", "power-mc", "--from", "0", "--to", "1", "--steps", "3", "--iters", "70000"];
    let a = stripwalk(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, stripwalk(&args).stdout);
    let sim = stripwalk(&[
        "sweep", "ranking", "--kind", "sim-reject", "--from", "0", "--to", "1", "--steps", "2", "--replicates", "20", "--n",
        "10000",
    ]);
    assert_eq!(code(&sim), 0);
    assert_eq!(String::from_utf8(sim.stdout).unwrap().lines().count(), 3);
}

#[test]
fn exported_scenarios_validate() {
    let dir = tempfile::tempdir().unwrap();
    for id in scenarios::IDS {
        for fmt in ["toml", "json"] {
            let f = dir.path().join(format!("{id}.{fmt}"));
            assert_eq!(code(&stripwalk(&["export", id, "--format", fmt, "--out", p(&f)])), 0);
            let o = stripwalk(&["validate", p(&f)]);
            assert_eq!(code(&o), 0, "{id}.{fmt}");
            let t = stdout_json(&stripwalk(&["theory", p(&f), "--alpha", "0.05"]));
            assert_eq!(t["scenario_id"], id);
        }
    }
    let o = stripwalk(&["export", "ranking"]);
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("p = 0.5\n"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = String::from_utf8(stripwalk(&["export", "ranking"]).stdout).unwrap();
    std::fs::write(&bad, text.replace("prob = 0.948", "prob = 0.848")).unwrap();
    let o = stripwalk(&["validate", p(&bad)]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("mu0"));
    assert_eq!(code(&stripwalk(&["simulate", p(&bad), "--n", "100"])), 1);

    let garbled = dir.path().join("garbled.toml");
    std::fs::write(&garbled, "p = [").unwrap();
    assert_eq!(code(&stripwalk(&["validate", p(&garbled)])), 2);
    assert_eq!(code(&stripwalk(&["validate", p(&dir.path().join("missing.toml"))])), 2);
    assert_eq!(code(&stripwalk(&["export", "nope"])), 2);
    assert_eq!(code(&stripwalk(&["sweep", "ranking", "--kind", "reject-prob", "--steps", "1"])), 2);
    assert_eq!(code(&stripwalk(&["simulate", "ranking", "--replicates", "0"])), 2);
    assert_eq!(code(&stripwalk(&["simulate", "ranking", "--engine", "warp"])), 2);
    let same = dir.path().join("x");
    assert_eq!(code(&stripwalk(&["simulate", "ranking", "--out", p(&same), "--summary", p(&same)])), 2);
    assert_eq!(code(&stripwalk(&["simulate", "ranking", "--alpha", "1.5", "--n", "100"])), 1);
    assert_eq!(code(&stripwalk(&["theory", "ranking", "--d-inf=-1"])), 1);
}
