use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn dstr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dstr")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

const SINGLE_HOP_200: &str = r#"{
  "formation": {"kind": "single_hop", "count": 200},
  "protocol": {"dss": 200, "tsr": 0.0, "ct": 7, "st": 10}
}"#;

#[test]
fn single_hop_run_keeps_one_slot_per_uav() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "singlehop200.json", SINGLE_HOP_200);
    let out = dstr(&["run", "--config", &cfg, "--seed", "1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["final_superframe"], 200);
    assert_eq!(r["converged"], true);
    assert_eq!(r["valid"], true);
    assert_eq!(r["seed"], 1);
}

#[test]
fn gen_topology_ring_count() {
    let out = dstr(&["gen-topology", "--rings", "9"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("id,x,y,z"));
    // Ring k of a hexagonal lattice holds 6k sites around the centre.
    let expected = 1 + (1..=9).map(|k| 6 * k).sum::<usize>();
    assert_eq!(lines.count(), expected);
}

#[test]
fn gen_topology_grid_and_missing_shape() {
    let out = dstr(&["gen-topology", "--rows", "2", "--cols", "5"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 11);
    assert_eq!(code(&dstr(&["gen-topology"])), 1);
}

#[test]
fn malformed_config_names_the_location() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "bad.json", "{\n  \"formation\": {\"kind\": \"single_hop\", \"count\": 3},\n  \"protocl\": {}\n}");
    let out = dstr(&["run", "--config", &cfg]);
    assert_eq!(code(&out), 1);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
    assert!(err.contains("protocl"), "{err}");

    let cfg = write(dir.path(), "trunc.json", "{\"formation\": ");
    assert_eq!(code(&dstr(&["run", "--config", &cfg])), 1);
    assert_eq!(code(&dstr(&["run", "--config", "/nonexistent.json"])), 1);
    assert_eq!(code(&dstr(&["run", "--config", &cfg, "--stop", "never"])), 1);
}

#[test]
fn slot_budget_exhaustion_is_exit_3() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        dir.path(),
        "short.json",
        r#"{"formation": {"kind": "single_hop", "count": 10}, "max_slots": 30}"#,
    );
    let out = dstr(&["run", "--config", &cfg]);
    assert_eq!(code(&out), 3);
    assert_eq!(json(&out)["converged"], false);
    // A slot budget stop is a normal ending.
    assert_eq!(code(&dstr(&["run", "--config", &cfg, "--stop", "slots:20"])), 0);
}

#[test]
fn reps_and_trace() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "s.json", r#"{"formation": {"kind": "single_hop", "count": 4}, "protocol": {"dss": 4}}"#);
    let out = dstr(&["run", "--config", &cfg, "--seed", "5", "--reps", "3", "--trace", "--mgmt-model", "sinr"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let seeds: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["seed"].as_u64().unwrap()).collect();
    assert_eq!(seeds, vec![5, 6, 7]);
    assert!(!v[0]["trace"].as_array().unwrap().is_empty());
}

const SWEEP: &str = r#"{
  "scenario": {"formation": {"kind": "hex_grid", "rows": 2, "cols": 3}},
  "grid": {"ct": [3, 7], "st": [3, 10]},
  "replications": 3,
  "base_seed": 11
}"#;

#[test]
fn sweep_is_reproducible_and_summaries_match_rows() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "sweep.json", SWEEP);
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (p, jobs) in [(&a, "1"), (&b, "3")] {
        let out = dstr(&["sweep", "--config", &cfg, "--out", p.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());

    let rows = dstr::experiment::read_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4 * 3);
    assert!(rows.iter().enumerate().all(|(i, r)| r.run_id == i as u64 && r.valid && r.u == 6));
    assert_eq!(
        text.lines().next().unwrap(),
        "run_id,seed,u,tsr,ct,gm,st,dss,fst,resolution_slots,resolution_rounds,convergence_slots,\
         convergence_rounds,final_superframe,reuse,control_packets,overhead_normalized,removed_slots,valid"
    );

    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a.summary.json")).unwrap()).unwrap();
    let cells = summary.as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for (c, cell) in cells.iter().enumerate() {
        let mine = &rows[c * 3..c * 3 + 3];
        let mut v: Vec<f64> = mine.iter().map(|r| r.final_superframe as f64).collect();
        v.sort_by(f64::total_cmp);
        let mean = v.iter().sum::<f64>() / 3.0;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / 2.0;
        let m = &cell["metrics"]["final_superframe"];
        let close = |got: &serde_json::Value, want: f64| {
            let got = got.as_f64().unwrap();
            assert!((got - want).abs() <= 1e-9 * want.abs().max(1.0), "{got} vs {want}");
        };
        close(&m["mean"], mean);
        close(&m["var"], var);
        close(&m["std"], var.sqrt());
        close(&m["min"], v[0]);
        close(&m["max"], v[2]);
        // Three samples: the median is the middle one, quartiles halfway.
        close(&m["q50"], v[1]);
        close(&m["q25"], (v[0] + v[1]) / 2.0);
        close(&m["q75"], (v[1] + v[2]) / 2.0);
    }
}

#[test]
fn sweep_rejects_empty_grid_and_bad_keys() {
    let dir = TempDir::new().unwrap();
    let empty = write(dir.path(), "e.json", r#"{"scenario": {"formation": {"kind": "single_hop", "count": 3}}, "grid": {}}"#);
    assert_eq!(code(&dstr(&["sweep", "--config", &empty])), 1);
    let empty_axis = write(
        dir.path(),
        "ea.json",
        r#"{"scenario": {"formation": {"kind": "single_hop", "count": 3}}, "grid": {"tsr": []}}"#,
    );
    let out = dstr(&["sweep", "--config", &empty_axis]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty grid"));
    let bad = write(dir.path(), "b.json", &SWEEP.replace("\"replications\"", "\"repetitions\""));
    assert_eq!(code(&dstr(&["sweep", "--config", &bad])), 1);
    assert_eq!(code(&dstr(&["sweep", "--config", &write(dir.path(), "z.json", SWEEP), "--reps", "0"])), 1);
}

#[test]
fn baseline_schedule_validates_and_tampering_is_caught() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "g.json", r#"{"formation": {"kind": "hex_grid", "rows": 4, "cols": 4}}"#);
    let sched = dir.path().join("sched.csv");
    let out = dstr(&["baseline", "--config", &cfg, "--order", "by-degree", "--out", sched.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let slots = json(&out)["slot_count"].as_u64().unwrap();
    assert!(slots >= 7, "a UAV with six neighbors needs seven slots, got {slots}");

    let out = dstr(&["validate", "--config", &cfg, sched.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));

    // Put everyone in slot 1.
    let flat: String = std::iter::once("uav,slot\n".to_owned()).chain((0..16).map(|u| format!("{u},1\n"))).collect();
    let bad = write(dir.path(), "flat.csv", &flat);
    let out = dstr(&["validate", "--config", &cfg, &bad]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["valid"], false);
}

#[test]
fn run_result_json_can_be_revalidated() {
    let dir = TempDir::new().unwrap();
    let cfg = write(dir.path(), "g.json", r#"{"formation": {"kind": "hex_grid", "rows": 2, "cols": 5}, "protocol": {"dss": 10}}"#);
    let result = dir.path().join("r.json");
    assert_eq!(code(&dstr(&["run", "--config", &cfg, "--out", result.to_str().unwrap()])), 0);
    let out = dstr(&["validate", "--config", &cfg, result.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
}
