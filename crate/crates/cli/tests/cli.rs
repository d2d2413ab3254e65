use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn chargeplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_chargeplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = chargeplan(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

/// One truck's first depot tour plus the closing depot leg, on ten hourly
/// slots.
fn micro(dir: &Path) -> PathBuf {
    let gen = dir.join("gen");
    ok(&[
        "generate",
        "--trucks",
        "1",
        "--days",
        "1",
        "--tau",
        "60",
        "--seed",
        "2",
        "--out-dir",
        s(&gen),
    ]);
    let mut doc = json(&gen.join("instance.json"));
    let legs = doc["itineraries"][0]["legs"].as_array().unwrap().clone();
    let depot_return = legs
        .iter()
        .position(|l| l["destination"] == "depot")
        .unwrap();
    let mut closing = legs.last().unwrap().clone();
    for (field, at) in [
        ("departure_earliest", "08:00"),
        ("departure_latest", "09:00"),
        ("arrival_earliest", "08:00"),
        ("arrival_latest", "09:00"),
    ] {
        closing[field] = Value::from(format!("2023-11-06T{at}:00"));
    }
    let mut kept: Vec<Value> = legs[..=depot_return].to_vec();
    kept.push(closing);
    doc["itineraries"][0]["legs"] = Value::from(kept);
    doc["time_grid"]["slot_count"] = Value::from(10);
    let path = dir.join("micro.json");
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    path
}

#[test]
fn generate_defaults_to_the_case_study_fleet() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(&["generate", "--out-dir", s(dir.path())]);
    assert!(out.contains("trucks 100\t"), "{out}");
    assert!(out.contains("locations 356\t"), "{out}");
}

#[test]
fn generate_is_repeatable_and_honours_the_legs_knob() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = |d: &Path| {
        vec![
            "generate".to_string(),
            "--trucks".into(),
            "10".into(),
            "--legs-per-day".into(),
            "3".into(),
            "--out-dir".into(),
            s(d).into(),
        ]
    };
    for d in [&a, &b] {
        let v = args(d);
        ok(&v.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let text = fs::read(a.join("instance.json")).unwrap();
    assert_eq!(text, fs::read(b.join("instance.json")).unwrap());
    let doc = json(&a.join("instance.json"));
    let moving: usize = doc["itineraries"]
        .as_array()
        .unwrap()
        .iter()
        .flat_map(|it| it["legs"].as_array().unwrap())
        .filter(|l| l["origin"] != l["destination"])
        .count();
    let mean = moving as f64 / 70.0;
    assert!((mean - 3.0).abs() < 0.15, "{mean}");
}

#[test]
fn rule_design_counts() {
    let dir = tempfile::tempdir().unwrap();
    ok(&["generate", "--out-dir", s(dir.path())]);
    let inst = dir.path().join("instance.json");
    let out = ok(&[
        "rule-design",
        "--instance",
        s(&inst),
        "--mix",
        "10,10,4,0,1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(out.trim(), "chargers 25\tpower_kw 4920");
    let design = json(&dir.path().join("design.json"));
    assert_eq!(design["sites"][0]["chargers"]["dc1080"], 1);
    let out = ok(&[
        "rule-design",
        "--instance",
        s(&inst),
        "--ratio",
        "100",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(out.starts_with("chargers 1\t"), "{out}");
    let bad = chargeplan(&[
        "rule-design",
        "--instance",
        s(&inst),
        "--ratio",
        "5",
        "--mix",
        "10,10,4,0,1",
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("need 20"));
}

#[test]
fn optimize_writes_plan_files_and_weighs_the_peak() {
    let dir = tempfile::tempdir().unwrap();
    let inst = micro(dir.path());
    let mut share = Vec::new();
    for alpha in ["1", "2"] {
        let out = dir.path().join(format!("a{alpha}"));
        let printed = ok(&[
            "optimize",
            "--instance",
            s(&inst),
            "--alpha-peak",
            alpha,
            "--gap",
            "0",
            "--node-limit",
            "100000",
            "--export-mps",
            "--out-dir",
            s(&out),
        ]);
        assert!(printed.contains("status Optimal"), "{printed}");
        for f in [
            "design.json",
            "schedule.json",
            "costs.json",
            "search_log.tsv",
            "model.mps",
        ] {
            assert!(out.join(f).exists(), "{f}");
        }
        let c = json(&out.join("costs.json"));
        let total = c["total"].as_f64().unwrap();
        let weight: f64 = alpha.parse().unwrap();
        let peak = weight * c["peak"].as_f64().unwrap();
        let sum = c["energy"].as_f64().unwrap() + c["infrastructure"].as_f64().unwrap() + peak;
        assert!((total - sum).abs() < 1e-9, "{c}");
        share.push(peak / total);
    }
    assert!(share[1] >= share[0] - 1e-12, "{share:?}");
}

#[test]
fn optimize_empty_itineraries_installs_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let inst = micro(dir.path());
    let mut doc = json(&inst);
    doc["itineraries"][0]["legs"] = Value::from(Vec::<Value>::new());
    let empty = dir.path().join("empty.json");
    fs::write(&empty, doc.to_string()).unwrap();
    ok(&[
        "optimize",
        "--instance",
        s(&empty),
        "--out-dir",
        s(dir.path()),
    ]);
    let c = json(&dir.path().join("costs.json"));
    assert_eq!(c["total"].as_f64().unwrap(), 0.0);
    let design = json(&dir.path().join("design.json"));
    for site in design["sites"].as_array().unwrap() {
        assert!(site["chargers"]
            .as_object()
            .unwrap()
            .values()
            .all(|n| n == 0));
    }
}

#[test]
fn optimize_reports_infeasibility() {
    let dir = tempfile::tempdir().unwrap();
    let inst = micro(dir.path());
    let mut doc = json(&inst);
    let legs = doc["itineraries"][0]["legs"].as_array().unwrap().clone();
    doc["itineraries"][0]["legs"] = Value::from(legs[..legs.len() - 1].to_vec());
    let stuck = dir.path().join("stuck.json");
    fs::write(&stuck, doc.to_string()).unwrap();
    let out = chargeplan(&[
        "optimize",
        "--instance",
        s(&stuck),
        "--out-dir",
        s(dir.path()),
    ]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("infeasible"), "{err}");
    assert!(
        err.contains("binding constraints") && err.contains("PeriodEnd"),
        "{err}"
    );
}

#[test]
fn simulate_zero_noise_schedule_and_repeat() {
    let dir = tempfile::tempdir().unwrap();
    let inst = micro(dir.path());
    let plan = dir.path().join("plan");
    ok(&["optimize", "--instance", s(&inst), "--out-dir", s(&plan)]);
    let design = plan.join("design.json");
    let schedule = plan.join("schedule.json");
    let sim = |out: &Path, runs: &str, delta: &str| {
        ok(&[
            "simulate",
            "--instance",
            s(&inst),
            "--design",
            s(&design),
            "--schedule",
            s(&schedule),
            "--runs",
            runs,
            "--delta",
            delta,
            "--seed",
            "4",
            "--out-dir",
            s(out),
        ])
    };
    let exact = dir.path().join("exact");
    sim(&exact, "1", "0");
    let r = json(&exact.join("report.json"));
    assert_eq!(r["queue_min"]["mean"].as_f64().unwrap(), 0.0);
    assert_eq!(r["failures"]["mean"].as_f64().unwrap(), 0.0);
    let planned = json(&plan.join("costs.json"))["energy"].as_f64().unwrap();
    let simulated = r["energy_cost"]["mean"].as_f64().unwrap();
    assert!((simulated - planned).abs() <= 1e-3 * planned);

    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    sim(&a, "30", "0.05");
    sim(&b, "30", "0.05");
    for f in [
        "report.json",
        "report.tsv",
        "power_curves_schedule.tsv",
        "events_run0.tsv",
    ] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn experiment_emits_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let inst = micro(dir.path());
    ok(&[
        "experiment",
        "--instance",
        s(&inst),
        "--runs",
        "1",
        "--delta",
        "0",
        "--out-dir",
        s(dir.path()),
    ]);
    let result = json(&dir.path().join("experiment.json"));
    let rows = result["rows"].as_array().unwrap();
    let labels: Vec<&str> = rows.iter().map(|r| r["label"].as_str().unwrap()).collect();
    assert_eq!(labels, ["OO", "OR", "RO", "RR"]);
    let metric = |label: &str, name: &str| {
        rows.iter().find(|r| r["label"] == label).unwrap()["report"][name]["mean"]
            .as_f64()
            .unwrap()
    };
    assert!(metric("OO", "energy_cost") <= metric("OR", "energy_cost") + 1e-9);
    assert!(metric("RR", "queue_min") >= metric("OO", "queue_min"));
    assert_eq!(metric("OO", "queue_min"), 0.0);
    let table = fs::read_to_string(dir.path().join("report.tsv")).unwrap();
    assert!(table.starts_with("experiment\tmetric\tmean\tsd\n"));
}
