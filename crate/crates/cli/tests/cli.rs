use std::path::Path;
use std::process::{Command, Output};

fn radioplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radioplan"))
        .args(args)
        .output()
        .unwrap()
}

fn ok(args: &[&str]) -> Output {
    let out = radioplan(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// gen-scene → synth → calibrate → plan → map in `dir`.
fn pipeline(dir: &Path) {
    let d = s(dir);
    let scene = dir.join("scene.json");
    let meas = dir.join("measurements.csv");
    let cal = dir.join("scene_calibrated.json");
    ok(&[
        "gen-scene",
        "--out-dir",
        d,
        "--seed",
        "5",
        "--width",
        "150",
        "--height",
        "120",
        "--n-buildings",
        "5",
    ]);
    ok(&[
        "synth-measurements",
        "--out-dir",
        d,
        "--scene",
        s(&scene),
        "--seed",
        "6",
        "--n-points",
        "300",
        "--noise-sigma",
        "1.5",
    ]);
    ok(&[
        "calibrate",
        "--out-dir",
        d,
        "--scene",
        s(&scene),
        "--measurements",
        s(&meas),
        "--epochs",
        "60",
        "--seed",
        "7",
    ]);
    ok(&[
        "plan",
        "--out-dir",
        d,
        "--scene",
        s(&cal),
        "--grid-res",
        "6",
        "--n-new",
        "2",
        "--seed",
        "8",
        "--tx-power-list",
        "30,40",
    ]);
    ok(&[
        "map",
        "--out-dir",
        d,
        "--scene",
        s(&cal),
        "--grid-res",
        "6",
        "--plan",
        s(&dir.join("plan.json")),
    ]);
}

const PRIMARY: [&str; 12] = [
    "scene.json",
    "measurements.csv",
    "calibration.json",
    "loss.csv",
    "scene_calibrated.json",
    "plan.json",
    "plan_trace.csv",
    "plan_table.txt",
    "tx_power_sweep.csv",
    "map.csv",
    "map.pgm",
    "map_metrics.json",
];

#[test]
fn pipeline_is_byte_reproducible() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    pipeline(a.path());
    pipeline(b.path());
    for f in PRIMARY {
        let x = std::fs::read(a.path().join(f)).unwrap();
        let y = std::fs::read(b.path().join(f)).unwrap();
        assert!(x == y, "{f} differs between runs");
    }
    for m in [
        "gen_scene",
        "synth_measurements",
        "calibrate",
        "plan",
        "map",
    ] {
        let text = std::fs::read_to_string(a.path().join(format!("manifest_{m}.json"))).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["tool"], "radioplan");
        assert!(v["config"].is_object());
        assert!(v["timings_s"].is_object());
    }
    let plan: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.path().join("plan.json")).unwrap())
            .unwrap();
    assert_eq!(plan["selected"].as_array().unwrap().len(), 2);
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(a.path().join("manifest_plan.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["drt_queries"]["bayesian"], plan["drt_queries"]);
    let sweep = std::fs::read_to_string(a.path().join("tx_power_sweep.csv")).unwrap();
    assert_eq!(sweep.lines().count(), 1 + 2 * 2);
}

#[test]
fn map_with_plan_does_not_lower_coverage() {
    let dir = tempfile::tempdir().unwrap();
    pipeline(dir.path());
    let d = s(dir.path());
    let with: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("map_metrics.json")).unwrap(),
    )
    .unwrap();
    let only = dir.path().join("only");
    ok(&[
        "map",
        "--out-dir",
        s(&only),
        "--scene",
        &format!("{d}/scene_calibrated.json"),
        "--grid-res",
        "6",
    ]);
    let without: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(only.join("map_metrics.json")).unwrap())
            .unwrap();
    assert!(with["coverage"].as_f64().unwrap() >= without["coverage"].as_f64().unwrap());
}

#[test]
fn baselines_report_all_three_methods() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    ok(&[
        "gen-scene",
        "--out-dir",
        d,
        "--seed",
        "2",
        "--width",
        "120",
        "--height",
        "120",
        "--n-buildings",
        "4",
    ]);
    let out = ok(&[
        "baselines",
        "--out-dir",
        d,
        "--scene",
        &format!("{d}/scene.json"),
        "--grid-res",
        "8",
        "--n-new",
        "2",
        "--rs-groups",
        "20",
        "--es-step-m",
        "8",
    ]);
    let stdout = String::from_utf8(out.stdout).unwrap();
    for m in ["bayesian", "random_sampling", "exhaustive_search"] {
        assert!(stdout.contains(m), "{stdout}");
    }
    assert!(stdout.contains("of its queries"));
    let es: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("exhaustive_search.json")).unwrap(),
    )
    .unwrap();
    let rs: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("random_sampling.json")).unwrap(),
    )
    .unwrap();
    assert!(rs["metrics"]["target"].as_f64().unwrap() <= es["metrics"]["target"].as_f64().unwrap());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, format!("out_dir = \"{d}\"\nseed = 9\n")).unwrap();
    ok(&[
        "gen-scene",
        "--config",
        s(&cfg),
        "--n-buildings",
        "3",
        "--width",
        "100",
        "--height",
        "100",
    ]);
    ok(&[
        "gen-scene",
        "--config",
        s(&cfg),
        "--seed",
        "10",
        "--n-buildings",
        "3",
        "--width",
        "100",
        "--height",
        "100",
        "--out",
        &format!("{d}/other.json"),
    ]);
    let m: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("manifest_gen_scene.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(m["seed"], 10);
    assert_ne!(
        std::fs::read(dir.path().join("scene.json")).unwrap(),
        std::fs::read(dir.path().join("other.json")).unwrap()
    );
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = s(dir.path());
    assert_eq!(radioplan(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        radioplan(&["plan", "--out-dir", d, "--grid-res", "-1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(radioplan(&["plan", "--out-dir", d]).status.code(), Some(2));
    let bad_cfg = dir.path().join("bad.toml");
    std::fs::write(&bad_cfg, "no_such_key = 1\n").unwrap();
    assert_eq!(
        radioplan(&["plan", "--config", s(&bad_cfg)]).status.code(),
        Some(2)
    );

    let bad_scene = dir.path().join("bad.json");
    std::fs::write(
        &bad_scene,
        r#"{"region": {"xmin": 0, "ymin": 0, "xmax": 50, "ymax": 50},
            "buildings": [{"footprint": [[1,1],[5,1],[5,5],[1,5]], "height_m": 10, "material_index": 2}],
            "existing_bs": [], "materials": {"sigma": [0.1], "epsilon": [3.0]}}"#,
    )
    .unwrap();
    let out = radioplan(&["map", "--out-dir", d, "--scene", s(&bad_scene)]);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1, "{err}");
    assert!(err.contains("building 0"));
}
