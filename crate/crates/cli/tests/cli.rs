//! End-to-end tests of the `explore` binary: argument handling, scenario
//! dumping, and a miniature benchmark run checked file-by-file.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn explore(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_explore"))
        .args(args)
        .output()
        .expect("failed to spawn explore binary")
}

#[test]
fn dump_scenario_emits_parseable_toml() {
    let out = explore(&["--dump-scenario", "simple"]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed: toml::Value = toml::from_str(&text).expect("dump must be valid TOML");
    assert_eq!(parsed["name"].as_str(), Some("simple"));
    assert!(parsed.get("bounds").is_some());
    assert!(parsed.get("start").is_some());

    let pillars = explore(&["--dump-scenario", "pillars"]);
    assert!(pillars.status.success());
    let text = String::from_utf8(pillars.stdout).unwrap();
    let parsed: toml::Value = toml::from_str(&text).unwrap();
    let obstacles = parsed["obstacles"].as_array().expect("pillars has obstacles");
    assert_eq!(obstacles.len(), 9);
}

#[test]
fn unknown_builtin_dump_fails() {
    let out = explore(&["--dump-scenario", "atrium"]);
    assert!(!out.status.success());
}

#[test]
fn missing_required_arguments_fail_with_message() {
    let out = explore(&["--scenario", "simple"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("--policy"), "stderr was: {stderr}");
}

#[test]
fn rejects_zero_runs() {
    let out = explore(&[
        "--scenario", "simple", "--policy", "eaae", "--runs", "0", "--seed", "1", "--out", "/tmp",
    ]);
    assert!(!out.status.success());
}

#[test]
fn tiny_benchmark_writes_all_tables() {
    let dir = tempfile::tempdir().unwrap();
    let scenario_path = dir.path().join("closet.toml");
    fs::write(
        &scenario_path,
        r#"
name = "closet"

[bounds]
min = [0.0, 0.0, 0.0]
max = [6.0, 6.0, 2.0]

[start]
position = [3.0, 3.0, 1.0]
yaw = 0.0
"#,
    )
    .unwrap();
    let config_path = dir.path().join("quick.toml");
    fs::write(
        &config_path,
        r#"
[termination]
max_cycles = 3
"#,
    )
    .unwrap();

    let out_dir = dir.path().join("results");
    let out = explore(&[
        "--scenario",
        scenario_path.to_str().unwrap(),
        "--policy",
        "nearest",
        "--runs",
        "2",
        "--seed",
        "9",
        "--out",
        out_dir.to_str().unwrap(),
        "--config",
        config_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("closet/nearest"), "stdout was: {stdout}");

    let summary = fs::read_to_string(out_dir.join("summary.csv")).unwrap();
    let mut lines = summary.lines();
    assert_eq!(
        lines.next().unwrap(),
        "run,scenario,policy,seed,completion_s,energy_J,mean_power_W,entropy_bits,termination"
    );
    let rows: Vec<&str> = lines.filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("0,closet,nearest,9,"));
    assert!(rows[1].starts_with("1,closet,nearest,10,"));
    assert!(rows[0].ends_with(",cycle_limit"), "row: {}", rows[0]);

    for run in 0..2 {
        let series =
            fs::read_to_string(out_dir.join(format!("series_{run}.csv"))).unwrap();
        assert!(series.starts_with("t_s,explored_fraction,cum_energy_J,entropy_bits"));
        assert!(series.lines().count() >= 2, "series must contain data rows");
    }
    assert!(Path::new(&out_dir.join("timings.csv")).exists());

    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"], 2);
    assert_eq!(report["stats"][0]["policy"], "nearest");
}

#[test]
fn identical_invocations_produce_identical_summaries() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("quick.toml");
    fs::write(&config_path, "[termination]\nmax_cycles = 2\n").unwrap();
    let args_for = |out: &Path| {
        vec![
            "--scenario".to_string(),
            "simple".to_string(),
            "--policy".to_string(),
            "eaae".to_string(),
            "--runs".to_string(),
            "1".to_string(),
            "--seed".to_string(),
            "4".to_string(),
            "--out".to_string(),
            out.to_str().unwrap().to_string(),
            "--config".to_string(),
            config_path.to_str().unwrap().to_string(),
        ]
    };
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let args: Vec<String> = args_for(out);
        let refs: Vec<&str> = args.iter().map(String::as_str).collect();
        let res = explore(&refs);
        assert!(res.status.success(), "stderr: {}", String::from_utf8_lossy(&res.stderr));
    }
    let a = fs::read(out_a.join("summary.csv")).unwrap();
    let b = fs::read(out_b.join("summary.csv")).unwrap();
    assert_eq!(a, b, "same config + seed must give byte-identical summaries");
    let sa = fs::read(out_a.join("series_0.csv")).unwrap();
    let sb = fs::read(out_b.join("series_0.csv")).unwrap();
    assert_eq!(sa, sb);
}
