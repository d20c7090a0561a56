use std::io::{BufRead, BufReader};
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

use sensorloop_cli::{report, Audited, CliError, ServeConfig};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_sensorloop"));
    c.env_remove("SENSORLOOP_DASHBOARD_PORT").env_remove("SENSORLOOP_WEATHER_PORT").env_remove("SENSORLOOP_DASHBOARD_URL");
    c
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.scenario"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn free_port() -> u16 {
    TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port()
}

struct Served(Child);

impl Drop for Served {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

/// Starts `sensorloop serve` and waits for its readiness line.
fn serve(data: &Path, port: u16) -> Served {
    let mut child = bin()
        .args(["serve"])
        .env("SENSORLOOP_DASHBOARD_PORT", port.to_string())
        .current_dir(data)
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut lines = BufReader::new(child.stdout.take().unwrap()).lines();
    let first = lines.next().expect("serve exited early").unwrap();
    assert!(first.starts_with("dashboard ready at"), "{first}");
    Served(child)
}

#[test]
fn serve_answers_on_the_env_port_and_a_second_instance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let port = free_port();
    let _served = serve(dir.path(), port);
    let metrics: serde_json::Value = ureq::get(&format!("http://127.0.0.1:{port}/metrics")).call().unwrap().into_json().unwrap();
    assert_eq!(metrics["ingested"], 0);
    assert_eq!(metrics["events_dropped"], 0);

    let second = bin().args(["serve"]).env("SENSORLOOP_DASHBOARD_PORT", port.to_string()).current_dir(dir.path()).output().unwrap();
    assert_eq!(second.status.code(), Some(3), "{}", stderr(&second));
    assert!(stderr(&second).contains("transport"));
}

#[test]
fn simulate_against_a_served_dashboard() {
    let dir = tempfile::tempdir().unwrap();
    let port = free_port();
    let _served = serve(dir.path(), port);
    let out = dir.path().join("bundle");
    let o = bin()
        .args(["simulate", "--scenario", scenario("fig2_schedule").to_str().unwrap(), "--output", out.to_str().unwrap()])
        .env("SENSORLOOP_DASHBOARD_PORT", port.to_string())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let series: serde_json::Value =
        ureq::get(&format!("http://127.0.0.1:{port}/series?sensor=office")).call().unwrap().into_json().unwrap();
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(series["points"].as_array().unwrap().len() as u64, report["total_tx"].as_u64().unwrap());
}

#[test]
fn simulate_without_a_dashboard_is_a_transport_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "simulate",
        "--scenario",
        scenario("fig2_schedule").to_str().unwrap(),
        "--output",
        dir.path().join("b").to_str().unwrap(),
        "--dashboard-url",
        &format!("http://127.0.0.1:{}", free_port()),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn invalid_scenario_lists_every_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.scenario");
    std::fs::write(
        &path,
        r#"
name = "bad"
duration_seconds = 0

[[nodes]]
sensor_id = "a b"
initial_interval_seconds = 0
dps_enabled = false
signal = { kind = "synthetic", base_level = 20.0, daily_amplitude = 1.0, noise_std = -1.0 }
"#,
    )
    .unwrap();
    let o = run(&["simulate", "--embedded", "--scenario", path.to_str().unwrap(), "--output", dir.path().join("b").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let err = stderr(&o);
    for needle in ["duration_seconds", "initial_interval_seconds", "noise_std", "a b"] {
        assert!(err.contains(needle), "missing {needle:?} in {err}");
    }
    assert!(!dir.path().join("b").exists());
}

#[test]
fn seeded_embedded_runs_write_identical_bundles_and_report_accepts_them() {
    let dir = tempfile::tempdir().unwrap();
    let path = scenario("demo_topology");
    let mut bundles = Vec::new();
    for run_name in ["a", "b", "c"] {
        let out = dir.path().join(run_name);
        let seed = if run_name == "c" { "8" } else { "7" };
        let o = run(&["simulate", "--embedded", "--scenario", path.to_str().unwrap(), "--seed", seed, "--output", out.to_str().unwrap()]);
        assert!(o.status.success(), "{}", stderr(&o));
        bundles.push(out);
    }
    let read = |dir: &Path, f: &str| std::fs::read(dir.join(f)).unwrap();
    for f in ["summary.json", "scenario.json", "ticks.csv", "commands.csv", "intervals.csv", "failures.csv"] {
        assert_eq!(read(&bundles[0], f), read(&bundles[1], f), "{f}");
    }
    assert_ne!(read(&bundles[0], "ticks.csv"), read(&bundles[2], "ticks.csv"));

    let o = run(&["report", bundles[0].to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("summary matches the logs"));
}

#[test]
fn report_detects_a_tampered_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("bundle");
    let o = run(&["simulate", "--embedded", "--scenario", scenario("fig2_schedule").to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(matches!(report(&out).unwrap(), Audited::Simulation(_)));

    let summary = out.join("summary.json");
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    json["total_tx"] = serde_json::json!(json["total_tx"].as_u64().unwrap() - 1);
    std::fs::write(&summary, serde_json::to_string_pretty(&json).unwrap()).unwrap();
    let o = run(&["report", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(6), "{}", stderr(&o));
    assert!(matches!(report(&out), Err(CliError::Mismatch(_))));

    let o = run(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

fn write_trace(path: &Path, n: usize) {
    let mut text = String::from("timestamp,value\n");
    for t in 0..n {
        text.push_str(&format!("{},{:.4}\n", t * 60, 20.0 + (t as f64 / 40.0).sin()));
    }
    std::fs::write(path, text).unwrap();
}

#[test]
fn replay_writes_an_auditable_bundle() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    write_trace(&trace, 400);
    let config = dir.path().join("dps.toml");
    std::fs::write(&config, "threshold_epsilon = 0.05\nrefresh_interval_ticks = 100\ninit_phase_ticks = 60\n").unwrap();
    let out = dir.path().join("replay");
    let o = run(&["replay", "--trace", trace.to_str().unwrap(), "--config", config.to_str().unwrap(), "--epsilon", "0.2", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    match report(&out).unwrap() {
        Audited::Replay(s) => {
            assert_eq!(s.samples, 400);
            assert_eq!(s.threshold_epsilon, 0.2);
            assert!(s.max_reconstruction_error <= 0.2);
            assert!(s.suppressions > 0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_trace_names_the_row() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    std::fs::write(&trace, "timestamp,value\n0,20.0\n60,warm\n120,20.2\n").unwrap();
    let o = run(&["replay", "--trace", trace.to_str().unwrap(), "--output", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("row 3"), "{}", stderr(&o));

    let o = run(&["replay", "--trace", dir.path().join("missing.csv").to_str().unwrap(), "--output", dir.path().join("r").to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));

    let o = run(&["replay", "--trace", trace.to_str().unwrap(), "--epsilon", "-1", "--output", dir.path().join("r").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dashboard_url_falls_back_to_the_configured_port() {
    let mut c = ServeConfig::default();
    c.apply_env(|k| (k == "SENSORLOOP_DASHBOARD_PORT").then(|| "18080".into())).unwrap();
    assert_eq!(c.dashboard_url(), "http://127.0.0.1:18080");
}
