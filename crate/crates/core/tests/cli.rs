//! End-to-end checks of the `acsim` binary: artifact layout, golden
//! headers, config handling, and error exits.

use std::path::Path;
use std::process::{Command, Output};

fn acsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_acsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_example2(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("topology.txt");
    std::fs::write(&path, acsim::fixtures::EXAMPLE2_TEXT).unwrap();
    path
}

fn first_line(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    text.lines().next().unwrap_or_default().to_owned()
}

#[test]
fn analyze_writes_report_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write_example2(dir.path());
    let out = acsim(&[
        "analyze",
        "--topology",
        topo.to_str().unwrap(),
        "--x0",
        "3,2,1,3,5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("leaders:                [1, 4] (m = 2)"));
    assert!(stdout.contains("delay-invariant value:  true"));

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["theorem1_applies"], true);
    assert!((report["predicted_sync_value"].as_f64().unwrap() - 3.0).abs() < 1e-9);
}

#[test]
fn simulate_emits_trajectory_with_golden_header() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write_example2(dir.path());
    let out = acsim(&[
        "simulate",
        "--topology",
        topo.to_str().unwrap(),
        "--x0",
        "3,2,1,3,5",
        "--steps",
        "500",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(
        first_line(&dir.path().join("trajectory.csv")),
        "step,x_1,x_2,x_3,x_4,x_5,norm"
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("consensus at step"), "stdout: {stdout}");
}

#[test]
fn montecarlo_emits_csv_set_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write_example2(dir.path());
    let out = acsim(&[
        "montecarlo",
        "--topology",
        topo.to_str().unwrap(),
        "--x0",
        "3,2,1,3,5",
        "--samples",
        "5",
        "--steps",
        "800",
        "--tau-d",
        "3",
        "--seed",
        "9",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert_eq!(first_line(&dir.path().join("sync.csv")), "step,norm");
    assert_eq!(
        first_line(&dir.path().join("norms.csv")),
        "step,norm,sample_id"
    );
    assert_eq!(
        first_line(&dir.path().join("consensus.csv")),
        "sample_id,seed,converged,consensus_step,consensus_value,spread"
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["samples"], 5);
    assert_eq!(summary["non_converged"], 0);
    assert!((summary["consensus_mean"].as_f64().unwrap() - 3.0).abs() < 1e-6);
}

#[test]
fn config_file_supplies_defaults_and_cli_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write_example2(dir.path());
    let cfg = dir.path().join("config.json");
    std::fs::write(
        &cfg,
        serde_json::json!({
            "topology": topo,
            "x0": [3.0, 2.0, 1.0, 3.0, 5.0],
            "samples": 3,
            "steps": 700,
            "tau_d": 2,
            "seed": 5,
            "out": dir.path(),
        })
        .to_string(),
    )
    .unwrap();
    // --samples on the command line wins over the config value
    let out = acsim(&[
        "montecarlo",
        "--config",
        cfg.to_str().unwrap(),
        "--samples",
        "2",
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap())
            .unwrap();
    assert_eq!(summary["samples"], 2);
}

#[test]
fn json_format_swaps_csv_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write_example2(dir.path());
    let out = acsim(&[
        "montecarlo",
        "--topology",
        topo.to_str().unwrap(),
        "--x0",
        "3,2,1,3,5",
        "--samples",
        "2",
        "--steps",
        "600",
        "--format",
        "json",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(dir.path().join("norms.json").exists());
    assert!(!dir.path().join("norms.csv").exists());
    assert!(dir.path().join("summary.json").exists());
}

#[test]
fn reproduce_example2_reports_leader_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = acsim(&[
        "reproduce",
        "example2",
        "--samples",
        "3",
        "--steps",
        "800",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let stdout = String::from_utf8_lossy(&out.stdout);
    let value: f64 = stdout
        .lines()
        .find_map(|l| l.strip_prefix("sync consensus value:"))
        .expect("sync value line present")
        .trim()
        .parse()
        .unwrap();
    assert!((value - 3.0).abs() < 1e-6, "stdout: {stdout}");
    // the written topology file round-trips through the parser
    let written =
        acsim::topology::DirectedTopology::load(&dir.path().join("topology.csv")).unwrap();
    assert_eq!(written, acsim::fixtures::example2_topology());
}

#[test]
fn missing_topology_is_a_clean_error() {
    let out = acsim(&["analyze"]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("missing --topology"), "stderr: {stderr}");
}

#[test]
fn malformed_topology_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.txt");
    std::fs::write(&path, "0.5 0.5\n0.3 oops\n").unwrap();
    let out = acsim(&["analyze", "--topology", path.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("line 2"), "stderr: {stderr}");
}

#[test]
fn wrong_x0_length_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let topo = write_example2(dir.path());
    let out = acsim(&[
        "simulate",
        "--topology",
        topo.to_str().unwrap(),
        "--x0",
        "1,2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("x0 has 2 entries"), "stderr: {stderr}");
}
