use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn elflow(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elflow"))
        .args(args)
        .env("ELFLOW_OUTPUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn figure_eight_writes_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = elflow(dir.path(), &["figure-eight"]);
    let printed: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    let saved: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("figure_eight.json")).unwrap()).unwrap();
    assert_eq!(printed, saved);
    let r = saved["rStar"].as_f64().unwrap();
    assert!((r - 4.5626366).abs() < 1e-6);
    assert!(saved["eStar"].as_f64().unwrap() > 10.6);
}

#[test]
fn elastica_solve_writes_both_loops() {
    let dir = tempfile::tempdir().unwrap();
    let o = elflow(dir.path(), &["elastica", "solve", "--ell", "0.3", "--family", "loop"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0.3,loop+,"));
    assert!(lines[2].starts_with("0.3,loop-,"));
    let sub = dir.path().join("elastica_loop_0.3");
    for f in ["solutions.csv", "loop_plus.csv", "loop_minus.csv"] {
        assert!(sub.join(f).is_file(), "{f}");
    }
}

#[test]
fn atlas_lists_the_catalogue() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&elflow(dir.path(), &["elastica", "atlas", "--ell", "0.2"]));
    for class in ["segment", "arc+", "arc-", "loop+", "loop-"] {
        assert!(text.contains(&format!(",{class},")), "{class}");
    }
}

#[test]
fn out_of_range_ell_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = elflow(dir.path(), &["elastica", "solve", "--ell", "0.9", "--family", "arc"]);
    assert!(!o.status.success());
    let o = elflow(dir.path(), &["migrate", "--ell", "0.1", "--mode", "sideways"]);
    assert!(!o.status.success());
}

#[test]
fn flow_run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("scenario.json");
    fs::write(
        &config,
        r#"{
  "ell": 0.1,
  "perturbMode": "hessianDirection",
  "flow": { "nodes": 64, "snapshotEvery": 10 },
  "outputDir": "run",
  "constants": {
    "barrier": { "mStar": 3.566659970565361, "eStar": 10.603754493428045, "rStar": 4.562636593396884 },
    "estimates": { "c1": 0.3, "c2": 0.35, "usableEll": 0.3, "ellAdmissible": 0.35 }
  }
}"#,
    )
    .unwrap();
    let text = stdout(&elflow(dir.path(), &["flow", "run", "--config", config.to_str().unwrap()]));
    assert!(text.starts_with("verdict Migrated limit arc-"), "{text}");
    let run = dir.path().join("run");
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(run.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["verdict"], "Migrated");
    assert_eq!(summary["limitClass"], "ArcMinus");
    let ts = fs::read_to_string(run.join("timeseries.csv")).unwrap();
    assert_eq!(ts.lines().next(), Some("t,E,TC,yMin,yMax,location"));
    let svgs = fs::read_dir(&run)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "svg"))
        .count();
    assert!(svgs >= 4);
}

#[test]
fn barrier_map_on_a_tiny_grid() {
    let dir = tempfile::tempdir().unwrap();
    let text = stdout(&elflow(
        dir.path(),
        &["barrier", "map", "--ell-max", "0.05", "--res", "2", "--m", "128"],
    ));
    let summary: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
    assert!(summary["mStar"].as_f64().unwrap() > 3.0);
    let csv = fs::read_to_string(dir.path().join("barrier_map.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(dir.path().join("barrier_constants.json").is_file());
}
