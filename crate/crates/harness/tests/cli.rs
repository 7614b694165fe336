use std::fs;
use std::path::Path;
use std::process::Command;

use rfusion::core::config::{Algorithm, ScenarioConfig};
use rfusion::runner::run_monte_carlo;

fn rfusion(args: &[&str]) {
    let out = Command::new(env!("CARGO_BIN_EXE_rfusion"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "rfusion {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn body(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| format!("{l}\n"))
        .collect()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenario.toml");
    fs::write(&path, text).unwrap();
    path.display().to_string()
}

#[test]
fn monte_carlo_is_deterministic() {
    let cfg = ScenarioConfig {
        runs: 3,
        steps: 8,
        lambda: 0.3,
        ..Default::default()
    };
    let a = run_monte_carlo(&cfg).unwrap();
    let b = run_monte_carlo(&cfg).unwrap();
    for (x, y) in a.results.iter().zip(&b.results) {
        assert_eq!(x.errors, y.errors);
        assert_eq!(x.comm, y.comm);
    }
    let other = run_monte_carlo(&ScenarioConfig {
        seed: cfg.seed + 1,
        ..cfg
    })
    .unwrap();
    assert_ne!(a.results[0].errors, other.results[0].errors);
}

#[test]
fn simulate_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "lambda = 0.5\nruns = 4\n");
    let out = dir.path().join("out");
    rfusion(&[
        "simulate",
        "--config",
        &config,
        "--algorithms",
        "cRCIF,cCIF-t",
        "--out",
        out.to_str().unwrap(),
    ]);
    let rmse = fs::read_to_string(out.join("rmse.csv")).unwrap();
    assert!(rmse.contains("# command: simulate"));
    assert!(rmse.contains("# config_sha256: "));
    let rows: Vec<&str> = rmse.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,cRCIF,cCIF-t");
    assert_eq!(rows.len(), 51);
    assert!(rows[50].starts_with("50,"));
    for row in &rows[1..] {
        for cell in row.split(',').skip(1) {
            let v: f64 = cell.parse().unwrap();
            assert!(v.is_finite() && v > 0.0);
        }
    }
    let trmse = body(&out.join("trmse.csv"));
    assert_eq!(trmse.lines().count(), 3);
    assert!(out.join("comm.csv").exists());
}

#[test]
fn replay_reproduces_the_simulated_run_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "lambda = 0.25\nruns = 1\nsteps = 20\n");
    let episode = dir.path().join("episode.csv");
    let sim = dir.path().join("sim");
    let rep = dir.path().join("rep");
    rfusion(&[
        "simulate",
        "--config",
        &config,
        "--episode-out",
        episode.to_str().unwrap(),
        "--out",
        sim.to_str().unwrap(),
    ]);
    rfusion(&[
        "replay",
        "--config",
        &config,
        "--episode",
        episode.to_str().unwrap(),
        "--out",
        rep.to_str().unwrap(),
    ]);
    for name in ["rmse.csv", "trmse.csv", "comm.csv"] {
        assert_eq!(body(&sim.join(name)), body(&rep.join(name)), "{name}");
    }
}

#[test]
fn table1_has_three_filters_by_five_rounds() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "runs = 2\nsteps = 5\n");
    let out = dir.path().join("t1");
    rfusion(&[
        "table1",
        "--config",
        &config,
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = body(&out.join("table1.csv"));
    let rows: Vec<Vec<&str>> = text.lines().map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0], ["algorithm", "L=1", "L=2", "L=3", "L=4", "L=5"]);
    let names: Vec<&str> = rows[1..].iter().map(|r| r[0]).collect();
    assert_eq!(names, ["dRCIF-1", "dRCIF-2", "dCIF-t"]);
    assert!(rows[1..].iter().all(|r| r.len() == 6));
}

#[test]
fn sweep_lists_every_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "runs = 2\nsteps = 5\n");
    let out = dir.path().join("sw");
    rfusion(&[
        "sweep",
        "--config",
        &config,
        "--param",
        "alpha",
        "--values",
        "50,500",
        "--algorithms",
        "cRCIF",
        "--out",
        out.to_str().unwrap(),
    ]);
    let text = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert!(text.contains("# sweep: alpha=50,500"));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("alpha,50,cRCIF,"));
    assert!(rows[2].starts_with("alpha,500,cRCIF,"));
}

#[test]
fn bad_config_fails_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), "runs = 2\nalpha = \"big\"\n");
    let out = Command::new(env!("CARGO_BIN_EXE_rfusion"))
        .args(["simulate", "--config", &config, "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("scenario.toml:2:"), "{err}");
}

#[test]
fn algorithm_list_is_respected() {
    let cfg = ScenarioConfig {
        runs: 1,
        steps: 3,
        algorithms: vec![Algorithm::DCifT],
        ..Default::default()
    };
    let r = run_monte_carlo(&cfg).unwrap();
    assert_eq!(r.results.len(), 1);
    assert!(r.get(Algorithm::DCifT).is_some());
    assert!(r.get(Algorithm::CRcif).is_none());
}
