use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn ucem(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ucem"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn infeasible_floor_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let out = ucem(&["solve", "--uc", "500"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("infeasible"), "{err}");
    assert!(err.contains("U_max = 396.35"), "{err}");
}

#[test]
fn bad_flags_exit_with_code_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(
        ucem(&["solve", "--n", "zero"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(
        ucem(&["sweep-energy", "--uc-range", "1:2"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        ucem(&["sweep-energy", "--uc", "219"], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn solve_writes_headed_csv_with_sidecar() {
    let dir = TempDir::new().unwrap();
    let out = ucem(&["solve"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("nodes.csv"));
    assert_eq!(
        header,
        [
            "id",
            "d",
            "group",
            "P_ij",
            "q",
            "S_analytic",
            "x_bits_per_s"
        ]
    );
    assert_eq!(rows.len(), 50);

    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("nodes.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["command"], "solve");
    assert_eq!(meta["nodes"], 50);
    assert_eq!(meta["floors"][0]["rate"], 219.0);

    let sol: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("solution.json")).unwrap())
            .unwrap();
    assert_eq!(sol["status"], "optimal");
    assert!(sol["avg_power_watts"].as_f64().unwrap() > 0.0);
    assert!(dir.path().join("plan.json").exists());
}

#[test]
fn generated_scenario_round_trips_through_solve() {
    let dir = TempDir::new().unwrap();
    assert!(ucem(&["generate", "--n", "8", "--seed", "4"], dir.path())
        .status
        .success());
    let scen = dir.path().join("scenario.json");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(ucem(
        &[
            "solve",
            "--scenario",
            scen.to_str().unwrap(),
            "--uc",
            "-120",
            "--u-prime"
        ],
        &a
    )
    .status
    .success());
    assert!(ucem(
        &[
            "solve",
            "--n",
            "8",
            "--seed",
            "4",
            "--uc",
            "-120",
            "--u-prime"
        ],
        &b
    )
    .status
    .success());
    let qa = read_csv(&a.join("nodes.csv")).1;
    let qb = read_csv(&b.join("nodes.csv")).1;
    assert_eq!(qa, qb);
}

#[test]
fn rates_rows_are_sorted_by_distance() {
    let dir = TempDir::new().unwrap();
    let out = ucem(&["rates", "--slots", "5000"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let (header, rows) = read_csv(&dir.path().join("rates.csv"));
    assert_eq!(header[1], "distance_m");
    let d: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(d.windows(2).all(|w| w[0] <= w[1]));
    assert!(dir.path().join("rates.meta.json").exists());
}

#[test]
fn simulation_is_reproducible_for_a_seed() {
    let dir = TempDir::new().unwrap();
    let args = [
        "simulate",
        "--n",
        "10",
        "--slots",
        "4000",
        "--model",
        "sinr",
        "--sim-seed",
        "9",
        "--uc",
        "60",
    ];
    assert!(ucem(&args, &dir.path().join("a")).status.success());
    assert!(ucem(&args, &dir.path().join("b")).status.success());
    for f in ["throughput_sinr.csv", "lifetime_nodes.csv"] {
        let a = fs::read(dir.path().join("a").join(f)).unwrap();
        let b = fs::read(dir.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f}");
    }
    assert!(!dir.path().join("a/throughput_capture.csv").exists());
}

#[test]
fn energy_sweep_reports_every_floor() {
    let dir = TempDir::new().unwrap();
    let out = ucem(&["sweep-energy", "--uc-range", "150:300:4"], dir.path());
    assert!(out.status.success());
    let (header, rows) = read_csv(&dir.path().join("energy.csv"));
    assert_eq!(header[0], "U_c");
    assert_eq!(rows.len(), 4);
    for r in rows {
        let opt: f64 = r[2].parse().unwrap();
        let uni: f64 = r[3].parse().unwrap();
        assert!(opt < uni);
    }
}
