use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn rydpump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rydpump"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_table(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut rdr = csv::Reader::from_path(path).unwrap();
    let header = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows = rdr
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

const SMALL_MCWF: &str = r#"{
  "experiment": "custom",
  "physics": {
    "geometry": "pair", "omega_mhz": 0.01, "omega_g_over_omega_r": 0.5,
    "delta33_mhz": 1.0, "delta34_over_delta33": 0.2, "lifetime_ms": 0.73
  },
  "solver": { "t_final_us": 20000, "dt_us": 25, "sample_every": 40, "n_traj": 40, "seed": 9 }
}"#;

#[test]
fn rates_table_from_preset() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rates.csv");
    let o = rydpump(&["rates", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_table(&out);
    assert_eq!(header[0], "delta33_mhz");
    assert_eq!(rows.len(), 25);
    let col = header.iter().position(|h| h == "p_af").unwrap();
    for r in &rows {
        let p: f64 = r[col].parse().unwrap();
        assert!((0.0..=1.0).contains(&p));
    }
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rates.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["rows"], 25);
    assert!(meta["config"].is_object());
}

#[test]
fn ising_table_marks_degenerate_ground_state() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("ising.csv");
    assert!(rydpump(&["ising", "--out", s(&out)]).status.success());
    let (header, rows) = read_table(&out);
    let deg = header
        .iter()
        .position(|h| h == "ground_degeneracy")
        .unwrap();
    let last = rows.last().unwrap();
    assert_eq!(last[0].parse::<f64>().unwrap(), 0.0);
    assert_eq!(last[deg], "2");
    assert!(rows[..rows.len() - 1].iter().all(|r| r[deg] == "1"));
}

#[test]
fn configuration_errors_exit_with_code_2() {
    let dir = TempDir::new().unwrap();
    let bad = write(
        &dir,
        "bad.json",
        r#"{"experiment": "custom", "physics": {"geometry": "pair"}, "bogus": 1}"#,
    );
    let o = rydpump(&[
        "rates",
        "--config",
        s(&bad),
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    let o = rydpump(&["rates", "--config", s(&dir.path().join("missing.json"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn master_equation_on_triangle_is_a_capacity_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "tri.json",
        r#"{"experiment": "custom",
            "physics": {"geometry": "triangle", "omega_mhz": 0.01, "delta33_mhz": 0.4,
                        "delta34_over_delta33": 0.85, "lifetime_ms": 0.3},
            "solver": {"t_final_us": 100}}"#,
    );
    let o = rydpump(&[
        "master",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("m.csv")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn oversized_step_is_a_numeric_error() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "c.json",
        &SMALL_MCWF.replace("\"dt_us\": 25", "\"dt_us\": 400"),
    );
    let o = rydpump(&[
        "mcwf",
        "--config",
        s(&cfg),
        "--out",
        s(&dir.path().join("m.csv")),
    ]);
    assert_eq!(
        o.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
}

#[test]
fn sidecar_reproduces_run_bitwise() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "c.json", SMALL_MCWF);
    let first = dir.path().join("first.csv");
    assert!(rydpump(&["mcwf", "--config", s(&cfg), "--out", s(&first)])
        .status
        .success());
    let sidecar = dir.path().join("first.csv.meta.json");
    let second = dir.path().join("second.csv");
    let o = rydpump(&[
        "mcwf",
        "--config",
        s(&sidecar),
        "--out",
        s(&second),
        "--jobs",
        "3",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let reseeded = dir.path().join("third.csv");
    assert!(rydpump(&[
        "mcwf",
        "--config",
        s(&cfg),
        "--out",
        s(&reseeded),
        "--seed",
        "10"
    ])
    .status
    .success());
    assert_ne!(fs::read(&first).unwrap(), fs::read(&reseeded).unwrap());
    let meta: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("third.csv.meta.json")).unwrap())
            .unwrap();
    assert_eq!(meta["seed"], 10);
}

#[test]
fn empty_grid_gives_header_only_table() {
    let dir = TempDir::new().unwrap();
    let cfg = write(
        &dir,
        "empty.json",
        r#"{"experiment": "custom",
            "physics": {"geometry": "pair", "omega_mhz": 0.01, "omega_g_over_omega_r": 0.5,
                        "delta34_over_delta33": 0.2, "lifetime_ms": 0.73},
            "sweep": {"delta33_mhz": {"values": []}}}"#,
    );
    let out = dir.path().join("e.csv");
    let o = rydpump(&["rates", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = fs::read_to_string(&out).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with("delta33_mhz,"));
}
