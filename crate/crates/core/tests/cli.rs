use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vanet-offload"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_csv(path: &Path) -> Vec<csv::StringRecord> {
    let mut r = csv::Reader::from_path(path).unwrap();
    r.records().map(Result::unwrap).collect()
}

#[test]
fn forced_local_single_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = run(&["run", "--experiment", "single-run", "--set", "forced_modes=[0]", "--out", out]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("results.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][1], "forced");
    let total: f64 = rows[0][6].parse().unwrap();
    assert!((total - 8.40125).abs() < 1e-9, "{total}");
    let decisions = read_csv(&dir.path().join("decisions.csv"));
    assert_eq!(&decisions[0][2], "0");
}

#[test]
fn config_file_with_header_comment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(
        &cfg,
        "# single vehicle, 50 Mbit\n{\"experiment\": \"single-run\", \"scenario\": {\"data_bits\": 5e7}, \"algorithms\": [\"tm\"]}\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let decisions = read_csv(&out.join("decisions.csv"));
    // A sole 50 Mbit task leaves coverage and returns via V2V migration.
    assert_eq!(&decisions[0][2], "3");
    assert_eq!(&decisions[0][7], "8");
}

#[test]
fn malformed_config_names_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"params": {"v2i_comm": {"bandwith": 1e7}}}"#).unwrap();
    let o = run(&["validate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bandwith"), "{}", stderr(&o));

    std::fs::write(&cfg, "{ not json").unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let o = run(&["validate", "--config", "/nonexistent/run.json"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("/nonexistent/run.json"));
}

#[test]
fn validate_prints_defaults() {
    let o = run(&["validate"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# units"));
    for needle in ["\"delta\": 3055.0", "\"f_mec\": 5000000000.0", "\"speed\": 30.0", "\"theta\": 4.0"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn validate_rejects_power_above_cap() {
    let o = run(&["validate", "--set", "params.v2i_comm.power=0.41"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("C2"), "{}", stderr(&o));
}

#[test]
fn validate_converts_kmh() {
    let o = run(&["validate", "--set", "params.speed_kmh=108"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("\"speed\": 30.0"));
}

#[test]
fn unknown_experiment_and_bad_flags() {
    assert_eq!(run(&["run", "--experiment", "fig9"]).status.code(), Some(1));
    assert_eq!(run(&["run", "--seed", "minus-one"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn oracle_check_reports_each_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--experiment", "oracle-check", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut r = csv::Reader::from_path(dir.path().join("oracle.csv")).unwrap();
    let header: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    for col in ["seed", "M", "tm_overhead", "como_overhead", "optimum_overhead", "ne_verified"] {
        assert!(header.iter().any(|h| h == col), "missing column {col}");
    }
    let rows: Vec<_> = r.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 50);
    for row in &rows {
        assert_eq!(&row[1], "4");
        assert_eq!(&row[9], "true");
        let opt: f64 = row[4].parse().unwrap();
        let como: f64 = row[3].parse().unwrap();
        assert!(como >= opt * (1.0 - 1e-12));
    }
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("como_optimal_fraction="));
}

#[test]
fn sweep_cap_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--experiment", "convergence", "--max-sweeps", "1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(dir.path().join("trace.csv").exists());
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn convergence_trace_starts_all_local() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["run", "--experiment", "convergence", "--set", "algorithm=\"como\"", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_csv(&dir.path().join("trace.csv"));
    assert_eq!(&rows[0][0], "0");
    let values: Vec<f64> = rows.iter().map(|r| r[4].parse().unwrap()).collect();
    assert!(values.windows(2).all(|w| w[1] < w[0]));
    let manifest = std::fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
    assert!(manifest.contains("evaluations="));
}

#[test]
fn csv_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &Path| {
        vec![
            "run".to_string(),
            "--experiment".into(),
            "sweep-vehicles".into(),
            "--set".into(),
            "vehicle_counts=[4,8]".into(),
            "--set".into(),
            "replications=2".into(),
            "--seed".into(),
            "3".into(),
            "--out".into(),
            out.to_str().unwrap().into(),
        ]
    };
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(bin().args(args(&a)).status().unwrap().code(), Some(0));
    assert_eq!(bin().args(args(&b)).status().unwrap().code(), Some(0));
    assert_eq!(std::fs::read(a.join("results.csv")).unwrap(), std::fs::read(b.join("results.csv")).unwrap());
    let rows = read_csv(&a.join("results.csv"));
    // 2 sizes x (2 seeds + 1 mean) x 3 algorithms.
    assert_eq!(rows.len(), 18);
}
