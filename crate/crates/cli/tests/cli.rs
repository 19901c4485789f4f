use nested_tess::dynamics::read_jsonl;
use std::f64::consts::PI;
use std::io::BufReader;
use std::process::{Command, Output};

fn tessellate(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tessellate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_value(csv: &str, key: &str, col: usize) -> f64 {
    csv.lines()
        .map(|l| l.split(',').collect::<Vec<_>>())
        .find(|f| f.contains(&key))
        .unwrap_or_else(|| panic!("no row {key}"))[col]
        .parse()
        .unwrap()
}

#[test]
fn zero_horizon_gives_empty_tessellation() {
    let o = tessellate(&["simulate", "--dim", "2", "--t", "0"]);
    assert!(o.status.success());
    let (header, maximal) = read_jsonl(BufReader::new(&o.stdout[..])).unwrap();
    assert_eq!(header.maximal_polytopes, 0);
    assert!(maximal.is_empty());
}

#[test]
fn same_seed_same_bytes() {
    for args in [
        &["simulate", "--t", "1", "--seed", "5"][..],
        &["simulate", "--dim", "3", "--t", "1", "--seed", "5"][..],
        &["stats", "--reps", "6", "--seed", "2"][..],
    ] {
        let a = tessellate(args);
        let b = tessellate(args);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn simulate_writes_files() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("y.jsonl");
    let svg = dir.path().join("y.svg");
    let o = tessellate(&[
        "simulate",
        "--t",
        "0.5",
        "--out",
        jsonl.to_str().unwrap(),
        "--svg",
        svg.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let (header, maximal) =
        read_jsonl(BufReader::new(std::fs::File::open(&jsonl).unwrap())).unwrap();
    assert_eq!(header.maximal_polytopes, maximal.len());
    assert!(std::fs::read_to_string(&svg).unwrap().starts_with("<svg"));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 2);
}

#[test]
fn planar_suite_passes() {
    let o = tessellate(&["validate", "--suite", "planar", "--seed", "7"]);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    let csv = stdout(&o);
    assert!(csv.starts_with("suite,quantity,estimate,half_width,target,rule,pass"));
    for q in ["L_A", "lambda_V", "L_I", "p", "mu_VE", "nu0_C"] {
        assert!(
            csv.lines()
                .any(|l| l.starts_with(&format!("planar,{q},")) && l.ends_with(",pass")),
            "{q}"
        );
    }
}

#[test]
fn failing_suite_exits_one() {
    // A single replication cannot resolve these quantities to a few percent.
    let o = tessellate(&["validate", "--suite", "stit", "--seed", "1", "--reps", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains(",fail"));
}

#[test]
fn zeta_constants_in_space() {
    let o = tessellate(&["zeta", "--isotropic", "--dim", "3", "-n", "1000000"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    let (z2, se2) = (csv_value(&csv, "zeta2", 1), csv_value(&csv, "zeta2", 2));
    let (z3, se3) = (csv_value(&csv, "zeta3", 1), csv_value(&csv, "zeta3", 2));
    assert!((z2 - PI / 4.0).abs() < 3.0 * se2);
    assert!((z3 - PI / 8.0).abs() < 3.0 * se3);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"schema\": 1,\n \"horizon\": 2}").unwrap();
    let o = tessellate(&["stats", "--config", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("horizon") && err.contains("line 2"), "{err}");
    std::fs::write(&bad, r#"{"schema": 1, "kernel": {"kernel": "erosion"}}"#).unwrap();
    assert_eq!(
        tessellate(&["simulate", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        tessellate(&["simulate", "--t", "-1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        tessellate(&["simulate", "--dim", "4"]).status.code(),
        Some(2)
    );
    assert_eq!(tessellate(&["zeta", "-n", "10"]).status.code(), Some(2));
    assert_eq!(
        tessellate(&["validate", "--suite", "nope"]).status.code(),
        Some(2)
    );
}

#[test]
fn config_file_drives_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let out = dir.path().join("stats.csv");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"schema": 1, "window": {{"type": "cube", "side": 20}}, "t": 1, "seed": 4, "replications": 3,
                "kernel": {{"kernel": "apportionment", "law": "beta", "a": 4}}, "clearance": 4,
                "outputs": {{"csv": {:?}}}}}"#,
            out
        ),
    )
    .unwrap();
    let o = tessellate(&["stats", "--config", cfg.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(&out).unwrap();
    // Not STIT, so no targets are attached.
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",,")));
    assert_eq!(csv_value(&csv, "mu_VE", 1), 3.0);
}

#[test]
fn failed_write_leaves_nothing_behind() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("y.jsonl");
    let o = tessellate(&["simulate", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
}

#[test]
fn typical_cell_ensembles() {
    for source in ["csd", "population", "census"] {
        let o = tessellate(&[
            "typical-cell",
            "--source",
            source,
            "--samples",
            "50",
            "--burn-in",
            "200",
            "--thin",
            "2",
            "--particles",
            "20",
            "--reps",
            "2",
        ]);
        assert!(o.status.success(), "{source}");
        let text = stdout(&o);
        assert!(text.lines().count() >= 20, "{source}");
        for line in text.lines() {
            let v: serde_json::Value = serde_json::from_str(line).unwrap();
            assert!(v["lambda_mass"].as_f64().unwrap() > 0.0);
            assert!(v["provenance"].is_string());
        }
    }
}
