use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gcf_core::diagnostics::roundness;
use gcf_core::geometry::snapshot::{read_snapshot, write_snapshot};
use gcf_core::{AxisymBody, ConvexBody, CurveBody};
use tempfile::TempDir;

fn gcf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcf"))
        .args(args)
        .env("GCF_LOG", "off")
        .output()
        .expect("spawn gcf")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, json: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, json).unwrap();
    p
}

fn path_str(p: &Path) -> String {
    p.to_str().unwrap().replace('\\', "/")
}

/// Rows of a CSV file as maps from header to field.
fn read_csv(path: &Path) -> Vec<std::collections::HashMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().clone();
    r.records()
        .map(|rec| {
            let rec = rec.unwrap();
            header.iter().map(String::from).zip(rec.iter().map(String::from)).collect()
        })
        .collect()
}

fn num(row: &std::collections::HashMap<String, String>, key: &str) -> f64 {
    row[key].parse().unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

#[test]
fn flow_on_the_circle_keeps_it_round() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.csv");
    let snap = dir.path().join("final_{step}.csv");
    let cfg = write_config(
        dir.path(),
        "sphere.json",
        &format!(
            r#"{{"config_version": 1, "backend": "curve", "n_grid": 64, "alpha": 1.0,
               "initial": {{"kind": "sphere"}},
               "flow": {{"max_steps": 100}},
               "outputs": {{"records_path": "{}", "snapshot_path": "{}"}}}}"#,
            path_str(&records),
            path_str(&snap)
        ),
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&records);
    assert_eq!(rows.len(), 100);
    let last = rows.last().unwrap();
    assert!(num(last, "h_max") - num(last, "h_min") <= 1e-12);
    assert_eq!(last["cubic_norm"], "");
    let body: CurveBody = read_snapshot(fs::File::open(dir.path().join("final_100.csv")).unwrap()).unwrap();
    assert_eq!(body.len(), 64);
}

#[test]
fn flow_rounds_an_ellipse() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.csv");
    let cfg = write_config(
        dir.path(),
        "ellipse.json",
        &format!(
            r#"{{"config_version": 1, "backend": "curve", "n_grid": 128, "alpha": 1.0,
               "initial": {{"kind": "ellipsoid", "semi_axes": [1.5, 0.6666666666666666]}},
               "flow": {{"max_steps": 200000, "emit_every": 100, "stop": {{"roundness": 1.01}}}},
               "outputs": {{"records_path": "{}"}}}}"#,
            path_str(&records)
        ),
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&records);
    assert!(num(rows.last().unwrap(), "roundness") <= 1.01);
}

#[test]
fn flow_takes_a_perturbed_spheroid_to_an_ellipsoid() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "axisym.json",
        r#"{"config_version": 1, "backend": "axisym", "n_grid": 128, "alpha": 0.25,
           "initial": {"kind": "perturbed", "semi_axes": [1.1, 0.8264462809917354],
                       "modes": [{"k": 3, "amplitude": 0.05}]},
           "flow": {"max_steps": 100000, "emit_every": 50, "stop": {"ellipsoid_fit": 1e-3}}}"#,
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn flow_without_meeting_its_stop_rule_exits_3() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("r.csv");
    let cfg = write_config(
        dir.path(),
        "short.json",
        &format!(
            r#"{{"config_version": 1, "backend": "curve", "n_grid": 64, "alpha": 1.0,
               "initial": {{"kind": "ellipsoid", "semi_axes": [2.0, 0.5]}},
               "flow": {{"max_steps": 5, "stop": {{"roundness": 1.0001}}}},
               "outputs": {{"records_path": "{}"}}}}"#,
            path_str(&records)
        ),
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(stderr(&out).contains("max_steps"));
    // Partial output is kept.
    assert_eq!(read_csv(&records).len(), 5);
}

#[test]
fn soliton_from_a_perturbed_circle_is_round() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.csv");
    let snap = dir.path().join("solution.csv");
    let cfg = write_config(
        dir.path(),
        "soliton.json",
        &format!(
            r#"{{"config_version": 1, "backend": "curve", "n_grid": 128, "alpha": 1.0,
               "initial": {{"kind": "perturbed", "modes": [{{"k": 2, "amplitude": 0.05}}, {{"k": 3, "amplitude": 0.03}}]}},
               "outputs": {{"report_path": "{}", "snapshot_path": "{}"}}}}"#,
            path_str(&report),
            path_str(&snap)
        ),
    );
    let out = gcf(&["soliton", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let body: CurveBody = read_snapshot(fs::File::open(&snap).unwrap()).unwrap();
    assert!(roundness(&body) - 1.0 <= 1e-6);
    let rows = read_csv(&report);
    assert_eq!(rows[0]["iter"], "0");
    assert!(num(rows.last().unwrap(), "residual_maxnorm") <= 1e-10);
}

#[test]
fn soliton_out_of_iterations_exits_3_with_report() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("report.csv");
    let cfg = write_config(
        dir.path(),
        "soliton.json",
        &format!(
            r#"{{"config_version": 1, "backend": "curve", "n_grid": 64, "alpha": 1.0,
               "initial": {{"kind": "perturbed", "modes": [{{"k": 2, "amplitude": 0.1}}]}},
               "soliton": {{"max_iters": 1, "tol": 1e-14}},
               "outputs": {{"report_path": "{}"}}}}"#,
            path_str(&report)
        ),
    );
    let out = gcf(&["soliton", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    assert!(!read_csv(&report).is_empty());
}

#[test]
fn diagnose_unit_sphere() {
    let dir = TempDir::new().unwrap();
    let snap = dir.path().join("sphere.csv");
    write_snapshot(&AxisymBody::sphere(64, 1.0).unwrap(), fs::File::create(&snap).unwrap()).unwrap();
    let report = dir.path().join("q.csv");
    let out = gcf(&[
        "diagnose",
        snap.to_str().unwrap(),
        "--alpha",
        "1",
        "--backend",
        "axisym",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&report);
    let z = rows.iter().find(|r| r["quantity"] == "Z").unwrap();
    for key in ["min", "max", "mean"] {
        assert!((num(z, key) - 1.5).abs() < 1e-12, "{key}");
    }

    // Without --out the report goes to stdout.
    let out = gcf(&["diagnose", snap.to_str().unwrap(), "--alpha", "1", "--backend", "axisym"]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8(out.stdout).unwrap().starts_with("quantity,min,max,mean\n"));
}

#[test]
fn diagnose_rejects_a_snapshot_of_the_other_backend() {
    let dir = TempDir::new().unwrap();
    let snap = dir.path().join("circle.csv");
    write_snapshot(&CurveBody::circle(64, 1.0).unwrap(), fs::File::create(&snap).unwrap()).unwrap();
    let out = gcf(&["diagnose", snap.to_str().unwrap(), "--alpha", "1", "--backend", "axisym"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("grid"), "{}", stderr(&out));
}

#[test]
fn lemma_q_finds_no_violation() {
    let dir = TempDir::new().unwrap();
    let report = dir.path().join("lemma.csv");
    let out = gcf(&[
        "lemma-q",
        "--n",
        "2",
        "--alpha",
        "0.25,0.3,0.5",
        "--trials",
        "1e5",
        "--seed",
        "7",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&report);
    assert_eq!(rows.len(), 3);
    for (row, alpha) in rows.iter().zip([0.25, 0.3, 0.5]) {
        assert_eq!(row["n"], "2");
        assert_eq!(row["trials"], "100000");
        assert!((num(row, "alpha") - alpha).abs() < 1e-15);
        assert!(num(row, "min_q") >= -1e-9 * num(row, "scale"));
        assert!(row.contains_key("argmin_lambda_2") && row.contains_key("argmin_sigma_2"));
    }
}

#[test]
fn lemma_q_rejects_alpha_outside_the_range() {
    let out = gcf(&["lemma-q", "--n", "2", "--alpha", "0.2", "--trials", "10", "--seed", "1"]);
    assert_eq!(code(&out), 1);
    assert!(!stderr(&out).is_empty());
}

#[test]
fn config_errors_exit_1_and_name_the_problem() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad.json",
        "{\"config_version\": 1,\n \"backend\": \"curve\",\n \"n_grid\": 64,\n \"alpha\": 1.0,\n \"initial\": {\"kind\": \"cube\"}}",
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("line 5"), "{}", stderr(&out));

    let cfg = write_config(
        dir.path(),
        "bad2.json",
        r#"{"config_version": 1, "backend": "curve", "n_grid": 64, "alpha": 1.0,
           "initial": {"kind": "sphere"}, "flow": {"dt_safety": 3.0}}"#,
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("`flow`"), "{}", stderr(&out));

    let out = gcf(&["flow", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    let out = gcf(&["frobnicate"]);
    assert_eq!(code(&out), 1);
}

/// Flow with periodic snapshots: diagnosing a snapshot reproduces the
/// record row of the same step.
#[test]
fn snapshot_round_trip_matches_records() {
    let dir = TempDir::new().unwrap();
    let records = dir.path().join("records.csv");
    let snap = dir.path().join("snap_{step}.csv");
    let cfg = write_config(
        dir.path(),
        "rt.json",
        &format!(
            r#"{{"config_version": 1, "backend": "axisym", "n_grid": 64, "alpha": 0.5,
               "initial": {{"kind": "perturbed", "semi_axes": [1.2, 0.8], "modes": [{{"k": 2, "amplitude": 0.03}}]}},
               "flow": {{"max_steps": 30}},
               "outputs": {{"records_path": "{}", "snapshot_path": "{}", "snapshot_every": 10}}}}"#,
            path_str(&records),
            path_str(&snap)
        ),
    );
    let out = gcf(&["flow", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_csv(&records);
    for step in [10, 20, 30] {
        let snap = dir.path().join(format!("snap_{step}.csv"));
        let report = dir.path().join(format!("q_{step}.csv"));
        let out = gcf(&[
            "diagnose",
            snap.to_str().unwrap(),
            "--alpha",
            "0.5",
            "--backend",
            "axisym",
            "--out",
            report.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
        let q = read_csv(&report);
        let get = |name: &str, col: &str| num(q.iter().find(|r| r["quantity"] == name).unwrap(), col);
        let rec = rows.iter().find(|r| r["step"] == step.to_string()).unwrap();
        let pairs = [
            ("volume", get("volume", "mean")),
            ("h_min", get("h", "min")),
            ("h_max", get("h", "max")),
            ("roundness", get("roundness", "mean")),
            ("soliton_residual", get("soliton_residual", "max").max(-get("soliton_residual", "min"))),
            ("Z_min", get("Z", "min")),
            ("Z_max", get("Z", "max")),
            ("W_max", get("W", "max")),
            ("entropy", get("entropy", "mean")),
            ("cubic_norm", get("cubic_norm", "max")),
        ];
        for (key, value) in pairs {
            let want = num(rec, key);
            assert!(
                (value - want).abs() <= 1e-12 * (1.0 + want.abs()),
                "step {step} {key}: {value} vs {want}"
            );
        }
    }
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let run = |tag: &str| -> Vec<Vec<u8>> {
        let dir = TempDir::new().unwrap();
        let records = dir.path().join("records.csv");
        let snap = dir.path().join("snap_{step}.csv");
        let cfg = write_config(
            dir.path(),
            &format!("{tag}.json"),
            &format!(
                r#"{{"config_version": 1, "backend": "curve", "n_grid": 64, "alpha": 0.7,
                   "initial": {{"kind": "perturbed", "random_modes": {{"max_k": 5, "max_amplitude": 0.1}}}},
                   "flow": {{"max_steps": 40}},
                   "outputs": {{"records_path": "{}", "snapshot_path": "{}", "snapshot_every": 20}},
                   "seed": 11}}"#,
                path_str(&records),
                path_str(&snap)
            ),
        );
        assert_eq!(code(&gcf(&["flow", cfg.to_str().unwrap()])), 0);
        let lemma = dir.path().join("lemma.csv");
        let out = gcf(&[
            "lemma-q", "--n", "3", "--alpha", "0.2,0.4", "--trials", "20000", "--seed", "5", "--out",
            lemma.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        [records, dir.path().join("snap_40.csv"), lemma]
            .iter()
            .map(|p| fs::read(p).unwrap())
            .collect()
    };
    assert_eq!(run("a"), run("b"));
}
