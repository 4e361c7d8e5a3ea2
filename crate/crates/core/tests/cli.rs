use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_lindblad-ep");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("LINDBLAD_EP_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn records(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn complex_list(v: &Value) -> Vec<(f64, f64)> {
    v.as_array()
        .unwrap()
        .iter()
        .map(|z| (z["re"].as_f64().unwrap(), z["im"].as_f64().unwrap()))
        .collect()
}

#[test]
fn spectrum_without_loss_is_real() {
    let out = run(&["spectrum", "--delta", "1", "--d", "1", "--gamma", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let mut z = complex_list(&report["eigenvalues"]);
    z.sort_by(|a, b| a.0.total_cmp(&b.0));
    let w = 2f64.sqrt();
    let expected = [(-w, 0.0), (0.0, 0.0), (0.0, 0.0), (w, 0.0)];
    for (got, want) in z.iter().zip(expected) {
        assert!((got.0 - want.0).abs() < 1e-12 && (got.1 - want.1).abs() < 1e-12);
    }
    assert_eq!(complex_list(&report["eigenvalues_numeric"]).len(), 4);
    assert!(report["biorthogonality"].is_null() || report["biorthogonality"].is_array());
}

#[test]
fn spectrum_at_seven_digit_ep3() {
    let out = run(&[
        "spectrum",
        "--delta",
        "1",
        "--d",
        "2.828427",
        "--gamma",
        "10.392305",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["region"], "ep3");
    let z = complex_list(&report["eigenvalues"]);
    let target = -4.0 * 3f64.sqrt();
    for &(re, im) in &z[1..] {
        assert!(
            re.abs() < 0.02 && (im - target).abs() < 0.02,
            "({re}, {im})"
        );
    }
}

#[test]
fn spectrum_at_generic_point_reports_biorthogonality() {
    let out = run(&["spectrum", "--delta", "1", "--d", "2", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["region"], "split_pair");
    assert!(report["biorthogonality_defect"].as_f64().unwrap() < 1e-8);
    assert!(report["oracle_distance"].as_f64().unwrap() < 1e-10);
    assert_eq!(report["failures"].as_array().unwrap().len(), 0);
}

#[test]
fn spectrum_rejects_zero_detuning() {
    let out = run(&["spectrum", "--delta", "0", "--d", "1", "--gamma", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("δ"), "{}", stderr(&out));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&[]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--gamma", "-1"]).status.code(), Some(2));
    assert_eq!(run(&["spectrum", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(run(&["phase-diagram", "--nd", "0"]).status.code(), Some(2));
    assert_eq!(
        run(&["phase-diagram", "--workers", "0"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["evolve", "--dt", "0"]).status.code(), Some(2));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn phase_diagram_layout_and_structure() {
    let out = run(&["phase-diagram", "--nd", "61", "--ngamma", "81"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("d_tilde,gamma_tilde,disc,region,ordering\n"));
    let (_, rows) = records(&text);
    assert_eq!(rows.len(), 61 * 81);
    // d̃ is the outer index.
    assert_eq!(num(&rows[0][0]), 0.0);
    assert_eq!(num(&rows[80][1]), 16.0);
    assert_eq!(num(&rows[81][0]), 0.1);
    assert_eq!(num(&rows[81][1]), 0.0);

    let mut imaginary = 0;
    for row in &rows {
        if row[3] == "all_imaginary" {
            imaginary += 1;
            assert!(num(&row[0]) > 2.0 * 2f64.sqrt());
            assert!(num(&row[2]) < 0.0);
        }
        assert!([
            "split_pair",
            "all_imaginary",
            "ep2_plus",
            "ep2_minus",
            "ep3"
        ]
        .contains(&row[3].as_str()));
    }
    assert!(imaginary > 0);
}

#[test]
fn phase_diagram_is_deterministic_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let c = dir.path().join("c.json");
    let args = |p: &Path| {
        vec![
            "phase-diagram".to_string(),
            "--out".into(),
            p.display().to_string(),
        ]
    };
    let out = run(&args(&a).iter().map(String::as_str).collect::<Vec<_>>());
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(BIN)
        .args(args(&b))
        .env("LINDBLAD_EP_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let c_str = c.display().to_string();
    let out = run(&[
        "phase-diagram",
        "--nd",
        "5",
        "--ngamma",
        "5",
        "--format",
        "json",
        "--out",
        &c_str,
    ]);
    assert_eq!(out.status.code(), Some(0));
    let json: Value = serde_json::from_slice(&std::fs::read(&c).unwrap()).unwrap();
    assert_eq!(json.as_array().unwrap().len(), 25);
    assert_eq!(json[0]["region"], "split_pair");
}

#[test]
fn ep_curve_values() {
    let out = run(&["ep-curve"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = records(&stdout(&out));
    assert_eq!(
        header,
        [
            "d_tilde",
            "gamma_minus",
            "gamma_plus",
            "im_z_minus",
            "im_z_plus",
            "disc_minus",
            "disc_plus"
        ]
    );
    assert_eq!(rows.len(), 200);
    let first = &rows[0];
    let g3 = 6.0 * 3f64.sqrt();
    assert!((num(&first[1]) - g3).abs() < 1e-8);
    assert!((num(&first[2]) - g3).abs() < 1e-8);
    for row in &rows {
        assert!(num(&row[5]) < 1e-10 && num(&row[6]) < 1e-10);
        assert!(num(&row[1]) <= num(&row[2]));
    }

    let out = run(&["ep-curve", "--d-min", "3", "--d-max", "3", "--nd", "1"]);
    let (_, rows) = records(&stdout(&out));
    assert!((num(&rows[0][1]) - 11.18034).abs() < 1e-5);
    assert!((num(&rows[0][2]) - 11.31371).abs() < 1e-5);
}

#[test]
fn ep_curve_below_merge_point_is_a_domain_error() {
    let out = run(&["ep-curve", "--d-min", "2.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("2√2"));
}

#[test]
fn ep3_constants() {
    let out = run(&["ep3"]);
    assert_eq!(out.status.code(), Some(0));
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["d"].as_f64().unwrap() - 2.0 * 2f64.sqrt()).abs() < 1e-15);
    assert!((report["gamma"].as_f64().unwrap() - 6.0 * 3f64.sqrt()).abs() < 1e-14);
    assert!((report["eigenvalue"]["im"].as_f64().unwrap() + 4.0 * 3f64.sqrt()).abs() < 1e-14);
    assert!(report["d_error"].as_f64().unwrap() < 1e-6);
    assert!(report["gamma_error"].as_f64().unwrap() < 1e-6);

    let out = run(&["ep3", "--delta", "2"]);
    let report: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!((report["eigenvalue"]["im"].as_f64().unwrap() + 8.0 * 3f64.sqrt()).abs() < 1e-13);
}

#[test]
fn evolve_decay_matches_exponential() {
    let out = run(&[
        "evolve", "--d", "0", "--gamma", "0.5", "--rho0", "excited", "--t-max", "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let (header, rows) = records(&stdout(&out));
    assert_eq!(
        header,
        [
            "t",
            "re_ee",
            "re_gg",
            "re_eg",
            "im_eg",
            "trace_dev",
            "dist_eq"
        ]
    );
    assert_eq!(rows.len(), 1001);
    for row in &rows {
        let t = num(&row[0]);
        assert!((num(&row[1]) - (-0.5 * t).exp()).abs() < 1e-7);
        assert!(num(&row[5]) < 1e-10);
    }
    assert_eq!(num(&rows[1000][0]), 10.0);
}

#[test]
fn evolve_reaches_equilibrium_and_reports_it() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let path_str = path.display().to_string();
    for rho0 in ["excited", "ground", "mixed", "coherent"] {
        let out = run(&[
            "evolve", "--delta", "1", "--d", "2", "--gamma", "1", "--t-max", "40", "--rho0", rho0,
            "--out", &path_str,
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        let line = stdout(&out);
        let value: f64 = line.trim().rsplit(' ').next().unwrap().parse().unwrap();
        assert!(value < 1e-6, "{rho0}: {line}");
        let (_, rows) = records(&std::fs::read_to_string(&path).unwrap());
        assert!(num(&rows.last().unwrap()[6]) < 1e-6);
    }
}

#[test]
fn evolve_json_output() {
    let out = run(&["evolve", "--t-max", "1", "--dt", "0.01", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(rows.as_array().unwrap().len(), 101);
    assert_eq!(rows[0]["re_ee"], 1.0);
}

#[test]
fn evolve_with_unstable_step_exits_3() {
    let out = run(&[
        "evolve", "--d", "50", "--gamma", "400", "--dt", "0.5", "--t-max", "100",
    ]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("reduce dt"));
}

#[test]
fn output_is_byte_identical_between_runs() {
    let a = run(&["evolve", "--t-max", "5", "--rho0", "coherent"]);
    let b = run(&["evolve", "--t-max", "5", "--rho0", "coherent"]);
    assert_eq!(a.stdout, b.stdout);
    let a = run(&["ep-curve", "--nd", "17"]);
    let b = run(&["ep-curve", "--nd", "17"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn verify_frame_passes() {
    let out = run(&["verify-frame"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).contains("measured order"));
    let out = run(&["verify-frame", "--tol", "-1"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["verify-frame", "--dt", "0.1", "--tol", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_ep3_prints_constants() {
    let out = run(&["verify", "--checks", "ep3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert!(text.contains("d_tilde=2.82842712"));
    assert!(text.contains("gamma_tilde=10.39230485"));
    assert!(text.contains("z=-6.92820323i"));
}

#[test]
fn verify_runs_everything_by_default() {
    let out = run(&["verify"]);
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    let text = stdout(&out);
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 9);
    assert!(text.contains("9 of 9 checks passed"));
}

#[test]
fn verify_rejects_bad_flags() {
    assert_eq!(run(&["verify", "--tol-scale", "-1"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", "--checks", "nonsense"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_fails_with_impossible_tolerances() {
    let out = run(&["verify", "--checks", "frame", "--tol-scale", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).starts_with("FAIL"));
}
