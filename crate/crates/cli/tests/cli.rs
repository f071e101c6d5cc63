//! End-to-end runs of the `trimer` binary.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn trimer(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trimer"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn peak_positions(sidecar: &Value) -> Vec<f64> {
    sidecar["peaks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["position"].as_f64().unwrap())
        .collect()
}

#[test]
fn eig_writes_six_rows_per_grid_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eig.csv");
    let out = trimer(&[
        "eig",
        "--gamma",
        "1",
        "--delta",
        "2",
        "--j",
        "0.5",
        "--omega",
        "1.5:2.5:401",
        "-o",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("omega,branch,re_lambda,im_lambda,stable"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 6 * 401);
    assert!(rows.iter().all(|r| r.len() == 5));

    // At Ω = 2 the branches pair up at −iγ/2 ± 1/2: two defective clusters.
    let at_ep: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r[0].parse::<f64>().unwrap() == 2.0)
        .map(|r| (r[2].parse().unwrap(), r[3].parse().unwrap()))
        .collect();
    assert_eq!(at_ep.len(), 6);
    for centre in [-0.5, 0.5] {
        let n = at_ep
            .iter()
            .filter(|(re, im)| (re - centre).abs() < 1e-6 && (im + 0.5).abs() < 1e-6)
            .count();
        assert_eq!(n, 2, "cluster at {centre}: {at_ep:?}");
    }

    let sidecar = read_json(&dir.path().join("eig.json"));
    assert_eq!(sidecar["ep_drives"]["ep1"].as_f64(), Some(2.0));
}

#[test]
fn eig_decoupled_chain_has_four_zero_branches() {
    let out = trimer(&["eig", "--j", "0", "--omega", "0:1:3"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for w in ["0.0", "0.5", "1.0"] {
        let zeros = text
            .lines()
            .skip(1)
            .filter(|l| l.starts_with(&format!("{w},")))
            .filter(|l| {
                let f: Vec<f64> = l.split(',').skip(2).take(2).map(|x| x.parse().unwrap()).collect();
                f[0].abs() < 1e-12 && f[1].abs() < 1e-12
            })
            .count();
        assert_eq!(zeros, 4, "omega {w}");
    }
}

#[test]
fn output_is_deterministic() {
    let a = trimer(&["spectrum", "--j", "0.3", "--w", "-2:2:301"]);
    let b = trimer(&["spectrum", "--j", "0.3", "--w", "-2:2:301"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let a = trimer(&["eig", "--omega", "0:3:50"]);
    let b = trimer(&["eig", "--omega", "0:3:50"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn spectrum_doublet_at_exceptional_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = trimer(&[
        "spectrum",
        "--gamma",
        "1",
        "--delta",
        "2",
        "--j",
        "0.5",
        "--omega-drive",
        "2",
        "--w",
        "-3:3:2001",
        "-o",
        path_str(&csv),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("omega,s_value\n"));
    assert_eq!(text.lines().count(), 2002);
    let sidecar = read_json(&dir.path().join("s.json"));
    let peaks = peak_positions(&sidecar);
    assert_eq!(peaks.len(), 2);
    assert!(
        (peaks[0] + 1.0 / SQRT_2).abs() < 1e-4 && (peaks[1] - 1.0 / SQRT_2).abs() < 1e-4,
        "{peaks:?}"
    );
    let markers: Vec<f64> = sidecar["markers"]
        .as_array()
        .unwrap()
        .iter()
        .map(|m| m.as_f64().unwrap())
        .collect();
    assert_eq!(markers, vec![-0.5 * SQRT_2, 0.5 * SQRT_2]);
}

#[test]
fn spectrum_singlet_without_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let sidecar = dir.path().join("peaks.json");
    let out = trimer(&[
        "spectrum",
        "--j",
        "0",
        "--omega-drive",
        "2",
        "--method",
        "ep",
        "-o",
        path_str(&csv),
        "--sidecar",
        path_str(&sidecar),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&sidecar);
    assert_eq!(report["method"], "ep_closed_form");
    let peaks = report["peaks"].as_array().unwrap();
    assert_eq!(peaks.len(), 1);
    assert!(peaks[0]["position"].as_f64().unwrap().abs() < 1e-12);
    assert!((peaks[0]["height"].as_f64().unwrap() - 2.0 / PI).abs() < 1e-12);
    assert!(report["markers"].as_array().unwrap().is_empty());
}

#[test]
fn spectrum_quadruplet_below_exceptional_point() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let out = trimer(&["spectrum", "--omega-drive", "1", "--j", "0.5", "-o", path_str(&csv)]);
    assert_eq!(code(&out), 0);
    assert_eq!(peak_positions(&read_json(&dir.path().join("s.json"))).len(), 4);
}

#[test]
fn spectrum_methods_agree() {
    let base = ["spectrum", "--j", "0.3", "--omega-drive", "1.2", "--w", "-3:3:121"];
    let parse = |o: Output| -> Vec<f64> {
        String::from_utf8(o.stdout)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
            .collect()
    };
    let closed = parse(trimer(&base));
    for method in ["lorentzian", "fourier"] {
        let other = parse(trimer(&[&base[..], &["--method", method]].concat()));
        let d = closed
            .iter()
            .zip(&other)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(d < 1e-3, "{method}: {d}");
    }
}

#[test]
fn spectrum_exit_codes() {
    assert_eq!(code(&trimer(&["spectrum", "--omega-drive", "3"])), 4);
    assert_eq!(code(&trimer(&["spectrum", "--w", "-3:3:1"])), 2);
    assert_eq!(code(&trimer(&["spectrum", "--w", "3:-3:10"])), 2);
    assert_eq!(code(&trimer(&["spectrum", "--j", "-1"])), 2);
    assert_eq!(code(&trimer(&["spectrum", "--method", "bogus"])), 2);
    // The Ω = Δ form is refused away from Ω = Δ.
    assert_eq!(code(&trimer(&["spectrum", "--method", "ep", "--omega-drive", "1"])), 2);
    // Closed forms need resonant outer oscillators.
    assert_eq!(code(&trimer(&["spectrum", "--delta-a", "0.3"])), 2);
}

#[test]
fn ep_report_matches_analytic_drives() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("ep.json");
    let out = trimer(&["ep", "--j", "0.5", "--range", "2.0:3.2", "-o", path_str(&json)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&json);
    let found: Vec<f64> = report["eps"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["knob_value"].as_f64().unwrap())
        .collect();
    let analytic = &report["analytic"];
    for key in ["ep_minus", "ep_plus"] {
        let want = analytic[key].as_f64().unwrap();
        assert!(
            found.iter().any(|x| (x - want).abs() < 1e-6),
            "{key} = {want} not in {found:?}"
        );
    }
    assert!((analytic["ep_minus"].as_f64().unwrap() - 2.0424).abs() < 1e-4);

    let out = trimer(&["ep", "--j", "0.25", "--range", "1.5:2.5"]);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["eps"]
        .as_array()
        .unwrap()
        .iter()
        .any(|e| (e["knob_value"].as_f64().unwrap() - 2.0).abs() < 1e-6));
}

#[test]
fn ep_none_found_is_not_an_error() {
    let out = trimer(&["ep", "--range", "0.1:0.5"]);
    assert_eq!(code(&out), 0);
    let report: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["eps"].as_array().unwrap().is_empty());
    assert_eq!(code(&trimer(&["ep", "--knob", "bogus", "--range", "0:1"])), 2);
}

#[test]
fn verify_default_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = trimer(&["verify", "--report", path_str(&json)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = read_json(&json);
    assert_eq!(report["passed"], true);
    let checks = report["checks"].as_array().unwrap();
    assert!(checks.len() >= 8);
    assert!(checks.iter().all(|c| c["status"] == "pass"));
    assert!(report["oracle"].is_null());
}

#[test]
fn verify_catches_injected_sign_flip() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    let out = trimer(&[
        "verify",
        "--inject-omega-sign-flip",
        "--samples",
        "20",
        "--report",
        path_str(&json),
    ]);
    assert_eq!(code(&out), 1);
    let report = read_json(&json);
    let failed: Vec<&str> = report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["status"] == "fail")
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["eigenvalues_random", "eigenvalues_params"]);
}

#[test]
fn verify_with_fock_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("report.json");
    // Decoupled outer modes keep the truncated space tiny and exact.
    let out = trimer(&[
        "verify",
        "--j",
        "0",
        "--omega-drive",
        "0.5",
        "--samples",
        "5",
        "--oracle",
        "fock",
        "--cutoff",
        "1,6,1",
        "--report",
        path_str(&json),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let oracle = &read_json(&json)["oracle"];
    assert_eq!(oracle["kind"], "fock");
    assert_eq!(oracle["cutoffs"], serde_json::json!([1, 6, 1]));
    assert!(oracle["checks"]
        .as_array()
        .unwrap()
        .iter()
        .any(|c| c["name"] == "fock_g1_vs_qrt"));

    // A breach inside the oracle block fails the run but still reports the block.
    let out = trimer(&[
        "verify",
        "--omega-drive",
        "0.3",
        "--samples",
        "5",
        "--oracle",
        "fock",
        "--cutoff",
        "2,3,2",
        "--report",
        path_str(&json),
    ]);
    assert_eq!(code(&out), 1);
    assert_eq!(read_json(&json)["oracle"]["cutoffs"], serde_json::json!([2, 3, 2]));
}

#[test]
fn fit_recovers_coupling() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let json = dir.path().join("fit.json");
    assert_eq!(
        code(&trimer(&[
            "spectrum",
            "--j",
            "0.4",
            "--omega-drive",
            "2",
            "-o",
            path_str(&csv)
        ])),
        0
    );
    let out = trimer(&["fit", "--input", path_str(&csv), "-o", path_str(&json)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let j_hat = read_json(&json)["j_hat"].as_f64().unwrap();
    assert!((j_hat - 0.4).abs() < 0.004, "{j_hat}");
}

#[test]
fn fit_rejects_non_doublets() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    for flags in [["--j", "0", "--omega-drive", "2"], ["--j", "0.5", "--omega-drive", "1"]] {
        assert_eq!(
            code(&trimer(&[&["spectrum", "-o", path_str(&csv)][..], &flags[..]].concat())),
            0
        );
        assert_eq!(code(&trimer(&["fit", "--input", path_str(&csv)])), 5, "{flags:?}");
    }
    std::fs::write(&csv, "w,s\n0,1\n").unwrap();
    assert_eq!(code(&trimer(&["fit", "--input", path_str(&csv)])), 2);
    assert_eq!(
        code(&trimer(&["fit", "--input", path_str(&dir.path().join("missing.csv"))])),
        2
    );
}
