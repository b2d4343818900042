use std::process::{Command, Output};

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Deserialize)]
struct Record {
    command: String,
    model: String,
    theta_deg: Option<f64>,
    quantity: String,
    value: f64,
    std_error: Option<f64>,
    analytic: Option<f64>,
    z_score: Option<f64>,
    n: u64,
    seed: u64,
}

fn hvlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hvlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Vec<Record> {
    let mut full = args.to_vec();
    full.extend(["--format", "json"]);
    let out = hvlab(&full);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn csv_records(args: &[&str]) -> Vec<Record> {
    let out = hvlab(args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    csv::Reader::from_reader(out.stdout.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap()
}

#[test]
fn correlate_at_sixty_degrees() {
    let recs = json(&["correlate", "--model", "complete", "--theta", "60", "--trials", "1000000", "--seed", "42"]);
    assert_eq!(recs.len(), 1);
    let r = &recs[0];
    assert_eq!((r.command.as_str(), r.model.as_str(), r.quantity.as_str()), ("correlate", "complete", "correlation"));
    assert_eq!((r.n, r.seed, r.theta_deg), (1_000_000, 42, Some(60.0)));
    assert!((r.analytic.unwrap() + 0.5).abs() < 1e-12);
    assert!(r.z_score.unwrap() < 4.0);
}

#[test]
fn correlate_at_zero_degrees_is_exact() {
    let r = &json(&["correlate", "--model", "complete", "--theta", "0", "--trials", "1000"])[0];
    assert_eq!(r.value, -1.0);
    assert_eq!(r.std_error, Some(0.0));
    assert_eq!(r.seed, 0);
}

#[test]
fn baseline_at_right_angles() {
    let r = &json(&["correlate", "--model", "local_baseline", "--theta", "90", "--trials", "1000000"])[0];
    assert_eq!(r.analytic, Some(0.0));
    assert!(r.z_score.unwrap() < 4.0, "{r:?}");
}

#[test]
fn sweep_tracks_minus_cosine() {
    let recs = json(&["sweep", "--model", "complete", "--theta-grid", "0:180:15", "--trials", "100000"]);
    let corr: Vec<&Record> = recs.iter().filter(|r| r.quantity == "correlation").collect();
    assert_eq!(corr.len(), 13);
    for r in &corr {
        let theta = r.theta_deg.unwrap().to_radians();
        assert!((r.analytic.unwrap() + theta.cos()).abs() < 1e-12);
        assert!(r.z_score.unwrap() < 4.0, "{r:?}");
    }
    let at_90: Vec<&Record> = recs
        .iter()
        .filter(|r| r.theta_deg == Some(90.0) && r.quantity.starts_with("p_"))
        .collect();
    assert_eq!(at_90.len(), 4);
    for r in at_90 {
        assert!((r.analytic.unwrap() - 0.25).abs() < 1e-12);
        assert!((r.value - 0.25).abs() < 4.0 * r.std_error.unwrap());
    }
}

#[test]
fn product_only_sweep_has_no_joint_probabilities() {
    let recs = json(&["sweep", "--model", "sufficient_condition", "--theta-grid", "0,90,180", "--trials", "10000"]);
    assert_eq!(recs.len(), 3);
    assert!(recs.iter().all(|r| r.quantity == "correlation"));
    let out = hvlab(&["joint-probs", "--model", "sufficient_condition", "--trials", "100"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("defines no marginals"));
}

#[test]
fn joint_probs_only_emits_cells() {
    let recs = json(&["joint-probs", "--theta-grid", "90", "--trials", "100000"]);
    let names: Vec<&str> = recs.iter().map(|r| r.quantity.as_str()).collect();
    assert_eq!(names, ["p_pp", "p_pm", "p_mp", "p_mm"]);
    assert!(recs.iter().all(|r| r.command == "joint-probs"));
}

#[test]
fn sweep_record_reproduced_by_correlate() {
    let sweep = json(&["sweep", "--theta-grid", "30,60", "--trials", "50000", "--seed", "3"]);
    let single = json(&["correlate", "--theta", "60", "--trials", "50000", "--seed", "3"]);
    let from_sweep = sweep
        .iter()
        .find(|r| r.theta_deg == Some(60.0) && r.quantity == "correlation")
        .unwrap();
    assert_eq!(from_sweep.value, single[0].value);
    assert_eq!(from_sweep.std_error, single[0].std_error);
}

#[test]
fn chsh_defaults() {
    let recs = json(&["chsh", "--model", "complete", "--trials", "1000000"]);
    let s = recs.iter().find(|r| r.quantity == "chsh").unwrap();
    assert!((s.analytic.unwrap().abs() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
    assert!(s.z_score.unwrap() < 4.0, "{s:?}");
    assert_eq!(recs.len(), 5);

    let recs = json(&["chsh", "--model", "local_baseline", "--trials", "1000000"]);
    let s = recs.iter().find(|r| r.quantity == "chsh").unwrap();
    assert!((s.analytic.unwrap().abs() - 2.0).abs() < 1e-12);
    assert!(s.z_score.unwrap() < 4.0, "{s:?}");
}

#[test]
fn chsh_with_degenerate_angles() {
    for model in ["complete", "local_baseline"] {
        let recs = json(&["chsh", "--model", model, "--angles", "30,30,30,30", "--trials", "10000"]);
        let s = recs.iter().find(|r| r.quantity == "chsh").unwrap();
        assert_eq!(s.value.abs(), 2.0, "{model}");
    }
}

#[test]
fn audits() {
    let out = hvlab(&["audit", "signaling", "--model", "complete", "--trials", "100000"]);
    assert!(out.status.success());
    let recs: Vec<Record> = csv::Reader::from_reader(out.stdout.as_slice())
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap();
    assert_eq!(recs.iter().filter(|r| r.quantity.starts_with("marginal_x")).count(), 16);
    let verdict = recs.iter().find(|r| r.quantity == "verdict").unwrap();
    assert_eq!(verdict.value, 1.0);
    let threshold = recs.iter().find(|r| r.quantity == "z_threshold").unwrap();
    assert_eq!(threshold.value, 5.0);

    let recs = json(&["audit", "asymmetry", "--trials", "100000"]);
    let x = recs.iter().find(|r| r.quantity == "x_flip_rate_under_b_change").unwrap();
    let y = recs.iter().find(|r| r.quantity == "y_flip_rate_under_a_change").unwrap();
    assert_eq!(x.value, 0.0);
    assert!(y.value > 0.2);

    let out = hvlab(&["audit", "signaling", "--model", "sufficient_condition", "--trials", "100"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("product-only model defines no marginals"));
}

#[test]
fn failed_audit_sets_exit_code() {
    let out = hvlab(&["audit", "outcome-dependence", "--trials", "100000", "--z-threshold", "1e-12"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL"));
}

#[test]
fn usage_errors() {
    for args in [
        &["correlate", "--theta", "181"][..],
        &["correlate", "--trials", "0"],
        &["correlate", "--model", "nonsense"],
        &["correlate", "--trials", "4", "--shards", "5"],
        &["chsh", "--angles", "0,90,45"],
        &["correlate", "--model", "single_spin", "--bloch", "0,0,2"],
    ] {
        let out = hvlab(args);
        assert!(!out.status.success(), "{args:?}");
        assert!(out.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn csv_and_json_agree() {
    let args = ["sweep", "--theta-grid", "0,45,90", "--trials", "20000", "--seed", "9"];
    let from_csv = csv_records(&args);
    let from_json = json(&args);
    assert_eq!(from_csv, from_json);
}

#[test]
fn rerun_line_reproduces_output() {
    let out = hvlab(&["correlate", "--theta", "75", "--trials", "30000", "--seed", "11"]);
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line = stderr
        .lines()
        .find_map(|l| l.strip_prefix("# rerun: hvlab "))
        .unwrap();
    let again = hvlab(&line.split_whitespace().collect::<Vec<_>>());
    assert_eq!(out.stdout, again.stdout);
    assert!(line.contains("--shards 16"));
}

#[test]
fn single_spin_through_the_cli() {
    let r = &json(&["correlate", "--model", "single_spin", "--bloch", "0,0,0.6", "--theta", "0", "--trials", "1000000"])[0];
    assert_eq!(r.quantity, "mean_x");
    assert!((r.analytic.unwrap() - 0.6).abs() < 1e-12);
    assert!(r.z_score.unwrap() < 4.0);
}
