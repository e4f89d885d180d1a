mod common;

use common::{json, report, report_bytes, run, schema_errors, summary};

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["signal", "--k", "0"]).status.code(), Some(2));
    assert_eq!(run(&["combinat", "scan", "--limit", "1"]).status.code(), Some(2));
    assert_eq!(run(&["audit", "--model", "nope"]).status.code(), Some(2));
    assert_eq!(run(&["audit", "--n", "3"]).status.code(), Some(2));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    let bad = run(&["signal", "--k", "0"]);
    assert!(!bad.stderr.is_empty());

    // θ = 1 leaves no room for a valid joint at aligned settings.
    let out = run(&["audit", "--model", "hp-v1", "--theta", "upper", "--grid", "axes"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn audit_v2_fails_parameter_independence_only() {
    let v = json(&["audit", "--model", "hp-v2"]);
    assert!(schema_errors("audit", &v).is_empty(), "{:?}", schema_errors("audit", &v));
    let pi = report(&v, "parameter_independence");
    assert!(pi["max_violation"].as_f64().unwrap() >= 0.5);
    let sl = report(&v, "signal_locality");
    assert!(summary(sl, "station 2") < 1e-12);
    assert!(sl["max_violation"].as_f64().unwrap() < 1e-12);
    let s = v["result"]["chsh"]["s"].as_f64().unwrap();
    assert!((s.abs() - 2.0 * 2f64.sqrt()).abs() < 1e-12);
}

#[test]
fn audit_v1_signals() {
    let v = json(&["audit", "--model", "hp-v1"]);
    let sl = report(&v, "signal_locality");
    assert!(summary(sl, "station 2") >= 0.5);
    let qm = report(&v, "qm_comparison");
    assert!((summary(qm, "E(B)") - 1.0).abs() < 1e-12);
}

#[test]
fn audit_local_fixture_is_clean() {
    let v = json(&["audit", "--model", "local-fixture"]);
    assert!(schema_errors("audit", &v).is_empty());
    for c in ["parameter_independence", "signal_locality", "outcome_independence"] {
        assert!(report(&v, c)["max_violation"].as_f64().unwrap() <= 1e-9, "{c}");
    }
    assert!(v["result"]["chsh"]["s"].as_f64().unwrap().abs() <= 2.01);
}

#[test]
fn signal_examples() {
    let v = json(&["signal", "--version", "1", "--k", "10", "--trials", "100000"]);
    assert!(schema_errors("signal", &v).is_empty(), "{:?}", schema_errors("signal", &v));
    let r = &v["result"];
    assert!(r["z_score"].as_f64().unwrap().abs() <= 3.0);
    assert!((r["analytic_error_rate"].as_f64().unwrap() - 4.8828125e-4).abs() < 1e-15);

    let v = json(&["signal", "--version", "2", "--k", "1", "--trials", "10000"]);
    assert!((v["result"]["analytic_error_rate"].as_f64().unwrap() - 0.25).abs() < 1e-15);
    assert!(v["result"]["z_score"].as_f64().unwrap().abs() <= 3.0);

    let table = run(&["signal", "--format", "table", "--trials", "1000"]);
    let text = String::from_utf8(table.stdout).unwrap();
    let header = text.lines().next().unwrap();
    for col in ["k", "trials", "empirical", "analytic", "z"] {
        assert!(header.contains(col), "{header}");
    }
}

#[test]
fn scan_examples() {
    let csv = run(&["combinat", "scan", "--limit", "100", "--format", "csv"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = String::from_utf8(csv.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,divisible,worst_prime,needed,available"));
    let hits: Vec<u64> = lines
        .filter(|l| l.split(',').nth(1) == Some("true"))
        .map(|l| l.split(',').next().unwrap().parse().unwrap())
        .collect();
    assert_eq!(hits, vec![10, 40, 44, 84]);

    let v = json(&["combinat", "scan", "--limit", "100"]);
    assert!(schema_errors("scan", &v).is_empty(), "{:?}", schema_errors("scan", &v));
    assert_eq!(v["result"]["divisible"], serde_json::json!([10, 40, 44, 84]));
}

#[test]
fn census_example() {
    let v = json(&["combinat", "census", "--n", "4", "--family", "fixture-0"]);
    assert!(schema_errors("census", &v).is_empty(), "{:?}", schema_errors("census", &v));
    assert_eq!(v["result"]["all_consistent"], true);
    let reports = v["result"]["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 26 * 26);
    assert!(reports.iter().all(|r| r["consistent"] == true));
    assert_eq!(run(&["combinat", "census", "--family", "nope"]).status.code(), Some(2));
}

fn only_row(v: &serde_json::Value) -> &serde_json::Value {
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 1);
    &rows[0]
}

#[test]
fn sample_examples() {
    let args = ["sample", "--trials", "1000000", "--a", "1,0,0", "--b=-1,0,0"];
    let v = json(&[&args[..], &["--model", "hp-v1"]].concat());
    assert!(schema_errors("sample", &v).is_empty(), "{:?}", schema_errors("sample", &v));
    let r = only_row(&v);
    assert_eq!(r["reference_b"], 1.0);
    assert!(r["z_b"].as_f64().unwrap().abs() <= 3.0);

    let v = json(&["sample", "--model", "hp-v2", "--trials", "1000000", "--a", "0.6,0.8,0", "--b", "0,0.6,0.8"]);
    let r = only_row(&v);
    assert_eq!(r["reference_a"], 0.0);
    assert_eq!(r["reference_b"], 0.0);
    assert!(r["z_a"].as_f64().unwrap().abs() <= 3.0);
    assert!(r["z_b"].as_f64().unwrap().abs() <= 3.0);

    let v = json(&["sample", "--model", "qm", "--trials", "1000000", "--a", "0,0,1", "--b", "0,0,1"]);
    let r = only_row(&v);
    assert_eq!(r["reference_ab"], -1.0);
    assert_eq!(r["estimate"]["mean_ab"], -1.0);

    let v = json(&["sample", "--model", "hp-v2", "--trials", "20000", "--random-pairs", "3"]);
    assert!(schema_errors("sample", &v).is_empty());
    assert!(v["result"]["rows"].as_array().unwrap().len() > 3);
    assert_eq!(run(&["sample", "--trials", "0"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "--a", "1,0,0"]).status.code(), Some(2));
    assert_eq!(run(&["sample", "--a", "0,0,0", "--b", "1,0,0"]).status.code(), Some(2));
}

#[test]
fn every_subcommand_supports_every_format() {
    let cases: [&[&str]; 5] = [
        &["audit", "--model", "hp-v2", "--grid", "axes"],
        &["signal", "--trials", "2000"],
        &["combinat", "scan", "--limit", "20"],
        &["combinat", "census", "--n", "2", "--grid", "axes"],
        &["sample", "--model", "qm", "--trials", "2000"],
    ];
    for args in cases {
        for f in ["json", "csv", "table"] {
            let out = run(&[args, &["--format", f]].concat());
            assert_eq!(out.status.code(), Some(0), "{args:?} {f}");
            assert!(!out.stdout.is_empty());
        }
    }
}

#[test]
fn reports_are_byte_identical_across_runs_and_thread_caps() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 6] = [
        ("audit", &["audit", "--model", "local-fixture", "--trials", "20000", "--seed", "9"]),
        ("audit-csv", &["audit", "--model", "hp-v2", "--format", "csv"]),
        ("signal", &["signal", "--version", "2", "--k", "3", "--trials", "30000", "--seed", "4"]),
        ("sample", &["sample", "--model", "hp-v1", "--trials", "50000", "--random-pairs", "4", "--seed", "8"]),
        ("scan", &["combinat", "scan", "--limit", "200", "--format", "csv"]),
        ("census", &["combinat", "census", "--n", "4", "--family", "fixture-2"]),
    ];
    for (tag, args) in cases {
        let one = report_bytes(args, 1, dir.path(), tag);
        let again = report_bytes(args, 1, dir.path(), &format!("{tag}-again"));
        let four = report_bytes(args, 4, dir.path(), tag);
        assert!(!one.is_empty());
        assert_eq!(one, again, "{tag}: rerun differs");
        assert_eq!(one, four, "{tag}: thread cap changes output");
    }
}

#[test]
fn invalid_thread_cap_is_a_usage_error() {
    let out = common::run_with_threads(&["combinat", "scan"], Some(0));
    assert_eq!(out.status.code(), Some(2));
}
