use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn accr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_accr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn check<'a>(report: &'a Value, name: &str) -> &'a Value {
    report["checks"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == name)
        .unwrap_or_else(|| panic!("no check {name}"))
}

fn first_value(report: &Value, name: &str) -> f64 {
    check(report, name)["samples"][0]["value"].as_f64().unwrap()
}

const T2: &str = "t=2,u=0,v=0";

#[test]
fn validate_builtin_passes() {
    let o = accr(&["validate", "builtin:cone-flat-fiber"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["manifold"], "builtin:cone-flat-fiber");
    assert!(r["checks"].as_array().unwrap().iter().all(|c| c["verdict"] == "pass"));
    assert_eq!(r["config"]["points"].as_array().unwrap().len(), 64);
}

fn write_cone_variant(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let src = accr_core::manifold::builtin_source("cone-flat-fiber").unwrap();
    let mut v: Value = serde_json::from_str(src).unwrap();
    edit(&mut v);
    let path = dir.join("m.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn broken_phi_squared_exits_1_and_names_identity() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_cone_variant(dir.path(), |v| v["phi"][2][1] = "2".into());
    let o = accr(&["validate", &path, "--samples", "8"]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    assert_eq!(check(&r, "structure.phi_squared")["verdict"], "fail");
    assert!(r["manifold"].as_str().unwrap().starts_with("sha256:"));
}

#[test]
fn load_errors_exit_2() {
    assert_eq!(code(&accr(&["validate", "/nonexistent/manifold.json"])), 2);
    assert_eq!(code(&accr(&["validate", "builtin:no-such"])), 2);
    assert_eq!(code(&accr(&["validate"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let path = write_cone_variant(dir.path(), |v| v["g"][1][1] = "t^2*q".into());
    assert_eq!(code(&accr(&["validate", &path])), 2);
    assert_eq!(
        code(&accr(&[
            "validate",
            "builtin:cone-flat-fiber",
            "--point",
            "t=9,u=0,v=0"
        ])),
        2
    );
    assert_eq!(
        code(&accr(&["validate", "builtin:cone-flat-fiber", "--samples", "0"])),
        2
    );
    assert_eq!(code(&accr(&["frobnicate"])), 2);
}

#[test]
fn classify_cone_and_flat() {
    let r = json(&accr(&["classify", "builtin:cone-flat-fiber"]));
    let m = &r["config"]["membership"];
    assert_eq!(m["sasaki_like"]["status"], "fails");
    assert_eq!(m["f5"]["status"], "holds");
    assert_eq!(m["f5_0"]["status"], "holds");
    assert_eq!(m["f0"]["status"], "fails");

    let o = accr(&["classify", "--builtin", "flat-cosymplectic"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["config"]["membership"]["f0"]["status"], "holds");
    assert_eq!(check(&r, "class.F5")["verdict"], "degenerate");

    let r = json(&accr(&[
        "classify",
        "builtin:cone-flat-fiber",
        "--samples",
        "1",
        "--point",
        T2,
    ]));
    assert_eq!(r["config"]["points"], serde_json::json!([[2.0, 0.0, 0.0]]));
    assert_eq!(r["config"]["membership"]["samples"], 1);
}

#[test]
fn soliton_lambda_for_both_metrics() {
    let o = accr(&[
        "soliton",
        "builtin:cone-flat-fiber",
        "--metric",
        "g",
        "--potential-k",
        "c*t",
        "--const",
        "c=1",
        "--point",
        T2,
        "--expect-soliton",
    ]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(r["config"]["verdict"], "soliton");
    assert!((first_value(&r, "soliton.g.lambda") + 1.5).abs() < 1e-12);

    let r = json(&accr(&[
        "soliton",
        "builtin:cone-flat-fiber",
        "--metric",
        "gtilde",
        "--potential-k",
        "ct*t",
        "--const",
        "ct=1",
        "--point",
        T2,
    ]));
    assert_eq!(r["config"]["verdict"], "soliton");
    assert!((first_value(&r, "soliton.gtilde.lambda") + 1.5).abs() < 1e-12);
}

#[test]
fn soliton_negative_cases() {
    let o = accr(&["soliton", "builtin:cone-flat-fiber", "--potential-k", "t^2"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)["config"]["verdict"], "not-soliton");
    let o = accr(&[
        "soliton",
        "builtin:cone-flat-fiber",
        "--potential-k",
        "t^2",
        "--expect-soliton",
    ]);
    assert_eq!(code(&o), 1);
    let o = accr(&["soliton", "builtin:cone-flat-fiber", "--potential-field", "1;1;0"]);
    assert_eq!(code(&o), 1);
    assert_eq!(check(&json(&o), "potential.vertical")["verdict"], "fail");
    assert_eq!(
        code(&accr(&["soliton", "builtin:cone-flat-fiber", "--potential-k", "c*t"])),
        2
    );
    assert_eq!(
        code(&accr(&["soliton", "builtin:cone-flat-fiber", "--potential-k", "0*t"])),
        2
    );
}

#[test]
fn verify_cone_default_passes() {
    let o = accr(&["verify-paper"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(&o);
    let checks = r["checks"].as_array().unwrap();
    assert!(checks.len() >= 40);
    assert!(checks.iter().all(|c| c["verdict"] != "fail"));
    assert!(checks
        .iter()
        .all(|c| c["anchor"].as_str().is_some_and(|a| !a.is_empty())));
    assert!(r["wall_ms"].as_f64().is_some());
}

#[test]
fn verify_cone_with_c_2() {
    let r = json(&accr(&[
        "verify-paper",
        "--const",
        "kprime=0",
        "--const",
        "c=2",
        "--point",
        "t=1,u=0,v=0",
        "--samples",
        "1",
    ]));
    assert!((first_value(&r, "soliton.g.lambda") + 4.0).abs() < 1e-12);
}

#[test]
fn verify_cone_tight_tolerance_reports_floor() {
    let o = accr(&["verify-paper", "--tolerance", "1e-15", "--samples", "16"]);
    assert_eq!(code(&o), 1);
    let r = json(&o);
    let failing: Vec<&Value> = r["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["verdict"] == "fail")
        .collect();
    assert!(failing.iter().any(|c| c["residual"].as_f64().unwrap() > 1e-15));
    for c in failing {
        let res = c["residual"].as_f64().unwrap();
        assert!(res < 1e-9, "{} {res}", c["name"]);
    }
}

#[test]
fn reports_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (p, extra) in [(&a, &["--sequential"][..]), (&b, &[][..])] {
        let mut args = vec!["verify-paper", "--omit-timing", "-o", p.to_str().unwrap()];
        args.extend_from_slice(extra);
        let o = accr(&args);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn table_format_and_other_commands() {
    let o = accr(&[
        "curvature",
        "builtin:cone-flat-fiber",
        "--format",
        "table",
        "--samples",
        "8",
    ]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("cross.nabla_tilde"));
    assert!(text.contains("0 failed"));
    let o = accr(&["report", "builtin:cone-flat-fiber", "--samples", "8"]);
    assert_eq!(code(&o), 0);
    let r = json(&o);
    assert_eq!(check(&r, "class.F5")["verdict"], "pass");
    assert_eq!(check(&r, "structure.phi_squared")["verdict"], "pass");
}
