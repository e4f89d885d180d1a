#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> PathBuf {
    PathBuf::from(env!("CARGO_BIN_EXE_lhv-audit"))
}

pub fn run(args: &[&str]) -> Output {
    run_with_threads(args, None)
}

pub fn run_with_threads(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args);
    match threads {
        Some(t) => cmd.env("LHV_AUDIT_THREADS", t.to_string()),
        None => cmd.env_remove("LHV_AUDIT_THREADS"),
    };
    cmd.output().expect("spawn lhv-audit")
}

pub fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON on stdout")
}

pub fn schema(name: &str) -> Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("schemas")
        .join(format!("{name}.schema.json"));
    serde_json::from_str(&std::fs::read_to_string(path).expect("schema file")).expect("schema JSON")
}

/// Validation messages, empty when `instance` conforms.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let s = schema(name);
    let compiled = jsonschema::JSONSchema::compile(&s).expect("schema compiles");
    let errors = match compiled.validate(instance) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{}: {e}", e.instance_path)).collect(),
    };
    errors
}

pub fn report<'a>(audit: &'a Value, condition: &str) -> &'a Value {
    audit["result"]["reports"]
        .as_array()
        .unwrap()
        .iter()
        .find(|r| r["condition"] == condition)
        .unwrap_or_else(|| panic!("no {condition} report"))
}

pub fn summary(report: &Value, label: &str) -> f64 {
    report["summaries"]
        .as_array()
        .unwrap()
        .iter()
        .find(|s| s["label"] == label)
        .unwrap_or_else(|| panic!("no summary {label}"))["max_violation"]
        .as_f64()
        .unwrap()
}

/// Runs `args --output <file>` under the given thread cap and returns the file bytes.
pub fn report_bytes(args: &[&str], threads: usize, dir: &Path, tag: &str) -> Vec<u8> {
    let path = dir.join(format!("{tag}-{threads}"));
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.push("--output");
    full.push(&p);
    let out = run_with_threads(&full, Some(threads));
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    std::fs::read(&path).unwrap()
}
