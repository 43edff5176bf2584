#![allow(dead_code)]

use std::path::Path;
use std::process::Command;

use depcap::bench::{gen_beta_gaussian, GaussianChannelSpec};
use serde_json::Value;

pub struct Run {
    pub code: i32,
    pub stdout: Vec<u8>,
    pub stderr: String,
}

impl Run {
    pub fn json(&self) -> Value {
        serde_json::from_slice(&self.stdout)
            .unwrap_or_else(|e| panic!("stdout is not JSON ({e}): {}", self.text()))
    }

    pub fn text(&self) -> String {
        String::from_utf8_lossy(&self.stdout).into_owned()
    }
}

pub fn depcap(args: &[&str]) -> Run {
    depcap_env(args, &[])
}

pub fn depcap_env(args: &[&str], env: &[(&str, &str)]) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_depcap"));
    cmd.args(args).env_remove("DEPCAP_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("spawn depcap");
    Run {
        code: out.status.code().expect("exit code"),
        stdout: out.stdout,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

/// Validates `value` against the named definition of the shipped output schema.
pub fn validate(kind: &str, value: &Value) {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("schemas/outputs.schema.json");
    let mut schema: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    schema["$ref"] = Value::String(format!("#/$defs/{kind}"));
    let validator = jsonschema::validator_for(&schema).expect("schema compiles");
    let errors: Vec<String> = validator
        .iter_errors(value)
        .map(|e| format!("{} at {}", e, e.instance_path))
        .collect();
    assert!(
        errors.is_empty(),
        "{kind} output violates schema: {errors:?}\n{value:#}"
    );
}

pub fn write_gaussian_channel_csv(path: &Path, sigma2: f64, n: usize, seed: u64) {
    let ds = gen_beta_gaussian(&GaussianChannelSpec { sigma2, n, seed }).unwrap();
    let mut s = String::from("x0,y0\n");
    for i in 0..ds.n() {
        s.push_str(&format!("{},{}\n", ds.x().row(i)[0], ds.y().row(i)[0]));
    }
    std::fs::write(path, s).unwrap();
}

pub fn write_labelled_csv(path: &Path, n: usize, seed: u64) {
    let ds = gen_beta_gaussian(&GaussianChannelSpec {
        sigma2: 0.01,
        n,
        seed,
    })
    .unwrap();
    let mut s = String::from("xcat,y0\n");
    for i in 0..ds.n() {
        let (label, shift) = if i % 3 == 0 { ("b", 2.0) } else { ("a", 0.0) };
        s.push_str(&format!("{label},{}\n", ds.y().row(i)[0] + shift));
    }
    std::fs::write(path, s).unwrap();
}
