#![allow(dead_code)]

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

pub fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_tagtransfer"));
    c.env_remove("TAGTRANSFER_OUTPUT_DIR").env_remove("RUST_LOG");
    c
}

/// Runs the binary in `dir`.
pub fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("spawn tagtransfer")
}

/// Runs and asserts exit code 0.
pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "tagtransfer {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

pub fn read_json(path: impl AsRef<Path>) -> Value {
    let path = path.as_ref();
    serde_json::from_str(&fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display())))
        .unwrap()
}

pub fn schema_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

/// Validation errors of `instance` against `schemas/<name>.schema.json`.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let schema = read_json(schema_dir().join(format!("{name}.schema.json")));
    let compiled = jsonschema::JSONSchema::options()
        .with_draft(jsonschema::Draft::Draft7)
        .compile(&schema)
        .expect("schema compiles");
    let errors = match compiled.validate(instance) {
        Ok(()) => Vec::new(),
        Err(errs) => errs.map(|e| format!("{}: {e}", e.instance_path)).collect(),
    };
    errors
}

pub fn assert_schema(name: &str, path: impl AsRef<Path>) {
    let errors = schema_errors(name, &read_json(&path));
    assert!(errors.is_empty(), "{} vs {name}: {errors:?}", path.as_ref().display());
}

/// Writes a small synthetic corpus to `dir/data`.
pub fn small_synth(dir: &Path, seed: u64) {
    let seed = seed.to_string();
    ok(
        dir,
        &[
            "synth", "--out", "data", "--seed", &seed, "--source-train", "60", "--source-val", "20",
            "--target-train", "20", "--target-val", "30", "--target-test", "20",
        ],
    );
}

/// Synthetic data plus a 3-epoch source model in `dir/src`.
pub fn pretrained_fixture(dir: &Path) {
    small_synth(dir, 1);
    ok(
        dir,
        &[
            "pretrain", "--train", "data/source.train.conll", "--val", "data/source.val.conll",
            "--preset", "small", "--epochs", "3", "--out", "src",
        ],
    );
}

pub fn adapt_args<'a>(scheme: &'a str, out: &'a str, epochs: &'a str) -> Vec<&'a str> {
    vec![
        "adapt", "--scheme", scheme, "--train", "data/target.train.conll", "--val", "data/target.val.conll",
        "--preset", "small", "--epochs", epochs, "--out", out,
    ]
}

/// Every file below `dir`, relative, sorted.
pub fn tree(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

/// True when both trees hold the same files with identical bytes.
pub fn same_tree(a: &Path, b: &Path) -> bool {
    let (ta, tb) = (tree(a), tree(b));
    ta == tb && ta.iter().all(|f| fs::read(a.join(f)).unwrap() == fs::read(b.join(f)).unwrap())
}
