#![allow(dead_code)]

pub mod synth;

use std::path::Path;
use std::process::{Command, Output};

pub fn aggro(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aggro"))
        .args(args)
        .output()
        .expect("spawn aggro")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Value of the first `key=value` line on standard output.
pub fn printed(o: &Output, key: &str) -> Option<f64> {
    stdout(o)
        .lines()
        .find_map(|l| l.strip_prefix(key)?.strip_prefix('=')?.parse().ok())
}

pub fn p(path: &Path) -> &str {
    path.to_str().expect("utf-8 temp path")
}
