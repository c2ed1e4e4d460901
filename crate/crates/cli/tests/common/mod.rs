#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn desk_config() -> PathBuf {
    fixtures().join("desk/config.json")
}

pub fn tppi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tppi"))
        .args(args)
        .output()
        .expect("spawn tppi")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Run `tppi <cmd> <args>` and fail loudly unless it exits 0.
pub fn ok(cmd: &str, args: &[&str]) {
    let mut all = vec![cmd];
    all.extend_from_slice(args);
    let o = tppi(&all);
    assert!(o.status.success(), "tppi {cmd} failed: {}", stderr(&o));
}

/// Full ingest → analyze → allocate on the desk fixture into `out`.
pub fn run_desk(out: &Path, extra: &[&str]) {
    let cfg = desk_config();
    let mut args = vec!["--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    for cmd in ["ingest", "analyze", "allocate"] {
        ok(cmd, &args);
    }
}

pub fn read_csv<T: serde::de::DeserializeOwned>(path: &Path) -> Vec<T> {
    csv::Reader::from_path(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .deserialize()
        .collect::<Result<_, _>>()
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}
