#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

pub const SUBCOMMANDS: [&str; 4] = ["simulate", "scaling-study", "field-dump", "compare-classical"];

/// Runs the CLI with `config` written next to `out`.
pub fn run_cli(dir: &Path, sub: &str, config: &str, out: &str, threads: Option<usize>, extra: &[&str]) -> Output {
    let cfg = dir.join("config.json");
    std::fs::write(&cfg, config).unwrap();
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_rydberg-pilot"));
    cmd.arg(sub).arg("--config").arg(&cfg).arg("--out").arg(dir.join(out)).args(extra);
    match threads {
        Some(n) => cmd.env("RYDBERG_PILOT_THREADS", n.to_string()),
        None => cmd.env_remove("RYDBERG_PILOT_THREADS"),
    };
    cmd.output().unwrap()
}

/// File name to contents for every file in `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

/// Outputs of one subcommand for two plain runs and two thread counts;
/// returns the first snapshot and whether all four agree byte for byte.
pub fn determinism(dir: &Path, sub: &str, config: &str) -> (BTreeMap<String, Vec<u8>>, bool) {
    let runs = [(None, "a"), (None, "b"), (Some(1), "t1"), (Some(5), "t5")];
    let snaps: Vec<_> = runs
        .iter()
        .map(|(threads, out)| {
            let o = run_cli(dir, sub, config, &format!("{sub}-{out}"), *threads, &[]);
            assert!(o.status.success(), "{sub}: {}", String::from_utf8_lossy(&o.stdout));
            snapshot(&dir.join(format!("{sub}-{out}")))
        })
        .collect();
    let same = snaps.iter().all(|s| s == &snaps[0]) && !snaps[0].is_empty();
    (snaps.into_iter().next().unwrap(), same)
}
