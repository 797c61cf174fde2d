use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use oran_v2x::Error;

const BIN: &str = env!("CARGO_BIN_EXE_oran-v2x");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("run.cfg");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const TINY: &str = "duration_s = 2\nseeds = 1\nsweep = 16\nbeam_pairs = 5\n";

#[test]
fn successful_run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let out = dir.path().join("out");
    let o = run(&["beam", "--config", &cfg, "--out", out.to_str().unwrap(), "--seed", "3", "--seed", "4"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let detail = fs::read_to_string(out.join("beam_runs.csv")).unwrap();
    let summary = fs::read_to_string(out.join("beam_summary.csv")).unwrap();
    let echoed = fs::read_to_string(out.join("beam_config.txt")).unwrap();
    for text in [&detail, &summary] {
        assert!(text.starts_with("experiment,sweep,seed,metric,value,units\n"));
        assert!(!text.contains('\r'));
    }
    // seeds from the command line replace the config's
    assert!(detail.lines().skip(1).all(|l| l.split(',').nth(2) == Some("3") || l.split(',').nth(2) == Some("4")));
    assert!(summary.lines().skip(1).all(|l| l.split(',').nth(2) == Some("mean")));
    assert!(echoed.contains("seeds = 3,4") || echoed.contains("seeds = 3, 4"), "{echoed}");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let bad_key = write_config(dir.path(), "duration_s = 2\ndensty_veh_per_km = 40\n");
    let o = run(&["relay", "--config", &bad_key, "--out", out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));

    let cfg = write_config(dir.path(), TINY);
    assert_eq!(run(&["teleport", "--config", &cfg, "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["beam", "--config", "/nonexistent/x.cfg", "--out", out]).status.code(), Some(2));
    assert_eq!(run(&["beam", "--out", out]).status.code(), Some(2));
    assert!(!Path::new(out).exists());
}

#[test]
fn runtime_failures_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), TINY);
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out = blocker.join("out");
    let o = run(&["beam", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    assert_eq!(Error::invariant("paired traces differ").exit_code(), 1);
}
