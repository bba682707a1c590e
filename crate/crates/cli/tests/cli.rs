use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn prmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_prmimo")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn run_in(dir: &Path, args: &[&str]) -> Output {
    let mut all = vec!["--out", dir.to_str().unwrap()];
    all.extend_from_slice(args);
    prmimo(&all)
}

#[test]
fn defaults_are_the_reference_scenario() {
    let o = prmimo(&["--print-config"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for line in [
        "nt=32",
        "nr=8",
        "ncl=10",
        "nray=8",
        "xi-deg=3",
        "spacing=0.5",
        "snr-db=-10:5:20",
        "trials=1000",
        "condition=ill",
        "schemes=ideal,pattern,physical",
        "safeguard=false",
    ] {
        assert!(text.lines().any(|l| l == line), "missing {line} in\n{text}");
    }
}

#[test]
fn ncl_flag_selects_twenty_clusters() {
    let text = stdout(&prmimo(&["--ncl", "20", "--print-config"]));
    assert!(text.lines().any(|l| l == "ncl=20"));
}

#[test]
fn more_receive_than_transmit_antennas_is_a_usage_error() {
    let o = prmimo(&["--nr", "16", "--nt", "8"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn bad_flags_and_values_are_usage_errors() {
    assert_eq!(prmimo(&["--bogus"]).status.code(), Some(1));
    assert_eq!(prmimo(&["--trials", "many"]).status.code(), Some(1));
    assert_eq!(prmimo(&["--condition", "fair"]).status.code(), Some(1));
    assert_eq!(prmimo(&["--schemes", ""]).status.code(), Some(1));
    assert_eq!(prmimo(&["--config", "/nonexistent/prmimo.conf"]).status.code(), Some(1));
    assert_eq!(prmimo(&["--help"]).status.code(), Some(0));
}

#[test]
fn default_grid_gives_21_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--trials", "3", "--nt", "8", "--nr", "4", "--ncl", "4", "--nray", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("capacity.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "scheme,snr_db,mean_capacity_bps_hz,std_capacity_bps_hz,trials");
    assert_eq!(lines.len(), 22);
    assert!(!csv.contains('\r'));
    let meta = fs::read_to_string(dir.path().join("run.meta")).unwrap();
    assert!(meta.contains("seed=1\n") && meta.contains("# prmimo "));
    assert!(!dir.path().join("plot.script").exists());
}

#[test]
fn ideal_scheme_alone_has_zero_std() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), &["--schemes", "ideal", "--trials", "2"]);
    assert_eq!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("capacity.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 7);
    for r in rows {
        let f: Vec<&str> = r.split(',').collect();
        assert_eq!(f[0], "ideal");
        assert_eq!(f[3], "0");
    }
}

#[test]
fn same_config_twice_is_byte_identical() {
    let cfg_dir = tempfile::tempdir().unwrap();
    let conf = cfg_dir.path().join("run.conf");
    fs::write(&conf, "# small\nnt=8\nnr=4\nncl=5\nnray=3\ntrials=5\nseed=99\nsnr_db=0:5:10\n").unwrap();
    let read = |workers: &str| {
        let dir = tempfile::tempdir().unwrap();
        let o = run_in(dir.path(), &["--config", conf.to_str().unwrap(), "--workers", workers]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        fs::read(dir.path().join("capacity.csv")).unwrap()
    };
    let a = read("1");
    assert_eq!(a, read("1"));
    assert_eq!(a, read("3"));
}

#[test]
fn flags_override_config_and_meta_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let conf = dir.path().join("base.conf");
    fs::write(&conf, "nt=8\nnr=4\nncl=4\nnray=2\ntrials=9\nsnr-db=5\n").unwrap();
    let out = dir.path().join("out");
    let o = prmimo(&[
        "--config",
        conf.to_str().unwrap(),
        "--trials",
        "2",
        "--out",
        out.to_str().unwrap(),
        "--emit-plot",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let meta = out.join("run.meta");
    assert!(fs::read_to_string(&meta).unwrap().contains("\ntrials=2\n"));
    let script = fs::read_to_string(out.join("plot.script")).unwrap();
    assert!(script.starts_with("#!/usr/bin/env python3"));

    let again = prmimo(&["--config", meta.to_str().unwrap(), "--print-config"]);
    assert_eq!(again.status.code(), Some(0));
    assert!(stdout(&again).contains("\ntrials=2\n"));
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = prmimo(&["--out", blocker.join("sub").to_str().unwrap(), "--schemes", "ideal"]);
    assert_eq!(o.status.code(), Some(2));
}
