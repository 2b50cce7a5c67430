use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use bwspdc::config::SourceConfig;

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bwspdc"))
        .arg("--config")
        .arg(config("ppktp_default.toml"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn report_lists_design_and_timing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["report"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    for key in ["poling_period", "cluster_spacing", "resonant_vs_forward_ratio", "correlation_time", "pair_rate"] {
        assert!(text.contains(key), "missing {key}");
    }
}

#[test]
fn design_prints_period() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["design"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains("871.7"));
}

#[test]
fn missing_config_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_bwspdc"))
        .arg("--config")
        .arg(dir.path().join("absent.toml"))
        .arg("--out")
        .arg(dir.path().join("out"))
        .arg("report")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("category=config"), "{}", stderr(&o));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn temperature_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--override", "crystal.temperature_c=40", "design"]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn out_of_range_wavelength_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--override", "crystal.signal_wavelength_nm=5000", "design"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("category=domain"));
}

#[test]
fn coarse_grid_fails_verification() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["--verify", "--override", "grids.spectrum_points=11", "biphoton"]);
    assert_eq!(o.status.code(), Some(4), "{}", stderr(&o));
    assert!(stderr(&o).contains("category=verification"));
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run(d.path(), &["--seed", "7", "events"]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path())
        .unwrap()
        .map(|e| e.unwrap().file_name())
        .collect();
    names.sort();
    assert!(!names.is_empty());
    for n in names {
        let x = std::fs::read(a.path().join(&n)).unwrap();
        let y = std::fs::read(b.path().join(&n)).unwrap();
        assert!(x == y, "{n:?} differs");
    }
}

#[test]
fn report_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    run(dir.path(), &["report"]);
    let text = std::fs::read_to_string(dir.path().join("report.txt")).unwrap();
    let mut lines = text.lines();
    let hash = lines.next().unwrap().strip_prefix("# config_hash=").unwrap().to_string();
    let echo: Vec<&str> = lines.take_while(|l| l.starts_with('#')).collect();
    let back = SourceConfig::from_echo(&echo.join("\n")).unwrap();
    assert_eq!(back.hash(), hash);
}

#[test]
fn oracle_subcommand_agrees() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["oracle", "--detuning", "0.5"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("oracle_trace.csv").exists());
}

#[test]
fn unknown_flag_is_usage_error() {
    let o = Command::new(env!("CARGO_BIN_EXE_bwspdc")).arg("--bogus").output().unwrap();
    assert_eq!(o.status.code(), Some(2));
}
