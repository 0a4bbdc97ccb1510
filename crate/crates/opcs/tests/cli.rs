//! End-to-end checks of the `opcs` binary: subcommand plumbing, exit
//! codes, and the documented error paths.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn opcs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opcs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn gen_writes_basis_and_profile() {
    let dir = tempfile::tempdir().unwrap();
    let out = opcs(&[
        "gen",
        "--side",
        "8",
        "--order",
        "origami",
        "--text",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("basis.opcs").exists());
    assert!(dir.path().join("profile.csv").exists());
    assert!(dir.path().join("basis.txt").exists());
    let profile = fs::read_to_string(dir.path().join("profile.csv")).unwrap();
    assert_eq!(profile.lines().count(), 65); // header + 64 patterns
}

#[test]
fn gen_rejects_bad_side_with_data_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let out = opcs(&["gen", "--side", "100", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("power of two"));
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = opcs(&["gen", "--side", "8", "--bogus"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn missing_required_flag_is_usage_error() {
    let out = opcs(&["gen"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--side"));
}

fn gen_and_simulate(dir: &Path, mode: &str) {
    let out = opcs(&["gen", "--side", "16", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let basis = dir.join("basis.opcs");
    let out = opcs(&[
        "simulate",
        "--basis",
        basis.to_str().unwrap(),
        "--mode",
        mode,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.join("series.csv").exists());
}

#[test]
fn reconstruct_dgi_on_pm1_series_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    gen_and_simulate(dir.path(), "pm1");
    let out = opcs(&[
        "reconstruct",
        "--basis",
        dir.path().join("basis.opcs").to_str().unwrap(),
        "--series",
        dir.path().join("series.csv").to_str().unwrap(),
        "--method",
        "dgi",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("degenerate reference"));
}

#[test]
fn reconstruct_tv_and_dgi_from_files() {
    let dir = tempfile::tempdir().unwrap();
    gen_and_simulate(dir.path(), "comp");
    for method in ["tv", "dgi", "gi", "ci"] {
        let out = opcs(&[
            "reconstruct",
            "--basis",
            dir.path().join("basis.opcs").to_str().unwrap(),
            "--series",
            dir.path().join("series.csv").to_str().unwrap(),
            "--method",
            method,
            "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let stem = format!("recon_{method}");
        assert!(dir.path().join(format!("{stem}.pgm")).exists());
        assert!(dir.path().join(format!("{stem}.csv")).exists());
        assert!(dir.path().join(format!("{stem}.txt")).exists());
    }
}

#[test]
fn cd_profile_of_stored_basis() {
    let dir = tempfile::tempdir().unwrap();
    let out = opcs(&["gen", "--side", "8", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let sub = dir.path().join("cdout");
    let out = opcs(&[
        "cd",
        "--basis",
        dir.path().join("basis.opcs").to_str().unwrap(),
        "--out",
        sub.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let text = fs::read_to_string(sub.join("profile.csv")).unwrap();
    assert!(text.starts_with("sequence_index,group_index,position_in_group,cd_count"));
    assert!(text.lines().nth(1).unwrap().starts_with("1,1,1,1"));
}

#[test]
fn export_dmd_p2_m1_frames() {
    let dir = tempfile::tempdir().unwrap();
    let out = opcs(&["gen", "--side", "2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let out = opcs(&[
        "export-dmd",
        "--basis",
        dir.path().join("basis.opcs").to_str().unwrap(),
        "--m",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let bytes = fs::read(dir.path().join("frames.dmd")).unwrap();
    // header(14) + flag(1) + all-ones frame then all-zeros frame
    assert_eq!(&bytes[15..19], &[0b1100_0000, 0b1100_0000, 0, 0]);
    assert!(dir.path().join("frames.dmd.manifest.txt").exists());
}

#[test]
fn sweep_subcommand_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = opcs(&[
        "sweep",
        "--side",
        "16",
        "--methods",
        "opcs,ci",
        "--ratios",
        "0.1,0.5",
        "--seed",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,ratio,m,rmse,psnr,pearson,seconds,error");
    assert_eq!(lines.len(), 5);
    assert!(dir.path().join("opcs_0.1000.pgm").exists());
    assert!(dir.path().join("ci_0.5000.pgm").exists());
}

#[test]
fn config_file_supplies_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, format!("side=8\nout={}\n", dir.path().display())).unwrap();
    let out = opcs(&["gen", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("basis.opcs").exists());
}

#[test]
fn help_exits_zero() {
    let out = opcs(&["--help"]);
    assert_eq!(code(&out), 0);
}
