mod common;

use std::path::Path;
use std::process::Command;

use common::synthetic_hr;
use etdm::pipeline::{read_frames, write_frames, FrameFormat, SequenceReport};

fn etdm(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_etdm")).args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn setup(dir: &Path, frames: usize) {
    write_frames(&dir.join("hr"), &synthetic_hr(21, frames, 32, 32), FrameFormat::Png).unwrap();
    let out = etdm(&["degrade", "--input", s(&dir.join("hr")), "--output", s(&dir.join("lr"))]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_run_through_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, 4);
    let cfg = d.join("run.cfg");
    std::fs::write(
        &cfg,
        format!(
            "# oracle check\ninput={}\nhr={}\nheads=oracle\nrefiner=average\nbuffer=2\n",
            s(&d.join("lr")),
            s(&d.join("hr"))
        ),
    )
    .unwrap();
    let report = d.join("r.csv");
    let out = etdm(&["run", "--config", s(&cfg), "--output", s(&d.join("sr")), "--report", s(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("mean_psnr_db=inf"));
    let r = SequenceReport::read_csv(&report).unwrap();
    assert_eq!(r.frames.len(), 4);
    assert!(r.frames.iter().all(|f| f.psnr_db.is_infinite() && f.ssim == 1.0));
    let (sr, _) = read_frames(&d.join("sr"), etdm::image::Tier::Hr).unwrap();
    let (hr, _) = read_frames(&d.join("hr"), etdm::image::Tier::Hr).unwrap();
    assert_eq!(sr, hr);
}

#[test]
fn flag_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, 3);
    let cfg = d.join("bad.cfg");
    std::fs::write(&cfg, "heads=bogus\n").unwrap();
    let (lr, sr, hr) = (d.join("lr"), d.join("sr"), d.join("hr"));
    let mut args = vec!["run", "--input", s(&lr), "--output", s(&sr), "--hr", s(&hr)];
    args.extend(["--config", s(&cfg)]);
    assert_eq!(etdm(&args).status.code(), Some(3));
    args.extend(["--heads", "oracle", "--refiner", "average"]);
    let out = etdm(&args);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, 3);
    let lr = d.join("lr");
    let sr = d.join("sr");
    assert_eq!(etdm(&["--help"]).status.code(), Some(0));
    assert_eq!(etdm(&["run", "--bogus"]).status.code(), Some(3));
    assert_eq!(etdm(&["run", "--input", s(&lr), "--output", s(&sr), "--tau", "2"]).status.code(), Some(3));
    let missing = d.join("nope");
    assert_eq!(
        etdm(&["run", "--input", s(&missing), "--output", s(&sr), "--buffer", "0", "--heads", "network", "--branch-channels", "4", "--trunk-blocks", "1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        etdm(&["run", "--input", s(&lr), "--output", s(&sr), "--heads", "oracle"]).status.code(),
        Some(2)
    );
    let wfile = d.join("w.bin");
    std::fs::write(&wfile, b"ETDMgarbage").unwrap();
    assert_eq!(
        etdm(&["run", "--input", s(&lr), "--output", s(&sr), "--weights", s(&wfile)]).status.code(),
        Some(4)
    );
    assert_eq!(
        etdm(&["run", "--input", s(&lr), "--output", s(&sr), "--weights", s(&wfile), "--seed", "1"]).status.code(),
        Some(3)
    );
}

#[test]
fn init_weights_then_run_with_file() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    setup(d, 3);
    let wfile = d.join("w.bin");
    let small = ["--branch-channels", "4", "--trunk-blocks", "1", "--refine-channels", "4", "--refine-blocks", "1"];
    let mut args = vec!["init-weights", "--output", s(&wfile), "--buffer", "1", "--seed", "5"];
    args.extend(small);
    assert!(etdm(&args).status.success());
    let run = |buffer: &str| {
        etdm(&["run", "--input", s(&d.join("lr")), "--output", s(&d.join("sr")), "--weights", s(&wfile), "--buffer", buffer])
    };
    assert!(run("1").status.success());
    assert_eq!(run("2").status.code(), Some(4));
}
