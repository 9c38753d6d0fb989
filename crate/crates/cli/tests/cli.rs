//! End-to-end checks of the command-line interface: exit codes, artifact
//! shapes, and byte-identical reruns.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use omnistereo::rig::{render_spec, RigSpec};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_omnistereo"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn omnistereo")
}

fn write_big_config(dir: &Path) -> PathBuf {
    let path = dir.join("big.rig");
    std::fs::write(&path, render_spec(&RigSpec::big_rig())).unwrap();
    path
}

#[test]
fn missing_subcommand_is_a_usage_error() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(2));
    let text = String::from_utf8_lossy(&out.stderr);
    assert!(text.contains("Usage"), "no usage text: {text}");
}

#[test]
fn bad_config_is_a_domain_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.rig");
    std::fs::write(&cfg, "k1 = 1.0\n").unwrap();
    let out = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn analyze_reports_reference_height_and_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_big_config(dir.path());
    let out_path = dir.path().join("analyze.json");
    let csv_path = dir.path().join("analyze.csv");
    let out = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    // Provenance: the spec hash goes to the log stream.
    let log = String::from_utf8_lossy(&out.stderr);
    assert!(log.contains(&format!("{:016x}", RigSpec::big_rig().spec_hash())));

    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&out_path).unwrap()).unwrap();
    let h = doc["h_sys_mm"].as_f64().unwrap();
    assert!((h - 150.00).abs() < 0.05, "h_sys {h}");
    assert!((doc["baseline_mm"].as_f64().unwrap() - 131.61).abs() < 0.01);
    assert!(doc["resolution"]["mirror1"].as_array().unwrap().len() == 64);
    let first = std::fs::read(&out_path).unwrap();
    let first_csv = std::fs::read(&csv_path).unwrap();

    // Re-running writes byte-identical artifacts.
    let out = run(&[
        "analyze",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--csv",
        csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(std::fs::read(&out_path).unwrap(), first);
    assert_eq!(std::fs::read(&csv_path).unwrap(), first_csv);
}

#[test]
fn optimize_finds_a_strong_feasible_design() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_big_config(dir.path());
    let report_path = dir.path().join("report.json");
    let out = run(&[
        "optimize",
        "--config",
        cfg.to_str().unwrap(),
        "--seeds",
        "4",
        "--seed",
        "0",
        "--out",
        report_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&report_path).unwrap()).unwrap();
    assert!(doc["b_star_mm"].as_f64().unwrap() >= 125.0);
    assert!(doc["max_violation"].as_f64().unwrap() <= 1e-6);
    assert_eq!(doc["constraints"].as_array().unwrap().len(), 9);
}

#[test]
fn sweep_hits_the_reference_range_bracket() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_big_config(dir.path());
    let out_path = dir.path().join("sweep.csv");
    let out = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&out_path).unwrap();
    let first = text.lines().nth(1).unwrap();
    let rho: f64 = first.split(',').nth(1).unwrap().parse().unwrap();
    assert!((18_000.0..=28_000.0).contains(&rho), "rho {rho}");
}

#[test]
fn lut_rectify_and_triangulate_chain() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_big_config(dir.path());
    let lut_path = dir.path().join("m1.lut");
    let out = run(&[
        "lut",
        "--config",
        cfg.to_str().unwrap(),
        "--mirror",
        "1",
        "--width",
        "320",
        "--out",
        lut_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    // Constant gray omnidirectional frame.
    let spec = RigSpec::big_rig();
    let image = omnistereo::pnm::PnmImage::Gray(omnistereo::pnm::GrayImage::filled(
        spec.camera.width,
        spec.camera.height,
        180,
    ));
    let img_path = dir.path().join("omni.pgm");
    omnistereo::pnm::write_pnm(&img_path, &image).unwrap();
    let pan_path = dir.path().join("pan.pgm");
    let out = run(&[
        "rectify",
        "--config",
        cfg.to_str().unwrap(),
        "--lut",
        lut_path.to_str().unwrap(),
        "--image",
        img_path.to_str().unwrap(),
        "--out",
        pan_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let pan = omnistereo::pnm::read_pnm(&pan_path).unwrap().to_gray();
    assert!(pan.data.contains(&180));

    // Triangulate a correspondence generated by the forward model.
    let geom = omnistereo::RigGeometry::new(&spec).unwrap();
    let p = nalgebra::Vector3::new(800.0, 150.0, -20.0);
    let m1 = geom.project(&p, omnistereo::Mirror::One).unwrap();
    let m2 = geom.project(&p, omnistereo::Mirror::Two).unwrap();
    let pairs_path = dir.path().join("pairs.txt");
    std::fs::write(
        &pairs_path,
        format!("{} {} {} {}\nnan nan nan nan\n", m1.u, m1.v, m2.u, m2.v),
    )
    .unwrap();
    let cloud_path = dir.path().join("cloud.txt");
    let out = run(&[
        "triangulate",
        "--config",
        cfg.to_str().unwrap(),
        "--pairs",
        pairs_path.to_str().unwrap(),
        "--covariance",
        "--out",
        cloud_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cloud = std::fs::read_to_string(&cloud_path).unwrap();
    let lines: Vec<&str> = cloud.lines().collect();
    assert_eq!(lines.len(), 1, "nan row must be skipped");
    let fields: Vec<f64> = lines[0]
        .split_whitespace()
        .map(|f| f.parse().unwrap())
        .collect();
    assert_eq!(fields.len(), 12); // x y z r g b + 6 covariance entries
    assert!((fields[0] - p.x).abs() < 1e-3);
    assert!((fields[1] - p.y).abs() < 1e-3);
    assert!((fields[2] - p.z).abs() < 1e-3);
}

#[test]
fn match_recovers_a_synthetic_shift() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_big_config(dir.path());
    let textured = |shift: usize| {
        let mut im = omnistereo::pnm::GrayImage::new(48, 64);
        for y in 0..64usize {
            for x in 0..48usize {
                let yy = y as f64 - shift as f64;
                let val = 128.0 + 60.0 * (0.4 * yy).sin() + 30.0 * (0.3 * x as f64).cos();
                im.set(x, y, val.clamp(0.0, 255.0) as u8);
            }
        }
        omnistereo::pnm::PnmImage::Gray(im)
    };
    let ref_path = dir.path().join("ref.pgm");
    let tgt_path = dir.path().join("tgt.pgm");
    omnistereo::pnm::write_pnm(&ref_path, &textured(0)).unwrap();
    omnistereo::pnm::write_pnm(&tgt_path, &textured(5)).unwrap();
    let out_path = dir.path().join("disp.csv");
    let out = run(&[
        "match",
        "--config",
        cfg.to_str().unwrap(),
        "--reference",
        ref_path.to_str().unwrap(),
        "--target",
        tgt_path.to_str().unwrap(),
        "--window",
        "7",
        "--max-disparity",
        "12",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&out_path).unwrap();
    let mut errors: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|line| {
            let d: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
            (d - 5.0).abs()
        })
        .collect();
    assert!(errors.len() > 400, "only {} matches", errors.len());
    errors.sort_by(f64::total_cmp);
    assert!(errors[errors.len() / 2] < 0.25, "median error {}", errors[errors.len() / 2]);
}

#[test]
fn verify_passes_on_the_big_rig() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_big_config(dir.path());
    let out_path = dir.path().join("rmse.csv");
    let out = run(&[
        "verify",
        "--config",
        cfg.to_str().unwrap(),
        "--noise-px",
        "0.1",
        "--seed",
        "7",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS rmse strictly increasing"));
    assert!(!stdout.contains("FAIL"));
    let table = std::fs::read_to_string(&out_path).unwrap();
    assert_eq!(table.lines().count(), 7); // header + 6 ranges
}
