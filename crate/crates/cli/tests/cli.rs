//! End-to-end runs of the `scsa` binary on small generated images.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use image::{GrayImage, Luma, Rgb, RgbImage};
use ndarray::Array2;
use scsa_core::reconstruct::reconstruct_lines;
use scsa_core::ScsaParams;
use tempfile::TempDir;

fn scsa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_scsa"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = scsa(args);
    assert!(
        out.status.success(),
        "scsa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Low-contrast color test card, varied by `variant`.
fn write_card(path: &Path, size: u32, variant: u32) {
    let img = RgbImage::from_fn(size, size, |x, y| {
        let t = ((x * 7 + y * 3 + variant * 11) % 40) as u8;
        let v = 100 + t + if (x / 4 + y / 4) % 2 == 0 { 12 } else { 0 };
        Rgb([v, v - 10, v - 25])
    });
    img.save(path).unwrap();
}

fn tmp() -> TempDir {
    tempfile::tempdir().unwrap()
}

#[test]
fn zero_image_reconstructs_to_zero() {
    let dir = tmp();
    let input = dir.path().join("black.png");
    GrayImage::new(8, 8).save(&input).unwrap();
    let output = dir.path().join("out.png");
    ok(&["reconstruct", s(&input), "--h", "1", "--gamma", "4", "--output", s(&output)]);
    let back = image::open(&output).unwrap().to_luma8();
    assert!(back.pixels().all(|p| p.0[0] == 0));

    let enhanced = dir.path().join("enh.png");
    ok(&["enhance", s(&input), "--output", s(&enhanced), "--gammas", "3", "--k", "1"]);
    let back = image::open(&enhanced).unwrap().to_rgb8();
    assert!(back.pixels().all(|p| p.0 == [0, 0, 0]));
}

#[test]
fn reconstruct_matches_library_and_sweeps_gamma() {
    let dir = tmp();
    let input = dir.path().join("ramp.png");
    let img = GrayImage::from_fn(12, 10, |x, y| Luma([(40 + 9 * x + 5 * y) as u8]));
    img.save(&input).unwrap();

    let output = dir.path().join("rec.png");
    let stdout = ok(&["reconstruct", s(&input), "--h", "0.5", "--gamma", "2", "--output", s(&output)]);
    assert!(stdout.contains("mse="));
    let plane = Array2::from_shape_fn((10, 12), |(r, c)| f64::from(img.get_pixel(c as u32, r as u32).0[0]));
    let want = reconstruct_lines(plane.view(), ScsaParams::new(0.5, 2.0).unwrap()).unwrap();
    let got = image::open(&output).unwrap().to_luma8();
    for ((r, c), &v) in want.indexed_iter() {
        let expected = v.round().clamp(0.0, 255.0);
        assert!((f64::from(got.get_pixel(c as u32, r as u32).0[0]) - expected).abs() <= 1.0);
    }

    ok(&["reconstruct", s(&input), "--h", "1", "--gamma", "1,4", "--output", s(&output), "--normalize"]);
    for g in ["1", "4"] {
        let swept = image::open(dir.path().join(format!("rec_g{g}.png"))).unwrap().to_luma8();
        let (lo, hi) = swept.pixels().fold((255, 0), |(l, h), p| (p.0[0].min(l), p.0[0].max(h)));
        assert_eq!((lo, hi), (0, 255));
    }
}

#[test]
fn enhance_is_deterministic_and_writes_sidecars() {
    let dir = tmp();
    let input = dir.path().join("card.png");
    write_card(&input, 16, 0);
    let run = |name: &str| -> (Vec<u8>, String, PathBuf) {
        let out = dir.path().join(name);
        ok(&["enhance", s(&input), "--output", s(&out), "--seed", "5"]);
        let json = std::fs::read_to_string(out.with_extension("json")).unwrap();
        (std::fs::read(&out).unwrap(), json, out)
    };
    let (a, a_json, a_path) = run("a.png");
    let (b, b_json, _) = run("b.png");
    assert_eq!(a, b);
    let strip = |j: &str| {
        let mut v: serde_json::Value = serde_json::from_str(j).unwrap();
        for key in ["output", "histogram"] {
            v.as_object_mut().unwrap().remove(key);
        }
        v
    };
    assert_eq!(strip(&a_json), strip(&b_json));

    let sidecar: serde_json::Value = serde_json::from_str(&a_json).unwrap();
    let k = sidecar["params"]["k"].as_u64().unwrap() as usize;
    assert_eq!(sidecar["params"]["gammas"].as_array().unwrap().len(), k);
    assert!(sidecar["front"].as_object().is_some());
    assert!(sidecar["metrics"]["entropy"].as_f64().unwrap() > 0.0);

    let hist = std::fs::read_to_string(dir.path().join("a_hist.csv")).unwrap();
    let lines: Vec<&str> = hist.lines().collect();
    assert_eq!(lines[0], "bin,count_before,count_after");
    assert_eq!(lines.len(), 257);
    let total: u64 = lines[1..].iter().map(|l| l.split(',').nth(2).unwrap().parse::<u64>().unwrap()).sum();
    assert_eq!(total, 256);
    assert!(a_path.exists());
}

#[test]
fn fixed_parameters_and_config_file() {
    let dir = tmp();
    let input = dir.path().join("card.png");
    write_card(&input, 14, 1);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"h": 0.8, "gammas": [2.0, 6.0], "k": 2}"#).unwrap();
    let out = dir.path().join("fixed.png");
    ok(&["enhance", s(&input), "--output", s(&out), "--config", s(&cfg)]);
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(sidecar["params"]["h"], 0.8);
    assert_eq!(sidecar["params"]["gammas"], serde_json::json!([2.0, 6.0]));

    let bad = scsa(&["enhance", s(&input), "--output", s(&out), "--gammas", "2,3,4", "--k", "2"]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn metrics_identity_and_size_mismatch() {
    let dir = tmp();
    let a = dir.path().join("a.png");
    write_card(&a, 16, 2);
    let stdout = ok(&["metrics", s(&a), s(&a)]);
    let report: serde_json::Value = serde_json::from_str(stdout.lines().next().unwrap()).unwrap();
    assert_eq!(report["mse"], 0.0);
    assert_eq!(report["psnr"], "inf");
    assert_eq!(report["ssim"], 1.0);
    assert_eq!(report["gmsd"], 0.0);
    assert!((report["pcqi"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(stdout.lines().nth(1).unwrap().starts_with("mse,psnr"));

    let small = dir.path().join("small.png");
    write_card(&small, 12, 2);
    let out = scsa(&["metrics", s(&a), s(&small)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn batch_reports_every_image_and_is_reproducible() {
    let dir = tmp();
    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    for i in 0..3 {
        write_card(&data.join(format!("img{i}.png")), 12, i);
    }
    std::fs::write(data.join("notes.txt"), "ignored").unwrap();
    let report = dir.path().join("report.csv");
    let enhanced = dir.path().join("enhanced");
    let args = ["batch", s(&data), "--report", s(&report), "--output", s(&enhanced), "--seed", "1"];
    ok(&args);
    let first = std::fs::read_to_string(&report).unwrap();
    let rows: Vec<&str> = first.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("image,"));
    assert!(rows[1].starts_with("img0.png") && rows[3].starts_with("img2.png"));
    assert!(rows[4].starts_with("mean,"));
    assert_eq!(std::fs::read_dir(&enhanced).unwrap().count(), 3);

    ok(&["--jobs", "1", "batch", s(&data), "--report", s(&report), "--seed", "1"]);
    assert_eq!(std::fs::read_to_string(&report).unwrap(), first);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(report.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 3);
}

#[test]
fn optimize_prints_front() {
    let dir = tmp();
    let input = dir.path().join("card.png");
    write_card(&input, 12, 4);
    let stdout = ok(&["optimize", s(&input), "--seed", "2"]);
    let report: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let k = report["k"].as_u64().unwrap() as usize;
    assert_eq!(report["gammas"].as_array().unwrap().len(), k);
    assert!(!report["front"]["members"].as_array().unwrap().is_empty());
    assert_eq!(report["history"].as_array().unwrap().len(), 11);
}

#[test]
fn error_exit_codes() {
    let dir = tmp();
    let broken = dir.path().join("broken.png");
    std::fs::write(&broken, b"not an image").unwrap();
    let out = dir.path().join("o.png");
    assert_eq!(scsa(&["enhance", s(&broken), "--output", s(&out)]).status.code(), Some(3));
    let missing = dir.path().join("missing.png");
    assert_eq!(scsa(&["metrics", s(&missing), s(&missing)]).status.code(), Some(3));
    let text = dir.path().join("a.txt");
    assert_eq!(scsa(&["enhance", s(&text), "--output", s(&out)]).status.code(), Some(2));
    assert_eq!(scsa(&["--jobs", "0", "metrics", s(&broken), s(&broken)]).status.code(), Some(2));

    let empty = dir.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    std::fs::write(empty.join("bad.png"), b"junk").unwrap();
    let report = dir.path().join("r.csv");
    assert_eq!(scsa(&["batch", s(&empty), "--report", s(&report)]).status.code(), Some(1));
}
