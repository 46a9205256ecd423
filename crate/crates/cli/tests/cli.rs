use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use topoland::imaging::save_pgm;
use topoland::{CalibrationTable, GrayImage, ThresholdConfig};

fn topoland(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_topoland")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn last_line(o: &Output) -> String {
    stdout(o).lines().last().unwrap_or("").to_string()
}

/// Value of `key=` in a report line.
fn field<'a>(line: &'a str, key: &str) -> &'a str {
    let pat = format!("{key}=");
    line.split_whitespace().find_map(|w| w.strip_prefix(pat.as_str())).unwrap_or_else(|| panic!("{key} in {line}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// A config pointing at a calibration rendered for the default camera.
fn calibrated_config(dir: &Path) -> PathBuf {
    let o = topoland(&["calibrate", "--out", s(dir), "--heights", "0.3,0.5,0.79,1.2,1.6,2.0,2.4,2.8"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let cfg = dir.join("pipeline.cfg");
    fs::write(&cfg, "calibration.file = calibration.cal\n").unwrap();
    cfg
}

#[test]
fn rendered_frame_is_detected_near_truth() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated_config(dir.path());
    let o = topoland(&["generate", "--out", s(dir.path()), "--height", "1.4", "--north", "0.2", "--east", "-0.1"]);
    assert!(o.status.success());
    assert!(last_line(&o).starts_with("generate frames=1"));
    let truth = fs::read_to_string(dir.path().join("frame_0000.txt")).unwrap();
    assert!(truth.lines().filter(|l| !l.starts_with('#')).count() >= 12);

    let o = topoland(&["detect", "--config", s(&cfg), s(&dir.path().join("frame_0000.pgm"))]);
    assert!(o.status.success());
    let out = stdout(&o);
    let line = out.lines().next().unwrap();
    assert_eq!(field(line, "status"), "detected");
    let h: f64 = field(line, "h").parse().unwrap();
    assert!((h - 1.4).abs() < 0.05 * 1.4, "{line}");
    // The camera is 0.2 m north and 0.1 m west of the landmark.
    let (x, y): (f64, f64) = (field(line, "x_w").parse().unwrap(), field(line, "y_w").parse().unwrap());
    assert!((x - 0.2).abs() < 0.02 && (y + 0.1).abs() < 0.02, "{line}");
    assert_eq!(last_line(&o), "detect frames=1 detected=1 missed=0 errors=0");
}

#[test]
fn blank_and_unreadable_frames() {
    let dir = tempfile::tempdir().unwrap();
    let blank = dir.path().join("blank.pgm");
    fs::write(&blank, save_pgm(&GrayImage::filled(640, 480, 50))).unwrap();
    let junk = dir.path().join("junk.pgm");
    fs::write(&junk, b"P5\n2 2\n255\n\x01").unwrap();
    let o = topoland(&["detect", s(&blank), s(&junk), "missing.pgm", s(&blank)]);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(field(lines[0], "status"), "miss");
    assert_eq!(field(lines[1], "status"), "error");
    assert_eq!(field(lines[2], "status"), "error");
    assert_eq!(field(lines[3], "status"), "miss");
    assert_eq!(lines[4], "detect frames=4 detected=0 missed=2 errors=2");

    let o = topoland(&["detect", "missing.pgm"]);
    assert!(!o.status.success());
}

#[test]
fn threshold_recovers_after_brightening() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    // A dim, low-contrast scene the tracker settles on, then the same scene
    // 60 levels brighter (nothing clips).
    let dark = d.join("dark");
    let bright = d.join("bright");
    let gen = |dir: &Path, b: &str| {
        let o = topoland(&["generate", "--out", s(dir), "--height", "1.0", "--contrast", "0.4", "--brightness", b]);
        assert!(o.status.success());
    };
    gen(&dark, "0");
    gen(&bright, "60");
    let (dark, bright) = (dark.join("frame_0000.pgm"), bright.join("frame_0000.pgm"));
    let mut args = vec!["detect".to_string()];
    args.extend((0..30).map(|_| s(&dark).to_string()));
    args.extend((0..30).map(|_| s(&bright).to_string()));
    let args: Vec<&str> = args.iter().map(String::as_str).collect();
    let o = topoland(&args);
    assert!(o.status.success());
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(field(lines[29], "status"), "detected", "the dark scene is acquired");
    let settled: u8 = field(lines[29], "threshold").parse().unwrap();
    assert_eq!(field(lines[30], "status"), "miss", "the step must break the settled threshold");
    let recovered = lines[30..60].iter().position(|l| field(l, "status") == "detected").expect("recovers");
    let cfg = ThresholdConfig::default();
    let bound = cfg.loss_trigger as usize + cfg.first_sweep_len(settled);
    assert!(recovered <= bound, "recovered after {recovered} misses, bound {bound}");
}

#[test]
fn calibration_sign_pattern_with_barrel_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoland(&["calibrate", "--out", s(dir.path()), "--k1", "-0.08"]);
    assert!(o.status.success());
    let line = last_line(&o);
    assert_eq!(field(line.as_str(), "rows"), "7");
    let table = CalibrationTable::parse(&fs::read_to_string(dir.path().join("calibration.cal")).unwrap()).unwrap();
    let shipped = CalibrationTable::measured();
    for (row, measured) in table.rows().iter().zip(shipped.rows()) {
        assert_eq!(row.h, measured.h);
        assert!(row.l2 < row.l1, "{row:?}");
    }
}

#[test]
fn simulate_static_default_lands() {
    let dir = tempfile::tempdir().unwrap();
    let o = topoland(&["simulate", "--out", s(dir.path())]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = last_line(&o);
    assert_eq!(field(&line, "outcome"), "landed");
    assert!(field(&line, "offset").parse::<f64>().unwrap() < 0.1);
    let trace = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next().unwrap(), topoland::sim::CSV_HEADER);
    assert_eq!(trace.lines().count() - 1, field(&line, "frames").parse::<usize>().unwrap());
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let sc = dir.path().join("short.scn");
    fs::write(&sc, "scenario.duration = 1.5\nwind.amplitude = 0.5\n").unwrap();
    let run = |name: &str, seed: &str| {
        let o = topoland(&["simulate", "--scenario", s(&sc), "--seed", seed, "--out", s(dir.path()), "--trace", name]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(field(&last_line(&o), "outcome"), "timeout");
        fs::read(dir.path().join(name)).unwrap()
    };
    let a = run("a.csv", "5");
    assert_eq!(a, run("b.csv", "5"));
    assert_ne!(a, run("c.csv", "6"));
}

#[test]
fn generate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = dir.path().join(sub);
        let o = topoland(&["generate", "--seed", "9", "--count", "2", "--noise", "2", "--sigma", "5", "--out", s(&out)]);
        assert!(o.status.success());
        assert_eq!(last_line(&o), format!("generate frames=2 noise=2 out={}", out.display()));
    }
    for name in ["frame_0000.pgm", "frame_0001.txt", "noise_0001.pgm"] {
        assert_eq!(fs::read(dir.path().join("a").join(name)).unwrap(), fs::read(dir.path().join("b").join(name)).unwrap());
    }
}

#[test]
fn eval_noise_corpus_has_no_false_positives() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = calibrated_config(dir.path());
    let o = topoland(&["eval", "--config", s(&cfg), "--frames", "40", "--noise", "500"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = last_line(&o);
    assert_eq!(field(&line, "false_positives"), "0");
    assert_eq!(field(&line, "noise"), "500");
    assert!(field(&line, "rate").parse::<f64>().unwrap() >= 0.95, "{line}");
}

#[test]
fn invalid_config_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "threshold.step = 16\nthreshold.bogus = 1\n").unwrap();
    let o = topoland(&["eval", "--config", s(&cfg), "--frames", "1", "--noise", "0"]);
    assert!(!o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("threshold.bogus"), "{err}");

    fs::write(&cfg, "calibration.file = nowhere.cal\n").unwrap();
    assert!(!topoland(&["detect", "--config", s(&cfg), "x.pgm"]).status.success());
    assert!(!topoland(&["simulate", "--scenario", "nowhere.scn"]).status.success());
}
