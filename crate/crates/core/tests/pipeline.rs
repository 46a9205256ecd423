//! Rendered frames through PGM and the tracker, as a camera feed would arrive.

use topoland::imaging::{load_pgm, save_pgm};
use topoland::scenegen::{build_landmark, geometric_heights, render_frame, synthesize_calibration};
use topoland::{CameraModel, PipelineConfig, Tracker};

#[test]
fn descending_sequence_tracks_pose() {
    let cfg = PipelineConfig::default();
    let lm = build_landmark(&cfg.pattern);
    let cam = CameraModel { k1: -0.05, ..CameraModel::default() };
    let table = synthesize_calibration(&cam, &lm, &cfg, &geometric_heights(0.3, 2.8, 16), 160.0).unwrap();
    let mut tracker = Tracker::new(cfg, table).unwrap();

    let n = 40;
    let mut detected = 0;
    for i in 0..n {
        let s = i as f64 / (n - 1) as f64;
        let (north, east, h, yaw) = (0.4 - 0.35 * s, -0.3 + 0.25 * s, 2.4 - 1.8 * s, 0.2 + 0.5 * s);
        let view = CameraModel { position: [north, east, h], yaw, ..cam };
        let bytes = save_pgm(&render_frame(&lm, &view, 45).unwrap().image);
        let frame = load_pgm(&bytes).unwrap();
        let report = tracker.process_with_yaw(&frame, yaw).unwrap();
        let Some(p) = report.pose else { continue };
        detected += 1;
        assert!((p.h - h).abs() <= 0.05 * h, "frame {i}: h {} vs {h}", p.h);
        let tol = 0.03 + 0.03 * h;
        assert!((p.x_w - north).abs() < tol && (p.y_w - east).abs() < tol, "frame {i}: ({}, {}) vs ({north}, {east})", p.x_w, p.y_w);
    }
    assert!(detected >= n - 2, "{detected} of {n} frames");
    assert!(!tracker.state.lost);
}

#[test]
fn tracker_gives_up_then_reacquires() {
    let cfg = PipelineConfig::default();
    let lm = build_landmark(&cfg.pattern);
    let cam = CameraModel { k1: -0.05, ..CameraModel::nadir(0.1, 0.1, 1.2) };
    let frame = render_frame(&lm, &cam, 50).unwrap().image;
    let blank = topoland::GrayImage::filled(640, 480, 50);
    let mut tracker = Tracker::from_config(cfg).unwrap();
    assert!(tracker.process(&frame).unwrap().detected());
    let mut lost_after = None;
    for i in 0..200 {
        if tracker.process(&blank).unwrap().lost {
            lost_after = Some(i + 1);
            break;
        }
    }
    assert!(lost_after.is_some(), "a blank feed must end in the lost state");
    let again = (0..40).position(|_| tracker.process(&frame).unwrap().detected());
    assert!(again.is_some(), "lost state keeps searching");
}
