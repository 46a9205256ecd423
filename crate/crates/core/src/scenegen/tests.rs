use super::*;
use crate::detector::{CORE_SQUARE, LARGE_TRIANGLE};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn detect(img: &GrayImage) -> Option<crate::detector::Detection> {
    let pre = preprocess(img, 640, 480, PipelineConfig::default().blur_sigma).unwrap();
    detect_at(&pre, 125, &PatternSpec::default(), &crate::detector::DetectorConfig::default())
}

#[test]
fn landmark_dimensions() {
    let lm = build_landmark(&PatternSpec::default());
    let areas = lm.areas();
    let expected = [0.1444, 0.0722, 0.01805, 0.009025];
    for (a, e) in areas.iter().zip(expected) {
        assert!((a - e).abs() < 1e-12, "{a} vs {e}");
    }
    // the core square cannot reach half the small triangle inside it
    let fit = 3f64.sqrt() / (2.0 + 3f64.sqrt());
    let side = lm.shapes[CORE_SQUARE].polygon[0].dist(lm.shapes[CORE_SQUARE].polygon[1]);
    assert!((side - PatternSpec::default().tri2_side_m * fit * CORE_SQUARE_SHRINK).abs() < 1e-12);
    assert!((areas[3] / areas[4] - 2.2).abs() < 0.05);
    assert!(lm.arrow_origin.dist(lm.arrow_tip) > 0.03);
    assert!(lm.arrow_tip.y < lm.arrow_origin.y);
}

#[test]
fn shapes_are_strictly_nested() {
    let lm = build_landmark(&PatternSpec::default());
    for w in lm.shapes.windows(2) {
        for &v in &w[1].polygon {
            assert!(point_in_polygon(&w[0].polygon, v));
            // keep a rim of at least 1 mm
            let n = w[0].polygon.len();
            let rim = (0..n)
                .map(|i| {
                    let (a, b) = (w[0].polygon[i], w[0].polygon[(i + 1) % n]);
                    let e = b - a;
                    ((v.x - a.x) * e.y - (v.y - a.y) * e.x).abs() / e.x.hypot(e.y)
                })
                .fold(f64::INFINITY, f64::min);
            assert!(rim > 1e-3, "{rim}");
        }
    }
}

#[test]
fn nadir_projection_scale_and_offset() {
    let lm = build_landmark(&PatternSpec::default());
    let cam = CameraModel::nadir(0.0, 0.0, 1.5);
    let truth = render_frame(&lm, &cam, 60).unwrap().truth.unwrap();
    assert!((truth.projected_side(0) - DEFAULT_FOCAL_PX * 0.38 / 1.5).abs() < 1e-9);
    assert!(truth.e_o < 1e-9);

    // camera half a meter north of the landmark sees it behind (image -x)
    let cam = CameraModel::nadir(0.5, 0.0, 1.0);
    let truth = render_frame(&lm, &cam, 60).unwrap().truth.unwrap();
    assert!((truth.e_o - DEFAULT_FOCAL_PX * 0.5).abs() < 1e-9);
    assert!(truth.landmark_center.x < 320.0);
}

#[test]
fn yaw_rotates_about_principal_point() {
    let lm = build_landmark(&PatternSpec::default());
    let base = render_frame(&lm, &CameraModel::nadir(0.1, -0.05, 1.2), 60).unwrap().truth.unwrap();
    let phi: f64 = 0.7;
    let cam = CameraModel { yaw: phi, ..CameraModel::nadir(0.1, -0.05, 1.2) };
    let turned = render_frame(&lm, &cam, 60).unwrap().truth.unwrap();
    let c = Point::new(320.0, 240.0);
    // a clockwise yaw (north to east) turns the scene the other way in the image
    let (s, co) = (-phi).sin_cos();
    for (a, b) in base.shapes.iter().flatten().zip(turned.shapes.iter().flatten()) {
        let d = *a - c;
        let r = c + Point::new(d.x * co - d.y * s, d.x * s + d.y * co);
        assert!(r.dist(*b) < 1e-9);
    }
}

#[test]
fn distortion_round_trip() {
    let cam = CameraModel { k1: -0.05, ..CameraModel::nadir(0.2, 0.1, 1.3) };
    for q in [Point::new(3.5, 4.5), Point::new(320.0, 240.0), Point::new(600.2, 31.0)] {
        let g = cam.unproject(q).unwrap();
        assert!(cam.project(g).unwrap().dist(q) < 1e-6);
    }
}

#[test]
fn out_of_view_is_blank() {
    let lm = build_landmark(&PatternSpec::default());
    let r = render_frame(&lm, &CameraModel::nadir(20.0, 0.0, 1.0), 60).unwrap();
    assert!(r.truth.is_none());
    assert!(r.image.data().iter().all(|&v| v == 60));
    assert!(render_frame(&lm, &CameraModel::nadir(0.0, 0.0, -1.0), 60).is_err());
}

#[test]
fn detections_match_projection() {
    let lm = build_landmark(&PatternSpec::default());
    for (i, h) in [0.5, 0.8, 1.0, 1.5, 2.0, 2.5, 3.0].into_iter().enumerate() {
        let cam = CameraModel { yaw: 0.3 * i as f64, ..CameraModel::nadir(0.03 * i as f64, -0.02, h) };
        let r = render_frame(&lm, &cam, 60).unwrap();
        let truth = r.truth.unwrap();
        let det = detect(&r.image).unwrap_or_else(|| panic!("no detection at {h} m"));
        assert!(!det.partial);
        assert!(det.landmark_center.dist(truth.landmark_center) < 2.0, "center at {h}");
        let err = det.l_pmax / truth.l_pmax - 1.0;
        assert!(err.abs() < 0.03, "l_pmax at {h}: {err}");
        let tri = &det.matched.iter().find(|m| m.shape == LARGE_TRIANGLE).unwrap().polygon;
        let hausdorff = tri
            .vertices
            .iter()
            .map(|v| truth.shapes[LARGE_TRIANGLE].iter().map(|t| t.dist(*v)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        assert!(hausdorff < 2.0, "vertices at {h}: {hausdorff}");
    }
}

/// Side times height is constant: single frames while the triangle spans at
/// least 40 px, sub-pixel-averaged frames above that.
#[test]
fn pinhole_inverse_proportionality() {
    let lm = build_landmark(&PatternSpec::default());
    let expected = DEFAULT_FOCAL_PX * PatternSpec::default().tri1_side_m;
    let measure = |h: f64, north: f64, east: f64| {
        let r = render_frame(&lm, &CameraModel::nadir(north, east, h), 60).unwrap();
        detect(&r.image).unwrap().l_pmax * h
    };
    for h in [0.5, 0.7, 0.9, 1.1, 1.25] {
        let p = measure(h, 0.0, 0.0);
        assert!((p / expected - 1.0).abs() < 0.02, "{h}: {p}");
    }
    for h in [1.5, 1.9, 2.2, 2.5] {
        let px = h / DEFAULT_FOCAL_PX;
        let shifts = [(0.0, 0.0), (0.5, 0.25), (0.25, 0.75), (0.75, 0.5)];
        let p = shifts.iter().map(|&(a, b)| measure(h, a * px, b * px)).sum::<f64>() / 4.0;
        assert!((p / expected - 1.0).abs() < 0.02, "{h}: {p}");
    }
}

#[test]
fn close_range_sees_only_the_inner_pair() {
    let lm = build_landmark(&PatternSpec::default());
    // centre 78 px from the left edge: a corner of the larger triangle (half
    // width 101 px) is cut off by the frame, the smaller one (72 px) is whole
    let cam = CameraModel::nadir((320.0 - 78.0) * 0.25 / DEFAULT_FOCAL_PX, 0.0, 0.25);
    let r = render_frame(&lm, &cam, 60).unwrap();
    let det = detect(&r.image).expect("inner pair");
    assert!(det.partial);
    assert_eq!(det.codes(), vec![3, 4]);
    let truth = r.truth.unwrap();
    let inner = truth.projected_side(3);
    assert!((det.l_pmax / inner - 1.0).abs() < 0.03, "{} vs {inner}", det.l_pmax);
}

#[test]
fn calibration_sign_pattern() {
    let lm = build_landmark(&PatternSpec::default());
    let cfg = PipelineConfig::default();
    let heights = [0.5, 0.9, 1.4, 2.0];
    let ideal = synthesize_calibration(&CameraModel::default(), &lm, &cfg, &heights, 120.0).unwrap();
    for r in ideal.rows() {
        assert!((r.l1 - r.l2).abs() < 1.0, "{r:?}");
    }
    let barrel = CameraModel { k1: -0.08, ..CameraModel::default() };
    let table = synthesize_calibration(&barrel, &lm, &cfg, &heights, 120.0).unwrap();
    for r in table.rows() {
        assert!(r.l2 < r.l1, "{r:?}");
    }
    assert!(synthesize_calibration(&barrel, &lm, &cfg, &[1.0], 120.0).is_err());
}

#[test]
fn noise_frames_have_no_landmark() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (i, img) in noise_corpus(60, &mut rng).iter().enumerate() {
        assert!(detect(img).is_none(), "frame {i}");
    }
}

#[test]
fn gradient_spans_amplitude() {
    let img = GrayImage::filled(640, 480, 128);
    let g = add_gradient(&img, 40.0, 0.0);
    assert!((g.get(0, 0) as i32 - 88).abs() <= 1 && (g.get(639, 0) as i32 - 168).abs() <= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = add_gaussian_noise(&img, 5.0, &mut rng);
    let mean = n.data().iter().map(|&v| v as f64).sum::<f64>() / n.data().len() as f64;
    assert!((mean - 128.0).abs() < 0.1);
}

#[test]
fn random_views_keep_the_landmark_central() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let base = CameraModel { k1: -0.05, ..CameraModel::default() };
    for _ in 0..200 {
        let cam = random_view(&mut rng, &base, (0.5, 2.5));
        assert!((0.5..=2.5).contains(&cam.position[2]));
        let q = cam.project(Point::new(0.0, 0.0)).unwrap();
        assert!((q.x - 320.0).abs() <= 160.0 + 1e-6 && (q.y - 240.0).abs() <= 120.0 + 1e-6, "{q:?}");
    }
}


