use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use topoland::contours::extract_contours;
use topoland::pipeline::{detect_at, preprocess};
use topoland::scenegen::{build_landmark, render_frame};
use topoland::thresholding::{binarize, histogram, otsu};
use topoland::{CameraModel, GrayImage, PipelineConfig, Roi, Tracker};

fn scene() -> (PipelineConfig, GrayImage) {
    let cfg = PipelineConfig::default();
    let lm = build_landmark(&cfg.pattern);
    let cam = CameraModel { k1: -0.05, yaw: 0.3, ..CameraModel::nadir(0.15, -0.1, 1.2) };
    let frame = render_frame(&lm, &cam, 50).expect("landmark in view").image;
    (cfg, frame)
}

fn stages(c: &mut Criterion) {
    let (cfg, frame) = scene();
    let img = preprocess(&frame, frame.width(), frame.height(), cfg.blur_sigma).unwrap();
    let full = Roi::full(img.width(), img.height());
    let hist = histogram(&img, full).unwrap();
    let t = otsu(&hist).unwrap();
    let bin = binarize(&img, t);

    c.bench_function("preprocess", |b| {
        b.iter(|| preprocess(black_box(&frame), 640, 480, cfg.blur_sigma).unwrap())
    });
    c.bench_function("histogram+otsu", |b| b.iter(|| otsu(&histogram(black_box(&img), full).unwrap()).unwrap()));
    c.bench_function("binarize", |b| b.iter(|| binarize(black_box(&img), t)));
    c.bench_function("extract_contours", |b| b.iter(|| extract_contours(black_box(&bin))));
    c.bench_function("detect_at", |b| b.iter(|| detect_at(black_box(&img), t, &cfg.pattern, &cfg.detector)));
}

fn tracking(c: &mut Criterion) {
    let (cfg, frame) = scene();
    let lm = build_landmark(&cfg.pattern);
    let cam = CameraModel { k1: -0.05, ..CameraModel::nadir(0.0, 0.0, 1.5) };

    c.bench_function("render_frame", |b| b.iter(|| render_frame(&lm, black_box(&cam), 50).unwrap()));

    let mut tracker = Tracker::from_config(cfg.clone()).unwrap();
    for _ in 0..5 {
        tracker.process(&frame).unwrap();
    }
    c.bench_function("tracker_frame_locked", |b| b.iter(|| tracker.process(black_box(&frame)).unwrap()));

    let blank = GrayImage::filled(640, 480, 50);
    c.bench_function("tracker_frame_searching", |b| {
        b.iter_batched(
            || Tracker::from_config(cfg.clone()).unwrap(),
            |mut t| t.process(black_box(&blank)).unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, stages, tracking);
criterion_main!(benches);
