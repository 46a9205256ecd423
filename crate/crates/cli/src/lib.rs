//! `topoland` command line: detection on PGM streams, synthetic data,
//! calibration tables, closed-loop simulation and corpus evaluation.
//!
//! Every command prints a one-line `key=value` summary as its final stdout
//! line.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use topoland::imaging::{load_pgm, save_pgm};
use topoland::pose::estimate_pose;
use topoland::scenegen::{
    add_gaussian_noise, add_gradient, build_landmark, geometric_heights, noise_corpus, perturbed_view, render_frame, synthesize_calibration,
    GroundTruth, Perturbation,
};
use topoland::sim::{self, trace_csv};
use topoland::{CalibrationTable, CameraModel, GrayImage, PipelineConfig, Scenario, Tracker};

#[derive(Debug, Parser)]
#[command(name = "topoland", version, about = "Topological landing-landmark detection and landing simulation")]
pub struct Cli {
    /// Pipeline configuration file (flat key = value).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every random element (corpora, poses, wind).
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the pipeline over PGM frames in order.
    Detect(DetectArgs),
    /// Render landmark frames with ground truth, and clutter frames.
    Generate(GenerateArgs),
    /// Build a calibration table from rendered frames.
    Calibrate(CalibrateArgs),
    /// Fly a closed-loop landing and write its trace.
    Simulate(SimulateArgs),
    /// Detection, centroid and height statistics over a synthetic corpus.
    Eval(EvalArgs),
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(required = true)]
    pub frames: Vec<PathBuf>,
    /// Yaw from north in radians (overrides `pose.alpha`).
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Landmark frames to write.
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    /// Draw random poses (always on when count > 1).
    #[arg(long)]
    pub random: bool,
    #[arg(long, default_value_t = 1.0)]
    pub height: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub north: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub east: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub yaw: f64,
    #[arg(long, default_value_t = 0.6)]
    pub min_height: f64,
    #[arg(long, default_value_t = 2.5)]
    pub max_height: f64,
    #[arg(long, default_value_t = -0.05, allow_hyphen_values = true)]
    pub k1: f64,
    /// Platform level around the landmark.
    #[arg(long, default_value_t = 50)]
    pub background: u8,
    /// Illumination ramp amplitude.
    #[arg(long, default_value_t = 0.0)]
    pub gradient: f64,
    /// Gaussian noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Intensity scale applied to every landmark frame (before the offset).
    #[arg(long, default_value_t = 1.0)]
    pub contrast: f64,
    /// Constant intensity offset added to every landmark frame.
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub brightness: i32,
    /// Landmark-free clutter frames to write.
    #[arg(long, default_value_t = 0)]
    pub noise: usize,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Comma-separated heights in meters (default: the shipped table's).
    #[arg(long, value_delimiter = ',')]
    pub heights: Option<Vec<f64>>,
    /// Offset of the second column, pixels.
    #[arg(long, default_value_t = sim::CALIBRATION_OFFSET_PX)]
    pub d: f64,
    #[arg(long, default_value_t = -0.05, allow_hyphen_values = true)]
    pub k1: f64,
    #[arg(long, default_value_t = topoland::scenegen::DEFAULT_FOCAL_PX)]
    pub focal: f64,
    #[arg(long, default_value = "calibration.cal")]
    pub file: String,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario file (flat key = value); defaults to the static scenario.
    #[arg(long)]
    pub scenario: Option<PathBuf>,
    /// Start from the moving-platform preset instead of the static one.
    #[arg(long)]
    pub moving: bool,
    /// Calibration table; rendered for the scenario camera when absent.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
    #[arg(long, default_value = "trace.csv")]
    pub trace: String,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Rendered landmark frames.
    #[arg(long, default_value_t = 300)]
    pub frames: usize,
    /// Landmark-free clutter frames.
    #[arg(long, default_value_t = 500)]
    pub noise: usize,
    #[arg(long, default_value_t = 0.6)]
    pub min_height: f64,
    #[arg(long, default_value_t = 2.5)]
    pub max_height: f64,
    #[arg(long, default_value_t = 40.0)]
    pub gradient: f64,
    #[arg(long, default_value_t = 5.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = -0.05, allow_hyphen_values = true)]
    pub k1: f64,
    /// Calibration table for height statistics; rendered when absent.
    #[arg(long)]
    pub calibration: Option<PathBuf>,
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p).with_context(|| format!("loading config {}", p.display())),
        None => Ok(PipelineConfig::default()),
    }
}

fn load_table(path: &Path) -> Result<CalibrationTable> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    CalibrationTable::parse(&text).with_context(|| format!("parsing {}", path.display()))
}

fn camera(cfg: &PipelineConfig, k1: f64) -> CameraModel {
    CameraModel {
        k1,
        width: cfg.camera.width,
        height: cfg.camera.height,
        principal: cfg.camera.image_center,
        ..CameraModel::default()
    }
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

/// Runs one command, writing reports to `out`.
pub fn run(cli: &Cli, out: &mut impl Write) -> Result<()> {
    let cfg = load_config(cli.config.as_deref())?;
    let seed = cli.seed.unwrap_or(1);
    match &cli.command {
        Command::Detect(a) => detect(&cfg, a, out),
        Command::Generate(a) => generate(&cfg, a, seed, &cli.out, out),
        Command::Calibrate(a) => calibrate(&cfg, a, &cli.out, out),
        Command::Simulate(a) => simulate(&cfg, a, cli.seed, &cli.out, out),
        Command::Eval(a) => eval(&cfg, a, seed, out),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|v| format!("{v:.4}")).unwrap_or_default()
}

fn detect(cfg: &PipelineConfig, a: &DetectArgs, out: &mut impl Write) -> Result<()> {
    let alpha = a.alpha.unwrap_or(cfg.alpha);
    let mut tracker = Tracker::from_config(cfg.clone())?;
    let (mut hits, mut misses, mut errors) = (0usize, 0usize, 0usize);
    for path in &a.frames {
        let frame = fs::read(path).map_err(anyhow::Error::from).and_then(|b| Ok(load_pgm(&b)?));
        let frame = match frame {
            Ok(f) => f,
            Err(e) => {
                errors += 1;
                writeln!(out, "frame={} status=error message=\"{e}\"", path.display())?;
                continue;
            }
        };
        let r = tracker.process_with_yaw(&frame, alpha)?;
        let ms = r.elapsed.as_secs_f64() * 1e3;
        match &r.detection {
            Some(d) => {
                hits += 1;
                let codes: String = d.codes().iter().map(|c| c.to_string()).collect();
                let p = r.pose.as_ref();
                writeln!(
                    out,
                    "frame={} status=detected codes={codes} partial={} l_pmax={:.3} x_w={} y_w={} h={} theta_w={} \
                     pose_error={} threshold={} ms={ms:.2}",
                    path.display(),
                    d.partial,
                    d.l_pmax,
                    fmt_opt(p.map(|p| p.x_w)),
                    fmt_opt(p.map(|p| p.y_w)),
                    fmt_opt(p.map(|p| p.h)),
                    fmt_opt(p.and_then(|p| p.theta_w)),
                    r.pose_error.as_ref().map(|e| format!("\"{e}\"")).unwrap_or_default(),
                    r.threshold,
                )?;
            }
            None => {
                misses += 1;
                writeln!(
                    out,
                    "frame={} status=miss threshold={} searching={} lost={} ms={ms:.2}",
                    path.display(),
                    r.threshold,
                    r.searching,
                    r.lost
                )?;
            }
        }
    }
    writeln!(out, "detect frames={} detected={hits} missed={misses} errors={errors}", a.frames.len())?;
    if hits + misses == 0 {
        bail!("no readable frames");
    }
    Ok(())
}

fn truth_text(t: &GroundTruth, cam: &CameraModel) -> String {
    let [n, e, h] = cam.position;
    format!(
        "# height={h:.6} north={n:.6} east={e:.6} yaw={:.6} k1={}\n# center {:.4} {:.4}\n# l_pmax {:.4} e_o {:.4}\n{}",
        cam.yaw,
        cam.k1,
        t.landmark_center.x,
        t.landmark_center.y,
        t.l_pmax,
        t.e_o,
        t.to_text()
    )
}

fn generate(cfg: &PipelineConfig, a: &GenerateArgs, seed: u64, dir: &Path, out: &mut impl Write) -> Result<()> {
    let lm = build_landmark(&cfg.pattern);
    let base = camera(cfg, a.k1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let perturb = Perturbation {
        heights: (a.min_height, a.max_height),
        gradient: a.gradient,
        noise_sigma: a.sigma,
        background: (a.background, a.background),
    };
    let random = a.random || a.count > 1;
    if random && !(a.min_height > 0.0 && a.max_height >= a.min_height) {
        bail!("need 0 < --min-height <= --max-height");
    }
    for i in 0..a.count {
        let (img, truth, cam) = if random {
            perturbed_view(&mut rng, &lm, &base, &perturb)?
        } else {
            let cam = CameraModel { position: [a.north, a.east, a.height], yaw: a.yaw, ..base };
            let r = render_frame(&lm, &cam, a.background)?;
            let Some(truth) = r.truth else { bail!("the landmark is not in view from that pose") };
            let lit = add_gradient(&r.image, a.gradient, 0.0);
            (add_gaussian_noise(&lit, a.sigma, &mut rng), truth, cam)
        };
        let img = if a.contrast != 1.0 {
            GrayImage::from_fn(img.width(), img.height(), |x, y| {
                (img.get(x, y) as f64 * a.contrast).round().clamp(0.0, 255.0) as u8
            })
        } else {
            img
        };
        let img = if a.brightness != 0 { img.brightened(a.brightness) } else { img };
        write_file(dir, &format!("frame_{i:04}.pgm"), &save_pgm(&img))?;
        write_file(dir, &format!("frame_{i:04}.txt"), truth_text(&truth, &cam).as_bytes())?;
    }
    for (i, img) in noise_corpus(a.noise, &mut rng).iter().enumerate() {
        write_file(dir, &format!("noise_{i:04}.pgm"), &save_pgm(img))?;
    }
    writeln!(out, "generate frames={} noise={} out={}", a.count, a.noise, dir.display())?;
    Ok(())
}

fn calibrate(cfg: &PipelineConfig, a: &CalibrateArgs, dir: &Path, out: &mut impl Write) -> Result<()> {
    let heights = match &a.heights {
        Some(h) => h.clone(),
        None => CalibrationTable::measured().rows().iter().map(|r| r.h).collect(),
    };
    let cam = CameraModel { focal_px: a.focal, ..camera(cfg, a.k1) };
    let table = synthesize_calibration(&cam, &build_landmark(&cfg.pattern), cfg, &heights, a.d)?;
    let path = write_file(dir, &a.file, table.to_text().as_bytes())?;
    let below = table.rows().iter().filter(|r| r.l2 < r.l1).count();
    writeln!(out, "calibrate rows={} d={} l2_below_l1={below} file={}", table.rows().len(), a.d, path.display())?;
    Ok(())
}

fn simulate(cfg: &PipelineConfig, a: &SimulateArgs, seed: Option<u64>, dir: &Path, out: &mut impl Write) -> Result<()> {
    let mut scenario = match &a.scenario {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let mut s = Scenario::parse(&text).with_context(|| format!("parsing {}", p.display()))?;
            if a.moving {
                s.platform_speed_kmh = Scenario::moving().platform_speed_kmh;
            }
            s
        }
        None if a.moving => Scenario::moving(),
        None => Scenario::default(),
    };
    scenario.pipeline = cfg.clone();
    if let Some(seed) = seed {
        scenario.seed = seed;
    }
    if let Some(p) = &a.calibration {
        scenario.calibration = Some(load_table(p)?);
    }
    let result = sim::run(&scenario)?;
    let path = write_file(dir, &a.trace, trace_csv(&result.trace).as_bytes())?;
    writeln!(out, "simulate outcome={} frames={} trace={}", result.outcome, result.trace.len(), path.display())?;
    Ok(())
}

/// Per-frame evaluation result.
struct FrameEval {
    detected: bool,
    centroid_err: Option<f64>,
    height_err: Option<f64>,
}

fn eval(cfg: &PipelineConfig, a: &EvalArgs, seed: u64, out: &mut impl Write) -> Result<()> {
    let lm = build_landmark(&cfg.pattern);
    let base = camera(cfg, a.k1);
    let table = match &a.calibration {
        Some(p) => load_table(p)?,
        None => synthesize_calibration(
            &base,
            &lm,
            cfg,
            &geometric_heights(0.3, 2.8, 24),
            sim::CALIBRATION_OFFSET_PX,
        )?,
    };
    let perturb = Perturbation {
        heights: (a.min_height, a.max_height),
        gradient: a.gradient,
        noise_sigma: a.sigma,
        ..Perturbation::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut frames = Vec::with_capacity(a.frames);
    for _ in 0..a.frames {
        frames.push(perturbed_view(&mut rng, &lm, &base, &perturb)?);
    }
    let noise = noise_corpus(a.noise, &mut rng);

    // Frames are independent; each gets a fresh threshold state.
    let results: Vec<FrameEval> = parallel_map(&frames, |(img, truth, cam)| {
        let mut tracker = Tracker::new(cfg.clone(), table.clone()).expect("validated config");
        let r = tracker.process_with_yaw(img, cam.yaw).expect("frame matches the camera");
        let det = r.detection.as_ref();
        let pose = det.and_then(|d| estimate_pose(d, &cfg.camera, &table, &cfg.pattern, cam.yaw).ok());
        FrameEval {
            detected: det.is_some(),
            centroid_err: det.map(|d| d.landmark_center.dist(truth.landmark_center)),
            height_err: pose.map(|p| (p.h - cam.position[2]).abs() / cam.position[2]),
        }
    });
    let false_pos = parallel_map(&noise, |img| {
        let mut tracker = Tracker::new(cfg.clone(), table.clone()).expect("validated config");
        tracker.process(img).expect("frame matches the camera").detected()
    })
    .into_iter()
    .filter(|&d| d)
    .count();

    let detected = results.iter().filter(|r| r.detected).count();
    let stats = |v: Vec<f64>| -> (f64, f64) {
        if v.is_empty() {
            return (f64::NAN, f64::NAN);
        }
        (v.iter().sum::<f64>() / v.len() as f64, v.iter().copied().fold(0.0, f64::max))
    };
    let (c_mean, c_max) = stats(results.iter().filter_map(|r| r.centroid_err).collect());
    let heights: Vec<f64> = results.iter().filter_map(|r| r.height_err).collect();
    let n_h = heights.len();
    let (h_mean, h_max) = stats(heights);
    let rate = if a.frames == 0 { 0.0 } else { detected as f64 / a.frames as f64 };
    writeln!(
        out,
        "eval frames={} detected={detected} rate={rate:.4} centroid_mean_px={c_mean:.3} centroid_max_px={c_max:.3} \
         height_frames={n_h} height_mean_rel={h_mean:.4} height_max_rel={h_max:.4} noise={} false_positives={false_pos}",
        a.frames, a.noise
    )?;
    Ok(())
}

/// Order-preserving map over scoped threads.
fn parallel_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len().max(1));
    let chunk = items.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> =
            items.chunks(chunk).map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>())).collect();
        handles.into_iter().flat_map(|h| h.join().expect("worker panicked")).collect()
    })
}
