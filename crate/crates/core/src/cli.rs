//! Command-line front end.
//!
//! Every option has a key in a flat `key=value` settings map. Values are
//! resolved in order: built-in defaults, then the `--config` file, then
//! `--set key=value` pairs, then dedicated flags. Unknown keys are rejected.
//! The resolved map is written to `<out>/manifest.txt`, which is itself a
//! valid config file, and its SHA-256 is stamped on every CSV output.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::baseline::BaselineDetector;
use crate::classifier::{self, LinearModel, TrainConfig};
use crate::dataset::{self, simulate_sample, DatasetConfig};
use crate::detector::{self, Component};
use crate::error::{Error, Result};
use crate::eval::analysis::{self, AnalysisParams};
use crate::eval::bench::{bench_frame, benchmark};
use crate::eval::sweep::{rows_csv, run_sweep, summarize, Detectors, Method, SweepConfig, SweepKind};
use crate::growth::{self, GrowthConfig};
use crate::image::{background_stats, gaussian_background, Mask, NoiseParams};
use crate::pgm;
use crate::rng;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_INVARIANT: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "streaklite", version, about = "Faint streak detection on star-camera frames")]
pub struct Cli {
    /// Flat key=value config file.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Master seed; required by every randomized command.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker thread cap (default: available cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output directory.
    #[arg(long, short, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Extra settings, as if read from the config file.
    #[arg(long = "set", short = 's', global = true, value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Render labelled frames, masks and a manifest; optionally a training CSV.
    Simulate(SimulateArgs),
    /// Train the linear classifier on a dataset CSV and cross-validate it.
    Train(TrainArgs),
    /// Run crude classification and oriented growth on a PGM frame.
    Detect(DetectArgs),
    /// Monte-Carlo sweep over PSNR, length or noise sigma.
    Sweep(SweepArgs),
    /// Time the proposed pipeline against the directional-filter baseline.
    Bench(BenchArgs),
    /// Sub-region feature densities for the template-capability analysis.
    Analyze(AnalyzeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Number of frames.
    #[arg(long)]
    pub n: Option<usize>,
    /// Training rows to write to dataset.csv (0 = none).
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub psnr: Option<f64>,
    #[arg(long)]
    pub frame_size: Option<usize>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset CSV written by `simulate --rows`.
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub c: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Cross-validation folds (0 skips validation).
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// 8-bit PGM frame.
    pub frame: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Minimum component size in pixels.
    #[arg(long = "t-h")]
    pub t_h: Option<usize>,
    /// Per-direction growth budget in pixels.
    #[arg(long = "l-max")]
    pub l_max: Option<usize>,
    /// Emit crude components without growth.
    #[arg(long)]
    pub no_growth: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// psnr, length or noise_sigma.
    #[arg(long)]
    pub kind: Option<String>,
    /// Comma-separated grid values.
    #[arg(long)]
    pub grid: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Comma-separated methods: crude, grown, baseline.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub width: Option<usize>,
    #[arg(long)]
    pub height: Option<usize>,
    #[arg(long)]
    pub reps: Option<usize>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Monte-Carlo samples of the maximum gray.
    #[arg(long)]
    pub samples: Option<usize>,
}

const COMMON_KEYS: &[(&str, &str)] = &[("seed", ""), ("out", "out")];

const SIMULATE_KEYS: &[(&str, &str)] = &[
    ("n", "10"),
    ("rows", "0"),
    ("psnr", "2"),
    ("frame_size", "64"),
    ("noise_mu", "30"),
    ("noise_sigma", "8"),
    ("length_min", "10"),
    ("length_max", "22"),
    ("angle_min", "0"),
    ("angle_max", "180"),
    ("psf_sigma", "0.8"),
];

const TRAIN_KEYS: &[(&str, &str)] =
    &[("dataset", ""), ("c", "0.01"), ("epochs", "20"), ("folds", "5"), ("model", "")];

const DETECT_KEYS: &[(&str, &str)] = &[
    ("frame", ""),
    ("model", ""),
    ("t_h", "35"),
    ("l_max", "10"),
    ("no_growth", "false"),
    ("decision_threshold", ""),
];

const SWEEP_KEYS: &[(&str, &str)] = &[
    ("kind", "psnr"),
    ("grid", "1.4,2,3,4,5"),
    ("trials", "200"),
    ("methods", "crude,grown"),
    ("model", ""),
    ("length_min", "16"),
    ("length_max", "16"),
    ("psnr", "2"),
    ("noise_sigma", "8"),
    ("t_h", "35"),
    ("l_max", "10"),
];

const BENCH_KEYS: &[(&str, &str)] =
    &[("width", "1280"), ("height", "960"), ("reps", "150"), ("model", "")];

const ANALYZE_KEYS: &[(&str, &str)] = &[
    ("samples", "100000"),
    ("n0", "25"),
    ("noise_mu", "30"),
    ("noise_sigma", "8"),
    ("layer_means", ""),
    ("layer_stds", "8,8,8"),
    ("angle", "30"),
    ("k", "20"),
    ("gray_min", "0"),
    ("gray_max", "120"),
    ("gray_step", "0.5"),
];

const PATH_KEYS: [&str; 4] = ["dataset", "model", "frame", "out"];

/// Resolved settings for one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn new(keys: &[(&str, &str)]) -> Self {
        let values = COMMON_KEYS.iter().chain(keys).map(|(k, v)| (k.to_string(), v.to_string())).collect();
        Self { values }
    }

    /// Sets a known key.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        match self.values.get_mut(key) {
            Some(v) => {
                *v = value.into();
                Ok(())
            }
            None => Err(Error::Config(format!("unknown key '{key}'"))),
        }
    }

    /// Applies `key=value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got '{line}'", i + 1)))?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn raw(&self, key: &str) -> &str {
        self.values.get(key).map(String::as_str).unwrap_or("")
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<T> {
        let raw = self.raw(key);
        raw.parse().map_err(|_| Error::Config(format!("bad value '{raw}' for '{key}'")))
    }

    pub fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        if self.raw(key).is_empty() {
            Ok(None)
        } else {
            self.get(key).map(Some)
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Vec<T>> {
        self.raw(key)
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| Error::Config(format!("bad item '{s}' in '{key}'"))))
            .collect()
    }

    fn path(&self, key: &str) -> Option<PathBuf> {
        let raw = self.raw(key);
        (!raw.is_empty()).then(|| PathBuf::from(raw))
    }

    fn seed(&self) -> Result<u64> {
        self.optional("seed")?
            .ok_or_else(|| Error::Config("this command needs --seed or seed= in the config".into()))
    }

    /// `key=value` lines in key order.
    pub fn to_text(&self) -> String {
        self.values.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    /// Hex SHA-256 of [`Settings::to_text`].
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_text().as_bytes()).iter().fold(String::new(), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }

    /// Comment line stamped on CSV outputs, without the leading `#`.
    pub fn stamp(&self) -> String {
        format!("streaklite {} config={}", env!("CARGO_PKG_VERSION"), self.hash())
    }
}

fn keys_for(command: &Command) -> &'static [(&'static str, &'static str)] {
    match command {
        Command::Simulate(_) => SIMULATE_KEYS,
        Command::Train(_) => TRAIN_KEYS,
        Command::Detect(_) => DETECT_KEYS,
        Command::Sweep(_) => SWEEP_KEYS,
        Command::Bench(_) => BENCH_KEYS,
        Command::Analyze(_) => ANALYZE_KEYS,
    }
}

fn flag<T: ToString>(s: &mut Settings, key: &str, v: &Option<T>) -> Result<()> {
    match v {
        Some(v) => s.set(key, v.to_string()),
        None => Ok(()),
    }
}

fn path_flag(s: &mut Settings, key: &str, v: &Option<PathBuf>) -> Result<()> {
    flag(s, key, &v.as_ref().map(|p| fs::canonicalize(p).unwrap_or_else(|_| p.clone()).display().to_string()))
}

/// Resolves defaults, config file, `--set` pairs and flags.
pub fn resolve(cli: &Cli) -> Result<Settings> {
    let mut s = Settings::new(keys_for(&cli.command));
    if let Some(path) = &cli.config {
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
        s.apply_text(&text)?;
        // relative paths in a config file are relative to that file
        let dir = path.parent().unwrap_or(Path::new(""));
        for key in PATH_KEYS {
            if let Some(p) = s.optional::<PathBuf>(key)? {
                s.set(key, dir.join(p).display().to_string())?;
            }
        }
    }
    for pair in &cli.set {
        let (k, v) =
            pair.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got '{pair}'")))?;
        s.set(k.trim(), v.trim())?;
    }
    flag(&mut s, "seed", &cli.seed)?;
    path_flag(&mut s, "out", &cli.out)?;
    match &cli.command {
        Command::Simulate(a) => {
            flag(&mut s, "n", &a.n)?;
            flag(&mut s, "rows", &a.rows)?;
            flag(&mut s, "psnr", &a.psnr)?;
            flag(&mut s, "frame_size", &a.frame_size)?;
        }
        Command::Train(a) => {
            path_flag(&mut s, "dataset", &a.dataset)?;
            flag(&mut s, "c", &a.c)?;
            flag(&mut s, "epochs", &a.epochs)?;
            flag(&mut s, "folds", &a.folds)?;
        }
        Command::Detect(a) => {
            path_flag(&mut s, "frame", &a.frame)?;
            path_flag(&mut s, "model", &a.model)?;
            flag(&mut s, "t_h", &a.t_h)?;
            flag(&mut s, "l_max", &a.l_max)?;
            if a.no_growth {
                s.set("no_growth", "true")?;
            }
        }
        Command::Sweep(a) => {
            flag(&mut s, "kind", &a.kind)?;
            flag(&mut s, "grid", &a.grid)?;
            flag(&mut s, "trials", &a.trials)?;
            flag(&mut s, "methods", &a.methods)?;
            path_flag(&mut s, "model", &a.model)?;
        }
        Command::Bench(a) => {
            flag(&mut s, "width", &a.width)?;
            flag(&mut s, "height", &a.height)?;
            flag(&mut s, "reps", &a.reps)?;
            path_flag(&mut s, "model", &a.model)?;
        }
        Command::Analyze(a) => flag(&mut s, "samples", &a.samples)?,
    }
    Ok(s)
}

/// Exit code for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        Error::File { .. }
        | Error::Io(_)
        | Error::Csv(_)
        | Error::MalformedHeader(_)
        | Error::UnsupportedBitDepth(_)
        | Error::TruncatedPayload { .. }
        | Error::BadModel(_) => EXIT_IO,
        _ => EXIT_INVARIANT,
    }
}

fn write_file(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::file(path, e))
}

fn out_dir(s: &Settings) -> Result<PathBuf> {
    let dir = PathBuf::from(s.raw("out"));
    fs::create_dir_all(&dir).map_err(|e| Error::file(&dir, e))?;
    write_file(&dir.join("manifest.txt"), format!("# {}\n{}", s.stamp(), s.to_text()))?;
    Ok(dir)
}

fn existing(s: &Settings, key: &str) -> Result<PathBuf> {
    let p = s.path(key).ok_or_else(|| Error::Config(format!("'{key}' is required")))?;
    if !p.is_file() {
        return Err(Error::file(&p, std::io::Error::new(std::io::ErrorKind::NotFound, "no such file")));
    }
    Ok(p)
}

/// Dataset recipe from the simulate keys.
pub fn dataset_config(s: &Settings) -> Result<DatasetConfig> {
    let c = DatasetConfig {
        frame_size: s.get("frame_size")?,
        noise_mu: s.get("noise_mu")?,
        noise_sigma: s.get("noise_sigma")?,
        psnr_target: s.get("psnr")?,
        angle_range: (s.get("angle_min")?, s.get("angle_max")?),
        length_range: (s.get("length_min")?, s.get("length_max")?),
        psf_sigma: s.get("psf_sigma")?,
        ..DatasetConfig::default()
    };
    c.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(c)
}

fn cmd_simulate(s: &Settings) -> Result<String> {
    let seed = s.seed()?;
    let config = dataset_config(s)?;
    let n: usize = s.get("n")?;
    let rows: usize = s.get("rows")?;
    let dir = out_dir(s)?;
    let mut manifest = Vec::new();
    {
        let mut w = csv::Writer::from_writer(&mut manifest);
        w.write_record([
            "index", "seed", "frame", "mask", "center_x", "center_y", "angle_deg", "length", "intensity", "psnr",
        ])?;
        for i in 0..n {
            let frame_seed = rng::sub_seed(seed, i as u64);
            let sample = simulate_sample(&config, &mut rng::seeded(frame_seed))?;
            let (fname, mname) = (format!("frame_{i:05}.pgm"), format!("mask_{i:05}.pgm"));
            pgm::save_pgm(&sample.frame, dir.join(&fname))?;
            pgm::save_mask(&sample.ideal_mask, dir.join(&mname))?;
            let st = &sample.streak;
            w.write_record([
                i.to_string(),
                frame_seed.to_string(),
                fname,
                mname,
                format!("{:.6}", st.center.0),
                format!("{:.6}", st.center.1),
                format!("{:.6}", st.angle_deg),
                format!("{:.6}", st.length),
                format!("{:.6}", st.intensity),
                format!("{:.6}", sample.psnr),
            ])?;
        }
        w.flush()?;
    }
    let mut text = format!("# {}\n", s.stamp()).into_bytes();
    text.extend(manifest);
    write_file(&dir.join("manifest.csv"), text)?;
    if rows > 0 {
        let data = dataset::generate_rows(rows, &config, seed)?;
        let path = dir.join("dataset.csv");
        let f = fs::File::create(&path).map_err(|e| Error::file(&path, e))?;
        dataset::write_rows_csv(std::io::BufWriter::new(f), &data, Some(&s.stamp()))?;
    }
    Ok(format!("wrote {n} frames{} to {}", if rows > 0 { " and dataset.csv" } else { "" }, dir.display()))
}

fn cmd_train(s: &Settings) -> Result<String> {
    let seed = s.seed()?;
    let path = existing(s, "dataset")?;
    let config = TrainConfig { c: s.get("c")?, epochs: s.get("epochs")?, seed, ..TrainConfig::default() };
    let folds: usize = s.get("folds")?;
    let rows = dataset::read_rows_csv(fs::File::open(&path).map_err(|e| Error::file(&path, e))?)?;
    let dir = out_dir(s)?;
    let model = classifier::train(&rows, &config)?;
    let model_path = s.path("model").unwrap_or_else(|| dir.join("model.txt"));
    classifier::save_model(&model, &model_path)?;
    write_file(&dir.join("weights.csv"), format!("# {}\n{}", s.stamp(), classifier::heatmap_csv(&model)))?;
    let mut msg = format!("trained on {} rows, model at {}", rows.len(), model_path.display());
    if folds > 0 {
        let report = classifier::kfold_validate(&rows, folds, &config)?;
        let mut csv = format!("# {}\nfold,accuracy\n", s.stamp());
        for (i, a) in report.accuracies.iter().enumerate() {
            writeln!(csv, "{i},{a:.6}").unwrap();
        }
        writeln!(csv, "mean,{:.6}", report.mean).unwrap();
        write_file(&dir.join("folds.csv"), csv)?;
        write!(msg, "; {folds}-fold mean accuracy {:.4}", report.mean).unwrap();
    }
    Ok(msg)
}

fn load_model(s: &Settings) -> Result<LinearModel> {
    classifier::load_model(existing(s, "model")?)
}

fn growth_config(s: &Settings) -> Result<GrowthConfig> {
    let g = GrowthConfig { l_max: s.get("l_max")?, ..GrowthConfig::default() };
    g.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(g)
}

fn cmd_detect(s: &Settings) -> Result<String> {
    let frame = pgm::load_pgm(existing(s, "frame")?)?;
    let mut model = load_model(s)?;
    if let Some(t) = s.optional::<f64>("decision_threshold")? {
        model = model.with_threshold(t);
    }
    let t_h: usize = s.get("t_h")?;
    let no_growth: bool = s.get("no_growth")?;
    let growth = growth_config(s)?;
    let dir = out_dir(s)?;
    let crude = detector::crude_classify(&frame, &model, t_h)?;
    let comps: Vec<Component> = if no_growth {
        crude
    } else {
        let bg = background_stats(&frame);
        let results = growth::refine(&frame, &crude, &bg, &growth);
        write_file(&dir.join("detections.csv"), growth::results_csv(&results, Some(&s.stamp())))?;
        results.into_iter().map(|r| r.component).collect()
    };
    write_file(&dir.join("components.csv"), detector::components_csv(&comps, Some(&s.stamp())))?;
    let mut mask = Mask::new(frame.width(), frame.height());
    for c in &comps {
        for &(x, y) in c.pixels() {
            mask.set(x, y, true);
        }
    }
    pgm::save_mask(&mask, dir.join("mask.pgm"))?;
    Ok(format!("{} component(s)", comps.len()))
}

fn cmd_sweep(s: &Settings) -> Result<String> {
    let seed = s.seed()?;
    let kind: SweepKind = s.get::<String>("kind")?.parse()?;
    let mut config = SweepConfig::new(kind, s.list("grid")?, s.get("trials")?, seed);
    config.methods = s.list::<String>("methods")?.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    config.length_range = (s.get("length_min")?, s.get("length_max")?);
    config.base.psnr_target = s.get("psnr")?;
    config.base.noise_sigma = s.get("noise_sigma")?;
    config.min_size = s.get("t_h")?;
    config.growth = growth_config(s)?;
    let needs_model = config.methods.iter().any(|m| matches!(m, Method::Crude | Method::Grown));
    let model = if needs_model { Some(load_model(s)?) } else { None };
    let baseline = if config.methods.contains(&Method::Baseline) {
        let noise = gaussian_background(
            256,
            256,
            NoiseParams { mu: config.base.noise_mu, sigma: config.base.noise_sigma, seed: rng::sub_seed(seed, u64::MAX) },
        )?;
        Some(BaselineDetector::calibrated(&noise)?)
    } else {
        None
    };
    let dir = out_dir(s)?;
    let rows = run_sweep(&config, &Detectors { model: model.as_ref(), baseline: baseline.as_ref() })?;
    write_file(&dir.join("sweep.csv"), rows_csv(&rows, Some(&s.stamp()))?)?;
    let mut summary =
        format!("# {}\nvalue,method,trials,mean_iou,mean_centroid_error,detection_rate,single_detection_rate\n", s.stamp());
    for r in summarize(&rows, kind) {
        writeln!(
            summary,
            "{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.value, r.method, r.trials, r.mean_iou, r.mean_centroid_error, r.detection_rate, r.single_detection_rate
        )
        .unwrap();
    }
    write_file(&dir.join("summary.csv"), &summary)?;
    Ok(summary.lines().skip(1).collect::<Vec<_>>().join("\n"))
}

fn cmd_bench(s: &Settings) -> Result<String> {
    let seed = s.seed()?;
    let (w, h, reps): (usize, usize, usize) = (s.get("width")?, s.get("height")?, s.get("reps")?);
    let model = load_model(s)?;
    let dir = out_dir(s)?;
    let frame = bench_frame(w, h, seed)?;
    let noise = gaussian_background(256, 256, NoiseParams::standard(rng::sub_seed(seed, 2)))?;
    let baseline = BaselineDetector::calibrated(&noise)?;
    let report = benchmark(&model, &baseline, &frame, reps)?;
    write_file(&dir.join("bench.csv"), report.to_csv(Some(&s.stamp())))?;
    Ok(format!(
        "proposed {:.4} s, baseline {:.4} s, baseline/proposed {:.2}",
        report.proposed,
        report.baseline,
        1.0 / report.ratio()
    ))
}

/// Analysis parameters from the analyze keys.
pub fn analysis_params(s: &Settings) -> Result<AnalysisParams> {
    let mut p = AnalysisParams {
        n0: s.get("n0")?,
        noise_mu: s.get("noise_mu")?,
        noise_sigma: s.get("noise_sigma")?,
        occupancy: analysis::layer_occupancy(s.get("angle")?),
        k: s.get("k")?,
        ..AnalysisParams::default()
    };
    let triple = |key: &str| -> Result<Option<[f64; 3]>> {
        let v: Vec<f64> = s.list(key)?;
        match v.len() {
            0 => Ok(None),
            3 => Ok(Some([v[0], v[1], v[2]])),
            _ => Err(Error::Config(format!("'{key}' needs three values"))),
        }
    };
    if let Some(m) = triple("layer_means")? {
        p.layer_means = m;
    }
    if let Some(sd) = triple("layer_stds")? {
        p.layer_stds = sd;
    }
    p.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(p)
}

fn cmd_analyze(s: &Settings) -> Result<String> {
    let seed = s.seed()?;
    let p = analysis_params(s)?;
    let n: usize = s.get("samples")?;
    let (lo, hi, step): (f64, f64, f64) = (s.get("gray_min")?, s.get("gray_max")?, s.get("gray_step")?);
    if !(step > 0.0 && hi > lo) {
        return Err(Error::Config("gray grid needs gray_max > gray_min and gray_step > 0".into()));
    }
    let dir = out_dir(s)?;
    let samples = analysis::max_gray_samples(&p, n, seed)?;
    let max = analysis::MaxGrayDistribution::new(&p)?;
    let ks = analysis::ks_statistic(&samples, |g| max.cdf(g));
    let grid: Vec<f64> = (0..=((hi - lo) / step).round() as usize).map(|i| lo + i as f64 * step).collect();
    let table = analysis::density_table(&p, &grid, &samples)?;
    let mut csv = format!(
        "# {}\ngray,background_mean_pdf,target_mean_pdf,max_gray_pdf,max_gray_empirical,max_gray_cdf,background_pixel_pdf,centre_pixel_pdf\n",
        s.stamp()
    );
    for r in &table {
        writeln!(
            csv,
            "{},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e},{:.8e}",
            r.gray,
            r.background_mean,
            r.target_mean,
            r.max_gray,
            r.max_gray_empirical,
            max.cdf(r.gray),
            r.background_pixel,
            r.centre_pixel
        )
        .unwrap();
    }
    write_file(&dir.join("densities.csv"), csv)?;
    let d = analysis::subregion_distributions(&p)?;
    let (a1_mu, a1_sd) = analysis::weighted_sum_distribution(&p)?;
    let summary = format!(
        "# {}\nquantity,value\nbackground_mean_mu,{:.6}\nbackground_mean_sd,{:.6}\ntarget_mean_mu,{:.6}\ntarget_mean_sd,{:.6}\na1_mu,{a1_mu:.6}\na1_sd,{a1_sd:.6}\nks_max_gray,{ks:.6}\n",
        s.stamp(),
        d.background.0,
        d.background.1,
        d.target.0,
        d.target.1
    );
    write_file(&dir.join("analysis.csv"), &summary)?;
    Ok(format!("max-gray KS over {n} samples: {ks:.5}"))
}

/// Runs a parsed command line, returning a one-line summary.
pub fn run(cli: &Cli) -> Result<String> {
    let s = resolve(cli)?;
    match &cli.command {
        Command::Simulate(_) => cmd_simulate(&s),
        Command::Train(_) => cmd_train(&s),
        Command::Detect(_) => cmd_detect(&s),
        Command::Sweep(_) => cmd_sweep(&s),
        Command::Bench(_) => cmd_bench(&s),
        Command::Analyze(_) => cmd_analyze(&s),
    }
}

/// Entry point for the binary: parses `args`, caps the worker pool and maps
/// errors to exit codes.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be positive");
            return EXIT_CONFIG;
        }
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(&cli) {
        Ok(msg) => {
            println!("{msg}");
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}
