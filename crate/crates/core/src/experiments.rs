//! Scripted diagnostic runs. Each writes CSV curves, PNG frames and a single
//! `manifest.json` into its output directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::color::verify_mapping;
use crate::data::{synthetic_scene, Exposure, Rgb8};
use crate::enhance::enhance;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::metrics::{channel_means, color_constancy, grey_distance};
use crate::model::SrmParams;
use crate::trainer::{train, train_with_observer, CurveLog, TrainConfig, Variant};

/// Channel-mean band of a normally lit image, in 8-bit units.
pub const NORMAL_LIGHT_BAND: (f64, f64) = (80.0, 140.0);

/// The C-regression colors whose curves are compared.
pub const PROP1_COLORS: [(&str, Rgb8); 4] = [
    ("black", Rgb8::BLACK),
    ("orange", Rgb8::ORANGE),
    ("light-red", Rgb8::LIGHT_RED),
    ("central-grey", Rgb8::CENTRAL_GREY),
];

/// Pure-color inputs used to show where a trained model sends flat colors.
pub const PROBE_COLORS: [(&str, Rgb8); 4] = [
    ("black", Rgb8::BLACK),
    ("white", Rgb8::WHITE),
    ("red", Rgb8::RED),
    ("blue", Rgb8::BLUE),
];

/// Dark scene on which the gray-world curves of the palette and noise runs
/// are measured.
pub fn gray_world_probe() -> RgbImage {
    synthetic_scene(208, 144, Exposure::Dark, 0)
}

/// Updates after which the ablation run snapshots an enhanced frame.
pub const ABLATION_FRAMES: [usize; 6] = [0, 100, 250, 500, 1000, 2000];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Experiment {
    Prop1,
    Prop2,
    Prop4,
    MappingBlack,
    MappingRed,
    AblationIn,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Prop1,
        Experiment::Prop2,
        Experiment::Prop4,
        Experiment::MappingBlack,
        Experiment::MappingRed,
        Experiment::AblationIn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::Prop1 => "prop1",
            Experiment::Prop2 => "prop2",
            Experiment::Prop4 => "prop4",
            Experiment::MappingBlack => "mapping-black",
            Experiment::MappingRed => "mapping-red",
            Experiment::AblationIn => "ablation-in",
        }
    }

    /// Fixed seed per experiment (FNV-1a of the name), so reruns regenerate
    /// identical artifacts.
    pub fn seed(self) -> u64 {
        self.name()
            .bytes()
            .fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Experiment::ALL.iter().map(|e| e.name()).collect();
                Error::Config(format!("unknown experiment {s:?}; expected one of {}", names.join(", ")))
            })
    }
}

/// Record of one command run, written next to its outputs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    /// Every training config used, keyed by run label, in `key=value` form.
    pub config: BTreeMap<String, String>,
    pub seed: u64,
    pub code_version: String,
    pub started_unix: f64,
    pub finished_unix: f64,
    pub outputs: Vec<PathBuf>,
}

pub fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

impl RunManifest {
    pub fn start(command: impl Into<String>, seed: u64) -> Self {
        RunManifest {
            command: command.into(),
            config: BTreeMap::new(),
            seed,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_unix: unix_now(),
            finished_unix: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn record_config(&mut self, label: &str, config: &TrainConfig) {
        self.config.insert(label.to_string(), config.to_config_text());
    }

    /// Stamps the end time and writes `manifest.json` into `dir`.
    pub fn finish(mut self, dir: &Path) -> Result<Self> {
        self.finished_unix = unix_now();
        let path = dir.join("manifest.json");
        let json = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        Ok(self)
    }
}

/// Knobs for shortened runs; `None` keeps the experiment's own setting.
#[derive(Clone, Debug, Default)]
pub struct ExperimentOptions {
    pub iterations: Option<usize>,
    pub seed: Option<u64>,
}

struct Ctx<'a> {
    dir: &'a Path,
    manifest: RunManifest,
    opts: &'a ExperimentOptions,
}

impl Ctx<'_> {
    fn config(&mut self, label: &str, base: TrainConfig) -> TrainConfig {
        let mut c = base.with_seed(self.manifest.seed);
        if let Some(n) = self.opts.iterations {
            c.iterations = n;
        }
        self.manifest.record_config(label, &c);
        c
    }

    fn path(&mut self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.manifest.outputs.push(p.clone());
        p
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        let p = self.path(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))
    }

    fn curves(&mut self, label: &str, log: &CurveLog) -> Result<()> {
        let p = self.path(&format!("curves_{label}.csv"));
        log.write_csv(p)?;
        let p = self.path(&format!("training_curves_{label}.csv"));
        log.write_training_csv(p)
    }

    fn image(&mut self, name: &str, img: &RgbImage) -> Result<()> {
        let p = self.path(name);
        img.save(p)
    }
}

/// Runs `exp`, writing its artifacts and manifest into `out_dir`.
pub fn run_experiment(exp: Experiment, out_dir: &Path, opts: &ExperimentOptions) -> Result<RunManifest> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let seed = opts.seed.unwrap_or_else(|| exp.seed());
    let mut ctx = Ctx {
        dir: out_dir,
        manifest: RunManifest::start(format!("experiment {exp}"), seed),
        opts,
    };
    match exp {
        Experiment::Prop1 => prop1(&mut ctx)?,
        Experiment::Prop2 => prop2(&mut ctx)?,
        Experiment::Prop4 => prop4(&mut ctx)?,
        Experiment::MappingBlack => mapping(&mut ctx, Rgb8::BLACK)?,
        Experiment::MappingRed => mapping(&mut ctx, Rgb8::RED)?,
        Experiment::AblationIn => ablation(&mut ctx)?,
    }
    ctx.manifest.finish(out_dir)
}

/// Summary of a grey-distance curve: where it bottoms out and where it ends.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DistanceSummary {
    pub initial: f64,
    pub min: f64,
    pub argmin_iteration: usize,
    pub last: f64,
}

impl DistanceSummary {
    pub fn of(series: &[(usize, f64)]) -> Option<Self> {
        let (&(_, initial), &(_, last)) = (series.first()?, series.last()?);
        let &(argmin_iteration, min) = series
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty");
        Some(DistanceSummary {
            initial,
            min,
            argmin_iteration,
            last,
        })
    }

    /// Dipped below the start, then climbed to more than `factor` times the minimum.
    pub fn dips_then_rises(&self, factor: f64) -> bool {
        self.argmin_iteration > 0 && self.last > factor * self.min
    }
}

pub fn training_distance_series(log: &CurveLog) -> Vec<(usize, f64)> {
    log.points.iter().map(|p| (p.iteration, p.train_grey_distance)).collect()
}

/// Means of consecutive `window`-iteration buckets of a logged series.
pub fn bucket_means(series: &[(usize, f64)], window: usize) -> Vec<f64> {
    let mut out: Vec<(usize, f64, usize)> = Vec::new();
    for &(it, v) in series {
        let b = it / window;
        match out.last_mut() {
            Some((last, sum, n)) if *last == b => {
                *sum += v;
                *n += 1;
            }
            _ => out.push((b, v, 1)),
        }
    }
    out.into_iter().map(|(_, s, n)| s / n as f64).collect()
}

/// Each bucket mean is at most the previous one.
pub fn non_increasing(means: &[f64]) -> bool {
    means.windows(2).all(|w| w[1] <= w[0])
}

/// Population variance of the probe color-constancy values logged after `from`.
pub fn color_constancy_variance_after(log: &CurveLog, from: usize) -> f64 {
    let v: Vec<f64> = log
        .points
        .iter()
        .filter(|p| p.iteration > from)
        .map(|p| p.color_constancy)
        .collect();
    if v.is_empty() {
        return 0.0;
    }
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / v.len() as f64
}

pub fn in_band(means: [f64; 3], band: (f64, f64)) -> bool {
    means.iter().all(|&m| m >= band.0 && m <= band.1)
}

fn prop1(ctx: &mut Ctx) -> Result<()> {
    let mut summary = String::from("color,initial_d,min_d,argmin_iter,final_d,bucket_non_increasing\n");
    for (name, color) in PROP1_COLORS {
        let cfg = ctx.config(name, TrainConfig::c_regression(color));
        let (_, log) = train(&cfg, None)?;
        ctx.curves(name, &log)?;
        let series = training_distance_series(&log);
        let s = DistanceSummary::of(&series).expect("log has points");
        let mono = non_increasing(&bucket_means(&series, 100));
        summary.push_str(&format!(
            "{name},{:.6},{:.6},{},{:.6},{mono}\n",
            s.initial, s.min, s.argmin_iteration, s.last
        ));
    }
    ctx.write("summary.csv", &summary)
}

fn probe_outputs(ctx: &mut Ctx, label: &str, params: &SrmParams, untrained: &SrmParams) -> Result<String> {
    let mut rows = String::new();
    for (name, color) in PROBE_COLORS {
        let input = RgbImage::filled(104, 104, color)?;
        let before = enhance(untrained, &input)?;
        let after = enhance(params, &input)?;
        ctx.image(&format!("probe_{label}_{name}.png"), &after)?;
        let m = channel_means(&after);
        rows.push_str(&format!(
            "{label},{name},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
            m[0],
            m[1],
            m[2],
            grey_distance(&before),
            grey_distance(&after)
        ));
    }
    Ok(rows)
}

const PROBE_HEADER: &str = "run,color,mean_r,mean_g,mean_b,untrained_d,trained_d\n";

fn prop2(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.config("palette", TrainConfig::p_regression());
    let probe = gray_world_probe();
    ctx.image("probe_input.png", &probe)?;
    let (params, log) = train(&cfg, Some(&probe))?;
    ctx.curves("palette", &log)?;
    let untrained = SrmParams::new(cfg.seed, cfg.hidden_width)?;
    let rows = probe_outputs(ctx, "palette", &params, &untrained)?;
    ctx.write("probes.csv", &format!("{PROBE_HEADER}{rows}"))
}

fn prop4(ctx: &mut Ctx) -> Result<()> {
    let mut probes = String::from(PROBE_HEADER);
    let mut summary = String::from("run,initial_col,final_col,col_variance_after_200\n");
    let probe = gray_world_probe();
    ctx.image("probe_input.png", &probe)?;
    for (label, sigma) in [("sigma1", 1.0), ("sigma3", 3.0)] {
        let cfg = ctx.config(label, TrainConfig::noiser(sigma));
        let (params, log) = train(&cfg, Some(&probe))?;
        ctx.curves(label, &log)?;
        let untrained = SrmParams::new(cfg.seed, cfg.hidden_width)?;
        probes.push_str(&probe_outputs(ctx, label, &params, &untrained)?);
        let (first, last) = (log.first().expect("points"), log.last().expect("points"));
        summary.push_str(&format!(
            "{label},{:.6},{:.6},{:.6}\n",
            first.color_constancy,
            last.color_constancy,
            color_constancy_variance_after(&log, 200)
        ));
    }
    ctx.write("probes.csv", &probes)?;
    ctx.write("summary.csv", &summary)
}

fn mapping(ctx: &mut Ctx, color: Rgb8) -> Result<()> {
    let cfg = ctx.config("c-regression", TrainConfig::c_regression(color));
    let (params, log) = train(&cfg, None)?;
    ctx.curves("c_regression", &log)?;
    let report = verify_mapping(&params, color)?;
    let palette = crate::image::denormalize(&crate::data::palette_image(104, 104)?)?;
    ctx.image("palette_input.png", &palette)?;
    ctx.image("palette_output.png", &enhance(&params, &palette)?)?;
    let mut csv = String::from("block,color,predicted,observed,majority_fraction,matched\n");
    for b in &report.blocks {
        csv.push_str(&format!(
            "{},{},{},{},{:.6},{}\n",
            b.name,
            b.color.to_string().replace(',', " "),
            b.predicted,
            b.observed,
            b.majority_fraction,
            b.matched
        ));
    }
    ctx.write("mapping.csv", &csv)
}

/// Verdict on one enhanced dark frame.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BandCheck {
    pub means: [f64; 3],
    pub color_constancy: f64,
    pub passes: bool,
}

/// Whether enhancing `input` lands every channel mean inside [`NORMAL_LIGHT_BAND`].
pub fn band_check(params: &SrmParams, input: &RgbImage) -> Result<BandCheck> {
    let out = enhance(params, input)?;
    let means = channel_means(&out);
    Ok(BandCheck {
        means,
        color_constancy: color_constancy(&out),
        passes: in_band(means, NORMAL_LIGHT_BAND),
    })
}

fn ablation(ctx: &mut Ctx) -> Result<()> {
    let scene = synthetic_scene(208, 144, Exposure::Dark, ctx.manifest.seed);
    ctx.image("input_dark.png", &scene)?;
    let mut summary = String::from("run,mean_r,mean_g,mean_b,color_constancy,in_band\n");
    for (label, no_in) in [("in", false), ("no_in", true)] {
        let mut base = TrainConfig::variant(Variant::Var3);
        base.disable_instance_norm = no_in;
        let cfg = ctx.config(label, base);
        let mut frames = Vec::new();
        let first = if no_in {
            SrmParams::new_without_instance_norm(cfg.seed, cfg.hidden_width)?
        } else {
            SrmParams::new(cfg.seed, cfg.hidden_width)?
        };
        frames.push((0, enhance(&first, &scene)?));
        let mut failure = None;
        let (params, _) = train_with_observer(&cfg, None, |done, p| {
            if failure.is_none() && ABLATION_FRAMES[1..].contains(&done) {
                match enhance(p, &scene) {
                    Ok(img) => frames.push((done, img)),
                    Err(e) => failure = Some(e),
                }
            }
        })?;
        if let Some(e) = failure {
            return Err(e);
        }
        for (it, img) in &frames {
            ctx.image(&format!("frame_{label}_{it:05}.png"), img)?;
        }
        let check = band_check(&params, &scene)?;
        summary.push_str(&format!(
            "{label},{:.6},{:.6},{:.6},{:.6},{}\n",
            check.means[0], check.means[1], check.means[2], check.color_constancy, check.passes
        ));
    }
    ctx.write("summary.csv", &summary)
}

/// One trained model scored on a paired low/normal-light test set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PairedScore {
    pub variant: String,
    pub seed: u64,
    pub images: usize,
    pub mean_psnr_db: f64,
    pub mean_ssim: f64,
}

/// Trains `variant` with each seed, enhances every image of `low_dir` and
/// scores it against the same-named image in `high_dir`.
pub fn score_on_paired_set(variant: Variant, seeds: &[u64], low_dir: &Path, high_dir: &Path) -> Result<Vec<PairedScore>> {
    let tmp = std::env::temp_dir().join(format!("noiser-paired-{}", std::process::id()));
    let mut out = Vec::new();
    for &seed in seeds {
        let cfg = TrainConfig::variant(variant).with_seed(seed);
        let (params, _) = train(&cfg, None)?;
        let dir = tmp.join(format!("{variant:?}-{seed}"));
        let batch = crate::enhance::enhance_dir(&params, low_dir, &dir)?;
        let report = crate::eval::evaluate_dirs(&dir, high_dir)?;
        let mean = report
            .mean()
            .ok_or_else(|| Error::Config(format!("no scorable pairs between {} and {}", low_dir.display(), high_dir.display())))?;
        log::info!("{variant:?} seed {seed}: {} images, PSNR {:.3}", batch.count, mean.psnr_db);
        out.push(PairedScore {
            variant: format!("{variant:?}").to_lowercase(),
            seed,
            images: report.rows.len(),
            mean_psnr_db: mean.psnr_db,
            mean_ssim: mean.ssim,
        });
    }
    let _ = std::fs::remove_dir_all(&tmp);
    Ok(out)
}
