//! Command-line front end: train, enhance, eval, experiment, predict-mapping.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use noiser::color::mapping_table;
use noiser::enhance::{enhance_file, EnhanceReport};
use noiser::eval::{evaluate_dirs, evaluate_pair, EvalReport};
use noiser::experiments::{run_experiment, Experiment, ExperimentOptions, RunManifest};
use noiser::{Error, Rgb8, RgbImage, SrmParams, TrainConfig, TrainMode};

#[derive(Parser)]
#[command(name = "noiser", version, about = "Low-light enhancement by noise self-regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write model.nser, curves and a manifest into --out.
    Train(TrainArgs),
    /// Enhance image files or directories with a trained checkpoint.
    Enhance {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Print per-image model time in milliseconds.
        #[arg(long)]
        time: bool,
    },
    /// Score enhanced images against references (two files or two directories).
    Eval {
        enhanced: PathBuf,
        reference: PathBuf,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run one of the diagnostic experiments.
    Experiment {
        /// prop1, prop2, prop4, mapping-black, mapping-red or ablation-in
        name: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        iters: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print the channel-trend mapping prediction for a training color.
    PredictMapping {
        /// Color name (black, red, ...) or R,G,B
        color: String,
    },
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Plain-text key=value file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    variant: Option<String>,
    /// noise, palette or color:NAME|R,G,B
    #[arg(long)]
    mode: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    sigma: Option<f32>,
    #[arg(long)]
    width: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    no_in: bool,
    /// Image used for the logged curves (default: the palette).
    #[arg(long)]
    probe: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn resolve_config(args: &TrainArgs) -> noiser::Result<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?;
        cfg.apply_config_text(&text)?;
    }
    if let Some(v) = &args.variant {
        cfg.set("variant", v)?;
    }
    if let Some(m) = &args.mode {
        cfg.mode = m.parse::<TrainMode>()?;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(n) = args.iters {
        cfg.iterations = n;
    }
    if let Some(s) = args.sigma {
        cfg.sigma = s;
    }
    if let Some(c) = args.width {
        cfg.hidden_width = c;
    }
    if let Some(lr) = args.lr {
        cfg.learning_rate = lr;
    }
    if args.no_in {
        cfg.disable_instance_norm = true;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn create_dir(dir: &Path) -> noiser::Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn cmd_train(args: TrainArgs) -> noiser::Result<()> {
    let cfg = resolve_config(&args)?;
    let probe = args.probe.as_ref().map(RgbImage::open).transpose()?;
    create_dir(&args.out)?;
    let mut manifest = RunManifest::start("train", cfg.seed);
    manifest.record_config("train", &cfg);
    log::info!("training {} for {} iterations", cfg.mode, cfg.iterations);
    let (params, log) = noiser::train(&cfg, probe.as_ref())?;
    let model = args.out.join("model.nser");
    params.save(&model)?;
    let curves = args.out.join("curves.csv");
    log.write_csv(&curves)?;
    let training = args.out.join("training_curves.csv");
    log.write_training_csv(&training)?;
    manifest.outputs = vec![model.clone(), curves, training];
    manifest.finish(&args.out)?;
    if let Some(last) = log.last() {
        println!(
            "wrote {} (final loss {:.6}, probe D {:.3}, L_col {:.3})",
            model.display(),
            last.loss,
            last.grey_distance,
            last.color_constancy
        );
    }
    Ok(())
}

fn cmd_enhance(checkpoint: &Path, inputs: &[PathBuf], out: &Path, time: bool) -> noiser::Result<()> {
    let params = SrmParams::load(checkpoint)?;
    create_dir(out)?;
    let mut report = EnhanceReport::default();
    for input in inputs {
        if input.is_dir() {
            let r = noiser::enhance_dir(&params, input, out)?;
            report.count += r.count;
            report.images.extend(r.images);
            report.warnings.extend(r.warnings);
        } else {
            let name = input
                .file_name()
                .ok_or_else(|| Error::Config(format!("not a file: {}", input.display())))?;
            let t = enhance_file(&params, input, &out.join(name))?;
            report.count += 1;
            report.images.push(t);
        }
    }
    if time {
        for t in &report.images {
            println!("{} {}x{} {:.3} ms", t.file, t.width, t.height, t.millis);
        }
        if let Some(m) = report.mean_millis() {
            println!("mean {m:.3} ms over {} images", report.count);
        }
    }
    println!("enhanced {} images into {}", report.count, out.display());
    if !report.warnings.is_empty() {
        eprintln!("{} files skipped", report.warnings.len());
    }
    Ok(())
}

fn cmd_eval(enhanced: &Path, reference: &Path, out: Option<&Path>) -> noiser::Result<()> {
    let report = if enhanced.is_dir() && reference.is_dir() {
        evaluate_dirs(enhanced, reference)?
    } else {
        let name = enhanced
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        EvalReport {
            rows: vec![(name, evaluate_pair(enhanced, reference)?)],
            warnings: Vec::new(),
        }
    };
    let csv = report.to_csv();
    match out {
        Some(path) => std::fs::write(path, csv).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?,
        None => print!("{csv}"),
    }
    Ok(())
}

fn cmd_experiment(name: &str, out: &Path, iters: Option<usize>, seed: Option<u64>) -> noiser::Result<()> {
    let exp: Experiment = name.parse()?;
    let manifest = run_experiment(exp, out, &ExperimentOptions { iterations: iters, seed })?;
    for p in &manifest.outputs {
        println!("{}", p.display());
    }
    Ok(())
}

fn run(cli: Cli) -> noiser::Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Enhance {
            checkpoint,
            inputs,
            out,
            time,
        } => cmd_enhance(&checkpoint, &inputs, &out, time),
        Command::Eval {
            enhanced,
            reference,
            out,
        } => cmd_eval(&enhanced, &reference, out.as_deref()),
        Command::Experiment {
            name,
            out,
            iters,
            seed,
        } => cmd_experiment(&name, &out, iters, seed),
        Command::PredictMapping { color } => {
            let c: Rgb8 = color.parse()?;
            print!("{}", mapping_table(c)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
