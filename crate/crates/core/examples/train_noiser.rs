//! Train a NoiSER model on Gaussian noise and save it.
//!
//! ```text
//! cargo run --release --example train_noiser -- [fc|es|var3] [seed] [out_dir]
//! ```

use std::path::PathBuf;

use noiser::{train, TrainConfig, Variant};

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let variant: Variant = args.first().map(String::as_str).unwrap_or("fc").parse()?;
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = PathBuf::from(args.get(2).map(String::as_str).unwrap_or("noiser-model"));
    std::fs::create_dir_all(&out).expect("create output dir");

    let cfg = TrainConfig::variant(variant).with_seed(seed);
    println!("{}", cfg.to_config_text());
    let start = std::time::Instant::now();
    let (params, log) = train(&cfg, None)?;
    println!("trained {} params in {:.1?}", params.param_count(), start.elapsed());

    for p in log.points.iter().step_by(20) {
        println!(
            "iter {:>4}  loss {:.4}  train D {:>6.2}  palette L_col {:>6.2}",
            p.iteration, p.loss, p.train_grey_distance, p.color_constancy
        );
    }
    params.save(out.join("model.nser"))?;
    log.write_csv(out.join("curves.csv"))?;
    println!("saved {}", out.join("model.nser").display());
    Ok(())
}
