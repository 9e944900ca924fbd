//! Score NoiSER variants on a paired low/normal-light test set such as the
//! LOL evaluation split.
//!
//! ```text
//! cargo run --release --example lol_reproduction -- path/to/eval15 [seeds]
//! ```
//!
//! The directory must hold `low/` and `high/` with matching file names.

use std::path::PathBuf;

use noiser::experiments::score_on_paired_set;
use noiser::Variant;

fn main() -> noiser::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(root) = args.first().map(PathBuf::from) else {
        eprintln!("usage: lol_reproduction DIR [SEEDS]");
        std::process::exit(1);
    };
    let seeds: u64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(3);
    let seeds: Vec<u64> = (0..seeds).collect();
    println!("variant,seed,images,psnr,ssim");
    for variant in [Variant::Fc, Variant::Es, Variant::Var3] {
        let scores = score_on_paired_set(variant, &seeds, &root.join("low"), &root.join("high"))?;
        for s in &scores {
            println!("{},{},{},{:.3},{:.4}", s.variant, s.seed, s.images, s.mean_psnr_db, s.mean_ssim);
        }
        let n = scores.len() as f64;
        println!(
            "{},mean,,{:.3},{:.4}",
            scores[0].variant,
            scores.iter().map(|s| s.mean_psnr_db).sum::<f64>() / n,
            scores.iter().map(|s| s.mean_ssim).sum::<f64>() / n
        );
    }
    Ok(())
}
