//! Quality and gray-world statistics for an image or an image pair.
//!
//! ```text
//! cargo run --release --example gray_world_metrics -- image.png [reference.png]
//! ```

use noiser::metrics::{channel_means, color_constancy, grey_distance, MetricReport};
use noiser::RgbImage;

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(path) = args.first() else {
        eprintln!("usage: gray_world_metrics IMAGE [REFERENCE]");
        std::process::exit(1);
    };
    let img = RgbImage::open(path)?;
    let m = channel_means(&img);
    println!("{path}: {}x{}", img.width(), img.height());
    println!("  channel means   ({:.2}, {:.2}, {:.2})", m[0], m[1], m[2]);
    println!("  grey distance   {:.3}", grey_distance(&img));
    println!("  color constancy {:.3}", color_constancy(&img));
    if let Some(reference) = args.get(1) {
        let r = MetricReport::compute(&img, &RgbImage::open(reference)?)?;
        println!("  vs {reference}: PSNR {:.3} dB, SSIM {:.4}", r.psnr_db, r.ssim);
    }
    Ok(())
}
