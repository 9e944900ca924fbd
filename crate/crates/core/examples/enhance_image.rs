//! Enhance a dark image with a trained checkpoint.
//!
//! ```text
//! cargo run --release --example enhance_image -- model.nser input.png output.png
//! ```
//!
//! With no arguments a short model is trained and a synthetic dark scene is
//! enhanced into `enhanced.png`.

use noiser::data::{synthetic_scene, Exposure};
use noiser::metrics::{channel_means, color_constancy};
use noiser::{enhance, train, RgbImage, SrmParams, TrainConfig};

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (params, input, out) = match args.as_slice() {
        [ckpt, input, out] => (SrmParams::load(ckpt)?, RgbImage::open(input)?, out.clone()),
        _ => {
            println!("no arguments: training a 600-iteration model on noise");
            let (p, _) = train(&TrainConfig::default().with_iterations(600), None)?;
            (p, synthetic_scene(320, 240, Exposure::Dark, 7), "enhanced.png".to_string())
        }
    };
    let start = std::time::Instant::now();
    let result = enhance(&params, &input)?;
    let ms = start.elapsed().as_secs_f64() * 1e3;
    let fmt = |m: [f64; 3]| format!("({:.1}, {:.1}, {:.1})", m[0], m[1], m[2]);
    println!("input  means {}  L_col {:.2}", fmt(channel_means(&input)), color_constancy(&input));
    println!("output means {}  L_col {:.2}", fmt(channel_means(&result)), color_constancy(&result));
    println!("{}x{} in {ms:.1} ms", input.width(), input.height());
    result.save(&out)?;
    println!("wrote {out}");
    Ok(())
}
