//! Channel-trend prediction for pure-color training, checked on the palette.
//!
//! ```text
//! cargo run --release --example palette_mapping -- [color] [iterations]
//! ```

use noiser::color::mapping_table;
use noiser::data::palette_image;
use noiser::{denormalize, enhance, train, verify_mapping, Rgb8, TrainConfig};

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let color: Rgb8 = args.first().map(String::as_str).unwrap_or("black").parse()?;
    let iterations = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2000);

    print!("{}", mapping_table(color)?);

    let (params, _) = train(&TrainConfig::c_regression(color).with_iterations(iterations), None)?;
    let report = verify_mapping(&params, color)?;
    println!("\nafter {iterations} iterations on {color}:");
    for b in &report.blocks {
        println!(
            "  {:<7} predicted {:<8} observed {:<8} ({:.0}% of block) {}",
            b.name,
            b.predicted.to_string(),
            b.observed.to_string(),
            100.0 * b.majority_fraction,
            if b.matched { "" } else { "MISMATCH" }
        );
    }
    let palette = denormalize(&palette_image(104, 104)?)?;
    enhance(&params, &palette)?.save("palette_mapped.png")?;
    println!("wrote palette_mapped.png");
    Ok(())
}
