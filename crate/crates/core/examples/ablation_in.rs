//! Instance-norm ablation: the same noise training with and without IN,
//! judged by where a dark scene's channel means land.
//!
//! ```text
//! cargo run --release --example ablation_in -- [iterations] [seed]
//! ```

use noiser::data::{synthetic_scene, Exposure};
use noiser::experiments::{band_check, NORMAL_LIGHT_BAND};
use noiser::metrics::channel_means;
use noiser::{train, TrainConfig};

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let iterations = args.first().and_then(|s| s.parse().ok()).unwrap_or(2000);
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    let scene = synthetic_scene(256, 192, Exposure::Dark, 11);
    let m = channel_means(&scene);
    println!("dark input means ({:.1}, {:.1}, {:.1}); target band {:?}", m[0], m[1], m[2], NORMAL_LIGHT_BAND);
    for disable in [false, true] {
        let mut cfg = TrainConfig::default().with_seed(seed).with_iterations(iterations);
        cfg.disable_instance_norm = disable;
        let (params, _) = train(&cfg, None)?;
        let c = band_check(&params, &scene)?;
        println!(
            "{:<10} means ({:.1}, {:.1}, {:.1})  L_col {:.2}  in band: {}",
            if disable { "no IN" } else { "with IN" },
            c.means[0],
            c.means[1],
            c.means[2],
            c.color_constancy,
            c.passes
        );
    }
    Ok(())
}
