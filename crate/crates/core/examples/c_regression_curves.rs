//! Grey-distance curves of pure-color self-regression.
//!
//! Each color is trained alone; the distance of the training output from
//! central grey is printed every 100 iterations.
//!
//! ```text
//! cargo run --release --example c_regression_curves -- [iterations] [seed]
//! ```

use noiser::experiments::{bucket_means, training_distance_series, DistanceSummary, PROP1_COLORS};
use noiser::{train, TrainConfig};

fn main() -> noiser::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let iterations = args.first().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let seed = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0);
    for (name, color) in PROP1_COLORS {
        let cfg = TrainConfig::c_regression(color).with_seed(seed).with_iterations(iterations);
        let (_, log) = train(&cfg, None)?;
        let series = training_distance_series(&log);
        let s = DistanceSummary::of(&series).expect("logged points");
        let buckets: Vec<String> = bucket_means(&series, 100).iter().map(|v| format!("{v:.1}")).collect();
        println!(
            "{name:<13} {color}  D start {:.2}  min {:.2} at {}  end {:.2}",
            s.initial, s.min, s.argmin_iteration, s.last
        );
        println!("              per-100 means: {}", buckets.join(" "));
    }
    Ok(())
}
