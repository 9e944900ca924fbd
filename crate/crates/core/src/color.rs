//! Central grey, opposite colors, and the channel-trend rule that predicts
//! where a pure-color-trained model sends each saturated inference color.
//!
//! Training on color `t` teaches each channel a trend: down if `t_i < 128`,
//! up if `t_i > 128`. An inference color satisfies a down trend in channel `i`
//! when it has room to move down (`v_i > 0`) and an up trend when it has room
//! to move up (`v_i < 255`). Colors satisfying at least two trends map to the
//! training color, the rest to its opposite.

use std::fmt;

use serde::Serialize;

use crate::data::{palette_color_at, palette_image, Rgb8, PALETTE};
use crate::error::{Error, Result};
use crate::image::denormalize;
use crate::model::SrmParams;

/// Trend count at or above which a color maps to the training color.
pub const MAPPING_THRESHOLD: usize = 2;
/// Palette size used by [`verify_mapping`].
pub const VERIFY_HW: (usize, usize) = (104, 104);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Trend {
    Down,
    Up,
    Flat,
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Trend::Down => "down",
            Trend::Up => "up",
            Trend::Flat => "flat",
        })
    }
}

/// Per-channel trend learned from a training color.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ChannelTrend(pub [Trend; 3]);

impl ChannelTrend {
    pub fn of(train: Rgb8) -> Self {
        let grey = central_grey().r;
        ChannelTrend(train.channels().map(|v| match v.cmp(&grey) {
            std::cmp::Ordering::Less => Trend::Down,
            std::cmp::Ordering::Greater => Trend::Up,
            std::cmp::Ordering::Equal => Trend::Flat,
        }))
    }
}

/// (128, 128, 128): the 8-bit midpoint rounded to an integer.
pub const fn central_grey() -> Rgb8 {
    Rgb8::CENTRAL_GREY
}

/// Reflection through 127.5 in every channel: `v -> 255 - v`. Central grey
/// maps to (127, 127, 127).
pub const fn opposite_color(c: Rgb8) -> Rgb8 {
    Rgb8::new(255 - c.r, 255 - c.g, 255 - c.b)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum MappingTarget {
    TrainingColor,
    Opposite,
}

impl fmt::Display for MappingTarget {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MappingTarget::TrainingColor => "training",
            MappingTarget::Opposite => "opposite",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct MappingPrediction {
    pub satisfied: [bool; 3],
    pub count: usize,
    pub target: MappingTarget,
    /// The concrete color the rule predicts.
    pub color: Rgb8,
}

/// Predicts where a model trained on `train` maps the color `infer`.
/// Fails if any training channel is exactly 128, for which no trend exists.
pub fn predict_mapping(train: Rgb8, infer: Rgb8) -> Result<MappingPrediction> {
    let trend = ChannelTrend::of(train);
    let mut satisfied = [false; 3];
    for (i, (t, v)) in trend.0.iter().zip(infer.channels()).enumerate() {
        satisfied[i] = match t {
            Trend::Down => v > 0,
            Trend::Up => v < 255,
            Trend::Flat => {
                return Err(Error::Unsupported(format!(
                    "training color {train} has a flat (128) channel; the trend rule is undefined"
                )))
            }
        };
    }
    let count = satisfied.iter().filter(|&&s| s).count();
    let (target, color) = if count >= MAPPING_THRESHOLD {
        (MappingTarget::TrainingColor, train)
    } else {
        (MappingTarget::Opposite, opposite_color(train))
    };
    Ok(MappingPrediction {
        satisfied,
        count,
        target,
        color,
    })
}

/// Table of predictions for every palette color, as printed by the CLI.
pub fn mapping_table(train: Rgb8) -> Result<String> {
    let trend = ChannelTrend::of(train);
    let mut out = format!(
        "training {train}  trends R:{} G:{} B:{}\n{:<8} {:>13}  {:<5} {:<5} {:<5} {:>3}  {}\n",
        trend.0[0], trend.0[1], trend.0[2], "color", "rgb", "R?", "G?", "B?", "no.", "to"
    );
    let mark = |b: bool| if b { "yes" } else { "-" };
    for (name, c) in PALETTE {
        let p = predict_mapping(train, c)?;
        out.push_str(&format!(
            "{:<8} {:>13}  {:<5} {:<5} {:<5} {:>3}  {} {}\n",
            name,
            c.to_string(),
            mark(p.satisfied[0]),
            mark(p.satisfied[1]),
            mark(p.satisfied[2]),
            p.count,
            p.target,
            p.color
        ));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlockResult {
    pub name: &'static str,
    pub color: Rgb8,
    pub predicted: MappingTarget,
    pub observed: MappingTarget,
    /// Fraction of the block's pixels nearer the observed target.
    pub majority_fraction: f64,
    pub matched: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MappingReport {
    pub train_color: Rgb8,
    pub blocks: Vec<BlockResult>,
}

impl MappingReport {
    pub fn all_matched(&self) -> bool {
        self.blocks.iter().all(|b| b.matched)
    }
}

fn dist2(a: Rgb8, b: Rgb8) -> i32 {
    a.channels()
        .into_iter()
        .zip(b.channels())
        .map(|(x, y)| (x as i32 - y as i32).pow(2))
        .sum()
}

/// Runs the model on the palette and classifies each output pixel as nearer
/// the training color or its opposite; each block's majority is compared
/// with [`predict_mapping`].
pub fn verify_mapping(trained: &SrmParams, train_color: Rgb8) -> Result<MappingReport> {
    let (h, w) = VERIFY_HW;
    let out = denormalize(&trained.infer(&palette_image(h, w)?)?)?;
    let opposite = opposite_color(train_color);
    let mut toward_train = [0usize; 8];
    let mut totals = [0usize; 8];
    for y in 0..h {
        for x in 0..w {
            let block = PALETTE
                .iter()
                .position(|(_, c)| *c == palette_color_at(h, w, y, x))
                .expect("palette color");
            let p = out.pixel(x, y);
            totals[block] += 1;
            if dist2(p, train_color) <= dist2(p, opposite) {
                toward_train[block] += 1;
            }
        }
    }
    let blocks = PALETTE
        .iter()
        .enumerate()
        .map(|(i, &(name, color))| {
            let predicted = predict_mapping(train_color, color)?.target;
            let frac_train = toward_train[i] as f64 / totals[i] as f64;
            let (observed, majority_fraction) = if frac_train > 0.5 {
                (MappingTarget::TrainingColor, frac_train)
            } else {
                (MappingTarget::Opposite, 1.0 - frac_train)
            };
            Ok(BlockResult {
                name,
                color,
                predicted,
                observed,
                majority_fraction,
                matched: predicted == observed,
            })
        })
        .collect::<Result<_>>()?;
    Ok(MappingReport { train_color, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grey_and_opposites() {
        assert_eq!(central_grey(), Rgb8::new(128, 128, 128));
        assert_eq!(opposite_color(Rgb8::BLACK), Rgb8::WHITE);
        assert_eq!(opposite_color(Rgb8::RED), Rgb8::CYAN);
        assert_eq!(opposite_color(Rgb8::YELLOW), Rgb8::BLUE);
        assert_eq!(opposite_color(central_grey()), Rgb8::new(127, 127, 127));
    }

    #[test]
    fn trends() {
        assert_eq!(ChannelTrend::of(Rgb8::BLACK).0, [Trend::Down; 3]);
        assert_eq!(ChannelTrend::of(Rgb8::RED).0, [Trend::Up, Trend::Down, Trend::Down]);
        assert_eq!(ChannelTrend::of(Rgb8::ORANGE).0[1], Trend::Flat);
    }

    #[test]
    fn black_training_rows() {
        let to = |c| predict_mapping(Rgb8::BLACK, c).unwrap();
        assert_eq!(to(Rgb8::CYAN).count, 2);
        assert_eq!(to(Rgb8::CYAN).color, Rgb8::BLACK);
        assert_eq!(to(Rgb8::RED).count, 1);
        assert_eq!(to(Rgb8::RED).color, Rgb8::WHITE);
        let counts: Vec<_> = PALETTE.iter().map(|(_, c)| to(*c).count).collect();
        assert_eq!(counts, vec![3, 2, 2, 2, 1, 1, 1, 0]);
    }

    #[test]
    fn red_training_rows() {
        let counts: Vec<_> = PALETTE
            .iter()
            .map(|(_, c)| predict_mapping(Rgb8::RED, *c).unwrap().count)
            .collect();
        assert_eq!(counts, vec![2, 3, 1, 1, 0, 2, 2, 1]);
        let w = predict_mapping(Rgb8::RED, Rgb8::WHITE).unwrap();
        assert_eq!(w.satisfied, [false, true, true]);
        assert_eq!(w.color, Rgb8::RED);
    }

    #[test]
    fn flat_channel_is_unsupported() {
        assert!(matches!(
            predict_mapping(Rgb8::ORANGE, Rgb8::WHITE),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn table_lists_every_color() {
        let t = mapping_table(Rgb8::BLACK).unwrap();
        assert_eq!(t.lines().count(), 10);
        assert!(t.contains("cyan"));
    }
}
