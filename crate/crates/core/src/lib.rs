//! Low-light image enhancement by self-regression on Gaussian noise.
//!
//! A three-layer convolutional network with instance normalization is trained
//! to reproduce random noise images (`f(n) ≈ n`); the trained network is then
//! applied to dark photos. Instance norm strips the input's overall level and
//! the zero-mean noise pulls channel means toward central grey, so dark and
//! overexposed inputs come out near mid-grey with their texture intact.
//!
//! The crate also carries the diagnostic experiments around this idea:
//! pure-color and palette self-regression, grey-distance and color-constancy
//! curves, and the channel-trend rule for pure-color color mappings.
//!
//! Everything runs on the CPU with handwritten forward and backward passes.

pub mod color;
pub mod data;
pub mod enhance;
pub mod eval;
mod error;
pub mod experiments;
pub mod image;
pub mod metrics;
pub mod model;
pub mod tensor;
pub mod trainer;

pub use error::{Error, Result};

pub use color::{central_grey, opposite_color, predict_mapping, verify_mapping, MappingTarget};
pub use data::{palette_image, pure_color_image, sample_noise, NoiseSpec, Rgb8};
pub use enhance::{enhance, enhance_dir, EnhanceReport};
pub use eval::{evaluate_dirs, EvalReport};
pub use image::{denormalize, normalize, RgbImage};
pub use metrics::{channel_means, color_constancy, grey_distance, psnr, ssim, MetricReport};
pub use model::SrmParams;
pub use tensor::{Shape, Tensor};
pub use trainer::{train, CurveLog, TrainConfig, TrainMode, Variant};
