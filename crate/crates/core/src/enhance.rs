//! Inference on 8-bit images, singly or a directory at a time.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::image::{denormalize, normalize, RgbImage};
use crate::model::SrmParams;

/// Runs the trained model on `img` at its native resolution.
pub fn enhance(params: &SrmParams, img: &RgbImage) -> Result<RgbImage> {
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::contract(format!(
            "enhance needs at least 2x2 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    denormalize(&params.infer(&normalize(img))?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ImageTiming {
    pub file: String,
    pub width: usize,
    pub height: usize,
    /// Wall time of the model pass alone, excluding decode and encode.
    pub millis: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnhanceReport {
    pub count: usize,
    pub images: Vec<ImageTiming>,
    pub warnings: Vec<String>,
}

impl EnhanceReport {
    pub fn mean_millis(&self) -> Option<f64> {
        (!self.images.is_empty())
            .then(|| self.images.iter().map(|t| t.millis).sum::<f64>() / self.images.len() as f64)
    }
}

/// Whether `path` has an extension this crate reads.
pub fn is_supported_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()).map(|e| e.to_ascii_lowercase()).as_deref(),
        Some("png" | "ppm" | "pnm")
    )
}

/// Enhances one file into `out_path`, returning the timing entry.
pub fn enhance_file(params: &SrmParams, in_path: &Path, out_path: &Path) -> Result<ImageTiming> {
    let img = RgbImage::open(in_path)?;
    let start = Instant::now();
    let out = enhance(params, &img)?;
    let millis = start.elapsed().as_secs_f64() * 1e3;
    out.save(out_path)?;
    Ok(ImageTiming {
        file: in_path
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default(),
        width: img.width(),
        height: img.height(),
        millis,
    })
}

/// Enhances every PNG/PPM file in `in_dir` (sorted by name) into `out_dir`
/// under the same file name. Files that fail to decode are skipped with a
/// warning; the batch continues.
pub fn enhance_dir(params: &SrmParams, in_dir: &Path, out_dir: &Path) -> Result<EnhanceReport> {
    let entries = std::fs::read_dir(in_dir).map_err(|e| Error::io(in_dir, e))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .collect();
    files.sort();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let mut report = EnhanceReport::default();
    for path in files {
        let out_path = out_dir.join(path.file_name().expect("read_dir entries have names"));
        match enhance_file(params, &path, &out_path) {
            Ok(t) => {
                report.count += 1;
                report.images.push(t);
            }
            Err(e @ (Error::Image { .. } | Error::Io { .. } | Error::Contract(_))) => {
                let msg = format!("skipping {}: {e}", path.display());
                log::warn!("{msg}");
                report.warnings.push(msg);
            }
            Err(e) => return Err(e),
        }
    }
    Ok(report)
}
