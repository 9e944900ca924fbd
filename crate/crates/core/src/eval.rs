//! Scoring enhanced images against references, pairwise or by directory.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::enhance::is_supported_image;
use crate::error::{Error, Result};
use crate::image::RgbImage;
use crate::metrics::MetricReport;

pub const EVAL_CSV_HEADER: &str = "file,psnr,ssim,grey_distance,color_constancy,mean_r,mean_g,mean_b";

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EvalReport {
    pub rows: Vec<(String, MetricReport)>,
    pub warnings: Vec<String>,
}

impl EvalReport {
    /// Column-wise mean of every row, or `None` when nothing was scored.
    pub fn mean(&self) -> Option<MetricReport> {
        if self.rows.is_empty() {
            return None;
        }
        let n = self.rows.len() as f64;
        let avg = |f: &dyn Fn(&MetricReport) -> f64| self.rows.iter().map(|(_, r)| f(r)).sum::<f64>() / n;
        Some(MetricReport {
            psnr_db: avg(&|r| r.psnr_db),
            ssim: avg(&|r| r.ssim),
            grey_distance: avg(&|r| r.grey_distance),
            color_constancy: avg(&|r| r.color_constancy),
            channel_means: [0, 1, 2].map(|c| avg(&|r| r.channel_means[c])),
        })
    }

    /// One row per pair followed by a `mean` row; six decimals.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{EVAL_CSV_HEADER}\n");
        let row = |name: &str, r: &MetricReport| {
            format!(
                "{name},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6}\n",
                r.psnr_db,
                r.ssim,
                r.grey_distance,
                r.color_constancy,
                r.channel_means[0],
                r.channel_means[1],
                r.channel_means[2]
            )
        };
        for (name, r) in &self.rows {
            out.push_str(&row(name, r));
        }
        if let Some(m) = self.mean() {
            out.push_str(&row("mean", &m));
        }
        out
    }
}

pub fn evaluate_pair(enhanced: &Path, reference: &Path) -> Result<MetricReport> {
    MetricReport::compute(&RgbImage::open(enhanced)?, &RgbImage::open(reference)?)
}

fn image_names(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && is_supported_image(p))
        .filter_map(|p| p.file_name().map(PathBuf::from))
        .collect();
    names.sort();
    Ok(names)
}

/// Scores every file in `enhanced_dir` against the same-named file in
/// `reference_dir`. Files without a partner, or that fail to decode or
/// differ in size, are skipped with a warning.
pub fn evaluate_dirs(enhanced_dir: &Path, reference_dir: &Path) -> Result<EvalReport> {
    let refs = image_names(reference_dir)?;
    let mut report = EvalReport::default();
    let warn = |report: &mut EvalReport, msg: String| {
        log::warn!("{msg}");
        report.warnings.push(msg);
    };
    for name in image_names(enhanced_dir)? {
        let shown = name.to_string_lossy().into_owned();
        if !refs.contains(&name) {
            warn(&mut report, format!("no reference for {shown}, skipping"));
            continue;
        }
        match evaluate_pair(&enhanced_dir.join(&name), &reference_dir.join(&name)) {
            Ok(r) => report.rows.push((shown, r)),
            Err(e @ (Error::Image { .. } | Error::Io { .. } | Error::Contract(_))) => {
                warn(&mut report, format!("skipping {shown}: {e}"))
            }
            Err(e) => return Err(e),
        }
    }
    for name in refs {
        if !enhanced_dir.join(&name).is_file() {
            warn(&mut report, format!("no enhanced image for reference {}, skipping", name.display()));
        }
    }
    Ok(report)
}
