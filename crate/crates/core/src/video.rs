//! Video harmonization with one global palette.
//!
//! The palette comes from the hull of all frames' pixel-color hull vertices,
//! simplified against the pooled histogram. Every frame is decomposed over
//! that palette, the per-color weights are averaged over frames, one template
//! is fitted and enforced, and each frame is recolored with its own weights.

use rayon::prelude::*;

use crate::decompose::{precompute_rgbxy, reconstruct, relayer, DecomposeOptions, LayerWeights};
use crate::error::{Error, Result};
use crate::harmony::{fit_and_harmonize, Harmonized, TemplateFit, TemplateKind};
use crate::image::Image;
use crate::palette::{bin_image, hull_seed, palette_from_histogram, BinnedHistogram, Palette, PaletteExtraction};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VideoOptions {
    pub rmse_tol: f64,
    pub decompose: DecomposeOptions,
    /// Keep every frame's weights between the averaging and recoloring
    /// passes instead of recomputing them.
    pub retain_weights: bool,
}

impl Default for VideoOptions {
    fn default() -> Self {
        VideoOptions {
            rmse_tol: crate::palette::DEFAULT_RMSE_TOLERANCE,
            decompose: DecomposeOptions::default(),
            retain_weights: true,
        }
    }
}

/// Global palette of a frame sequence.
pub fn video_global_palette(frames: &[Image], rmse_tol: f64) -> Result<PaletteExtraction> {
    if frames.is_empty() {
        return Err(Error::Invalid("video has no frames".into()));
    }
    let per_frame: Vec<(BinnedHistogram, Vec<[f64; 3]>)> = frames
        .par_iter()
        .map(|f| {
            let hist = bin_image(f);
            let seed = hull_seed(f.pixels())?;
            Ok((hist, seed))
        })
        .collect::<Result<_>>()?;
    let mut pooled = BinnedHistogram::default();
    let mut seed = Vec::new();
    for (hist, s) in &per_frame {
        pooled.merge(hist);
        seed.extend_from_slice(s);
    }
    palette_from_histogram(&pooled, Some(&seed), rmse_tol)
}

fn frame_weights(frame: &Image, palette: &Palette, opts: DecomposeOptions) -> Result<LayerWeights> {
    relayer(&precompute_rgbxy(frame, opts)?, palette)
}

#[derive(Debug, Clone)]
pub struct VideoHarmonization {
    pub extraction: PaletteExtraction,
    /// Per-color weights averaged over frames.
    pub palette_weights: Vec<f64>,
    pub fit: TemplateFit,
    pub harmonized: Harmonized,
    pub frames: Vec<Image>,
}

pub fn harmonize_video(
    frames: &[Image],
    kind: Option<TemplateKind>,
    beta: f64,
    opts: VideoOptions,
) -> Result<VideoHarmonization> {
    let first = frames.first().ok_or_else(|| Error::Invalid("video has no frames".into()))?;
    if let Some(f) = frames
        .iter()
        .find(|f| (f.width(), f.height()) != (first.width(), first.height()))
    {
        return Err(Error::Shape(format!(
            "frame is {}x{}, expected {}x{}",
            f.width(),
            f.height(),
            first.width(),
            first.height()
        )));
    }
    let extraction = video_global_palette(frames, opts.rmse_tol)?;
    let palette = &extraction.palette;

    let per_frame: Vec<(Vec<f64>, Option<LayerWeights>)> = frames
        .par_iter()
        .map(|f| {
            let w = frame_weights(f, palette, opts.decompose)?;
            let pw = w.palette_weights();
            Ok((pw, opts.retain_weights.then_some(w)))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0.0; palette.len()];
    for (pw, _) in &per_frame {
        for (s, w) in sum.iter_mut().zip(pw) {
            *s += w;
        }
    }
    let n = frames.len() as f64;
    let palette_weights: Vec<f64> = sum.iter().map(|s| s / n).collect();

    let (fit, harmonized) = fit_and_harmonize(palette, &palette_weights, kind, beta)?;
    let out = frames
        .par_iter()
        .zip(per_frame.into_par_iter())
        .map(|(f, (_, w))| {
            let w = match w {
                Some(w) => w,
                None => frame_weights(f, palette, opts.decompose)?,
            };
            reconstruct(&w, &harmonized.palette)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(VideoHarmonization {
        extraction,
        palette_weights,
        fit,
        harmonized,
        frames: out,
    })
}
