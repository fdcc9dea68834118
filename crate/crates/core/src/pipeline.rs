//! End-to-end image flows shared by the CLI, the service and video.

use crate::decompose::{precompute_rgbxy, reconstruct, relayer, DecomposeOptions, DecompositionState, LayerWeights};
use crate::error::Result;
use crate::harmony::{fit_and_harmonize, Harmonized, TemplateFit, TemplateKind};
use crate::image::Image;
use crate::palette::{extract_palette_detailed, Palette, PaletteExtraction};

/// Palette, cached first stage and layer weights of one image.
#[derive(Debug, Clone)]
pub struct Decomposition {
    pub extraction: PaletteExtraction,
    pub state: DecompositionState,
    pub weights: LayerWeights,
}

impl Decomposition {
    pub fn palette(&self) -> &Palette {
        &self.extraction.palette
    }
}

pub fn decompose_image(img: &Image, rmse_tol: f64, opts: DecomposeOptions) -> Result<Decomposition> {
    let extraction = extract_palette_detailed(img, rmse_tol)?;
    let state = precompute_rgbxy(img, opts)?;
    let weights = relayer(&state, &extraction.palette)?;
    Ok(Decomposition {
        extraction,
        state,
        weights,
    })
}

#[derive(Debug, Clone)]
pub struct HarmonizeOutput {
    pub palette: Palette,
    /// Per-color weights used for the fit.
    pub palette_weights: Vec<f64>,
    pub fit: TemplateFit,
    pub harmonized: Harmonized,
    pub image: Image,
}

/// Fits a template (the optimal kind when `kind` is `None`) to a decomposed
/// palette, harmonizes it and recolors through `weights`.
pub fn harmonize_weights(
    palette: &Palette,
    weights: &LayerWeights,
    palette_weights: Vec<f64>,
    kind: Option<TemplateKind>,
    beta: f64,
) -> Result<HarmonizeOutput> {
    let (fit, harmonized) = fit_and_harmonize(palette, &palette_weights, kind, beta)?;
    let image = reconstruct(weights, &harmonized.palette)?;
    Ok(HarmonizeOutput {
        palette: palette.clone(),
        palette_weights,
        fit,
        harmonized,
        image,
    })
}

/// Whole-image harmonization: palette, decomposition, fit, recolor.
pub fn harmonize_image(
    img: &Image,
    kind: Option<TemplateKind>,
    beta: f64,
    rmse_tol: f64,
    opts: DecomposeOptions,
) -> Result<HarmonizeOutput> {
    let d = decompose_image(img, rmse_tol, opts)?;
    let pw = d.weights.palette_weights();
    harmonize_weights(d.palette(), &d.weights, pw, kind, beta)
}
