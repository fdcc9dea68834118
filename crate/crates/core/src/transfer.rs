//! Palette-level color transfer through harmonic templates.
//!
//! Alignment rotates the input palette so that the main axis of its template
//! lands on the main axis of the reference template, then snaps onto the
//! reference template. Transfer skips the rotation and matches mean
//! lightness and chroma to the reference instead.

use serde::{Deserialize, Serialize};

use crate::colorspace::{normalize_hue, signed_hue_delta, LchColor};
use crate::error::{Error, Result};
use crate::harmony::{
    assign_axes, axis_group, group_count, harmonize_lch, lch_palette_to_rgb, palette_lch, select_optimal_template,
    Axis, AxisAssignment, AxisType, HarmonicTemplate, TemplateFit,
};
use crate::palette::Palette;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMode {
    Align,
    Transfer,
}

impl std::str::FromStr for TransferMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "align" | "template_align" => Ok(TransferMode::Align),
            "transfer" | "template_transfer" => Ok(TransferMode::Transfer),
            _ => Err(Error::Invalid(format!("unknown transfer mode `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferResult {
    pub input_template: Option<HarmonicTemplate>,
    pub reference_template: HarmonicTemplate,
    /// Global hue rotation (alignment only).
    pub gamma: f64,
    /// Lightness and chroma factors (transfer only).
    pub l_scale: f64,
    pub c_scale: f64,
    pub assignment: Vec<AxisAssignment>,
    /// Colors before range clamping.
    pub unclamped: Vec<LchColor>,
    pub lch: Vec<LchColor>,
}

/// Weighted circular mean hue of a group's colors.
fn mean_hue(members: &[(f64, f64)]) -> Option<f64> {
    let (s, c) = members.iter().fold((0.0, 0.0), |(s, c), &(h, w)| {
        let r = h.to_radians();
        (s + w * r.sin(), c + w * r.cos())
    });
    (s.hypot(c) > 1e-12).then(|| normalize_hue(s.atan2(c).to_degrees()))
}

/// Hue of an axis group: the attract axis itself, or for a sector the
/// weighted mean hue of its colors (the sector's middle if that is undefined).
fn group_hue(axes: &[Axis], group: usize, members: &[(f64, f64)]) -> f64 {
    let j = (0..axes.len()).find(|&j| axis_group(axes, j) == group).expect("group exists");
    if axes[j].kind == AxisType::SectorBound {
        mean_hue(members).unwrap_or_else(|| {
            let start = axes[j].angle;
            let width = (axes[j + 1].angle - start).rem_euclid(360.0);
            normalize_hue(start + width / 2.0)
        })
    } else {
        axes[j].angle
    }
}

/// The group carrying the most palette weight; ties go to the larger summed
/// chroma, then the lower group index.
pub fn main_axis_hue(fit: &TemplateFit, colors: &[LchColor], weights: &[f64]) -> f64 {
    let axes = fit.template.axes();
    let n = group_count(&axes);
    let mut weight = vec![0.0; n];
    let mut chroma = vec![0.0; n];
    let mut members = vec![Vec::new(); n];
    for ((a, c), w) in fit.assignment.iter().zip(colors).zip(weights) {
        if let Some(j) = a.axis {
            let g = axis_group(&axes, j);
            weight[g] += w;
            chroma[g] += c.c;
            members[g].push((c.h, *w));
        }
    }
    let mut best = 0;
    for g in 1..n {
        if weight[g] > weight[best] || (weight[g] == weight[best] && chroma[g] > chroma[best]) {
            best = g;
        }
    }
    group_hue(&axes, best, &members[best])
}

fn check(colors: &[LchColor], weights: &[f64]) -> Result<()> {
    if colors.len() != weights.len() {
        return Err(Error::Shape(format!("{} weights for {} colors", weights.len(), colors.len())));
    }
    Ok(())
}

/// Rotates the input so its template's main axis meets the reference's,
/// then harmonizes onto the reference template at full strength.
pub fn template_align_lch(
    input: &[LchColor],
    input_weights: &[f64],
    reference: &[LchColor],
    reference_weights: &[f64],
) -> Result<TransferResult> {
    check(input, input_weights)?;
    check(reference, reference_weights)?;
    let fit_i = select_optimal_template(input, input_weights)?;
    let fit_r = select_optimal_template(reference, reference_weights)?;
    let gamma = signed_hue_delta(
        main_axis_hue(&fit_i, input, input_weights),
        main_axis_hue(&fit_r, reference, reference_weights),
    );
    let rotated: Vec<LchColor> = input
        .iter()
        .map(|c| if c.is_achromatic() || gamma == 0.0 { *c } else { c.with_hue(c.h + gamma) })
        .collect();
    let assignment = assign_axes(&rotated, &fit_r.template.axes());
    let lch = harmonize_lch(&rotated, &assignment, 1.0)?;
    Ok(TransferResult {
        input_template: Some(fit_i.template),
        reference_template: fit_r.template,
        gamma,
        l_scale: 1.0,
        c_scale: 1.0,
        assignment,
        unclamped: lch.clone(),
        lch,
    })
}

fn weighted_mean(colors: &[LchColor], weights: &[f64], f: impl Fn(&LchColor) -> f64) -> f64 {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        colors.iter().zip(weights).map(|(c, w)| w * f(c)).sum::<f64>() / total
    } else {
        colors.iter().map(f).sum::<f64>() / colors.len().max(1) as f64
    }
}

/// Harmonizes the input onto the reference's template without rotation and
/// scales L and C so their weighted means match the reference.
pub fn template_transfer_lch(
    input: &[LchColor],
    input_weights: &[f64],
    reference: &[LchColor],
    reference_weights: &[f64],
) -> Result<TransferResult> {
    check(input, input_weights)?;
    check(reference, reference_weights)?;
    let fit_r = select_optimal_template(reference, reference_weights)?;
    let assignment = assign_axes(input, &fit_r.template.axes());
    let harmonized = harmonize_lch(input, &assignment, 1.0)?;
    let ratio = |target: f64, current: f64| if current > 0.0 { target / current } else { 1.0 };
    let l_scale = ratio(
        weighted_mean(reference, reference_weights, |c| c.l),
        weighted_mean(&harmonized, input_weights, |c| c.l),
    );
    // an all-grey input has no chroma to scale
    let c_scale = if harmonized.iter().all(LchColor::is_achromatic) {
        1.0
    } else {
        ratio(
            weighted_mean(reference, reference_weights, |c| c.c),
            weighted_mean(&harmonized, input_weights, |c| c.c),
        )
    };
    let unclamped: Vec<LchColor> = harmonized
        .iter()
        .map(|c| LchColor {
            l: c.l * l_scale,
            c: c.c * c_scale,
            h: c.h,
        })
        .collect();
    let lch = unclamped
        .iter()
        .map(|c| LchColor {
            l: c.l.clamp(0.0, 100.0),
            c: c.c.max(0.0),
            h: c.h,
        })
        .collect();
    Ok(TransferResult {
        input_template: None,
        reference_template: fit_r.template,
        gamma: 0.0,
        l_scale,
        c_scale,
        assignment,
        unclamped,
        lch,
    })
}

/// Runs a transfer on RGB palettes. The output keeps palette size and order;
/// colors are gamut-mapped by chroma reduction.
pub fn transfer_palette(
    mode: TransferMode,
    input: &Palette,
    input_weights: &[f64],
    reference: &Palette,
    reference_weights: &[f64],
) -> Result<(TransferResult, Palette)> {
    let before = palette_lch(input);
    let reference = palette_lch(reference);
    let res = match mode {
        TransferMode::Align => template_align_lch(&before, input_weights, &reference, reference_weights)?,
        TransferMode::Transfer => template_transfer_lch(&before, input_weights, &reference, reference_weights)?,
    };
    let (out, _) = lch_palette_to_rgb(input, &before, &res.lch);
    Ok((res, out))
}
