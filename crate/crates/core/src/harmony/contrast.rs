//! Itten-style contrast operators built from hue and LC templates.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::colorspace::{LchColor, RgbColor};
use crate::error::{Error, Result};
use crate::harmony::lc::{fit_and_apply_lc, LcApplied, LcKind};
use crate::harmony::{
    assign_axes, axis_group, fit_template, group_count, harmonize_lch, lch_palette_to_rgb, palette_lch,
    select_among, select_optimal_template, Axis, AxisAssignment, HarmonicTemplate, TemplateKind,
};
use crate::palette::Palette;

/// Chroma factor per unit β applied to the lighter complementary axis.
pub const SIMULTANEOUS_CHROMA_STEP: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContrastKind {
    Hue,
    LightDark,
    Complementary,
    Simultaneous,
    Saturation,
    Extension,
    ColdWarm,
}

impl ContrastKind {
    pub const ALL: [ContrastKind; 7] = [
        ContrastKind::Hue,
        ContrastKind::LightDark,
        ContrastKind::Complementary,
        ContrastKind::Simultaneous,
        ContrastKind::Saturation,
        ContrastKind::Extension,
        ContrastKind::ColdWarm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ContrastKind::Hue => "hue",
            ContrastKind::LightDark => "light_dark",
            ContrastKind::Complementary => "complementary",
            ContrastKind::Simultaneous => "simultaneous",
            ContrastKind::Saturation => "saturation",
            ContrastKind::Extension => "extension",
            ContrastKind::ColdWarm => "cold_warm",
        }
    }
}

impl fmt::Display for ContrastKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ContrastKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        ContrastKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown contrast kind `{s}`")))
    }
}

/// Hues of the sRGB primaries red, green and blue.
pub fn primary_hues() -> [f64; 3] {
    [
        RgbColor::new(1.0, 0.0, 0.0).to_lch().h,
        RgbColor::new(0.0, 1.0, 0.0).to_lch().h,
        RgbColor::new(0.0, 0.0, 1.0).to_lch().h,
    ]
}

/// Axes perpendicular to the red–cyan divide.
pub fn cold_warm_axes() -> Vec<Axis> {
    let red = primary_hues()[0];
    vec![Axis::attract(red + 90.0), Axis::attract(red + 270.0)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastResult {
    pub kind: ContrastKind,
    pub axes: Vec<Axis>,
    /// Fitted hue template, when the operator fits one.
    pub template: Option<HarmonicTemplate>,
    pub assignment: Vec<AxisAssignment>,
    pub lc: Option<LcApplied>,
    /// Per-axis-group multiplicative L factors (extension only).
    pub lightness_factors: Vec<f64>,
    pub lch: Vec<LchColor>,
}

struct HueStep {
    axes: Vec<Axis>,
    template: Option<HarmonicTemplate>,
    assignment: Vec<AxisAssignment>,
    lch: Vec<LchColor>,
}

fn hue_step_fixed(colors: &[LchColor], axes: Vec<Axis>, beta: f64) -> Result<HueStep> {
    let assignment = assign_axes(colors, &axes);
    let lch = harmonize_lch(colors, &assignment, beta)?;
    Ok(HueStep {
        axes,
        template: None,
        assignment,
        lch,
    })
}

fn hue_step_fit(colors: &[LchColor], fit: crate::harmony::TemplateFit, beta: f64) -> Result<HueStep> {
    let lch = harmonize_lch(colors, &fit.assignment, beta)?;
    Ok(HueStep {
        axes: fit.template.axes(),
        template: Some(fit.template),
        assignment: fit.assignment,
        lch,
    })
}

fn groups_of(step: &HueStep) -> Vec<Option<usize>> {
    step.assignment
        .iter()
        .map(|a| a.axis.map(|j| axis_group(&step.axes, j)))
        .collect()
}

/// Solves `Σ min(k·L, 1)·C·W = target` for `k ≥ 0` by bisection. Returns
/// the largest useful `k` when the target cannot be reached.
fn lightness_factor(members: &[(f64, f64, f64)], target: f64) -> f64 {
    let f = |k: f64| members.iter().map(|&(l, c, w)| (k * l).min(1.0) * c * w).sum::<f64>();
    let k_max = members
        .iter()
        .filter(|m| m.0 > 0.0)
        .map(|m| 1.0 / m.0)
        .fold(1.0, f64::max);
    if f(k_max) <= target {
        return k_max;
    }
    let (mut lo, mut hi) = (0.0, k_max);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Applies a contrast operator to LCh colors.
pub fn contrast_lch(colors: &[LchColor], weights: &[f64], kind: ContrastKind, beta: f64) -> Result<ContrastResult> {
    let analog_or_mono = [TemplateKind::Monochrome, TemplateKind::Analogous];
    let mut lc = None;
    let mut lightness_factors = Vec::new();
    let step = match kind {
        ContrastKind::Hue => hue_step_fixed(colors, primary_hues().map(Axis::attract).to_vec(), beta)?,
        ContrastKind::ColdWarm => hue_step_fixed(colors, cold_warm_axes(), beta)?,
        ContrastKind::Complementary => hue_step_fit(colors, fit_template(colors, weights, TemplateKind::Complementary)?, beta)?,
        ContrastKind::LightDark | ContrastKind::Saturation => {
            hue_step_fit(colors, select_among(colors, weights, &analog_or_mono)?, beta)?
        }
        ContrastKind::Simultaneous => {
            let mut step = hue_step_fit(colors, fit_template(colors, weights, TemplateKind::Complementary)?, beta)?;
            let mut totals = [0.0; 2];
            for (a, w) in step.assignment.iter().zip(weights) {
                if let Some(j) = a.axis {
                    totals[j] += w;
                }
            }
            let lighter = if totals[0] < totals[1] { 0 } else { 1 };
            let scale = (1.0 - SIMULTANEOUS_CHROMA_STEP * beta).max(0.0);
            for (c, a) in step.lch.iter_mut().zip(&step.assignment) {
                if a.axis == Some(lighter) {
                    c.c *= scale;
                }
            }
            step
        }
        ContrastKind::Extension => {
            let mut step = hue_step_fit(colors, select_optimal_template(colors, weights)?, beta)?;
            let groups = groups_of(&step);
            let n_groups = group_count(&step.axes);
            let members: Vec<Vec<(f64, f64, f64)>> = (0..n_groups)
                .map(|g| {
                    (0..colors.len())
                        .filter(|&i| groups[i] == Some(g))
                        .map(|i| (step.lch[i].norm_l(), step.lch[i].norm_c(), weights[i]))
                        .collect()
                })
                .collect();
            let sums: Vec<f64> = members
                .iter()
                .map(|m| m.iter().map(|&(l, c, w)| l * c * w).sum())
                .collect();
            let active: Vec<f64> = sums.iter().copied().filter(|&s| s > 0.0).collect();
            // the mean, lowered if some axis cannot reach it with L capped at 1
            let reachable = members
                .iter()
                .zip(&sums)
                .filter(|(_, &s)| s > 0.0)
                .map(|(m, _)| m.iter().map(|&(l, c, w)| if l > 0.0 { c * w } else { 0.0 }).sum::<f64>())
                .fold(f64::INFINITY, f64::min);
            let target = (active.iter().sum::<f64>() / active.len().max(1) as f64).min(reachable);
            lightness_factors = members
                .iter()
                .zip(&sums)
                .map(|(m, &s)| if s > 0.0 { lightness_factor(m, target) } else { 1.0 })
                .collect();
            for (i, c) in step.lch.iter_mut().enumerate() {
                if let Some(g) = groups[i] {
                    let k = 1.0 + beta * (lightness_factors[g] - 1.0);
                    c.l = (c.l * k).clamp(0.0, 100.0);
                }
            }
            step
        }
    };
    let mut out = step.lch.clone();
    if matches!(kind, ContrastKind::LightDark | ContrastKind::Saturation) {
        let lc_kind = if kind == ContrastKind::LightDark { LcKind::Lc1 } else { LcKind::Lc2 };
        let applied = fit_and_apply_lc(&out, weights, lc_kind, None)?;
        out = applied.colors.clone();
        lc = Some(applied);
    }
    Ok(ContrastResult {
        kind,
        axes: step.axes,
        template: step.template,
        assignment: step.assignment,
        lc,
        lightness_factors,
        lch: out,
    })
}

/// Applies a contrast operator to an RGB palette.
pub fn contrast_operator(
    palette: &Palette,
    weights: &[f64],
    kind: ContrastKind,
    beta: f64,
) -> Result<(ContrastResult, Palette)> {
    let before = palette_lch(palette);
    let res = contrast_lch(&before, weights, kind, beta)?;
    let (out, _) = lch_palette_to_rgb(palette, &before, &res.lch);
    Ok((res, out))
}
