//! Hue harmonic templates: geometry, fitting and enforcement.
//!
//! A template is a set of hue axes. Attract axes pull each assigned color onto
//! themselves; a pair of sector bounds defines an arc whose interior is
//! already harmonic. Palette colors are weighted by `W · L · C` (lightness and
//! chroma normalized) so that dark or greyish colors barely influence the fit.

pub mod contrast;
pub mod lc;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::colorspace::{
    hue_arc_distance, lch_to_rgb, max_in_gamut_chroma, normalize_hue, signed_hue_delta, LchColor, RgbColor,
};
use crate::error::{Error, Result};
use crate::palette::Palette;

/// Range of the secondary angle for the kinds that have one.
pub const ALPHA2_LIMIT: f64 = 15.0;

/// Base half-width of the analogous sector and base offset of the split kinds.
const SPLIT_BASE: f64 = 30.0;

/// Relative tolerance for treating two template distances as tied.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateKind {
    Monochrome,
    Complementary,
    SingleSplit,
    Triad,
    DoubleSplit,
    Square,
    Analogous,
}

impl TemplateKind {
    /// All kinds, in tie-break order.
    pub const ALL: [TemplateKind; 7] = [
        TemplateKind::Monochrome,
        TemplateKind::Complementary,
        TemplateKind::SingleSplit,
        TemplateKind::Triad,
        TemplateKind::DoubleSplit,
        TemplateKind::Square,
        TemplateKind::Analogous,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateKind::Monochrome => "monochrome",
            TemplateKind::Complementary => "complementary",
            TemplateKind::SingleSplit => "single_split",
            TemplateKind::Triad => "triad",
            TemplateKind::DoubleSplit => "double_split",
            TemplateKind::Square => "square",
            TemplateKind::Analogous => "analogous",
        }
    }

    /// Whether the kind has a secondary angle α2.
    pub fn has_alpha2(self) -> bool {
        matches!(
            self,
            TemplateKind::SingleSplit | TemplateKind::DoubleSplit | TemplateKind::Analogous
        )
    }

    pub fn axis_count(self) -> usize {
        match self {
            TemplateKind::Monochrome => 1,
            TemplateKind::Complementary | TemplateKind::Analogous => 2,
            TemplateKind::SingleSplit | TemplateKind::Triad => 3,
            TemplateKind::DoubleSplit | TemplateKind::Square => 4,
        }
    }
}

impl fmt::Display for TemplateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TemplateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace('-', "_");
        TemplateKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown template kind `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisType {
    Attract,
    SectorBound,
}

/// One template axis. Sector bounds come in consecutive pairs `(start, end)`
/// with the sector running counter-clockwise from start to end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub angle: f64,
    pub kind: AxisType,
}

impl Axis {
    pub fn attract(angle: f64) -> Self {
        Axis {
            angle: normalize_hue(angle),
            kind: AxisType::Attract,
        }
    }

    fn bound(angle: f64) -> Self {
        Axis {
            angle: normalize_hue(angle),
            kind: AxisType::SectorBound,
        }
    }
}

fn check_angles(kind: TemplateKind, alpha1: f64, alpha2: f64) -> Result<()> {
    if !alpha1.is_finite() || !alpha2.is_finite() {
        return Err(Error::InvalidAngle(format!("non-finite angle ({alpha1}, {alpha2})")));
    }
    if kind.has_alpha2() {
        if alpha2.abs() > ALPHA2_LIMIT {
            return Err(Error::InvalidAngle(format!(
                "alpha2 = {alpha2} outside [-{ALPHA2_LIMIT}, {ALPHA2_LIMIT}]"
            )));
        }
    } else if alpha2 != 0.0 {
        return Err(Error::InvalidAngle(format!("{kind} has no secondary angle (got {alpha2})")));
    }
    Ok(())
}

fn axes_unchecked(kind: TemplateKind, a1: f64, a2: f64) -> Vec<Axis> {
    let s = SPLIT_BASE + a2;
    let attract = |offsets: &[f64]| offsets.iter().map(|o| Axis::attract(a1 + o)).collect();
    match kind {
        TemplateKind::Monochrome => attract(&[0.0]),
        TemplateKind::Complementary => attract(&[0.0, 180.0]),
        TemplateKind::SingleSplit => attract(&[0.0, 180.0 - s, 180.0 + s]),
        TemplateKind::Triad => attract(&[0.0, 120.0, 240.0]),
        TemplateKind::DoubleSplit => attract(&[-s / 2.0, s / 2.0, 180.0 - s / 2.0, 180.0 + s / 2.0]),
        TemplateKind::Square => attract(&[0.0, 90.0, 180.0, 270.0]),
        TemplateKind::Analogous => vec![Axis::bound(a1 - s), Axis::bound(a1 + s)],
    }
}

/// Axes of a template kind rotated by `alpha1`, with spread `alpha2`.
pub fn template_axes(kind: TemplateKind, alpha1: f64, alpha2: f64) -> Result<Vec<Axis>> {
    check_angles(kind, alpha1, alpha2)?;
    Ok(axes_unchecked(kind, alpha1, alpha2))
}

/// A template kind with its angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicTemplate {
    pub kind: TemplateKind,
    pub alpha1: f64,
    #[serde(default)]
    pub alpha2: f64,
}

impl HarmonicTemplate {
    pub fn new(kind: TemplateKind, alpha1: f64, alpha2: f64) -> Result<Self> {
        check_angles(kind, alpha1, alpha2)?;
        Ok(HarmonicTemplate {
            kind,
            alpha1: normalize_hue(alpha1),
            alpha2,
        })
    }

    pub fn axes(&self) -> Vec<Axis> {
        axes_unchecked(self.kind, self.alpha1, self.alpha2)
    }
}

/// JSON template descriptor `{kind, alpha1, alpha2, beta}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemplateDescriptor {
    pub kind: TemplateKind,
    pub alpha1: f64,
    pub alpha2: f64,
    pub beta: f64,
}

/// Where a palette color goes under a template.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisAssignment {
    /// Nearest axis, `None` for achromatic colors.
    pub axis: Option<usize>,
    /// Hue the color is pulled towards (its own hue inside a sector).
    pub target: f64,
    /// Arc distance to the target in degrees.
    pub distance: f64,
    pub in_sector: bool,
}

/// Whether `h` lies on the counter-clockwise arc from `start` to `end`.
fn in_arc(h: f64, start: f64, end: f64) -> bool {
    (h - start).rem_euclid(360.0) <= (end - start).rem_euclid(360.0)
}

fn assign_one(color: &LchColor, axes: &[Axis]) -> AxisAssignment {
    if color.is_achromatic() {
        return AxisAssignment {
            axis: None,
            target: color.h,
            distance: 0.0,
            in_sector: false,
        };
    }
    let h = color.h;
    let mut i = 0;
    while i + 1 < axes.len() {
        if axes[i].kind == AxisType::SectorBound && in_arc(h, axes[i].angle, axes[i + 1].angle) {
            let d0 = hue_arc_distance(h, axes[i].angle);
            let d1 = hue_arc_distance(h, axes[i + 1].angle);
            return AxisAssignment {
                axis: Some(if d1 < d0 { i + 1 } else { i }),
                target: h,
                distance: 0.0,
                in_sector: true,
            };
        }
        i += if axes[i].kind == AxisType::SectorBound { 2 } else { 1 };
    }
    let mut best = (0, f64::INFINITY);
    for (j, a) in axes.iter().enumerate() {
        let d = hue_arc_distance(h, a.angle);
        if d < best.1 {
            best = (j, d);
        }
    }
    AxisAssignment {
        axis: Some(best.0),
        target: axes[best.0].angle,
        distance: best.1,
        in_sector: false,
    }
}

/// Nearest-axis assignment of every color (ties to the lower axis index).
pub fn assign_axes(colors: &[LchColor], axes: &[Axis]) -> Vec<AxisAssignment> {
    colors.iter().map(|c| assign_one(c, axes)).collect()
}

/// Axis group of axis `j`: attract axes are their own group, a sector's two
/// bounds share one.
pub fn axis_group(axes: &[Axis], j: usize) -> usize {
    let mut group = 0;
    let mut i = 0;
    while i < axes.len() {
        let width = if axes[i].kind == AxisType::SectorBound { 2 } else { 1 };
        if j < i + width {
            return group;
        }
        group += 1;
        i += width;
    }
    group
}

pub fn group_count(axes: &[Axis]) -> usize {
    axis_group(axes, axes.len())
}

/// Per-color term weights `W · L · C` with L, C normalized.
fn term_weights(colors: &[LchColor], weights: &[f64]) -> Vec<f64> {
    colors
        .iter()
        .zip(weights)
        .map(|(c, &w)| if c.is_achromatic() { 0.0 } else { w * c.norm_l() * c.norm_c() })
        .collect()
}

fn check_weights(colors: &[LchColor], weights: &[f64]) -> Result<()> {
    if colors.is_empty() {
        return Err(Error::Invalid("palette has no colors".into()));
    }
    if weights.len() != colors.len() {
        return Err(Error::Shape(format!(
            "{} weights for {} palette colors",
            weights.len(),
            colors.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w >= 0.0)) {
        return Err(Error::Invalid(format!("palette weight {w} must be finite and non-negative")));
    }
    Ok(())
}

/// Equal weights summing to 1.
pub fn uniform_weights(n: usize) -> Vec<f64> {
    vec![1.0 / n.max(1) as f64; n]
}

fn distance_with(terms: &[f64], colors: &[LchColor], axes: &[Axis]) -> f64 {
    colors
        .iter()
        .zip(terms)
        .filter(|(_, &t)| t != 0.0)
        .map(|(c, t)| t * assign_one(c, axes).distance)
        .sum()
}

/// Weighted distance `Σ W · L · C · arc` of a palette to a set of axes.
pub fn palette_axes_distance(colors: &[LchColor], weights: &[f64], axes: &[Axis]) -> Result<f64> {
    check_weights(colors, weights)?;
    Ok(distance_with(&term_weights(colors, weights), colors, axes))
}

pub fn palette_template_distance(colors: &[LchColor], weights: &[f64], template: &HarmonicTemplate) -> Result<f64> {
    palette_axes_distance(colors, weights, &template.axes())
}

/// A fitted template and what it does to the palette.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemplateFit {
    pub template: HarmonicTemplate,
    pub distance: f64,
    pub assignment: Vec<AxisAssignment>,
}

impl TemplateFit {
    pub fn axes(&self) -> Vec<Axis> {
        self.template.axes()
    }

    /// Whether every axis group received at least one color.
    pub fn all_axes_used(&self) -> bool {
        all_groups_used(&self.axes(), &self.assignment)
    }
}

fn all_groups_used(axes: &[Axis], assignment: &[AxisAssignment]) -> bool {
    let mut used = vec![false; group_count(axes)];
    for a in assignment {
        if let Some(j) = a.axis {
            used[axis_group(axes, j)] = true;
        }
    }
    used.iter().all(|&u| u)
}

fn tie_tolerance(terms: &[f64]) -> f64 {
    TIE_TOLERANCE * terms.iter().sum::<f64>()
}

/// The α grid: α1 over whole degrees in `[0, 360)`, α2 over whole degrees in
/// `[-15, 15]` for kinds that have it, in ascending (α1, α2) order.
pub fn alpha_grid(kind: TemplateKind) -> Vec<(f64, f64)> {
    let a2: Vec<f64> = if kind.has_alpha2() {
        (-(ALPHA2_LIMIT as i32)..=ALPHA2_LIMIT as i32).map(|v| v as f64).collect()
    } else {
        vec![0.0]
    };
    (0..360)
        .flat_map(|a1| a2.iter().map(move |&b| (a1 as f64, b)))
        .collect()
}

/// Exhaustive 1° search for the best rotation (and spread) of one kind.
/// Distances within a relative 1e-9 of the minimum count as ties, which go
/// to the smallest α1, then the smallest α2.
pub fn fit_template(colors: &[LchColor], weights: &[f64], kind: TemplateKind) -> Result<TemplateFit> {
    check_weights(colors, weights)?;
    let terms = term_weights(colors, weights);
    let grid = alpha_grid(kind);
    let dist: Vec<f64> = grid
        .iter()
        .map(|&(a1, a2)| distance_with(&terms, colors, &axes_unchecked(kind, a1, a2)))
        .collect();
    let min = dist.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = tie_tolerance(&terms);
    let best = dist.iter().position(|&d| d <= min + tol).expect("grid is nonempty");
    let (alpha1, alpha2) = grid[best];
    let template = HarmonicTemplate { kind, alpha1, alpha2 };
    Ok(TemplateFit {
        template,
        distance: dist[best],
        assignment: assign_axes(colors, &template.axes()),
    })
}

/// Fits every kind and returns the one with the smallest distance, skipping
/// fits that leave an axis without colors. Ties go to fewer axes, then to
/// the order of [`TemplateKind::ALL`].
pub fn select_optimal_template(colors: &[LchColor], weights: &[f64]) -> Result<TemplateFit> {
    select_among(colors, weights, &TemplateKind::ALL)
}

/// [`select_optimal_template`] restricted to `kinds`.
pub fn select_among(colors: &[LchColor], weights: &[f64], kinds: &[TemplateKind]) -> Result<TemplateFit> {
    check_weights(colors, weights)?;
    let tol = tie_tolerance(&term_weights(colors, weights));
    let mut fits = Vec::new();
    for &kind in kinds {
        let fit = fit_template(colors, weights, kind)?;
        if kind == TemplateKind::Monochrome || fit.all_axes_used() {
            fits.push(fit);
        }
    }
    let min = fits.iter().map(|f| f.distance).fold(f64::INFINITY, f64::min);
    fits.into_iter()
        .filter(|f| f.distance <= min + tol)
        .min_by_key(|f| {
            let k = f.template.kind;
            (k.axis_count(), TemplateKind::ALL.iter().position(|&x| x == k))
        })
        .ok_or(Error::NoValidTemplate)
}

/// Rotates each assigned chromatic hue by `beta` times its signed shortest
/// arc to the target. L and C are copied, so they are bit-exact.
pub fn harmonize_lch(colors: &[LchColor], assignment: &[AxisAssignment], beta: f64) -> Result<Vec<LchColor>> {
    if assignment.len() != colors.len() {
        return Err(Error::Shape(format!(
            "{} assignments for {} colors",
            assignment.len(),
            colors.len()
        )));
    }
    if !beta.is_finite() {
        return Err(Error::Invalid(format!("beta {beta} must be finite")));
    }
    Ok(colors
        .iter()
        .zip(assignment)
        .map(|(c, a)| {
            if a.axis.is_none() || a.in_sector || c.is_achromatic() {
                return *c;
            }
            let step = beta * signed_hue_delta(c.h, a.target);
            if step == 0.0 {
                *c
            } else {
                c.with_hue(c.h + step)
            }
        })
        .collect())
}

/// Converts harmonized LCh colors back to RGB. Colors whose LCh value did not
/// change keep their original RGB exactly; colors that left the sRGB gamut
/// have their chroma reduced at fixed L and hue.
pub fn lch_palette_to_rgb(original: &Palette, before: &[LchColor], after: &[LchColor]) -> (Palette, Vec<bool>) {
    let mut flags = Vec::with_capacity(after.len());
    let colors: Vec<RgbColor> = original
        .colors()
        .iter()
        .zip(before.iter().zip(after))
        .map(|(&rgb, (b, a))| {
            if a == b {
                flags.push(false);
                return rgb;
            }
            let (out, oog) = lch_to_rgb(*a);
            flags.push(oog);
            if oog {
                let c = max_in_gamut_chroma(a.l.clamp(0.0, 100.0), a.h, a.c);
                lch_to_rgb(LchColor { l: a.l.clamp(0.0, 100.0), c, h: a.h }).0
            } else {
                out
            }
        })
        .collect();
    (Palette::new(colors).expect("nonempty, finite"), flags)
}

/// Palette colors in LCh.
pub fn palette_lch(palette: &Palette) -> Vec<LchColor> {
    palette.colors().iter().map(|c| c.to_lch()).collect()
}

/// Result of enforcing a template on a palette.
#[derive(Debug, Clone, PartialEq)]
pub struct Harmonized {
    pub palette: Palette,
    pub lch: Vec<LchColor>,
    /// Colors that needed gamut mapping.
    pub out_of_gamut: Vec<bool>,
}

/// Harmonizes an RGB palette against a fitted template.
pub fn harmonize_palette(palette: &Palette, fit: &TemplateFit, beta: f64) -> Result<Harmonized> {
    let before = palette_lch(palette);
    let lch = harmonize_lch(&before, &fit.assignment, beta)?;
    let (palette, out_of_gamut) = lch_palette_to_rgb(palette, &before, &lch);
    Ok(Harmonized {
        palette,
        lch,
        out_of_gamut,
    })
}

/// Fits `kind` (or the optimal kind when `None`) and harmonizes.
pub fn fit_and_harmonize(
    palette: &Palette,
    weights: &[f64],
    kind: Option<TemplateKind>,
    beta: f64,
) -> Result<(TemplateFit, Harmonized)> {
    let lch = palette_lch(palette);
    let fit = match kind {
        Some(k) => fit_template(&lch, weights, k)?,
        None => select_optimal_template(&lch, weights)?,
    };
    let out = harmonize_palette(palette, &fit, beta)?;
    Ok((fit, out))
}
