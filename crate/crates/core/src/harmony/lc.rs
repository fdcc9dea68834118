//! Lightness–chroma templates.
//!
//! Colors live in the plane `(x, y) = (C / 134, L / 100)`. Each template is a
//! line in that plane; applying it projects the colors onto the fitted line,
//! keeps the two extremes and spaces the others evenly between them.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::colorspace::{LchColor, MAX_SRGB_CHROMA};
use crate::error::{Error, Result};
use crate::harmony::{axis_group, lch_palette_to_rgb, palette_lch, select_optimal_template, TemplateFit};
use crate::palette::Palette;

/// Pivot of LC3 when the hue template has several axes.
pub const MULTI_AXIS_PIVOT: [f64; 2] = [0.5, 0.0];

/// Lightness the neutral snap moves the nearest color to.
const NEUTRAL_L: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LcKind {
    Lc1,
    Lc2,
    Lc3,
    Lc4,
    Lc5,
    Lc6,
}

impl LcKind {
    pub const ALL: [LcKind; 6] = [LcKind::Lc1, LcKind::Lc2, LcKind::Lc3, LcKind::Lc4, LcKind::Lc5, LcKind::Lc6];

    pub fn name(self) -> &'static str {
        match self {
            LcKind::Lc1 => "lc1",
            LcKind::Lc2 => "lc2",
            LcKind::Lc3 => "lc3",
            LcKind::Lc4 => "lc4",
            LcKind::Lc5 => "lc5",
            LcKind::Lc6 => "lc6",
        }
    }

    /// Kinds whose ε is a rotation angle found by brute force.
    pub fn is_rotation(self) -> bool {
        matches!(self, LcKind::Lc3 | LcKind::Lc4)
    }
}

impl fmt::Display for LcKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LcKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let norm = s.trim().to_ascii_lowercase().replace(['_', '-'], "");
        LcKind::ALL
            .into_iter()
            .find(|k| k.name() == norm)
            .ok_or_else(|| Error::Invalid(format!("unknown LC template `{s}`")))
    }
}

/// A fitted LC template, `{kind, epsilon}` in JSON. For LC3/LC4 `epsilon` is
/// the line angle in degrees; otherwise it is an offset in the plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LcTemplate {
    pub kind: LcKind,
    pub epsilon: f64,
    /// Pivot used by LC3/LC4.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pivot: Option<[f64; 2]>,
}

/// A line `origin + t · dir` with unit `dir`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LcLine {
    pub origin: [f64; 2],
    pub dir: [f64; 2],
}

impl LcLine {
    pub fn project(&self, p: [f64; 2]) -> f64 {
        (p[0] - self.origin[0]) * self.dir[0] + (p[1] - self.origin[1]) * self.dir[1]
    }

    pub fn at(&self, t: f64) -> [f64; 2] {
        [self.origin[0] + t * self.dir[0], self.origin[1] + t * self.dir[1]]
    }

    /// Unsigned perpendicular distance.
    pub fn distance(&self, p: [f64; 2]) -> f64 {
        ((p[0] - self.origin[0]) * self.dir[1] - (p[1] - self.origin[1]) * self.dir[0]).abs()
    }
}

fn angle_line(pivot: [f64; 2], degrees: f64) -> LcLine {
    let r = degrees.to_radians();
    LcLine {
        origin: pivot,
        dir: [r.cos(), r.sin()],
    }
}

impl LcTemplate {
    pub fn line(&self) -> LcLine {
        let e = self.epsilon;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self.kind {
            LcKind::Lc1 => LcLine {
                origin: [e, 0.0],
                dir: [0.0, 1.0],
            },
            LcKind::Lc2 => LcLine {
                origin: [0.0, e],
                dir: [1.0, 0.0],
            },
            LcKind::Lc3 => angle_line(self.pivot.unwrap_or([0.0, 0.0]), e),
            LcKind::Lc4 => angle_line(self.pivot.unwrap_or([1.0, 0.0]), e),
            LcKind::Lc5 => LcLine {
                origin: [e, 0.0],
                dir: [s, s],
            },
            LcKind::Lc6 => LcLine {
                origin: [e, 0.0],
                dir: [-s, s],
            },
        }
    }
}

/// Plane coordinates of a color.
pub fn lc_point(c: &LchColor) -> [f64; 2] {
    [c.norm_c(), c.norm_l()]
}

/// Near-black and near-white colors, which LC templates leave alone.
pub fn is_extreme_neutral(c: &LchColor) -> bool {
    let [x, y] = lc_point(c);
    (y < 0.02 || y > 0.98) && x < 0.02
}

/// Weighted sum of squared perpendicular distances to `line`.
pub fn lc_objective(points: &[[f64; 2]], weights: &[f64], line: &LcLine) -> f64 {
    points
        .iter()
        .zip(weights)
        .map(|(p, w)| {
            let d = line.distance(*p);
            w * d * d
        })
        .sum()
}

fn normalized(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    if total > 0.0 {
        weights.iter().map(|w| w / total).collect()
    } else {
        vec![1.0 / weights.len().max(1) as f64; weights.len()]
    }
}

/// Angle range searched for a rotation kind at a pivot.
pub fn rotation_range(kind: LcKind, pivot: [f64; 2]) -> (i32, i32) {
    match kind {
        LcKind::Lc3 if pivot == [0.0, 0.0] => (0, 90),
        LcKind::Lc4 => (90, 180),
        _ => (0, 180),
    }
}

/// Fits a template to plane points (weights are normalized internally).
/// Closed forms for LC1, LC2, LC5, LC6; a 1° brute force for LC3/LC4 with
/// ties to the smallest angle.
pub fn fit_lc_points(points: &[[f64; 2]], weights: &[f64], kind: LcKind, pivot: Option<[f64; 2]>) -> LcTemplate {
    let w = normalized(weights);
    let mean = |f: &dyn Fn(&[f64; 2]) -> f64| points.iter().zip(&w).map(|(p, w)| w * f(p)).sum::<f64>();
    let epsilon = match kind {
        LcKind::Lc1 => mean(&|p| p[0]),
        LcKind::Lc2 => mean(&|p| p[1]),
        LcKind::Lc5 => mean(&|p| p[0] - p[1]),
        LcKind::Lc6 => mean(&|p| p[0] + p[1]),
        LcKind::Lc3 | LcKind::Lc4 => {
            let pivot = pivot.unwrap_or(if kind == LcKind::Lc3 { [0.0, 0.0] } else { [1.0, 0.0] });
            let (lo, hi) = rotation_range(kind, pivot);
            let scores: Vec<(f64, f64)> = (lo..=hi)
                .map(|a| (a as f64, lc_objective(points, &w, &angle_line(pivot, a as f64))))
                .collect();
            let min = scores.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
            let tol = 1e-12 * (1.0 + min);
            let best = scores.iter().find(|s| s.1 <= min + tol).expect("nonempty range").0;
            return LcTemplate {
                kind,
                epsilon: best,
                pivot: Some(pivot),
            };
        }
    };
    LcTemplate {
        kind,
        epsilon,
        pivot: None,
    }
}

/// Fits an LC template to a palette, skipping near-black and near-white colors.
pub fn fit_lc_template(colors: &[LchColor], weights: &[f64], kind: LcKind) -> Result<LcTemplate> {
    if colors.len() != weights.len() {
        return Err(Error::Shape(format!("{} weights for {} colors", weights.len(), colors.len())));
    }
    let (points, w): (Vec<_>, Vec<_>) = colors
        .iter()
        .zip(weights)
        .filter(|(c, _)| !is_extreme_neutral(c))
        .map(|(c, &w)| (lc_point(c), w))
        .unzip();
    if points.is_empty() {
        return Err(Error::Invalid("no palette color takes part in the LC fit".into()));
    }
    Ok(fit_lc_points(&points, &w, kind, None))
}

/// Places a group of points on `line`: extremes at their projections, the
/// rest evenly in between in projection order (ties by position in the group).
pub fn place_on_line(points: &[[f64; 2]], line: &LcLine) -> Vec<[f64; 2]> {
    let t: Vec<f64> = points.iter().map(|p| line.project(*p)).collect();
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| t[a].total_cmp(&t[b]).then(a.cmp(&b)));
    let mut out = vec![[0.0; 2]; points.len()];
    let n = points.len();
    if n == 0 {
        return out;
    }
    let (t0, t1) = (t[order[0]], t[order[n - 1]]);
    for (rank, &i) in order.iter().enumerate() {
        let ti = if rank == 0 {
            t0
        } else if rank == n - 1 {
            t1
        } else {
            t0 + (t1 - t0) * rank as f64 / (n - 1) as f64
        };
        out[i] = line.at(ti);
    }
    out
}

/// Outcome of applying an LC template.
#[derive(Debug, Clone, PartialEq)]
pub struct LcApplied {
    /// Template fitted for each group, in group order.
    pub templates: Vec<LcTemplate>,
    /// Group of each color, `None` for colors left untouched.
    pub groups: Vec<Option<usize>>,
    /// Placed plane points before clamping, `None` for untouched colors.
    pub points: Vec<Option<[f64; 2]>>,
    /// Offset added to `y` by the neutral snap (LC1 only).
    pub snap: f64,
    pub colors: Vec<LchColor>,
}

/// Applies `template` to all participating colors as one group.
pub fn apply_lc_template(colors: &[LchColor], template: &LcTemplate) -> LcApplied {
    let groups: Vec<Option<usize>> = colors
        .iter()
        .map(|c| if is_extreme_neutral(c) { None } else { Some(0) })
        .collect();
    apply_groups(colors, &groups, &[*template])
}

/// Fits and applies `kind` per hue-axis group. `groups[i]` is the axis group
/// of color `i` (`None` for achromatic colors, which form their own group).
/// With more than one group LC3 pivots around [`MULTI_AXIS_PIVOT`].
pub fn fit_and_apply_lc(
    colors: &[LchColor],
    weights: &[f64],
    kind: LcKind,
    groups: Option<&[Option<usize>]>,
) -> Result<LcApplied> {
    if colors.len() != weights.len() {
        return Err(Error::Shape(format!("{} weights for {} colors", weights.len(), colors.len())));
    }
    // renumber groups densely, in order of first appearance
    let mut ids: Vec<Option<usize>> = Vec::new();
    let mut dense = vec![None; colors.len()];
    for (i, c) in colors.iter().enumerate() {
        if is_extreme_neutral(c) {
            continue;
        }
        let key = groups.map_or(Some(0), |g| g[i]);
        let pos = match ids.iter().position(|k| *k == key) {
            Some(p) => p,
            None => {
                ids.push(key);
                ids.len() - 1
            }
        };
        dense[i] = Some(pos);
    }
    if ids.is_empty() {
        return Err(Error::Invalid("no palette color takes part in the LC fit".into()));
    }
    let pivot = (kind == LcKind::Lc3 && ids.len() > 1).then_some(MULTI_AXIS_PIVOT);
    let templates: Vec<LcTemplate> = (0..ids.len())
        .map(|g| {
            let (pts, w): (Vec<_>, Vec<_>) = (0..colors.len())
                .filter(|&i| dense[i] == Some(g))
                .map(|i| (lc_point(&colors[i]), weights[i]))
                .unzip();
            fit_lc_points(&pts, &w, kind, pivot)
        })
        .collect();
    Ok(apply_groups(colors, &dense, &templates))
}

fn apply_groups(colors: &[LchColor], groups: &[Option<usize>], templates: &[LcTemplate]) -> LcApplied {
    let mut points: Vec<Option<[f64; 2]>> = vec![None; colors.len()];
    for (g, t) in templates.iter().enumerate() {
        let members: Vec<usize> = (0..colors.len()).filter(|&i| groups[i] == Some(g)).collect();
        let pts: Vec<[f64; 2]> = members.iter().map(|&i| lc_point(&colors[i])).collect();
        for (&i, p) in members.iter().zip(place_on_line(&pts, &t.line())) {
            points[i] = Some(p);
        }
    }
    let mut snap = 0.0;
    if templates.first().is_some_and(|t| t.kind == LcKind::Lc1) {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in points.iter().enumerate() {
            if let Some(p) = p {
                let d = (p[1] - NEUTRAL_L).abs();
                if best.is_none_or(|b| d < b.1) {
                    best = Some((i, d));
                }
            }
        }
        if let Some((i, _)) = best {
            snap = NEUTRAL_L - points[i].expect("chosen point exists")[1];
            for p in points.iter_mut().flatten() {
                p[1] += snap;
            }
        }
    }
    let out = colors
        .iter()
        .zip(&points)
        .map(|(c, p)| match p {
            None => *c,
            Some([x, y]) => LchColor {
                l: (y * 100.0).clamp(0.0, 100.0),
                c: (x * MAX_SRGB_CHROMA).max(0.0),
                h: c.h,
            },
        })
        .collect();
    LcApplied {
        templates: templates.to_vec(),
        groups: groups.to_vec(),
        points,
        snap,
        colors: out,
    }
}

/// Outcome of LC harmonization of an RGB palette.
#[derive(Debug, Clone, PartialEq)]
pub struct LcHarmonized {
    /// Hue template whose axis groups the colors were split by.
    pub hue_fit: TemplateFit,
    pub applied: LcApplied,
    pub palette: Palette,
    pub out_of_gamut: Vec<bool>,
}

/// Applies `kind` to a palette, one line per axis group of the palette's
/// optimal hue template. Hues are unchanged.
pub fn lc_harmonize_palette(palette: &Palette, weights: &[f64], kind: LcKind) -> Result<LcHarmonized> {
    let before = palette_lch(palette);
    let hue_fit = select_optimal_template(&before, weights)?;
    let axes = hue_fit.template.axes();
    let groups: Vec<Option<usize>> = hue_fit.assignment.iter().map(|a| a.axis.map(|j| axis_group(&axes, j))).collect();
    let applied = fit_and_apply_lc(&before, weights, kind, Some(&groups))?;
    let (out, out_of_gamut) = lch_palette_to_rgb(palette, &before, &applied.colors);
    Ok(LcHarmonized {
        hue_fit,
        applied,
        palette: out,
        out_of_gamut,
    })
}
