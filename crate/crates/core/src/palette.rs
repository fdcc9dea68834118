//! Palette extraction by progressive simplification of the RGB convex hull.

use serde::{Deserialize, Serialize};

use crate::colorspace::RgbColor;
use crate::error::{Error, Result};
use crate::geom::{
    convex_hull, distance_to_hull, hull_vertex_indices, simplify_hull_steps, AffineFrame, HullMesh,
    PointCloud,
};
use crate::image::Image;

/// Default reconstruction tolerance, in RGB units.
pub const DEFAULT_RMSE_TOLERANCE: f64 = 2.0 / 255.0;

/// The RMSE test only starts once the hull is this small.
pub const EVALUATION_VERTEX_COUNT: usize = 10;

/// Bins per RGB axis.
pub const BINS_PER_AXIS: usize = 32;

/// Offset used to pad palettes of images whose colors do not span a volume.
pub const PADDING_STEP: f64 = 1.0 / 255.0;

const DUPLICATE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct Palette {
    colors: Vec<RgbColor>,
}

#[derive(Serialize, Deserialize)]
struct PaletteJson {
    colors: Vec<[f64; 3]>,
}

impl Palette {
    pub fn new(colors: Vec<RgbColor>) -> Result<Self> {
        if colors.is_empty() {
            return Err(Error::Invalid("palette has no colors".into()));
        }
        if let Some(c) = colors.iter().find(|c| !c.is_finite()) {
            return Err(Error::Invalid(format!("non-finite palette color {c:?}")));
        }
        Ok(Palette { colors })
    }

    pub fn from_arrays(colors: &[[f64; 3]]) -> Result<Self> {
        Palette::new(colors.iter().map(|&c| RgbColor::from_array(c)).collect())
    }

    pub fn colors(&self) -> &[RgbColor] {
        &self.colors
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    pub fn to_arrays(&self) -> Vec<[f64; 3]> {
        self.colors.iter().map(|c| c.to_array()).collect()
    }

    pub fn clamped(&self) -> Palette {
        Palette {
            colors: self.colors.iter().map(|c| c.clamped()).collect(),
        }
    }

    /// Index of the color with the lowest Lab lightness, ties to the lowest index.
    pub fn darkest(&self) -> usize {
        let mut best = (0, f64::INFINITY);
        for (i, c) in self.colors.iter().enumerate() {
            let l = c.to_lab().l;
            if l < best.1 {
                best = (i, l);
            }
        }
        best.0
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&PaletteJson {
            colors: self.to_arrays(),
        })
        .expect("palette serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: PaletteJson = serde_json::from_str(text)?;
        Palette::from_arrays(&p.colors)
    }

    pub fn permuted(&self, order: &[usize]) -> Palette {
        Palette {
            colors: order.iter().map(|&i| self.colors[i]).collect(),
        }
    }
}

/// Nonempty bin of the RGB histogram.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bin {
    pub index: u32,
    pub count: u64,
    sum: [f64; 3],
}

impl Bin {
    /// Mean color of the pixels that fell into this bin.
    pub fn color(&self) -> [f64; 3] {
        let n = self.count as f64;
        [self.sum[0] / n, self.sum[1] / n, self.sum[2] / n]
    }

    /// Geometric centre of the bin cell.
    pub fn center(&self) -> [f64; 3] {
        let n = BINS_PER_AXIS as u32;
        let (r, g, b) = (self.index / (n * n), (self.index / n) % n, self.index % n);
        let w = 1.0 / BINS_PER_AXIS as f64;
        [(r as f64 + 0.5) * w, (g as f64 + 0.5) * w, (b as f64 + 0.5) * w]
    }
}

/// 32³ histogram over RGB. Each bin is represented by the mean color of its
/// pixels, which keeps every representative inside the pixel-color hull.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BinnedHistogram {
    bins: Vec<Bin>,
}

fn bin_of(c: &[f64; 3]) -> u32 {
    let n = BINS_PER_AXIS;
    let q = |v: f64| ((v * n as f64).floor().max(0.0) as usize).min(n - 1) as u32;
    (q(c[0]) * n as u32 + q(c[1])) * n as u32 + q(c[2])
}

impl BinnedHistogram {
    pub fn from_colors<'a>(colors: impl IntoIterator<Item = &'a [f64; 3]>) -> Self {
        let mut dense: Vec<(u64, [f64; 3])> = vec![(0, [0.0; 3]); BINS_PER_AXIS.pow(3)];
        for c in colors {
            let e = &mut dense[bin_of(c) as usize];
            e.0 += 1;
            for k in 0..3 {
                e.1[k] += c[k];
            }
        }
        BinnedHistogram {
            bins: dense
                .into_iter()
                .enumerate()
                .filter(|(_, e)| e.0 > 0)
                .map(|(i, (count, sum))| Bin {
                    index: i as u32,
                    count,
                    sum,
                })
                .collect(),
        }
    }

    pub fn bins(&self) -> &[Bin] {
        &self.bins
    }

    pub fn total(&self) -> u64 {
        self.bins.iter().map(|b| b.count).sum()
    }

    /// Adds another histogram's counts and color sums.
    pub fn merge(&mut self, other: &BinnedHistogram) {
        let mut out = Vec::with_capacity(self.bins.len() + other.bins.len());
        let (mut i, mut j) = (0, 0);
        while i < self.bins.len() || j < other.bins.len() {
            let a = self.bins.get(i);
            let b = other.bins.get(j);
            match (a, b) {
                (Some(x), Some(y)) if x.index == y.index => {
                    let mut sum = x.sum;
                    for k in 0..3 {
                        sum[k] += y.sum[k];
                    }
                    out.push(Bin {
                        index: x.index,
                        count: x.count + y.count,
                        sum,
                    });
                    i += 1;
                    j += 1;
                }
                (Some(x), Some(y)) if x.index < y.index => {
                    out.push(*x);
                    i += 1;
                }
                (Some(x), None) => {
                    out.push(*x);
                    i += 1;
                }
                (_, Some(y)) => {
                    out.push(*y);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        self.bins = out;
    }

    pub fn representatives(&self) -> Vec<[f64; 3]> {
        self.bins.iter().map(|b| b.color()).collect()
    }
}

pub fn bin_image(img: &Image) -> BinnedHistogram {
    BinnedHistogram::from_colors(img.pixels())
}

/// Count-weighted RMSE of bin representatives' distances to the hull.
pub fn binned_rmse(hist: &BinnedHistogram, hull: &HullMesh) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for b in hist.bins() {
        let (d, _) = distance_to_hull(hull, &b.color());
        num += b.count as f64 * d * d;
        den += b.count as f64;
    }
    if den == 0.0 {
        0.0
    } else {
        (num / den).sqrt()
    }
}

fn clamp_point(p: &[f64]) -> [f64; 3] {
    [p[0].clamp(0.0, 1.0), p[1].clamp(0.0, 1.0), p[2].clamp(0.0, 1.0)]
}

/// Hull of the hull vertices after clamping them into the RGB cube.
fn clamped_hull(hull: &HullMesh) -> Option<HullMesh> {
    let coords: Vec<f64> = hull.vertices().flat_map(clamp_point).collect();
    convex_hull(&PointCloud::new(3, coords).ok()?).ok()
}

fn sort_colors(colors: &mut [RgbColor]) {
    colors.sort_by(|a, b| {
        a.to_lab()
            .l
            .total_cmp(&b.to_lab().l)
            .then(a.r.total_cmp(&b.r))
            .then(a.g.total_cmp(&b.g))
            .then(a.b.total_cmp(&b.b))
    });
}

fn dedupe(points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2])));
    let mut out: Vec<[f64; 3]> = Vec::new();
    for p in sorted {
        // sorted by r, so only the tail within tolerance in r can match
        let dup = out
            .iter()
            .rev()
            .take_while(|q| p[0] - q[0] <= DUPLICATE_TOLERANCE)
            .any(|q| (p[1] - q[1]).abs() <= DUPLICATE_TOLERANCE && (p[2] - q[2]).abs() <= DUPLICATE_TOLERANCE);
        if !dup {
            out.push(p);
        }
    }
    out
}

/// Palette spanning a set of colors: clamps into the cube, keeps the convex
/// hull vertices and orders them by lightness. Colors that do not span a
/// volume are padded to a small tetrahedron (see [`pad_degenerate`]).
pub fn palette_from_points(points: &[[f64; 3]]) -> Palette {
    let clamped: Vec<[f64; 3]> = points.iter().map(|p| clamp_point(p)).collect();
    let unique = dedupe(&clamped);
    let cloud = PointCloud::new(3, unique.iter().flatten().copied().collect()).expect("finite colors");
    let mut colors: Vec<RgbColor> = match hull_vertex_indices(&cloud) {
        Ok(idx) => idx.iter().map(|&i| RgbColor::from_array(unique[i])).collect(),
        Err(_) => pad_degenerate(&unique),
    };
    sort_colors(&mut colors);
    Palette { colors }
}

/// Deterministic padding for color sets of affine rank < 3: extreme colors
/// are kept and nudged copies are added one [`PADDING_STEP`] towards the cube
/// centre so the result spans a tetrahedron.
pub fn pad_degenerate(points: &[[f64; 3]]) -> Vec<RgbColor> {
    let cloud = PointCloud::new(3, points.iter().flatten().copied().collect()).expect("finite colors");
    let frame = AffineFrame::fit_default(&cloud);
    let centre = [0.5; 3];
    let toward = |m: &[f64], d: [f64; 3]| -> [f64; 3] {
        let s = (0..3).map(|k| d[k] * (centre[k] - m[k])).sum::<f64>();
        let sign = if s < 0.0 { -1.0 } else { 1.0 };
        clamp_point(&[m[0] + sign * PADDING_STEP * d[0], m[1] + sign * PADDING_STEP * d[1], m[2] + sign * PADDING_STEP * d[2]])
    };
    let mut out: Vec<[f64; 3]> = Vec::new();
    match frame.rank() {
        0 => {
            let c = points[0];
            out.push(c);
            for k in 0..3 {
                let mut e = [0.0; 3];
                e[k] = 1.0;
                out.push(toward(&c, e));
            }
        }
        1 => {
            let proj = frame.project_cloud(&cloud);
            let (mut lo, mut hi) = (0, 0);
            for i in 0..proj.len() {
                if proj.point(i)[0] < proj.point(lo)[0] {
                    lo = i;
                }
                if proj.point(i)[0] > proj.point(hi)[0] {
                    hi = i;
                }
            }
            let (a, b) = (points[lo], points[hi]);
            let m = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0, (a[2] + b[2]) / 2.0];
            let (u, v) = perpendicular_pair(&[b[0] - a[0], b[1] - a[1], b[2] - a[2]]);
            out.extend([a, b, toward(&m, u), toward(&m, v)]);
        }
        _ => {
            let proj = frame.project_cloud(&cloud);
            let idx = hull_vertex_indices(&proj).unwrap_or_else(|_| (0..points.len()).collect());
            let mut m = [0.0; 3];
            for &i in &idx {
                out.push(points[i]);
                for k in 0..3 {
                    m[k] += points[i][k] / idx.len() as f64;
                }
            }
            let lifted = frame.lift(&[0.0, 0.0]);
            let e1: Vec<f64> = frame.lift(&[1.0, 0.0]).iter().zip(&lifted).map(|(a, b)| a - b).collect();
            let e2: Vec<f64> = frame.lift(&[0.0, 1.0]).iter().zip(&lifted).map(|(a, b)| a - b).collect();
            let n = crate::geom::hull::cross([e1[0], e1[1], e1[2]], [e2[0], e2[1], e2[2]]);
            out.push(toward(&m, n));
        }
    }
    dedupe(&out).into_iter().map(RgbColor::from_array).collect()
}

fn perpendicular_pair(d: &[f64; 3]) -> ([f64; 3], [f64; 3]) {
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    let d = [d[0] / len, d[1] / len, d[2] / len];
    // axis least aligned with d seeds the first perpendicular
    let mut k = 0;
    for i in 1..3 {
        if d[i].abs() < d[k].abs() {
            k = i;
        }
    }
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let u = crate::geom::hull::cross(d, e);
    let ul = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let u = [u[0] / ul, u[1] / ul, u[2] / ul];
    let v = crate::geom::hull::cross(d, u);
    (u, v)
}

/// Outcome of palette extraction with diagnostics.
#[derive(Debug, Clone)]
pub struct PaletteExtraction {
    pub palette: Palette,
    /// Binned RMSE of the returned palette's hull.
    pub rmse: f64,
    /// Vertex count of the unsimplified hull (0 for degenerate images).
    pub initial_vertices: usize,
    /// Hull volume for each accepted simplification step.
    pub volumes: Vec<f64>,
    /// The image colors did not span a volume and the palette was padded.
    pub degenerate: bool,
}

/// Extracts a palette, simplifying the color hull until the binned RMSE would
/// exceed `rmse_tol` (in RGB units).
pub fn extract_palette(img: &Image, rmse_tol: f64) -> Result<Palette> {
    Ok(extract_palette_detailed(img, rmse_tol)?.palette)
}

/// Like [`extract_palette`], with diagnostics. Simplification starts from
/// the hull of the pixel colors; the histogram only drives the stop rule.
pub fn extract_palette_detailed(img: &Image, rmse_tol: f64) -> Result<PaletteExtraction> {
    let seed = hull_seed(img.pixels())?;
    palette_from_histogram(&bin_image(img), Some(&seed), rmse_tol)
}

/// Points sorted lexicographically with exact duplicates removed, so that
/// the hull input does not depend on where the points came from.
fn canonical_points(points: &[[f64; 3]]) -> Vec<[f64; 3]> {
    let mut v = points.to_vec();
    v.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])).then(a[2].total_cmp(&b[2])));
    v.dedup();
    v
}

/// Hull vertices of `points` in canonical order, or all of them (canonical)
/// when they do not span a volume. Simplification starts from these.
pub fn hull_seed(points: &[[f64; 3]]) -> Result<Vec<[f64; 3]>> {
    let cloud = PointCloud::new(3, points.iter().flatten().copied().collect())?;
    match hull_vertex_indices(&cloud) {
        Ok(idx) => Ok(canonical_points(&idx.iter().map(|&i| points[i]).collect::<Vec<_>>())),
        Err(crate::GeomError::DegenerateInput { .. } | crate::GeomError::TooFewPoints { .. }) => {
            Ok(canonical_points(points))
        }
        Err(e) => Err(e.into()),
    }
}

/// Palette extraction over a histogram. `seed` optionally supplies the points
/// whose hull starts the simplification; by default the hull vertices of the
/// bin representatives.
pub fn palette_from_histogram(
    hist: &BinnedHistogram,
    seed: Option<&[[f64; 3]]>,
    rmse_tol: f64,
) -> Result<PaletteExtraction> {
    if !(rmse_tol >= 0.0) {
        return Err(Error::Invalid(format!("rmse tolerance {rmse_tol} must be non-negative")));
    }
    if hist.bins().is_empty() {
        return Err(Error::Invalid("empty image".into()));
    }
    let points = match seed {
        Some(s) => canonical_points(s),
        None => hull_seed(&hist.representatives())?,
    };
    let points = &points[..];
    let cloud = PointCloud::new(3, points.iter().flatten().copied().collect())?;
    let hull = match convex_hull(&cloud) {
        Ok(h) => h,
        Err(crate::GeomError::DegenerateInput { .. } | crate::GeomError::TooFewPoints { .. }) => {
            let palette = palette_from_points(points);
            let rmse = clamped_palette_rmse(hist, &palette);
            log::info!("image colors do not span a volume; padded palette of {}", palette.len());
            return Ok(PaletteExtraction {
                palette,
                rmse,
                initial_vertices: 0,
                volumes: Vec::new(),
                degenerate: true,
            });
        }
        Err(e) => return Err(e.into()),
    };

    let rmse_of = |h: &HullMesh| clamped_hull(h).map_or(f64::INFINITY, |c| binned_rmse(hist, &c));
    let steps = simplify_hull_steps(&hull, |candidate| {
        candidate.vertex_count() <= EVALUATION_VERTEX_COUNT && rmse_of(candidate) > rmse_tol
    })?;

    // back off if the hull first reached below the evaluation size already over tolerance
    let mut chosen = steps.len() - 1;
    let mut rmse = rmse_of(&steps[chosen].hull);
    while chosen > 0 && rmse > rmse_tol {
        chosen -= 1;
        rmse = rmse_of(&steps[chosen].hull);
    }
    let verts: Vec<[f64; 3]> = steps[chosen]
        .hull
        .vertices()
        .map(|v| [v[0], v[1], v[2]])
        .collect();
    let palette = palette_from_points(&verts);
    let rmse = clamped_palette_rmse(hist, &palette);
    Ok(PaletteExtraction {
        palette,
        rmse,
        initial_vertices: hull.vertex_count(),
        volumes: steps[..=chosen].iter().map(|s| s.hull.volume()).collect(),
        degenerate: false,
    })
}

/// Binned RMSE against the hull of a palette (infinite if the palette is flat).
pub fn clamped_palette_rmse(hist: &BinnedHistogram, palette: &Palette) -> f64 {
    let coords: Vec<f64> = palette.colors().iter().flat_map(|c| c.clamped().to_array()).collect();
    PointCloud::new(3, coords)
        .ok()
        .and_then(|c| convex_hull(&c).ok())
        .map_or(f64::INFINITY, |h| binned_rmse(hist, &h))
}
