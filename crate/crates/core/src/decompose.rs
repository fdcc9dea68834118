//! Two-level RGBXY layer decomposition.
//!
//! Every pixel becomes a 5D point (r, g, b, x, y). Its convex weights over
//! the vertices of the 5D convex hull (via a Delaunay tessellation of those
//! vertices) are computed once. Each hull vertex's RGB part is then expressed
//! over the palette through a star tessellation of the palette hull, and the
//! two sparse matrices multiply to per-pixel palette weights. Changing the
//! palette only redoes the second, small step.

use image::RgbaImage;
use rayon::prelude::*;

use crate::colorspace::RgbColor;
use crate::error::{Error, Result};
use crate::geom::{
    cone_tessellate, convex_hull, delaunay_tessellate, distance_to_hull, hull_vertex_indices,
    star_tessellate, AffineFrame, HullMesh, PointCloud, SimplexLocator,
};
use crate::image::Image;
use crate::palette::Palette;
use crate::sparse::CsrMatrix;

/// Weights below this are dropped from W_RGBXY rows.
pub const WEIGHT_EPSILON: f64 = 1e-10;

const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecomposeOptions {
    /// Multiplier on the normalized pixel coordinates `x / max(W, H)`.
    pub xy_scale: f64,
}

impl Default for DecomposeOptions {
    fn default() -> Self {
        DecomposeOptions { xy_scale: 1.0 }
    }
}

/// Diagnostics from [`precompute_rgbxy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecomputeStats {
    /// Smallest barycentric coordinate seen before clamping.
    pub min_raw_weight: f64,
    /// Affine rank of the RGBXY point set.
    pub rank: usize,
    pub simplices: usize,
    /// Pixels that no simplex contained (resolved to the nearest simplex).
    pub unlocated: usize,
}

/// Cached first stage: RGBXY hull vertices and per-pixel weights over them.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionState {
    width: usize,
    height: usize,
    xy_scale: f64,
    vertices: Vec<[f64; 5]>,
    w_rgbxy: CsrMatrix<f32>,
    stats: Option<PrecomputeStats>,
}

impl DecompositionState {
    pub fn from_parts(
        width: usize,
        height: usize,
        xy_scale: f64,
        vertices: Vec<[f64; 5]>,
        w_rgbxy: CsrMatrix<f32>,
    ) -> Result<Self> {
        if w_rgbxy.rows() != width * height || w_rgbxy.cols() != vertices.len() {
            return Err(Error::Shape(format!(
                "W_RGBXY is {}x{}, expected {}x{}",
                w_rgbxy.rows(),
                w_rgbxy.cols(),
                width * height,
                vertices.len()
            )));
        }
        Ok(DecompositionState {
            width,
            height,
            xy_scale,
            vertices,
            w_rgbxy,
            stats: None,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_count(&self) -> usize {
        self.width * self.height
    }

    pub fn xy_scale(&self) -> f64 {
        self.xy_scale
    }

    /// Number of RGBXY hull vertices.
    pub fn q(&self) -> usize {
        self.vertices.len()
    }

    pub fn vertices(&self) -> &[[f64; 5]] {
        &self.vertices
    }

    pub fn w_rgbxy(&self) -> &CsrMatrix<f32> {
        &self.w_rgbxy
    }

    pub fn stats(&self) -> Option<&PrecomputeStats> {
        self.stats.as_ref()
    }
}

/// Per-pixel palette weights, `N × P`, rows in raster order. Stored as f32.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerWeights {
    width: usize,
    height: usize,
    w: CsrMatrix<f32>,
}

impl LayerWeights {
    pub fn new(width: usize, height: usize, w: CsrMatrix<f32>) -> Result<Self> {
        if w.rows() != width * height {
            return Err(Error::Shape(format!("{} rows for a {width}x{height} image", w.rows())));
        }
        Ok(LayerWeights { width, height, w })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn matrix(&self) -> &CsrMatrix<f32> {
        &self.w
    }

    pub fn palette_size(&self) -> usize {
        self.w.cols()
    }

    /// Per-color contribution: column sums divided by the pixel count.
    pub fn palette_weights(&self) -> Vec<f64> {
        let n = self.w.rows().max(1) as f64;
        self.w.column_sums().into_iter().map(|s| s / n).collect()
    }
}

/// Pixel `i` of an image as an RGBXY point.
pub fn rgbxy_point(img: &Image, i: usize, xy_scale: f64) -> [f64; 5] {
    let w = img.width();
    let dmax = img.width().max(img.height()) as f64;
    let c = img.pixels()[i];
    let (x, y) = ((i % w) as f64, (i / w) as f64);
    [c[0], c[1], c[2], x * xy_scale / dmax, y * xy_scale / dmax]
}

pub fn rgbxy_cloud(img: &Image, xy_scale: f64) -> PointCloud {
    let mut coords = Vec::with_capacity(img.len() * 5);
    for i in 0..img.len() {
        coords.extend(rgbxy_point(img, i, xy_scale));
    }
    PointCloud::new(5, coords).expect("pixel coordinates are finite")
}

struct Block {
    rows: CsrMatrix<f32>,
    min_raw: f64,
    unlocated: usize,
}

fn f32_row(bary: &[f64], verts: &[usize], min_raw: &mut f64) -> Vec<(usize, f32)> {
    for &b in bary {
        *min_raw = min_raw.min(b);
    }
    let kept: Vec<(usize, f64)> = verts
        .iter()
        .zip(bary)
        .map(|(&v, &b)| (v, b.max(0.0)))
        .filter(|e| e.1 > WEIGHT_EPSILON)
        .collect();
    let total: f64 = kept.iter().map(|e| e.1).sum();
    let mut row: Vec<(usize, f32)> = kept.into_iter().map(|(v, b)| (v, (b / total) as f32)).collect();
    row.sort_unstable_by_key(|e| e.0);
    row
}

/// First stage of the decomposition: 5D hull and per-pixel weights.
pub fn precompute_rgbxy(img: &Image, opts: DecomposeOptions) -> Result<DecompositionState> {
    if img.is_empty() {
        return Err(Error::Invalid("empty image".into()));
    }
    if !(opts.xy_scale.is_finite() && opts.xy_scale >= 0.0) {
        return Err(Error::Invalid(format!("xy_scale {} must be finite and non-negative", opts.xy_scale)));
    }
    let cloud = rgbxy_cloud(img, opts.xy_scale);
    let frame = AffineFrame::fit_default(&cloud);
    let rank = frame.rank();
    let n = cloud.len();

    if rank == 0 {
        let mut w = CsrMatrix::with_capacity(1, n, n);
        for _ in 0..n {
            w.push_row([(0, 1.0f32)]);
        }
        return Ok(DecompositionState {
            width: img.width(),
            height: img.height(),
            xy_scale: opts.xy_scale,
            vertices: vec![rgbxy_point(img, 0, opts.xy_scale)],
            w_rgbxy: w,
            stats: Some(PrecomputeStats {
                min_raw_weight: 1.0,
                rank,
                simplices: 0,
                unlocated: 0,
            }),
        });
    }

    let work = if frame.is_full() { cloud } else { frame.project_cloud(&cloud) };
    let hull_idx = hull_vertex_indices(&work)?;
    let tess = delaunay_tessellate(&work.select(&hull_idx))?;
    let simplices = tess.simplex_count();
    let locator = SimplexLocator::new(tess);
    log::debug!("rgbxy: rank {rank}, {} hull vertices, {simplices} simplices", hull_idx.len());

    let starts: Vec<usize> = (0..n).step_by(CHUNK).collect();
    let blocks: Vec<Block> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(n);
            let mut rows = CsrMatrix::with_capacity(hull_idx.len(), end - start, (end - start) * (rank + 1));
            let mut bary = vec![0.0; rank + 1];
            let mut hint = 0;
            let mut min_raw = f64::INFINITY;
            let mut unlocated = 0;
            for i in start..end {
                let (s, inside) = locator.locate_nearest_into(work.point(i), hint, &mut bary);
                if !inside {
                    unlocated += 1;
                }
                hint = s;
                let verts = locator.tessellation().simplex(s);
                rows.push_row(f32_row(&bary, verts, &mut min_raw));
            }
            Block {
                rows,
                min_raw,
                unlocated,
            }
        })
        .collect();

    let min_raw_weight = blocks.iter().map(|b| b.min_raw).fold(f64::INFINITY, f64::min);
    let unlocated = blocks.iter().map(|b| b.unlocated).sum();
    if unlocated > 0 {
        log::warn!("{unlocated} pixels fell outside the RGBXY tessellation");
    }
    let w_rgbxy = CsrMatrix::vstack(hull_idx.len(), blocks.into_iter().map(|b| b.rows).collect());
    let vertices = hull_idx.iter().map(|&i| rgbxy_point(img, i, opts.xy_scale)).collect();
    Ok(DecompositionState {
        width: img.width(),
        height: img.height(),
        xy_scale: opts.xy_scale,
        vertices,
        w_rgbxy,
        stats: Some(PrecomputeStats {
            min_raw_weight,
            rank,
            simplices,
            unlocated,
        }),
    })
}

/// Star-tessellated palette hull answering RGB → palette-weight queries.
///
/// The star is the darkest palette color. Palettes that do not span a volume
/// are handled in their affine span; colors outside the palette hull take the
/// weights of their closest hull point.
pub struct PaletteLocator {
    palette_len: usize,
    frame: Option<AffineFrame>,
    hull: Option<HullMesh>,
    locator: Option<SimplexLocator>,
    /// Tessellation vertex → palette index.
    map: Vec<usize>,
    single: usize,
}

impl PaletteLocator {
    pub fn new(palette: &Palette) -> Result<Self> {
        let coords: Vec<f64> = palette.colors().iter().flat_map(|c| c.to_array()).collect();
        let cloud = PointCloud::new(3, coords)?;
        let darkest = palette.darkest();
        let frame = AffineFrame::fit_default(&cloud);
        if frame.rank() == 0 {
            return Ok(PaletteLocator {
                palette_len: palette.len(),
                frame: None,
                hull: None,
                locator: None,
                map: Vec::new(),
                single: darkest,
            });
        }
        let (work, frame) = if frame.is_full() {
            (cloud, None)
        } else {
            (frame.project_cloud(&cloud), Some(frame))
        };
        let hull = convex_hull(&work)?;
        let star = hull.source_indices().iter().position(|&s| s == darkest);
        let mut map = hull.source_indices().to_vec();
        let tess = match star {
            Some(local) => star_tessellate(&hull, local)?,
            None => {
                map.push(darkest);
                cone_tessellate(&hull, work.point(darkest))?
            }
        };
        Ok(PaletteLocator {
            palette_len: palette.len(),
            frame,
            hull: Some(hull),
            locator: Some(SimplexLocator::new(tess)),
            map,
            single: darkest,
        })
    }

    pub fn palette_len(&self) -> usize {
        self.palette_len
    }

    /// Convex palette weights for an RGB color, sorted by palette index.
    pub fn weights(&self, rgb: &[f64], hint: &mut usize) -> Vec<(usize, f64)> {
        let (Some(hull), Some(locator)) = (&self.hull, &self.locator) else {
            return vec![(self.single, 1.0)];
        };
        let q = match &self.frame {
            Some(f) => f.project(rgb),
            None => rgb.to_vec(),
        };
        let mut bary = vec![0.0; hull.dim() + 1];
        let s = match locator.locate_into(&q, *hint, &mut bary) {
            Ok(s) => s,
            Err(_) => {
                let (_, closest) = distance_to_hull(hull, &q);
                locator.locate_nearest_into(&closest, *hint, &mut bary).0
            }
        };
        *hint = s;
        let mut row: Vec<(usize, f64)> = locator
            .clamp_weights(s, &bary)
            .into_iter()
            .map(|(v, w)| (self.map[v], w))
            .collect();
        row.sort_unstable_by_key(|e| e.0);
        row
    }
}

/// Palette weights of every RGBXY vertex (its RGB part), `Q × P`.
pub fn compute_w_rgb(palette: &Palette, state: &DecompositionState) -> Result<CsrMatrix<f64>> {
    let loc = PaletteLocator::new(palette)?;
    let q = state.q();
    let starts: Vec<usize> = (0..q).step_by(CHUNK).collect();
    let blocks: Vec<CsrMatrix<f64>> = starts
        .par_iter()
        .map(|&start| {
            let end = (start + CHUNK).min(q);
            let mut rows = CsrMatrix::with_capacity(palette.len(), end - start, (end - start) * 4);
            let mut hint = 0;
            for v in &state.vertices[start..end] {
                rows.push_row(loc.weights(&v[..3], &mut hint));
            }
            rows
        })
        .collect();
    Ok(CsrMatrix::vstack(palette.len(), blocks))
}

/// `W = W_RGBXY · W_RGB`.
pub fn compose_weights(state: &DecompositionState, w_rgb: &CsrMatrix<f64>) -> Result<LayerWeights> {
    let n = state.pixel_count();
    let mut out = LayerWeights {
        width: state.width,
        height: state.height,
        w: CsrMatrix::with_capacity(w_rgb.cols(), n, n * w_rgb.cols().min(6)),
    };
    compose_weights_into(state, w_rgb, &mut out)?;
    Ok(out)
}

/// [`compose_weights`] writing into existing weights so their buffers are
/// reused (interactive relayering avoids re-faulting fresh memory).
pub fn compose_weights_into(state: &DecompositionState, w_rgb: &CsrMatrix<f64>, out: &mut LayerWeights) -> Result<()> {
    if w_rgb.rows() != state.q() {
        return Err(Error::Shape(format!("W_RGB has {} rows, state has Q = {}", w_rgb.rows(), state.q())));
    }
    let n = state.pixel_count();
    let p = w_rgb.cols();
    // W_RGB is Q × P with P small, so a dense copy keeps the inner loop flat
    let dense = w_rgb.to_dense();
    out.width = state.width;
    out.height = state.height;
    let threads = rayon::current_num_threads();
    if threads <= 1 {
        state.w_rgbxy.matmul_dense_rows_into(&dense, p, 0..n, &mut out.w);
        return Ok(());
    }
    let block = n.div_ceil(threads * 4).max(CHUNK);
    let starts: Vec<usize> = (0..n).step_by(block).collect();
    let blocks: Vec<CsrMatrix<f32>> = starts
        .par_iter()
        .map(|&start| state.w_rgbxy.matmul_dense_rows(&dense, p, start..(start + block).min(n)))
        .collect();
    out.w = CsrMatrix::vstack(p, blocks);
    Ok(())
}

/// Re-decomposes for a new palette using only the cached first stage.
pub fn relayer(state: &DecompositionState, palette: &Palette) -> Result<LayerWeights> {
    compose_weights(state, &compute_w_rgb(palette, state)?)
}

/// [`relayer`] reusing the buffers of `out`.
pub fn relayer_into(state: &DecompositionState, palette: &Palette, out: &mut LayerWeights) -> Result<()> {
    compose_weights_into(state, &compute_w_rgb(palette, state)?, out)
}

/// Per-pixel `Σ w_i · palette_i`, clamped to the cube.
pub fn reconstruct(weights: &LayerWeights, palette: &Palette) -> Result<Image> {
    if weights.palette_size() != palette.len() {
        return Err(Error::Shape(format!(
            "weights have {} layers, palette has {} colors",
            weights.palette_size(),
            palette.len()
        )));
    }
    let colors: Vec<[f64; 3]> = palette.colors().iter().map(|c| c.to_array()).collect();
    let m = weights.matrix();
    let pixels = (0..m.rows())
        .map(|r| {
            let mut acc = [0.0; 3];
            for (c, w) in m.row(r) {
                let w = w as f64;
                for k in 0..3 {
                    acc[k] += w * colors[c][k];
                }
            }
            RgbColor::from_array(acc).clamped().to_array()
        })
        .collect();
    Image::new(weights.width, weights.height, pixels)
}

/// Splits 255 among `weights` proportionally, so that the parts sum exactly
/// to 255 (largest remainders, ties to the lower index).
pub fn quantize_alphas(weights: &[f64]) -> Vec<u8> {
    let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
    if total <= 0.0 {
        return vec![0; weights.len()];
    }
    let scaled: Vec<f64> = weights.iter().map(|w| w.max(0.0) / total * 255.0).collect();
    let mut out: Vec<u32> = scaled.iter().map(|s| s.floor() as u32).collect();
    let mut left = 255 - out.iter().sum::<u32>().min(255);
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = scaled[a] - scaled[a].floor();
        let fb = scaled[b] - scaled[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for &i in &order {
        if left == 0 {
            break;
        }
        out[i] += 1;
        left -= 1;
    }
    out.into_iter().map(|v| v.min(255) as u8).collect()
}

/// One RGBA image per palette color: constant color, alpha from its weights.
pub fn export_layers(weights: &LayerWeights, palette: &Palette) -> Result<Vec<RgbaImage>> {
    if weights.palette_size() != palette.len() {
        return Err(Error::Shape("palette and weights disagree on layer count".into()));
    }
    let (w, h) = (weights.width as u32, weights.height as u32);
    let mut layers: Vec<RgbaImage> = palette
        .colors()
        .iter()
        .map(|c| {
            let [r, g, b] = c.clamped().to_u8();
            RgbaImage::from_pixel(w, h, image::Rgba([r, g, b, 0]))
        })
        .collect();
    let m = weights.matrix();
    let mut dense = vec![0.0; palette.len()];
    for r in 0..m.rows() {
        dense.iter_mut().for_each(|v| *v = 0.0);
        for (c, v) in m.row(r) {
            dense[c] = v as f64;
        }
        let alphas = quantize_alphas(&dense);
        let (x, y) = ((r % weights.width) as u32, (r / weights.width) as u32);
        for (layer, a) in layers.iter_mut().zip(alphas) {
            layer.get_pixel_mut(x, y).0[3] = a;
        }
    }
    Ok(layers)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alphas_sum_to_255() {
        assert_eq!(quantize_alphas(&[1.0, 0.0]), vec![255, 0]);
        let a = quantize_alphas(&[1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0]);
        assert_eq!(a.iter().map(|&v| v as u32).sum::<u32>(), 255);
        assert_eq!(a, vec![85, 85, 85]);
        let a = quantize_alphas(&[0.5, 0.5]);
        assert_eq!(a, vec![128, 127]);
    }

    #[test]
    fn four_pixel_image_is_its_own_hull() {
        let img = Image::new(
            2,
            2,
            vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]],
        )
        .unwrap();
        let st = precompute_rgbxy(&img, DecomposeOptions::default()).unwrap();
        assert_eq!(st.q(), 4);
        for r in 0..4 {
            let row: Vec<_> = st.w_rgbxy().row(r).collect();
            assert_eq!(row.len(), 1);
            assert_eq!(row[0].1, 1.0);
            assert_eq!(st.vertices()[row[0].0][..3], img.pixels()[r][..]);
        }
    }

    #[test]
    fn solid_image() {
        let img = Image::from_fn(3, 2, |_, _| [0.2, 0.3, 0.4]);
        let st = precompute_rgbxy(&img, DecomposeOptions::default()).unwrap();
        let pal = Palette::from_arrays(&[[0.2, 0.3, 0.4], [1.0, 1.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]).unwrap();
        let w = relayer(&st, &pal).unwrap();
        let rec = reconstruct(&w, &pal).unwrap();
        assert!(rec.rmse(&img).unwrap() < 1e-6);
        let layers = export_layers(&w, &pal).unwrap();
        assert!(layers[0].pixels().all(|p| p.0[3] == 255));
        assert!(layers[1..].iter().all(|l| l.pixels().all(|p| p.0[3] == 0)));
    }
}
