mod common;

use std::collections::HashMap;

use chroma_layers::decompose::{
    compose_weights, compute_w_rgb, export_layers, precompute_rgbxy, reconstruct, relayer, relayer_into, rgbxy_point,
    DecomposeOptions, DecompositionState, LayerWeights,
};
use chroma_layers::geom::{convex_hull, PointCloud};
use chroma_layers::image::Image;
use chroma_layers::palette::{extract_palette, Palette, DEFAULT_RMSE_TOLERANCE};
use chroma_layers::sparse::CsrMatrix;
use common::{closest_on_triangle, rng};
use rand::Rng;

const OPTS: DecomposeOptions = DecomposeOptions { xy_scale: 1.0 };

fn check_state(img: &Image, st: &DecompositionState) {
    let m = st.w_rgbxy();
    assert_eq!(m.rows(), img.len());
    for r in 0..m.rows() {
        assert!(m.row_nnz(r) <= 6);
        let mut back = [0.0; 5];
        let mut sum = 0.0;
        for (c, w) in m.row(r) {
            assert!(w >= 0.0);
            sum += w as f64;
            for k in 0..5 {
                back[k] += w as f64 * st.vertices()[c][k];
            }
        }
        assert!((sum - 1.0).abs() < 1e-6);
        let p = rgbxy_point(img, r, st.xy_scale());
        for k in 0..5 {
            assert!((back[k] - p[k]).abs() < 1e-6, "pixel {r} coord {k}: {} vs {}", back[k], p[k]);
        }
    }
}

fn smooth_image(w: usize, h: usize, seed: u64) -> Image {
    let mut r = rng(seed);
    let f: Vec<[f64; 3]> = (0..3).map(|_| [r.gen_range(0.5..3.0), r.gen_range(0.5..3.0), r.gen_range(0.0..6.0)]).collect();
    Image::from_fn(w, h, |x, y| {
        let (u, v) = (x as f64 / w as f64, y as f64 / h as f64);
        [0, 1, 2].map(|k| 0.5 + 0.45 * (f[k][0] * u + f[k][1] * v * v + f[k][2]).sin())
    })
}

#[test]
fn four_distinct_pixels_give_identity_rows() {
    let img = Image::new(2, 2, vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [1.0, 1.0, 1.0]]).unwrap();
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    assert_eq!(st.q(), 4);
    for r in 0..4 {
        let row: Vec<_> = st.w_rgbxy().row(r).collect();
        assert_eq!(row.len(), 1);
        assert_eq!(row[0].1, 1.0);
    }
}

#[test]
fn grey_ramp_reconstructs_in_rgbxy() {
    let img = Image::from_fn(64, 16, |x, _| [x as f64 / 63.0; 3]);
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    check_state(&img, &st);
}

#[test]
fn smooth_images_satisfy_state_invariants() {
    for seed in 0..3 {
        let img = smooth_image(40, 30, seed);
        let st = precompute_rgbxy(&img, OPTS).unwrap();
        check_state(&img, &st);
        assert!(st.q() <= img.len());
    }
}

fn state_with_vertices(rgb: &[[f64; 3]]) -> DecompositionState {
    let vertices: Vec<[f64; 5]> = rgb.iter().map(|c| [c[0], c[1], c[2], 0.0, 0.0]).collect();
    let n = vertices.len();
    let w = CsrMatrix::from_sorted_triplets(n, n, (0..n).map(|i| (i, i, 1.0f32))).unwrap();
    DecompositionState::from_parts(n, 1, 1.0, vertices, w).unwrap()
}

#[test]
fn w_rgb_examples() {
    let pal = Palette::from_arrays(&[[0.0, 0.0, 0.0], [1.0, 1.0, 1.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
    let st = state_with_vertices(&[[1.0, 0.0, 0.0], [0.5, 0.5, 0.5], [1.0, 1.0, 1.0]]);
    let w = compute_w_rgb(&pal, &st).unwrap();
    assert_eq!(w.row(0).filter(|e| e.1 > 0.0).collect::<Vec<_>>(), vec![(2, 1.0)]);
    let mid: Vec<_> = w.row(1).filter(|e| e.1 > 0.0).collect();
    assert_eq!(mid.len(), 2);
    assert!((w.get(1, 0) - 0.5).abs() < 1e-12 && (w.get(1, 1) - 0.5).abs() < 1e-12);
    assert_eq!(w.row(2).filter(|e| e.1 > 0.0).collect::<Vec<_>>(), vec![(1, 1.0)]);
}

#[test]
fn w_rgb_reconstructs_projected_colors() {
    let mut r = rng(31);
    for _ in 0..5 {
        let pal_pts: Vec<[f64; 3]> = (0..7).map(|_| [0; 3].map(|_| 0.15 + 0.7 * r.gen::<f64>())).collect();
        let pal = Palette::from_arrays(&pal_pts).unwrap();
        let hull = convex_hull(&PointCloud::from_points(&pal_pts)).unwrap();
        let rgb: Vec<[f64; 3]> = (0..500).map(|_| r.gen()).collect();
        let st = state_with_vertices(&rgb);
        let w = compute_w_rgb(&pal, &st).unwrap();
        for (i, c) in rgb.iter().enumerate() {
            assert!(w.row_nnz(i) <= 4);
            assert!((w.row_sum(i) - 1.0).abs() < 1e-9);
            let target = if hull.signed_distance(c) <= 0.0 {
                *c
            } else {
                hull.facets()
                    .iter()
                    .map(|f| closest_on_triangle(c, hull.vertex(f.vertices[0]), hull.vertex(f.vertices[1]), hull.vertex(f.vertices[2])))
                    .min_by(|a, b| {
                        let da: f64 = (0..3).map(|k| (a[k] - c[k]).powi(2)).sum();
                        let db: f64 = (0..3).map(|k| (b[k] - c[k]).powi(2)).sum();
                        da.total_cmp(&db)
                    })
                    .unwrap()
            };
            let mut back = [0.0; 3];
            for (j, x) in w.row(i) {
                assert!(x >= 0.0);
                for k in 0..3 {
                    back[k] += x * pal_pts[j][k];
                }
            }
            let err: f64 = (0..3).map(|k| (back[k] - target[k]).powi(2)).sum::<f64>().sqrt();
            assert!(err < 1e-6, "error {err}");
        }
    }
}

#[test]
fn composition_matches_dense_product() {
    let img = smooth_image(24, 20, 4);
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let w_rgb = compute_w_rgb(&pal, &st).unwrap();
    let lw = compose_weights(&st, &w_rgb).unwrap();
    let (n, q, p) = (img.len(), st.q(), pal.len());
    let a = st.w_rgbxy().to_dense();
    let b = w_rgb.to_dense();
    for i in 0..n {
        let mut row_sum = 0.0;
        for j in 0..p {
            let want: f64 = (0..q).map(|k| a[i * q + k] * b[k * p + j]).sum();
            let got = lw.matrix().get(i, j);
            // stored as f32: equal up to one rounding
            assert!((got - want).abs() <= want.abs() * f32::EPSILON as f64 + 1e-12, "{got} vs {want}");
            row_sum += got;
        }
        assert!((row_sum - 1.0).abs() < 1e-4);
    }
}

#[test]
fn identity_first_stage_passes_w_rgb_through() {
    let rgb = [[0.2, 0.2, 0.2], [0.6, 0.3, 0.1], [0.3, 0.7, 0.4]];
    let st = state_with_vertices(&rgb);
    let pal = Palette::from_arrays(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    let w_rgb = compute_w_rgb(&pal, &st).unwrap();
    let lw = compose_weights(&st, &w_rgb).unwrap();
    for i in 0..3 {
        for j in 0..4 {
            assert_eq!(lw.matrix().get(i, j), w_rgb.get(i, j) as f32 as f64);
        }
    }
}

#[test]
fn relayer_is_deterministic_and_equivalent() {
    let img = smooth_image(50, 40, 5);
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let a = relayer(&st, &pal).unwrap();
    assert_eq!(a, relayer(&st, &pal).unwrap());
    assert_eq!(a, compose_weights(&st, &compute_w_rgb(&pal, &st).unwrap()).unwrap());

    let edited = Palette::from_arrays(&pal.to_arrays().iter().map(|c| c.map(|v| (v * 0.9 + 0.05).clamp(0.0, 1.0))).collect::<Vec<_>>()).unwrap();
    let mut buf = a.clone();
    relayer_into(&st, &edited, &mut buf).unwrap();
    assert_eq!(buf, relayer(&st, &edited).unwrap());
    relayer_into(&st, &pal, &mut buf).unwrap();
    assert_eq!(buf, a);
}

#[test]
fn permuted_palette_permutes_layers() {
    let img = smooth_image(40, 40, 6);
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let mut r = rng(61);
    let mut order: Vec<usize> = (0..pal.len()).collect();
    for i in (1..order.len()).rev() {
        order.swap(i, r.gen_range(0..=i));
    }
    let perm = pal.permuted(&order);
    let w = relayer(&st, &pal).unwrap();
    let wp = relayer(&st, &perm).unwrap();
    let rec = reconstruct(&w, &pal).unwrap();
    let rec_p = reconstruct(&wp, &perm).unwrap();
    for (a, b) in rec.pixels().iter().zip(rec_p.pixels()) {
        for k in 0..3 {
            assert!((a[k] - b[k]).abs() < 1e-9);
        }
    }
    for i in 0..img.len() {
        for (new, &old) in order.iter().enumerate() {
            assert!((wp.matrix().get(i, new) - w.matrix().get(i, old)).abs() < 1e-6);
        }
    }
}

#[test]
fn reconstruction_examples() {
    let pal = Palette::from_arrays(&[[0.1, 0.1, 0.1], [0.9, 0.2, 0.2], [0.2, 0.9, 0.3], [0.3, 0.2, 0.9]]).unwrap();
    let one_hot = CsrMatrix::from_sorted_triplets(4, 4, (0..4).map(|i| (i, i, 1.0f32))).unwrap();
    let rec = reconstruct(&LayerWeights::new(2, 2, one_hot).unwrap(), &pal).unwrap();
    assert_eq!(rec.pixels(), &pal.to_arrays()[..]);

    // an image mixed from a known palette decomposes back exactly
    let cols = pal.to_arrays();
    let img = Image::from_fn(48, 32, |x, y| {
        let (u, v) = (x as f64 / 47.0, y as f64 / 31.0);
        let l = [(1.0 - u) * (1.0 - v), u * (1.0 - v), (1.0 - u) * v, u * v];
        [0, 1, 2].map(|k| (0..4).map(|i| l[i] * cols[i][k]).sum())
    });
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let rec = reconstruct(&relayer(&st, &pal).unwrap(), &pal).unwrap();
    assert!(rec.rmse(&img).unwrap() < 1e-6);
}

#[test]
fn layer_export() {
    let pal = Palette::from_arrays(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]).unwrap();
    let one_hot = CsrMatrix::from_sorted_triplets(1, 4, [(0, 2, 1.0f32)]).unwrap();
    let layers = export_layers(&LayerWeights::new(1, 1, one_hot).unwrap(), &pal).unwrap();
    assert_eq!(layers[2].get_pixel(0, 0).0, [0, 255, 0, 255]);
    assert!(layers.iter().enumerate().all(|(i, l)| i == 2 || l.get_pixel(0, 0).0[3] == 0));

    let img = smooth_image(30, 30, 7);
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let p = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let w = relayer(&st, &p).unwrap();
    let layers = export_layers(&w, &p).unwrap();
    for y in 0..30 {
        for x in 0..30 {
            let total: i32 = layers.iter().map(|l| l.get_pixel(x, y).0[3] as i32).sum();
            assert!((total - 255).abs() <= 1);
        }
    }
}

#[test]
fn grey_pixels_use_at_most_two_layers() {
    let img = Image::from_fn(64, 64, |x, y| [((x + y) as f64 / 126.0).min(1.0); 3]);
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let w = relayer(&st, &pal).unwrap();
    for r in 0..img.len() {
        assert!(w.matrix().row(r).filter(|e| e.1 > 1e-3).count() <= 2);
    }
}

/// Least-squares residual of fitting `v ≈ a + b·x + c·y`.
fn affine_residual(samples: &[(f64, f64, f64)]) -> f64 {
    let mut ata = [0.0; 9];
    let mut atb = [0.0; 3];
    for &(x, y, v) in samples {
        let row = [1.0, x, y];
        for i in 0..3 {
            for j in 0..3 {
                ata[i * 3 + j] += row[i] * row[j];
            }
            atb[i] += row[i] * v;
        }
    }
    let d = common::det(3, &ata);
    let coef: Vec<f64> = (0..3)
        .map(|c| {
            let mut m = ata;
            for r in 0..3 {
                m[r * 3 + c] = atb[r];
            }
            common::det(3, &m) / d
        })
        .collect();
    samples
        .iter()
        .map(|&(x, y, v)| (coef[0] + coef[1] * x + coef[2] * y - v).abs())
        .fold(0.0, f64::max)
}

#[test]
fn constant_region_weights_are_affine_per_simplex() {
    let img = Image::from_fn(48, 48, |x, y| {
        if x < 24 {
            [0.7, 0.3, 0.2]
        } else {
            let t = (x - 24) as f64 / 24.0;
            [0.2 + 0.6 * t, 0.5 + 0.3 * (y as f64 / 48.0), 0.8 - 0.5 * t]
        }
    });
    let st = precompute_rgbxy(&img, OPTS).unwrap();
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let w = relayer(&st, &pal).unwrap();
    let mut groups: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    for y in 0..48 {
        for x in 0..24 {
            let i = y * 48 + x;
            groups.entry(st.w_rgbxy().row(i).map(|e| e.0).collect()).or_default().push(i);
        }
    }
    let mut fitted = 0;
    for pixels in groups.values().filter(|p| p.len() >= 6) {
        for layer in 0..pal.len() {
            let samples: Vec<(f64, f64, f64)> = pixels
                .iter()
                .map(|&i| ((i % 48) as f64 / 48.0, (i / 48) as f64 / 48.0, w.matrix().get(i, layer)))
                .collect();
            assert!(affine_residual(&samples) < 1e-6);
        }
        fitted += 1;
    }
    assert!(fitted > 0);
}
