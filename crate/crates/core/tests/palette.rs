mod common;

use chroma_layers::geom::{convex_hull, PointCloud};
use chroma_layers::image::Image;
use chroma_layers::palette::{bin_image, binned_rmse, extract_palette, extract_palette_detailed, BinnedHistogram, DEFAULT_RMSE_TOLERANCE};
use common::{brute_hull_distance, rng};
use proptest::prelude::*;
use rand::Rng;

fn hull_of(points: &[[f64; 3]]) -> chroma_layers::geom::HullMesh {
    convex_hull(&PointCloud::from_points(points)).unwrap()
}

#[test]
fn solid_and_two_color_histograms() {
    let solid = Image::from_fn(100, 100, |_, _| [0.3, 0.6, 0.9]);
    let h = bin_image(&solid);
    assert_eq!(h.bins().len(), 1);
    assert_eq!(h.bins()[0].count, 10_000);

    let two = Image::from_fn(100, 100, |x, _| if x < 60 { [0.1, 0.1, 0.1] } else { [0.9, 0.2, 0.4] });
    let mut counts: Vec<u64> = bin_image(&two).bins().iter().map(|b| b.count).collect();
    counts.sort_unstable();
    assert_eq!(counts, vec![4000, 6000]);
}

#[test]
fn rmse_against_cube_and_single_bin() {
    let corners: Vec<[f64; 3]> = (0..8).map(|i| [(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]).collect();
    let img = Image::from_fn(40, 40, |x, y| [x as f64 / 39.0, y as f64 / 39.0, 0.5]);
    assert_eq!(binned_rmse(&bin_image(&img), &hull_of(&corners)), 0.0);

    let small: Vec<[f64; 3]> = corners.iter().map(|c| c.map(|v| 0.25 + 0.5 * v)).collect();
    let h = BinnedHistogram::from_colors(&[[0.5, 0.5, 0.9]]);
    assert!((binned_rmse(&h, &hull_of(&small)) - 0.15).abs() < 1e-12);
}

#[test]
fn rmse_matches_naive_loop() {
    let mut r = rng(21);
    for _ in 0..20 {
        let pts: Vec<[f64; 3]> = (0..15).map(|_| [0; 3].map(|_| 0.2 + 0.6 * r.gen::<f64>())).collect();
        let hull = hull_of(&pts);
        let colors: Vec<[f64; 3]> = (0..3000).map(|_| r.gen()).collect();
        let hist = BinnedHistogram::from_colors(&colors);
        let (mut num, mut den) = (0.0, 0.0);
        for b in hist.bins() {
            let c = b.color();
            let d = if hull.signed_distance(&c) <= 0.0 { 0.0 } else { brute_hull_distance(&hull, &c) };
            num += b.count as f64 * d * d;
            den += b.count as f64;
        }
        let want = (num / den).sqrt();
        assert!((binned_rmse(&hist, &hull) - want).abs() < 1e-12);
    }
}

#[test]
fn recovers_a_known_tetrahedron() {
    let truth = [[0.1, 0.15, 0.2], [0.85, 0.2, 0.15], [0.2, 0.8, 0.3], [0.35, 0.3, 0.9]];
    let mut r = rng(22);
    let img = Image::from_fn(120, 120, |x, y| {
        if y == 0 && x < 40 {
            return truth[x % 4];
        }
        // interior mixtures, kept away from the corners
        let mut l: [f64; 4] = [0; 4].map(|_| 0.2 + r.gen::<f64>());
        let s: f64 = l.iter().sum();
        l.iter_mut().for_each(|v| *v /= s);
        [0, 1, 2].map(|k| (0..4).map(|i| l[i] * truth[i][k]).sum())
    });
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    assert_eq!(pal.len(), 4);
    for t in truth {
        let best = pal
            .colors()
            .iter()
            .map(|c| (0..3).map(|k| (c.to_array()[k] - t[k]).powi(2)).sum::<f64>().sqrt())
            .fold(f64::INFINITY, f64::min);
        assert!(best <= 2.0 / 255.0, "vertex {t:?} missed by {best}");
    }
}

#[test]
fn grey_ramp_spans_black_to_white() {
    let img = Image::from_fn(256, 8, |x, _| [x as f64 / 255.0; 3]);
    let pal = extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
    let near = |t: f64| pal.colors().iter().any(|c| c.to_array().iter().all(|v| (v - t).abs() <= 3.0 / 255.0));
    assert!(near(0.0) && near(1.0));
    assert!(pal.len() >= 4);
}

fn blobs(seed: u64) -> Image {
    let mut r = rng(seed);
    let centres: Vec<[f64; 3]> = (0..6).map(|_| r.gen()).collect();
    Image::from_fn(48, 48, |x, y| {
        let c = centres[(x / 8 + y / 16) % 6];
        let t = (x as f64 * 0.3 + y as f64 * 0.17).sin() * 0.05;
        c.map(|v| (v + t).clamp(0.0, 1.0))
    })
}

#[test]
fn extraction_invariants_and_determinism() {
    for seed in 0..6 {
        let img = blobs(seed);
        let ex = extract_palette_detailed(&img, DEFAULT_RMSE_TOLERANCE).unwrap();
        assert!(ex.rmse <= DEFAULT_RMSE_TOLERANCE);
        assert!(ex.palette.len() >= 4);
        let cols = ex.palette.to_arrays();
        for (i, a) in cols.iter().enumerate() {
            assert!(a.iter().all(|v| (0.0..=1.0).contains(v)));
            for b in &cols[i + 1..] {
                assert!((0..3).any(|k| (a[k] - b[k]).abs() > 1e-6));
            }
        }
        for w in ex.volumes.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert_eq!(extract_palette(&img, DEFAULT_RMSE_TOLERANCE).unwrap(), ex.palette);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn histogram_counts_every_pixel(seed in any::<u64>(), w in 1usize..40, h in 1usize..40) {
        let mut r = rng(seed);
        let img = Image::from_fn(w, h, |_, _| r.gen());
        prop_assert_eq!(bin_image(&img).total(), (w * h) as u64);
        let sum: u64 = bin_image(&img).bins().iter().map(|b| b.count).sum();
        prop_assert_eq!(sum, (w * h) as u64);
    }
}
