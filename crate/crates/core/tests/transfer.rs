mod common;

use chroma_layers::colorspace::LchColor;
use chroma_layers::harmony::{palette_lch, uniform_weights};
use chroma_layers::palette::Palette;
use chroma_layers::transfer::{template_align_lch, template_transfer_lch, transfer_palette, TransferMode};
use common::{oracle_arc, rng};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn random_palette(r: &mut ChaCha8Rng, n: usize) -> (Vec<LchColor>, Vec<f64>) {
    let colors = (0..n)
        .map(|_| LchColor::new(r.gen_range(20.0..80.0), r.gen_range(10.0..70.0), r.gen_range(0.0..360.0)))
        .collect();
    let mut w: Vec<f64> = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (colors, w)
}

#[test]
fn alignment_recovers_a_known_rotation() {
    let input = [LchColor::new(50.0, 40.0, 10.0), LchColor::new(60.0, 50.0, 130.0), LchColor::new(45.0, 30.0, 250.0)];
    let w = [0.2, 0.5, 0.3];
    let reference: Vec<LchColor> = input.iter().map(|c| c.with_hue(c.h + 40.0)).collect();
    let r = template_align_lch(&input, &w, &reference, &w).unwrap();
    assert!((r.gamma - 40.0).abs() < 1e-9);
    for (a, b) in r.lch.iter().zip(&reference) {
        assert!(oracle_arc(a.h, b.h) < 1e-9);
    }

    let mut g = rng(71);
    for _ in 0..200 {
        let n = g.gen_range(2..7);
        let (input, w) = random_palette(&mut g, n);
        let reference: Vec<LchColor> = input.iter().map(|c| c.with_hue(c.h + 40.0)).collect();
        let r = template_align_lch(&input, &w, &reference, &w).unwrap();
        assert!((r.gamma - 40.0).abs() < 1e-6, "gamma {}", r.gamma);
    }
}

#[test]
fn transfer_matches_reference_means() {
    let mut g = rng(72);
    for _ in 0..50 {
        let n = g.gen_range(1..7);
        let m = g.gen_range(1..7);
        let (input, wi) = random_palette(&mut g, n);
        let (reference, wr) = random_palette(&mut g, m);
        let r = template_transfer_lch(&input, &wi, &reference, &wr).unwrap();
        let mean = |cs: &[LchColor], w: &[f64], f: fn(&LchColor) -> f64| cs.iter().zip(w).map(|(c, w)| w * f(c)).sum::<f64>();
        assert!((mean(&r.unclamped, &wi, |c| c.l) - mean(&reference, &wr, |c| c.l)).abs() < 1e-6);
        assert!((mean(&r.unclamped, &wi, |c| c.c) - mean(&reference, &wr, |c| c.c)).abs() < 1e-6);
        for (u, c) in r.unclamped.iter().zip(&r.lch) {
            assert_eq!(c.l, u.l.clamp(0.0, 100.0));
        }
    }
}

#[test]
fn single_color_and_grey_inputs() {
    let one = [LchColor::new(40.0, 30.0, 75.0)];
    let reference = [LchColor::new(70.0, 60.0, 200.0), LchColor::new(50.0, 40.0, 20.0)];
    let r = template_transfer_lch(&one, &[1.0], &reference, &[0.5, 0.5]).unwrap();
    assert_eq!(r.lch.len(), 1);
    assert!((r.unclamped[0].l - 60.0).abs() < 1e-9 && (r.unclamped[0].c - 50.0).abs() < 1e-9);

    let grey = Palette::from_arrays(&[[0.1; 3], [0.5; 3], [0.9; 3]]).unwrap();
    let refp = Palette::from_arrays(&[[0.9, 0.2, 0.1], [0.1, 0.3, 0.8]]).unwrap();
    let (res, out) = transfer_palette(TransferMode::Align, &grey, &uniform_weights(3), &refp, &uniform_weights(2)).unwrap();
    assert_eq!(out, grey);
    assert!(res.lch.iter().all(|c| c.is_achromatic()));
    let (_, out) = transfer_palette(TransferMode::Transfer, &grey, &uniform_weights(3), &refp, &uniform_weights(2)).unwrap();
    for c in out.colors() {
        assert!(c.to_lch().c < 1e-6);
    }
}

#[test]
fn palette_size_and_order_are_kept() {
    let mut g = rng(73);
    for _ in 0..20 {
        let n = g.gen_range(2..8);
        let arrays: Vec<[f64; 3]> = (0..n).map(|_| g.gen()).collect();
        let input = Palette::from_arrays(&arrays).unwrap();
        let refp = Palette::from_arrays(&[[0.8, 0.3, 0.2], [0.2, 0.6, 0.7], [0.5, 0.5, 0.1]]).unwrap();
        for mode in [TransferMode::Align, TransferMode::Transfer] {
            let (res, out) = transfer_palette(mode, &input, &uniform_weights(n), &refp, &uniform_weights(3)).unwrap();
            assert_eq!(out.len(), n);
            assert!(out.colors().iter().all(|c| c.in_gamut()));
            for ((c, want), before) in out.colors().iter().zip(&res.lch).zip(palette_lch(&input)) {
                let got = c.to_lch();
                if want.c > 1.0 && got.c > 1.0 && want != &before {
                    assert!(oracle_arc(got.h, want.h) < 0.5);
                }
            }
        }
    }
}
