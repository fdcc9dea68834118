//! Independent hue-template and LC-line oracles.

use chroma_layers::colorspace::{LchColor, RgbColor};
use chroma_layers::harmony::lc::LcKind;
use chroma_layers::harmony::TemplateKind;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::oracle_arc;

pub fn oracle_term(c: &LchColor, w: f64) -> f64 {
    if c.c < 1e-8 {
        0.0
    } else {
        w * (c.l / 100.0) * (c.c / 134.0)
    }
}

/// Attract-axis angles, or `None` for the analogous sector.
pub fn oracle_attract(kind: TemplateKind, a1: f64, a2: f64) -> Option<Vec<f64>> {
    let s = 30.0 + a2;
    let offs: Vec<f64> = match kind {
        TemplateKind::Monochrome => vec![0.0],
        TemplateKind::Complementary => vec![0.0, 180.0],
        TemplateKind::SingleSplit => vec![0.0, 180.0 - s, 180.0 + s],
        TemplateKind::Triad => vec![0.0, 120.0, 240.0],
        TemplateKind::DoubleSplit => vec![-s / 2.0, s / 2.0, 180.0 - s / 2.0, 180.0 + s / 2.0],
        TemplateKind::Square => vec![0.0, 90.0, 180.0, 270.0],
        TemplateKind::Analogous => return None,
    };
    Some(offs.iter().map(|o| (a1 + o).rem_euclid(360.0)).collect())
}

/// Arc distance of a hue to a template and the index of the nearest axis.
pub fn oracle_dist(h: f64, kind: TemplateKind, a1: f64, a2: f64) -> (f64, usize) {
    match oracle_attract(kind, a1, a2) {
        Some(axes) => {
            let mut best = (f64::INFINITY, 0);
            for (j, a) in axes.iter().enumerate() {
                let d = oracle_arc(h, *a);
                if d < best.0 {
                    best = (d, j);
                }
            }
            best
        }
        None => {
            let s = 30.0 + a2;
            let from_centre = oracle_arc(h, a1);
            ((from_centre - s).max(0.0), 0)
        }
    }
}

pub fn oracle_distance(colors: &[LchColor], w: &[f64], kind: TemplateKind, a1: f64, a2: f64) -> f64 {
    colors
        .iter()
        .zip(w)
        .map(|(c, &w)| {
            let t = oracle_term(c, w);
            if t == 0.0 {
                0.0
            } else {
                t * oracle_dist(c.h, kind, a1, a2).0
            }
        })
        .sum()
}

pub fn oracle_fit(colors: &[LchColor], w: &[f64], kind: TemplateKind) -> (f64, f64, f64) {
    let spreads: Vec<f64> = if matches!(kind, TemplateKind::SingleSplit | TemplateKind::DoubleSplit | TemplateKind::Analogous) {
        (-15..=15).map(f64::from).collect()
    } else {
        vec![0.0]
    };
    let mut all = Vec::new();
    for a1 in 0..360 {
        for &a2 in &spreads {
            all.push((a1 as f64, a2, oracle_distance(colors, w, kind, a1 as f64, a2)));
        }
    }
    let min = all.iter().map(|e| e.2).fold(f64::INFINITY, f64::min);
    let tol = 1e-9 * colors.iter().zip(w).map(|(c, &w)| oracle_term(c, w)).sum::<f64>();
    *all.iter().find(|e| e.2 <= min + tol).unwrap()
}

pub fn oracle_axis_count(kind: TemplateKind) -> usize {
    oracle_attract(kind, 0.0, 0.0).map_or(2, |a| a.len())
}

pub fn oracle_every_axis_used(colors: &[LchColor], kind: TemplateKind, a1: f64, a2: f64) -> bool {
    let Some(axes) = oracle_attract(kind, a1, a2) else {
        return colors.iter().any(|c| c.c >= 1e-8);
    };
    let mut used = vec![false; axes.len()];
    for c in colors.iter().filter(|c| c.c >= 1e-8) {
        used[oracle_dist(c.h, kind, a1, a2).1] = true;
    }
    used.into_iter().all(|u| u)
}

pub fn oracle_select(colors: &[LchColor], w: &[f64]) -> Option<(TemplateKind, f64, f64, f64)> {
    let tol = 1e-9 * colors.iter().zip(w).map(|(c, &w)| oracle_term(c, w)).sum::<f64>();
    let fits: Vec<(TemplateKind, f64, f64, f64)> = TemplateKind::ALL
        .iter()
        .map(|&k| {
            let (a1, a2, d) = oracle_fit(colors, w, k);
            (k, a1, a2, d)
        })
        .filter(|&(k, a1, a2, _)| k == TemplateKind::Monochrome || oracle_every_axis_used(colors, k, a1, a2))
        .collect();
    let min = fits.iter().map(|f| f.3).fold(f64::INFINITY, f64::min);
    fits.into_iter()
        .filter(|f| f.3 <= min + tol)
        .min_by_key(|f| (oracle_axis_count(f.0), TemplateKind::ALL.iter().position(|&k| k == f.0)))
}

pub fn random_palette(r: &mut ChaCha8Rng) -> (Vec<LchColor>, Vec<f64>) {
    let n = r.gen_range(1..=7);
    let colors: Vec<LchColor> = (0..n).map(|_| RgbColor::new(r.gen(), r.gen(), r.gen()).to_lch()).collect();
    let mut w: Vec<f64> = (0..n).map(|_| r.gen_range(0.01..1.0)).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    (colors, w)
}

pub fn random_lc_palette(r: &mut ChaCha8Rng) -> (Vec<LchColor>, Vec<f64>) {
    let n = r.gen_range(2..=8);
    let colors = (0..n)
        .map(|_| LchColor::new(r.gen_range(5.0..95.0), r.gen_range(3.0..120.0), r.gen_range(0.0..360.0)))
        .collect();
    let w = (0..n).map(|_| r.gen_range(0.05..1.0)).collect();
    (colors, w)
}

pub fn normalized(w: &[f64]) -> Vec<f64> {
    let s: f64 = w.iter().sum();
    w.iter().map(|v| v / s).collect()
}

/// Weighted squared perpendicular distance to the kind's line at offset `e`.
pub fn oracle_offset_objective(kind: LcKind, pts: &[[f64; 2]], w: &[f64], e: f64) -> f64 {
    pts.iter()
        .zip(w)
        .map(|(p, w)| {
            let d = match kind {
                LcKind::Lc1 => p[0] - e,
                LcKind::Lc2 => p[1] - e,
                LcKind::Lc5 => (p[0] - p[1] - e) / 2f64.sqrt(),
                LcKind::Lc6 => (p[0] + p[1] - e) / 2f64.sqrt(),
                _ => unreachable!(),
            };
            w * d * d
        })
        .sum()
}

pub fn oracle_rotation_objective(pivot: [f64; 2], pts: &[[f64; 2]], w: &[f64], deg: f64) -> f64 {
    let (s, c) = deg.to_radians().sin_cos();
    pts.iter()
        .zip(w)
        .map(|(p, w)| {
            let d = (p[0] - pivot[0]) * s - (p[1] - pivot[1]) * c;
            w * d * d
        })
        .sum()
}

