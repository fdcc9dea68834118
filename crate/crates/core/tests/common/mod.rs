//! Reference implementations shared by the integration tests. Everything
//! here is written from first principles and does not call into the crate
//! under test except for plain data types.

#![allow(dead_code)]

pub mod hue;

use chroma_layers::geom::HullMesh;
use microlp::{ComparisonOp, OptimizationDirection, Problem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_points(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..dim).map(|_| rng.gen::<f64>()).collect()).collect()
}

// ---------------------------------------------------------------- color

fn srgb_decode(v: f64) -> f64 {
    if v <= 0.04045 {
        v / 12.92
    } else {
        ((v + 0.055) / 1.055).powf(2.4)
    }
}

fn xyz_of_xy(x: f64, y: f64) -> [f64; 3] {
    [x / y, 1.0, (1.0 - x - y) / y]
}

/// RGB→XYZ matrix built from the sRGB primary chromaticities and the D65
/// white point.
pub fn srgb_matrix() -> [[f64; 3]; 3] {
    let prim = [xyz_of_xy(0.64, 0.33), xyz_of_xy(0.30, 0.60), xyz_of_xy(0.15, 0.06)];
    let white = xyz_of_xy(0.3127, 0.3290);
    // columns are the primaries; scale them so that (1,1,1) maps to white
    let cols: Vec<f64> = (0..3).flat_map(|r| (0..3).map(move |c| (r, c))).map(|(r, c)| prim[c][r]).collect();
    let d = det(3, &cols);
    let mut scale = [0.0; 3];
    for k in 0..3 {
        let mut m = cols.clone();
        for r in 0..3 {
            m[r * 3 + k] = white[r];
        }
        scale[k] = det(3, &m) / d;
    }
    let mut out = [[0.0; 3]; 3];
    for r in 0..3 {
        for c in 0..3 {
            out[r][c] = prim[c][r] * scale[c];
        }
    }
    out
}

/// sRGB (D65) to CIE Lab.
pub fn oracle_lab(rgb: [f64; 3]) -> [f64; 3] {
    let lin = rgb.map(srgb_decode);
    let m = srgb_matrix();
    let xyz: Vec<f64> = m.iter().map(|row| row.iter().zip(&lin).map(|(a, b)| a * b).sum()).collect();
    let white = xyz_of_xy(0.3127, 0.3290);
    let f = |t: f64| {
        let d: f64 = 6.0 / 29.0;
        if t > d * d * d {
            t.cbrt()
        } else {
            t / (3.0 * d * d) + 4.0 / 29.0
        }
    };
    let (fx, fy, fz) = (f(xyz[0] / white[0]), f(xyz[1] / white[1]), f(xyz[2] / white[2]));
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub fn oracle_lch(rgb: [f64; 3]) -> [f64; 3] {
    let [l, a, b] = oracle_lab(rgb);
    let c = a.hypot(b);
    let mut h = b.atan2(a).to_degrees();
    if h < 0.0 {
        h += 360.0;
    }
    [l, c, h]
}

/// Arc distance on the hue circle, by brute reduction.
pub fn oracle_arc(a: f64, b: f64) -> f64 {
    let mut d = (a - b).abs();
    while d >= 360.0 {
        d -= 360.0;
    }
    if d > 180.0 {
        360.0 - d
    } else {
        d
    }
}

// ------------------------------------------------------------- geometry

/// Whether `q` is a convex combination of `points`, by an L1-slack LP.
pub fn in_convex_hull_lp(points: &[Vec<f64>], q: &[f64]) -> bool {
    let dim = q.len();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let lambdas: Vec<_> = points.iter().map(|_| lp.add_var(0.0, (0.0, f64::INFINITY))).collect();
    let slack: Vec<_> = (0..dim)
        .map(|_| (lp.add_var(1.0, (0.0, f64::INFINITY)), lp.add_var(1.0, (0.0, f64::INFINITY))))
        .collect();
    lp.add_constraint(lambdas.iter().map(|&v| (v, 1.0)).collect::<Vec<_>>(), ComparisonOp::Eq, 1.0);
    for k in 0..dim {
        let mut row: Vec<_> = lambdas.iter().zip(points).map(|(&v, p)| (v, p[k])).collect();
        row.push((slack[k].0, 1.0));
        row.push((slack[k].1, -1.0));
        lp.add_constraint(row, ComparisonOp::Eq, q[k]);
    }
    let out = lp.solve().expect("the slack LP is always feasible");
    out.solution().expect("solved to optimality").objective() < 1e-9
}

/// Indices of points that are not convex combinations of the others.
pub fn extreme_points_lp(points: &[Vec<f64>]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let others: Vec<Vec<f64>> = points
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p.clone())
                .collect();
            !in_convex_hull_lp(&others, &points[i])
        })
        .collect()
}

pub fn det(n: usize, m: &[f64]) -> f64 {
    let mut a = m.to_vec();
    let mut d = 1.0;
    for c in 0..n {
        let p = (c..n).max_by(|&x, &y| a[x * n + c].abs().total_cmp(&a[y * n + c].abs())).unwrap();
        if a[p * n + c] == 0.0 {
            return 0.0;
        }
        if p != c {
            for k in 0..n {
                a.swap(p * n + k, c * n + k);
            }
            d = -d;
        }
        d *= a[c * n + c];
        for r in c + 1..n {
            let f = a[r * n + c] / a[c * n + c];
            for k in c..n {
                a[r * n + k] -= f * a[c * n + k];
            }
        }
    }
    d
}

fn fact(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// Volume of a d-simplex given d+1 corners.
pub fn simplex_volume(corners: &[&[f64]]) -> f64 {
    let d = corners.len() - 1;
    let mut m = Vec::with_capacity(d * d);
    for c in &corners[1..] {
        m.extend(c.iter().zip(corners[0]).map(|(a, b)| a - b));
    }
    det(d, &m).abs() / fact(d)
}

/// Hull volume by the divergence theorem: `(1/d) Σ offset · facet area`,
/// facet areas from the Gram determinant.
pub fn hull_volume_divergence(hull: &HullMesh) -> f64 {
    let d = hull.dim();
    let mut total = 0.0;
    for f in hull.facets() {
        let base = hull.vertex(f.vertices[0]);
        let edges: Vec<Vec<f64>> = f.vertices[1..]
            .iter()
            .map(|&v| hull.vertex(v).iter().zip(base).map(|(a, b)| a - b).collect())
            .collect();
        let k = d - 1;
        let mut gram = vec![0.0; k * k];
        for i in 0..k {
            for j in 0..k {
                gram[i * k + j] = edges[i].iter().zip(&edges[j]).map(|(a, b)| a * b).sum();
            }
        }
        let area = det(k, &gram).max(0.0).sqrt() / fact(k);
        let h: f64 = f.normal.iter().zip(base).map(|(n, x)| n * x).sum();
        total += h * area;
    }
    total / d as f64
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn closest_on_segment(p: &[f64], a: &[f64], b: &[f64]) -> [f64; 3] {
    let ab = sub3(b, a);
    let t = (dot3(sub3(p, a), ab) / dot3(ab, ab)).clamp(0.0, 1.0);
    [a[0] + t * ab[0], a[1] + t * ab[1], a[2] + t * ab[2]]
}

/// Closest point on a triangle: the plane projection when it falls inside,
/// otherwise the best of the three edges.
pub fn closest_on_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> [f64; 3] {
    let (u, v) = (sub3(b, a), sub3(c, a));
    let w = sub3(p, a);
    let (uu, uv, vv, wu, wv) = (dot3(u, u), dot3(u, v), dot3(v, v), dot3(w, u), dot3(w, v));
    let den = uu * vv - uv * uv;
    let s = (vv * wu - uv * wv) / den;
    let t = (uu * wv - uv * wu) / den;
    if s >= 0.0 && t >= 0.0 && s + t <= 1.0 {
        return [
            a[0] + s * u[0] + t * v[0],
            a[1] + s * u[1] + t * v[1],
            a[2] + s * u[2] + t * v[2],
        ];
    }
    [closest_on_segment(p, a, b), closest_on_segment(p, b, c), closest_on_segment(p, a, c)]
        .into_iter()
        .min_by(|x, y| dot3(sub3(p, x), sub3(p, x)).total_cmp(&dot3(sub3(p, y), sub3(p, y))))
        .unwrap()
}

/// Distance from an exterior point to a 3D hull: the nearest facet triangle.
pub fn brute_hull_distance(hull: &HullMesh, p: &[f64]) -> f64 {
    hull.facets()
        .iter()
        .map(|f| {
            let q = closest_on_triangle(p, hull.vertex(f.vertices[0]), hull.vertex(f.vertices[1]), hull.vertex(f.vertices[2]));
            dot3(sub3(p, &q), sub3(p, &q)).sqrt()
        })
        .fold(f64::INFINITY, f64::min)
}

// --------------------------------------------------------------- search

/// Golden-section minimization of a unimodal function on `[a, b]`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > tol {
        if f(c) < f(d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}

pub fn rmse(a: &[[f64; 3]], b: &[[f64; 3]]) -> f64 {
    let s: f64 = a
        .iter()
        .zip(b)
        .map(|(x, y)| (0..3).map(|k| (x[k] - y[k]).powi(2)).sum::<f64>())
        .sum();
    (s / (3 * a.len()) as f64).sqrt()
}
