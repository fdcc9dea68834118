//! Euclidean distance from a point to a convex hull.

use crate::geom::hull::HullMesh;
use crate::geom::linalg::{dist2, dot, solve};

/// Distance from `q` to the hull and the closest hull point.
///
/// Interior points (all facet signed distances ≤ 0) give `(0, q)`. Otherwise
/// only facets whose plane sees `q` can carry the closest point, so those are
/// the only ones checked.
pub fn distance_to_hull(hull: &HullMesh, q: &[f64]) -> (f64, Vec<f64>) {
    if hull.signed_distance(q) <= 0.0 {
        return (0.0, q.to_vec());
    }
    let mut best = (f64::INFINITY, q.to_vec());
    let mut corners: Vec<&[f64]> = Vec::with_capacity(hull.dim());
    for f in hull.facets() {
        if f.signed_distance(q) <= 0.0 {
            continue;
        }
        corners.clear();
        corners.extend(f.vertices.iter().map(|&v| hull.vertex(v)));
        let p = if hull.dim() == 3 {
            let c = closest_on_triangle(q, corners[0], corners[1], corners[2]);
            c.to_vec()
        } else {
            closest_on_simplex(q, &corners)
        };
        let d = dist2(q, &p);
        if d < best.0 {
            best = (d, p);
        }
    }
    (best.0.sqrt(), best.1)
}

/// Closest point of triangle `abc` to `p` by Voronoi-region classification.
pub fn closest_on_triangle(p: &[f64], a: &[f64], b: &[f64], c: &[f64]) -> [f64; 3] {
    let sub = |u: &[f64], v: &[f64]| [u[0] - v[0], u[1] - v[1], u[2] - v[2]];
    let at = |s: f64, t: f64| {
        [
            a[0] + s * (b[0] - a[0]) + t * (c[0] - a[0]),
            a[1] + s * (b[1] - a[1]) + t * (c[1] - a[1]),
            a[2] + s * (b[2] - a[2]) + t * (c[2] - a[2]),
        ]
    };
    let ab = sub(b, a);
    let ac = sub(c, a);
    let ap = sub(p, a);
    let d1 = dot(&ab, &ap);
    let d2 = dot(&ac, &ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return [a[0], a[1], a[2]];
    }
    let bp = sub(p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return [b[0], b[1], b[2]];
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        return at(d1 / (d1 - d3), 0.0);
    }
    let cp = sub(p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return [c[0], c[1], c[2]];
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        return at(0.0, d2 / (d2 - d6));
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [
            b[0] + w * (c[0] - b[0]),
            b[1] + w * (c[1] - b[1]),
            b[2] + w * (c[2] - b[2]),
        ];
    }
    let denom = 1.0 / (va + vb + vc);
    at(vb * denom, vc * denom)
}

/// Closest point of the simplex spanned by `corners` to `p`, by checking the
/// orthogonal projection onto every face and keeping the nearest feasible one.
pub fn closest_on_simplex(p: &[f64], corners: &[&[f64]]) -> Vec<f64> {
    let n = corners.len();
    let dim = p.len();
    let mut best = (f64::INFINITY, corners[0].to_vec());
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let Some(point) = project_on_face(p, corners, &idx, dim) else {
            continue;
        };
        let d = dist2(p, &point);
        if d < best.0 {
            best = (d, point);
        }
    }
    best.1
}

fn project_on_face(p: &[f64], corners: &[&[f64]], idx: &[usize], dim: usize) -> Option<Vec<f64>> {
    let base = corners[idx[0]];
    let m = idx.len() - 1;
    if m == 0 {
        return Some(base.to_vec());
    }
    let edges: Vec<Vec<f64>> = idx[1..]
        .iter()
        .map(|&i| (0..dim).map(|k| corners[i][k] - base[k]).collect())
        .collect();
    let rel: Vec<f64> = (0..dim).map(|k| p[k] - base[k]).collect();
    let mut gram = vec![0.0; m * m];
    let mut rhs = vec![0.0; m];
    for i in 0..m {
        for j in 0..m {
            gram[i * m + j] = dot(&edges[i], &edges[j]);
        }
        rhs[i] = dot(&edges[i], &rel);
    }
    let t = solve(m, &gram, &rhs)?;
    let sum: f64 = t.iter().sum();
    if t.iter().any(|&v| v < 0.0) || sum > 1.0 {
        return None;
    }
    let mut out = base.to_vec();
    for (e, &w) in edges.iter().zip(&t) {
        for k in 0..dim {
            out[k] += w * e[k];
        }
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::cloud::PointCloud;
    use crate::geom::hull::convex_hull;

    fn cube() -> HullMesh {
        let mut pts = Vec::new();
        for i in 0..8 {
            pts.push([(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64]);
        }
        convex_hull(&PointCloud::from_points(&pts)).unwrap()
    }

    #[test]
    fn interior_and_face() {
        let h = cube();
        assert_eq!(distance_to_hull(&h, &[0.5, 0.5, 0.5]).0, 0.0);
        let (d, p) = distance_to_hull(&h, &[0.5, 0.5, 1.25]);
        assert!((d - 0.25).abs() < 1e-12);
        assert!((p[2] - 1.0).abs() < 1e-12);
        let (d, _) = distance_to_hull(&h, &[2.0, 2.0, 2.0]);
        assert!((d - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn triangle_matches_face_enumeration() {
        let a = [0.0, 0.0, 0.0];
        let b = [1.0, 0.2, 0.1];
        let c = [0.3, 1.0, -0.2];
        for p in [[2.0, 2.0, 2.0], [-1.0, 0.1, 0.4], [0.4, 0.3, 1.0], [0.5, -2.0, 0.0]] {
            let fast = closest_on_triangle(&p, &a, &b, &c);
            let slow = closest_on_simplex(&p, &[&a, &b, &c]);
            assert!(dist2(&fast, &slow) < 1e-20);
        }
    }
}
