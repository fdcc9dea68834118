//! Simplicial tessellations (Delaunay and star/cone) and point location.

use std::collections::HashMap;

use qhull::Qh;

use crate::error::GeomError;
use crate::geom::cloud::{AffineFrame, PointCloud};
use crate::geom::hull::HullMesh;
use crate::geom::linalg::{dist2, factorial, invert, simplex_volume};

/// Simplices whose volume relative to a regular one on their longest edge
/// falls below this are treated as flat.
const FLAT_TOLERANCE: f64 = 1e-12;

/// Vertices plus `(dim + 1)`-tuples of vertex indices.
#[derive(Debug, Clone, PartialEq)]
pub struct SimplicialTessellation {
    dim: usize,
    points: Vec<f64>,
    simplices: Vec<usize>,
}

impl SimplicialTessellation {
    pub fn new(dim: usize, points: Vec<f64>, simplices: Vec<usize>) -> Result<Self, GeomError> {
        if dim == 0 || points.len() % dim != 0 || simplices.len() % (dim + 1) != 0 {
            return Err(GeomError::DimensionMismatch {
                expected: dim,
                got: points.len(),
            });
        }
        let n = points.len() / dim;
        if let Some(&bad) = simplices.iter().find(|&&v| v >= n) {
            return Err(GeomError::BadVertex(bad));
        }
        Ok(SimplicialTessellation {
            dim,
            points,
            simplices,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn simplex_count(&self) -> usize {
        self.simplices.len() / (self.dim + 1)
    }

    pub fn simplex(&self, s: usize) -> &[usize] {
        let k = self.dim + 1;
        &self.simplices[s * k..(s + 1) * k]
    }

    pub fn simplices(&self) -> impl Iterator<Item = &[usize]> {
        self.simplices.chunks_exact(self.dim + 1)
    }

    pub fn simplex_volume(&self, s: usize) -> f64 {
        let pts: Vec<&[f64]> = self.simplex(s).iter().map(|&v| self.vertex(v)).collect();
        simplex_volume(self.dim, &pts)
    }

    pub fn volume(&self) -> f64 {
        (0..self.simplex_count()).map(|s| self.simplex_volume(s)).sum()
    }
}

fn extent_scale(cloud: &PointCloud) -> f64 {
    cloud.extent().max(f64::MIN_POSITIVE)
}

fn drop_flat(dim: usize, points: &[f64], simplices: Vec<Vec<usize>>) -> Vec<usize> {
    // shape-relative volume: qhull's triangulation of coplanar or cospherical
    // input leaves simplices flat to rounding, while genuine slivers stay far above
    let mut out = Vec::with_capacity(simplices.len() * (dim + 1));
    for s in simplices {
        let pts: Vec<&[f64]> = s.iter().map(|&v| &points[v * dim..(v + 1) * dim]).collect();
        let mut longest = 0.0f64;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                longest = longest.max(dist2(pts[i], pts[j]));
            }
        }
        let normalized = simplex_volume(dim, &pts) * factorial(dim) / longest.sqrt().powi(dim as i32);
        if normalized > FLAT_TOLERANCE {
            out.extend(s);
        }
    }
    out
}

/// Delaunay tessellation whose vertices are the cloud points (same indexing).
pub fn delaunay_tessellate(cloud: &PointCloud) -> Result<SimplicialTessellation, GeomError> {
    let dim = cloud.dim();
    if cloud.len() < dim + 1 {
        return Err(GeomError::TooFewPoints {
            needed: dim + 1,
            got: cloud.len(),
        });
    }
    let frame = AffineFrame::fit_default(cloud);
    if !frame.is_full() {
        return Err(GeomError::DegenerateInput {
            dim,
            rank: frame.rank(),
        });
    }
    let points = cloud.coords().to_vec();
    if dim == 1 {
        let mut order: Vec<usize> = (0..cloud.len()).collect();
        order.sort_by(|&a, &b| points[a].total_cmp(&points[b]).then(a.cmp(&b)));
        order.dedup_by(|a, b| points[*a] == points[*b]);
        let simplices = order.windows(2).flatten().copied().collect();
        return SimplicialTessellation::new(1, points, simplices);
    }

    // lift onto the paraboloid after centring and scaling for conditioning
    let n = cloud.len();
    let mut centre = vec![0.0; dim];
    for p in cloud.iter() {
        for k in 0..dim {
            centre[k] += p[k];
        }
    }
    centre.iter_mut().for_each(|c| *c /= n as f64);
    let scale = 1.0 / extent_scale(cloud);
    let mut lifted = Vec::with_capacity(n * (dim + 1));
    for p in cloud.iter() {
        let mut r2 = 0.0;
        for k in 0..dim {
            let v = (p[k] - centre[k]) * scale;
            lifted.push(v);
            r2 += v * v;
        }
        lifted.push(r2);
    }
    // a point far above the paraboloid keeps qhull out of flat cases
    // (cospherical input, exactly dim + 1 points) without touching lower facets
    let top = lifted.iter().skip(dim).step_by(dim + 1).fold(0.0f64, |a, &b| a.max(b));
    lifted.extend(std::iter::repeat(0.0).take(dim));
    lifted.push(2.0 * top + 1.0);

    let qh = Qh::builder()
        .capture_stderr(true)
        .delaunay(true)
        .scale_last(true)
        .triangulate(true)
        .build_managed(dim + 1, lifted)
        .map_err(|e| GeomError::Qhull(e.to_string()))?;
    let mut simplices = Vec::new();
    for f in qh.facets() {
        if f.upper_delaunay() {
            continue;
        }
        let Some(verts) = f.vertices() else { continue };
        let s: Vec<usize> = verts.iter().filter_map(|v| v.index(&qh)).collect();
        if s.len() == dim + 1 && !s.contains(&n) {
            simplices.push(s);
        }
    }
    drop(qh);
    for s in &mut simplices {
        s.sort_unstable();
    }
    simplices.sort();
    let flat = drop_flat(dim, &points, simplices);
    SimplicialTessellation::new(dim, points, flat)
}

/// Star tessellation from hull vertex `star`: every facet not incident to
/// the star is coned to it. Vertices are the hull vertices.
pub fn star_tessellate(hull: &HullMesh, star: usize) -> Result<SimplicialTessellation, GeomError> {
    if star >= hull.vertex_count() {
        return Err(GeomError::BadVertex(star));
    }
    let dim = hull.dim();
    let points: Vec<f64> = hull.vertices().flatten().copied().collect();
    let simplices: Vec<Vec<usize>> = hull
        .facets()
        .iter()
        .filter(|f| !f.vertices.contains(&star))
        .map(|f| {
            let mut s = vec![star];
            s.extend_from_slice(&f.vertices);
            s
        })
        .collect();
    let flat = drop_flat(dim, &points, simplices);
    SimplicialTessellation::new(dim, points, flat)
}

/// Cone tessellation from an arbitrary point `apex` inside the hull. The apex
/// is appended as the last vertex.
pub fn cone_tessellate(hull: &HullMesh, apex: &[f64]) -> Result<SimplicialTessellation, GeomError> {
    let dim = hull.dim();
    if apex.len() != dim {
        return Err(GeomError::DimensionMismatch {
            expected: dim,
            got: apex.len(),
        });
    }
    let mut points: Vec<f64> = hull.vertices().flatten().copied().collect();
    let a = hull.vertex_count();
    points.extend_from_slice(apex);
    let simplices: Vec<Vec<usize>> = hull
        .facets()
        .iter()
        .map(|f| {
            let mut s = vec![a];
            s.extend_from_slice(&f.vertices);
            s
        })
        .collect();
    let flat = drop_flat(dim, &points, simplices);
    SimplicialTessellation::new(dim, points, flat)
}

const NO_NEIGHBOR: usize = usize::MAX;

/// Barycentric coordinates are accepted down to this (then clamped to 0).
pub const BARY_TOLERANCE: f64 = 1e-9;

/// Point location over an immutable tessellation.
///
/// Each simplex stores the inverse of its edge matrix so barycentric
/// coordinates cost one small mat-vec. Queries walk across faces towards the
/// point starting from a hint simplex, and fall back to a bounding-box
/// filtered scan when the walk leaves the mesh or runs too long.
#[derive(Debug, Clone)]
pub struct SimplexLocator {
    tess: SimplicialTessellation,
    inverse: Vec<f64>,
    neighbors: Vec<usize>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    max_steps: usize,
}

/// A located point: the containing simplex and one barycentric coordinate per simplex vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct Location {
    pub simplex: usize,
    pub bary: Vec<f64>,
}

impl SimplexLocator {
    pub fn new(tess: SimplicialTessellation) -> Self {
        let d = tess.dim();
        let k = d + 1;
        let count = tess.simplex_count();
        let mut inverse = vec![0.0; count * d * d];
        let mut lo = vec![0.0; count * d];
        let mut hi = vec![0.0; count * d];
        let mut m = vec![0.0; d * d];
        for s in 0..count {
            let verts = tess.simplex(s);
            let v0 = tess.vertex(verts[0]);
            // column j holds v_{j+1} - v_0
            for j in 0..d {
                let vj = tess.vertex(verts[j + 1]);
                for r in 0..d {
                    m[r * d + j] = vj[r] - v0[r];
                }
            }
            if let Some(inv) = invert(d, &m) {
                inverse[s * d * d..(s + 1) * d * d].copy_from_slice(&inv);
            }
            for r in 0..d {
                let (mut a, mut b) = (f64::INFINITY, f64::NEG_INFINITY);
                for &v in verts {
                    a = a.min(tess.vertex(v)[r]);
                    b = b.max(tess.vertex(v)[r]);
                }
                lo[s * d + r] = a;
                hi[s * d + r] = b;
            }
        }

        let mut neighbors = vec![NO_NEIGHBOR; count * k];
        let mut faces: HashMap<Vec<usize>, (usize, usize)> = HashMap::with_capacity(count * k);
        for s in 0..count {
            let verts = tess.simplex(s);
            for i in 0..k {
                let mut face: Vec<usize> = (0..k).filter(|&j| j != i).map(|j| verts[j]).collect();
                face.sort_unstable();
                match faces.remove(&face) {
                    Some((t, ti)) => {
                        neighbors[s * k + i] = t;
                        neighbors[t * k + ti] = s;
                    }
                    None => {
                        faces.insert(face, (s, i));
                    }
                }
            }
        }
        let max_steps = 64 + 4 * (count as f64).sqrt() as usize;
        SimplexLocator {
            tess,
            inverse,
            neighbors,
            lo,
            hi,
            max_steps,
        }
    }

    pub fn tessellation(&self) -> &SimplicialTessellation {
        &self.tess
    }

    /// Barycentric coordinates of `q` in simplex `s`, written to `out` (length dim + 1).
    pub fn barycentric_in(&self, s: usize, q: &[f64], out: &mut [f64]) {
        let d = self.tess.dim();
        let v0 = self.tess.vertex(self.tess.simplex(s)[0]);
        let inv = &self.inverse[s * d * d..(s + 1) * d * d];
        let mut rest = 0.0;
        for r in 0..d {
            let mut acc = 0.0;
            for c in 0..d {
                acc += inv[r * d + c] * (q[c] - v0[c]);
            }
            out[r + 1] = acc;
            rest += acc;
        }
        out[0] = 1.0 - rest;
    }

    fn min_index(bary: &[f64]) -> (usize, f64) {
        let mut best = (0, bary[0]);
        for (i, &b) in bary.iter().enumerate().skip(1) {
            if b < best.1 {
                best = (i, b);
            }
        }
        best
    }

    /// Finds the simplex containing `q`, writing barycentric coordinates to `bary`.
    pub fn locate_into(&self, q: &[f64], hint: usize, bary: &mut [f64]) -> Result<usize, GeomError> {
        let count = self.tess.simplex_count();
        if count == 0 {
            return Err(GeomError::OutsideHull {
                min_weight: f64::NEG_INFINITY,
            });
        }
        let k = self.tess.dim() + 1;
        let mut s = if hint < count { hint } else { 0 };
        let mut prev = NO_NEIGHBOR;
        for _ in 0..self.max_steps {
            self.barycentric_in(s, q, bary);
            let (i, m) = Self::min_index(bary);
            if m >= -BARY_TOLERANCE {
                return Ok(s);
            }
            let mut next = self.neighbors[s * k + i];
            if next == prev {
                // avoid bouncing between two simplices: try the next most negative face
                let mut alt = (NO_NEIGHBOR, 0.0);
                for j in 0..k {
                    let nb = self.neighbors[s * k + j];
                    if j != i && bary[j] < alt.1 && nb != NO_NEIGHBOR && nb != prev {
                        alt = (nb, bary[j]);
                    }
                }
                next = alt.0;
            }
            if next == NO_NEIGHBOR {
                break;
            }
            prev = s;
            s = next;
        }
        self.scan(q, bary)
    }

    fn scan(&self, q: &[f64], bary: &mut [f64]) -> Result<usize, GeomError> {
        let d = self.tess.dim();
        let mut best = (NO_NEIGHBOR, f64::NEG_INFINITY);
        let mut tmp = vec![0.0; d + 1];
        for s in 0..self.tess.simplex_count() {
            let inside_box = (0..d).all(|r| {
                q[r] >= self.lo[s * d + r] - BARY_TOLERANCE && q[r] <= self.hi[s * d + r] + BARY_TOLERANCE
            });
            if !inside_box {
                continue;
            }
            self.barycentric_in(s, q, &mut tmp);
            let m = Self::min_index(&tmp).1;
            if m > best.1 {
                best = (s, m);
                bary.copy_from_slice(&tmp);
                if m >= 0.0 {
                    break;
                }
            }
        }
        if best.0 != NO_NEIGHBOR && best.1 >= -BARY_TOLERANCE {
            Ok(best.0)
        } else {
            Err(GeomError::OutsideHull { min_weight: best.1 })
        }
    }

    /// Like [`SimplexLocator::locate_into`], but when no simplex contains `q`
    /// returns the simplex whose smallest barycentric coordinate is largest.
    /// The flag is `false` in that case.
    pub fn locate_nearest_into(&self, q: &[f64], hint: usize, bary: &mut [f64]) -> (usize, bool) {
        if let Ok(s) = self.locate_into(q, hint, bary) {
            return (s, true);
        }
        let d = self.tess.dim();
        let mut tmp = vec![0.0; d + 1];
        // nearby simplices first; the whole set only if none is near
        for margin in [1e-6, f64::INFINITY] {
            let mut best = (NO_NEIGHBOR, f64::NEG_INFINITY);
            for s in 0..self.tess.simplex_count() {
                let near = (0..d).all(|r| q[r] >= self.lo[s * d + r] - margin && q[r] <= self.hi[s * d + r] + margin);
                if !near {
                    continue;
                }
                self.barycentric_in(s, q, &mut tmp);
                let m = Self::min_index(&tmp).1;
                if m > best.1 {
                    best = (s, m);
                    bary.copy_from_slice(&tmp);
                }
            }
            if best.0 != NO_NEIGHBOR {
                return (best.0, false);
            }
        }
        (0, false)
    }

    pub fn locate(&self, q: &[f64], hint: usize) -> Result<Location, GeomError> {
        let mut bary = vec![0.0; self.tess.dim() + 1];
        let simplex = self.locate_into(q, hint, &mut bary)?;
        Ok(Location { simplex, bary })
    }

    /// Sparse convex weights over tessellation vertices, sorted by vertex.
    pub fn weights(&self, q: &[f64], hint: usize) -> Result<Vec<(usize, f64)>, GeomError> {
        let loc = self.locate(q, hint)?;
        Ok(self.clamp_weights(loc.simplex, &loc.bary))
    }

    /// Clamps small negatives to zero, renormalizes and drops zero entries.
    pub fn clamp_weights(&self, simplex: usize, bary: &[f64]) -> Vec<(usize, f64)> {
        let verts = self.tess.simplex(simplex);
        let total: f64 = bary.iter().map(|b| b.max(0.0)).sum();
        let mut out: Vec<(usize, f64)> = verts
            .iter()
            .zip(bary)
            .filter(|(_, &b)| b > 0.0)
            .map(|(&v, &b)| (v, b / total))
            .collect();
        out.sort_unstable_by_key(|e| e.0);
        out
    }
}

/// Locates `q` and returns its convex weights over the tessellation vertices.
pub fn locate_and_barycentric(
    locator: &SimplexLocator,
    q: &[f64],
) -> Result<Vec<(usize, f64)>, GeomError> {
    locator.weights(q, 0)
}
