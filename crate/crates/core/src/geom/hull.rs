//! Convex hulls in any dimension ≥ 1, backed by qhull for dimension ≥ 2.

use qhull::Qh;

use crate::error::GeomError;
use crate::geom::cloud::{AffineFrame, PointCloud};
use crate::geom::linalg::{dot, factorial, determinant};

/// A hull facet: `dim` vertex indices (into [`HullMesh`] vertices), a unit
/// outward normal, and an offset so that `normal · x - offset` is the signed
/// distance of `x` from the facet plane (positive outside).
#[derive(Debug, Clone, PartialEq)]
pub struct HullFacet {
    pub vertices: Vec<usize>,
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl HullFacet {
    pub fn signed_distance(&self, q: &[f64]) -> f64 {
        dot(&self.normal, q) - self.offset
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HullMesh {
    dim: usize,
    points: Vec<f64>,
    source: Vec<usize>,
    facets: Vec<HullFacet>,
}

impl HullMesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.source.len()
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn vertices(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.dim)
    }

    /// Index of hull vertex `i` in the cloud the hull was built from.
    pub fn source_index(&self, i: usize) -> usize {
        self.source[i]
    }

    pub fn source_indices(&self) -> &[usize] {
        &self.source
    }

    pub fn facets(&self) -> &[HullFacet] {
        &self.facets
    }

    pub fn vertex_cloud(&self) -> PointCloud {
        PointCloud::new(self.dim, self.points.clone()).expect("hull vertices are well formed")
    }

    /// Largest facet-plane signed distance; `≤ 0` means inside.
    pub fn signed_distance(&self, q: &[f64]) -> f64 {
        self.facets
            .iter()
            .map(|f| f.signed_distance(q))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn contains(&self, q: &[f64], tol: f64) -> bool {
        self.signed_distance(q) <= tol
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut c = vec![0.0; self.dim];
        for v in self.vertices() {
            for k in 0..self.dim {
                c[k] += v[k];
            }
        }
        let n = self.vertex_count() as f64;
        c.iter_mut().for_each(|v| *v /= n);
        c
    }

    /// Volume by coning every facet to the vertex centroid.
    pub fn volume(&self) -> f64 {
        let c = self.centroid();
        let d = self.dim;
        let mut m = vec![0.0; d * d];
        let mut total = 0.0;
        for f in &self.facets {
            for (row, &vi) in f.vertices.iter().enumerate() {
                let v = self.vertex(vi);
                for k in 0..d {
                    m[row * d + k] = v[k] - c[k];
                }
            }
            total += determinant(d, &m).abs();
        }
        total / factorial(d)
    }

    /// Builds a mesh from explicit parts. Facet normals must be unit and outward.
    pub fn from_parts(
        dim: usize,
        points: Vec<f64>,
        source: Vec<usize>,
        facets: Vec<HullFacet>,
    ) -> Self {
        HullMesh {
            dim,
            points,
            source,
            facets,
        }
    }
}

fn check_size(cloud: &PointCloud) -> Result<(), GeomError> {
    let needed = cloud.dim() + 1;
    if cloud.len() < needed {
        return Err(GeomError::TooFewPoints {
            needed,
            got: cloud.len(),
        });
    }
    let frame = AffineFrame::fit_default(cloud);
    if !frame.is_full() {
        return Err(GeomError::DegenerateInput {
            dim: cloud.dim(),
            rank: frame.rank(),
        });
    }
    Ok(())
}

fn line_extremes(cloud: &PointCloud) -> (usize, usize) {
    let mut lo = 0;
    let mut hi = 0;
    for i in 1..cloud.len() {
        let v = cloud.point(i)[0];
        if v < cloud.point(lo)[0] {
            lo = i;
        }
        if v > cloud.point(hi)[0] {
            hi = i;
        }
    }
    (lo, hi)
}

fn run_qhull(cloud: &PointCloud, triangulate: bool) -> Result<Qh<'static>, GeomError> {
    let mut builder = Qh::builder().capture_stderr(true);
    if triangulate {
        builder = builder.triangulate(true);
    }
    builder
        .build_managed(cloud.dim(), cloud.coords().to_vec())
        .map_err(|e| GeomError::Qhull(e.to_string()))
}

/// Indices of the cloud points that are hull vertices, ascending.
pub fn hull_vertex_indices(cloud: &PointCloud) -> Result<Vec<usize>, GeomError> {
    check_size(cloud)?;
    if cloud.dim() == 1 {
        let (lo, hi) = line_extremes(cloud);
        let mut v = vec![lo, hi];
        v.sort_unstable();
        return Ok(v);
    }
    let qh = run_qhull(cloud, false)?;
    let mut idx: Vec<usize> = qh.vertices().filter_map(|v| v.index(&qh)).collect();
    idx.sort_unstable();
    idx.dedup();
    Ok(idx)
}

/// Convex hull with simplicial (triangulated) facets.
///
/// Fails with [`GeomError::DegenerateInput`] when the points do not span the
/// full dimension; callers reduce to an [`AffineFrame`] in that case.
pub fn convex_hull(cloud: &PointCloud) -> Result<HullMesh, GeomError> {
    check_size(cloud)?;
    let dim = cloud.dim();
    if dim == 1 {
        let (lo, hi) = line_extremes(cloud);
        let (a, b) = (cloud.point(lo)[0], cloud.point(hi)[0]);
        return Ok(HullMesh {
            dim,
            points: vec![a, b],
            source: vec![lo, hi],
            facets: vec![
                HullFacet {
                    vertices: vec![0],
                    normal: vec![-1.0],
                    offset: -a,
                },
                HullFacet {
                    vertices: vec![1],
                    normal: vec![1.0],
                    offset: b,
                },
            ],
        });
    }

    let qh = run_qhull(cloud, true)?;
    let mut raw = Vec::new();
    for f in qh.facets() {
        let Some(normal) = f.normal() else { continue };
        let Some(verts) = f.vertices() else { continue };
        let verts: Vec<usize> = verts.iter().filter_map(|v| v.index(&qh)).collect();
        if verts.len() != dim {
            continue;
        }
        raw.push((verts, normal.to_vec(), -f.offset()));
    }
    drop(qh);

    let mut source: Vec<usize> = raw.iter().flat_map(|(v, _, _)| v.iter().copied()).collect();
    source.sort_unstable();
    source.dedup();
    let local = |s: usize| source.binary_search(&s).expect("facet vertex is a hull vertex");

    let mut points = Vec::with_capacity(source.len() * dim);
    for &s in &source {
        points.extend_from_slice(cloud.point(s));
    }

    let mut facets: Vec<HullFacet> = raw
        .into_iter()
        .map(|(verts, normal, offset)| HullFacet {
            vertices: verts.into_iter().map(local).collect(),
            normal,
            offset,
        })
        .collect();

    if dim == 3 {
        // consistent counter-clockwise winding seen from outside
        for f in &mut facets {
            let a = &points[f.vertices[0] * 3..f.vertices[0] * 3 + 3];
            let b = &points[f.vertices[1] * 3..f.vertices[1] * 3 + 3];
            let c = &points[f.vertices[2] * 3..f.vertices[2] * 3 + 3];
            let n = cross(
                [b[0] - a[0], b[1] - a[1], b[2] - a[2]],
                [c[0] - a[0], c[1] - a[1], c[2] - a[2]],
            );
            if dot(&n, &f.normal) < 0.0 {
                f.vertices.swap(1, 2);
            }
        }
    }
    facets.sort_by(|a, b| {
        let mut ka = a.vertices.clone();
        let mut kb = b.vertices.clone();
        ka.sort_unstable();
        kb.sort_unstable();
        ka.cmp(&kb)
    });

    Ok(HullMesh {
        dim,
        points,
        source,
        facets,
    })
}

pub(crate) fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}
