use crate::error::GeomError;
use crate::geom::linalg::{dot, norm};

/// `N × dim` coordinates stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self, GeomError> {
        if dim == 0 || coords.len() % dim != 0 {
            return Err(GeomError::DimensionMismatch {
                expected: dim,
                got: coords.len(),
            });
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(GeomError::Qhull("non-finite coordinate".into()));
        }
        Ok(PointCloud { dim, coords })
    }

    pub fn from_points<const D: usize>(points: &[[f64; D]]) -> Self {
        PointCloud::new(D, points.iter().flatten().copied().collect())
            .expect("fixed-size points are well formed")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut coords = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            coords.extend_from_slice(self.point(i));
        }
        PointCloud {
            dim: self.dim,
            coords,
        }
    }

    /// Length of the bounding-box diagonal.
    pub fn extent(&self) -> f64 {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for p in self.iter() {
            for k in 0..self.dim {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        lo.iter()
            .zip(&hi)
            .map(|(a, b)| (b - a) * (b - a))
            .sum::<f64>()
            .sqrt()
    }
}

/// Orthonormal coordinates for the affine span of a point set.
///
/// Used to run hull and tessellation code in the intrinsic dimension of
/// degenerate inputs (flat color regions, grey ramps, tiny palettes).
#[derive(Debug, Clone, PartialEq)]
pub struct AffineFrame {
    ambient: usize,
    origin: Vec<f64>,
    basis: Vec<Vec<f64>>,
}

impl AffineFrame {
    /// Relative tolerance used by [`AffineFrame::fit_default`].
    pub const DEFAULT_TOLERANCE: f64 = 1e-9;

    /// Greedy farthest-point Gram-Schmidt. A direction is kept while some
    /// point sits farther than `rel_tol × extent` from the current span.
    pub fn fit(cloud: &PointCloud, rel_tol: f64) -> AffineFrame {
        let dim = cloud.dim();
        if cloud.is_empty() {
            return AffineFrame {
                ambient: dim,
                origin: vec![0.0; dim],
                basis: Vec::new(),
            };
        }
        let first = cloud.point(0);
        let far = (0..cloud.len())
            .max_by(|&a, &b| {
                let da = crate::geom::linalg::dist2(cloud.point(a), first);
                let db = crate::geom::linalg::dist2(cloud.point(b), first);
                da.partial_cmp(&db).unwrap().then(b.cmp(&a))
            })
            .unwrap();
        let origin = cloud.point(far).to_vec();
        let tol = rel_tol * cloud.extent().max(f64::MIN_POSITIVE);
        let mut basis: Vec<Vec<f64>> = Vec::new();
        let mut residual = vec![0.0; dim];
        while basis.len() < dim {
            let mut best = (tol, None);
            for (i, p) in cloud.iter().enumerate() {
                Self::residual_into(&origin, &basis, p, &mut residual);
                let r = norm(&residual);
                if r > best.0 {
                    best = (r, Some(i));
                }
            }
            let Some(i) = best.1 else { break };
            Self::residual_into(&origin, &basis, cloud.point(i), &mut residual);
            // second pass of Gram-Schmidt for stability
            let mut dir = residual.clone();
            for b in &basis {
                let d = dot(&dir, b);
                for k in 0..dim {
                    dir[k] -= d * b[k];
                }
            }
            let n = norm(&dir);
            dir.iter_mut().for_each(|v| *v /= n);
            basis.push(dir);
        }
        AffineFrame {
            ambient: dim,
            origin,
            basis,
        }
    }

    pub fn fit_default(cloud: &PointCloud) -> AffineFrame {
        Self::fit(cloud, Self::DEFAULT_TOLERANCE)
    }

    fn residual_into(origin: &[f64], basis: &[Vec<f64>], p: &[f64], out: &mut [f64]) {
        for k in 0..out.len() {
            out[k] = p[k] - origin[k];
        }
        for b in basis {
            let d = dot(out, b);
            for k in 0..out.len() {
                out[k] -= d * b[k];
            }
        }
    }

    pub fn rank(&self) -> usize {
        self.basis.len()
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn is_full(&self) -> bool {
        self.rank() == self.ambient
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn project(&self, p: &[f64]) -> Vec<f64> {
        let d: Vec<f64> = p.iter().zip(&self.origin).map(|(a, b)| a - b).collect();
        self.basis.iter().map(|b| dot(&d, b)).collect()
    }

    /// Distance from `p` to the affine span.
    pub fn residual(&self, p: &[f64]) -> f64 {
        let mut r = vec![0.0; self.ambient];
        Self::residual_into(&self.origin, &self.basis, p, &mut r);
        norm(&r)
    }

    pub fn lift(&self, coords: &[f64]) -> Vec<f64> {
        let mut p = self.origin.clone();
        for (c, b) in coords.iter().zip(&self.basis) {
            for k in 0..self.ambient {
                p[k] += c * b[k];
            }
        }
        p
    }

    pub fn project_cloud(&self, cloud: &PointCloud) -> PointCloud {
        let k = self.rank().max(1);
        let mut coords = Vec::with_capacity(cloud.len() * k);
        for p in cloud.iter() {
            if self.rank() == 0 {
                coords.push(0.0);
            } else {
                coords.extend(self.project(p));
            }
        }
        PointCloud::new(k, coords).expect("projection keeps shape")
    }
}
