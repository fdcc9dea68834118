//! Progressive hull simplification by constrained edge collapse.
//!
//! Each step picks the edge whose collapse adds the least volume. The new
//! point must lie on or outside the planes of every face incident to either
//! endpoint, which guarantees the simplified hull still encloses the old one.
//! Placement is a 3-variable linear program; the hull is rebuilt from scratch
//! after every collapse.

use std::collections::{BTreeSet, HashMap};

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::GeomError;
use crate::geom::cloud::PointCloud;
use crate::geom::hull::{convex_hull, cross, HullMesh};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Collapse {
    /// Stable ids of the collapsed edge endpoints (`a < b`).
    pub edge: (usize, usize),
    pub point: [f64; 3],
    pub added_volume: f64,
}

/// One hull of the simplification sequence, with stable vertex ids: input
/// vertices keep their hull index, collapse points get fresh ids.
#[derive(Debug, Clone)]
pub struct SimplifyStep {
    pub hull: HullMesh,
    pub ids: Vec<usize>,
    pub collapse: Option<Collapse>,
}

type CacheKey = (usize, usize, Vec<[usize; 3]>);

struct Simplifier {
    next_id: usize,
    cache: HashMap<CacheKey, Option<(f64, [f64; 3])>>,
}

fn facet_area(hull: &HullMesh, verts: &[usize]) -> f64 {
    let a = hull.vertex(verts[0]);
    let b = hull.vertex(verts[1]);
    let c = hull.vertex(verts[2]);
    let n = cross(
        [b[0] - a[0], b[1] - a[1], b[2] - a[2]],
        [c[0] - a[0], c[1] - a[1], c[2] - a[2]],
    );
    0.5 * (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt()
}

impl Simplifier {
    /// Cheapest feasible collapse point for edge `(a, b)` (local indices).
    fn place(&mut self, step: &SimplifyStep, a: usize, b: usize) -> Option<(f64, [f64; 3])> {
        let hull = &step.hull;
        let incident: Vec<usize> = (0..hull.facets().len())
            .filter(|&i| {
                let v = &hull.facets()[i].vertices;
                v.contains(&a) || v.contains(&b)
            })
            .collect();
        let mut key_faces: Vec<[usize; 3]> = incident
            .iter()
            .map(|&i| {
                let v = &hull.facets()[i].vertices;
                let mut t = [step.ids[v[0]], step.ids[v[1]], step.ids[v[2]]];
                t.sort_unstable();
                t
            })
            .collect();
        key_faces.sort_unstable();
        let (ia, ib) = (step.ids[a].min(step.ids[b]), step.ids[a].max(step.ids[b]));
        let key = (ia, ib, key_faces);
        if let Some(hit) = self.cache.get(&key) {
            return *hit;
        }

        // added volume = Σ area_f (n_f·p − off_f) / 3 over incident faces
        let mut obj = [0.0; 3];
        let mut constant = 0.0;
        for &i in &incident {
            let f = &hull.facets()[i];
            let area = facet_area(hull, &f.vertices);
            for k in 0..3 {
                obj[k] += area * f.normal[k] / 3.0;
            }
            constant -= area * f.offset / 3.0;
        }
        let mut lp = Problem::new(OptimizationDirection::Minimize);
        let vars: Vec<_> = (0..3)
            .map(|k| lp.add_var(obj[k], (f64::NEG_INFINITY, f64::INFINITY)))
            .collect();
        for &i in &incident {
            let f = &hull.facets()[i];
            lp.add_constraint(
                [(vars[0], f.normal[0]), (vars[1], f.normal[1]), (vars[2], f.normal[2])],
                ComparisonOp::Ge,
                f.offset,
            );
        }
        let result = lp.solve().ok().and_then(|out| {
            let sol = out.solution()?;
            let p = [sol.var_value(vars[0]), sol.var_value(vars[1]), sol.var_value(vars[2])];
            if !p.iter().all(|v| v.is_finite()) {
                return None;
            }
            let added = obj[0] * p[0] + obj[1] * p[1] + obj[2] * p[2] + constant;
            Some((added.max(0.0), p))
        });
        self.cache.insert(key, result);
        result
    }

    fn best_collapse(&mut self, step: &SimplifyStep) -> Option<(Collapse, usize, usize)> {
        let mut edges = BTreeSet::new();
        for f in step.hull.facets() {
            for i in 0..3 {
                let (u, v) = (f.vertices[i], f.vertices[(i + 1) % 3]);
                edges.insert((u.min(v), u.max(v)));
            }
        }
        let mut best: Option<(Collapse, usize, usize)> = None;
        for (a, b) in edges {
            let Some((added, point)) = self.place(step, a, b) else {
                continue;
            };
            let (ia, ib) = (step.ids[a], step.ids[b]);
            let edge = (ia.min(ib), ia.max(ib));
            let better = match &best {
                None => true,
                Some((c, _, _)) => added < c.added_volume || (added == c.added_volume && edge < c.edge),
            };
            if better {
                best = Some((
                    Collapse {
                        edge,
                        point,
                        added_volume: added,
                    },
                    a,
                    b,
                ));
            }
        }
        best
    }

    fn apply(&mut self, step: &SimplifyStep, a: usize, b: usize, c: Collapse) -> Result<SimplifyStep, GeomError> {
        let mut coords = Vec::new();
        let mut ids = Vec::new();
        for i in 0..step.hull.vertex_count() {
            if i == a || i == b {
                continue;
            }
            coords.extend_from_slice(step.hull.vertex(i));
            ids.push(step.ids[i]);
        }
        coords.extend_from_slice(&c.point);
        ids.push(self.next_id);
        self.next_id += 1;
        let hull = convex_hull(&PointCloud::new(3, coords)?)?;
        let ids = hull.source_indices().iter().map(|&s| ids[s]).collect();
        Ok(SimplifyStep {
            hull,
            ids,
            collapse: Some(c),
        })
    }
}

/// Simplifies a 3D hull. `stop` sees each candidate hull before it is
/// accepted; returning `true` rejects it and ends the sequence. The returned
/// sequence starts with the input hull.
///
/// Iteration also ends when no edge admits a feasible collapse or the hull
/// is a tetrahedron.
pub fn simplify_hull_steps(
    hull: &HullMesh,
    mut stop: impl FnMut(&HullMesh) -> bool,
) -> Result<Vec<SimplifyStep>, GeomError> {
    if hull.dim() != 3 {
        return Err(GeomError::DimensionMismatch {
            expected: 3,
            got: hull.dim(),
        });
    }
    let n = hull.vertex_count();
    let mut simplifier = Simplifier {
        next_id: n,
        cache: HashMap::new(),
    };
    let mut steps = vec![SimplifyStep {
        hull: hull.clone(),
        ids: (0..n).collect(),
        collapse: None,
    }];
    loop {
        let current = steps.last().expect("sequence is never empty");
        if current.hull.vertex_count() <= 4 {
            break;
        }
        let Some((collapse, a, b)) = simplifier.best_collapse(current) else {
            log::debug!("no feasible collapse at {} vertices", current.hull.vertex_count());
            break;
        };
        let next = simplifier.apply(current, a, b, collapse)?;
        if stop(&next.hull) {
            break;
        }
        steps.push(next);
    }
    Ok(steps)
}

/// Like [`simplify_hull_steps`] but returning only the hulls.
pub fn simplify_hull(
    hull: &HullMesh,
    stop: impl FnMut(&HullMesh) -> bool,
) -> Result<Vec<HullMesh>, GeomError> {
    Ok(simplify_hull_steps(hull, stop)?
        .into_iter()
        .map(|s| s.hull)
        .collect())
}
