//! Geometry substrate: hulls, tessellations, point location and hull simplification.

pub mod cloud;
pub mod distance;
pub mod hull;
pub mod linalg;
pub mod simplify;
pub mod tess;

pub use cloud::{AffineFrame, PointCloud};
pub use distance::distance_to_hull;
pub use hull::{convex_hull, hull_vertex_indices, HullFacet, HullMesh};
pub use simplify::{simplify_hull, simplify_hull_steps, Collapse, SimplifyStep};
pub use tess::{
    cone_tessellate, delaunay_tessellate, locate_and_barycentric, star_tessellate, Location,
    SimplexLocator, SimplicialTessellation,
};
