//! Visibility volumes for convex planar polygons in triangle-mesh scenes.
//!
//! Given a scene mesh and a convex planar target polygon, this crate
//! computes the set of points from which the entire polygon is visible
//! within a maximum range, intersects it with navigation constraints, and
//! produces watertight boundary meshes plus a JSON run report.
//!
//! The pipeline, bottom to top:
//!
//! - [`mesh`] / [`io`]: triangle-mesh model, topology metrics, OBJ/PLY IO
//! - [`bvh`]: ray casting and segment occlusion over the scene
//! - [`depth`] / [`cubemap`]: omnidirectional depth fields around a point,
//!   by direct ray casting or by 6-face software-rasterized depth cubemaps
//! - [`vis_sphere`]: per-point visibility spheres (mesh + membership)
//! - [`region`] / [`extract`]: implicit region intersection and manifold
//!   isosurface extraction
//! - [`volume`]: the per-edge genus test with midpoint edge splitting that
//!   assembles the polygon visibility volume
//! - [`oracle`]: brute-force visibility ground truth for validation
//! - [`config`] / [`pipeline`]: YAML mission configs and the end-to-end
//!   run used by the `visvol` binary

pub mod bvh;
pub mod config;
pub mod cubemap;
pub mod depth;
pub mod extract;
pub mod fixtures;
pub mod io;
pub mod math;
pub mod mesh;
pub mod oracle;
pub mod pipeline;
pub mod polygon;
pub mod region;
pub mod rng;
pub mod vis_sphere;
pub mod volume;

pub use bvh::{Bvh, Ray, Scene};
pub use math::Vec3;
pub use mesh::{Aabb, TriangleMesh};
pub use region::{ExtractionGrid, ImplicitRegion};
