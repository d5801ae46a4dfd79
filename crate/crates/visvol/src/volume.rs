//! Polygon visibility volume driver.
//!
//! Starts from "all space visible" (the extraction-grid box), walks the
//! polygon edge worklist in FIFO order, computes the two endpoint
//! visibility spheres of each edge (memoized per vertex; adjacent edges
//! share endpoints), and tests the topology of their intersection. A
//! genus-0 single-component result accepts the pair into the running
//! conjunction; anything else splits the edge at its midpoint and requeues
//! both halves. Splitting stops at a depth/length guard, accepting the
//! pair with an "unresolved topology" warning so runs always terminate.

use crate::bvh::Scene;
use crate::cubemap::{compute_depth_cubemap, cubemap_to_sphere};
use crate::depth::{AngularGrid, DepthError, DepthSphere};
use crate::extract::{extract_surface, region_topology, topology_of};
use crate::math::Vec3;
use crate::mesh::{Aabb, TriangleMesh};
use crate::oracle::AgreementReport;
use crate::polygon::{split_edge, EdgeTask, PolygonTarget};
use crate::region::{box_region, intersect_regions, ExtractionGrid, ImplicitRegion, RegionError};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;
use std::time::Instant;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VolumeError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("polygon vertex {vertex} lies outside the scene bounding box")]
    PolygonOutsideScene { vertex: usize },
    #[error(transparent)]
    Depth(#[from] DepthError),
    #[error(transparent)]
    Region(#[from] RegionError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Backend {
    #[default]
    Raycast,
    Cubemap,
}

/// Knobs for a visibility-volume run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VolumeParams {
    pub d_max: f64,
    pub n_phi: usize,
    pub n_theta: usize,
    pub resolution: [usize; 3],
    pub backend: Backend,
    pub face_res: usize,
    pub max_split_depth: u32,
    pub grid_pad_cells: usize,
}

impl VolumeParams {
    pub fn new(d_max: f64) -> VolumeParams {
        VolumeParams {
            d_max,
            n_phi: 160,
            n_theta: 80,
            resolution: [96, 96, 96],
            backend: Backend::Raycast,
            face_res: 256,
            max_split_depth: 6,
            grid_pad_cells: 2,
        }
    }

    fn validate(&self) -> Result<AngularGrid, VolumeError> {
        if self.d_max <= 0.0 || self.d_max.is_nan() {
            return Err(VolumeError::InvalidParams(format!("d_max must be positive, got {}", self.d_max)));
        }
        if self.backend == Backend::Cubemap && self.face_res < 8 {
            return Err(VolumeError::InvalidParams(format!(
                "face_res must be at least 8, got {}",
                self.face_res
            )));
        }
        AngularGrid::new(self.n_phi, self.n_theta).map_err(VolumeError::Depth)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EdgeRecord {
    pub a: Vec3,
    pub b: Vec3,
    pub depth: u32,
    pub chi: i64,
    pub components: usize,
    pub split: bool,
    pub unresolved: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GridSummary {
    pub min: Vec3,
    pub max: Vec3,
    pub resolution: [usize; 3],
    pub cell_size: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeshSummary {
    pub vertices: usize,
    pub triangles: usize,
    pub chi: i64,
    pub components: usize,
    pub watertight: bool,
    pub empty: bool,
}

impl MeshSummary {
    pub fn of(mesh: &TriangleMesh) -> MeshSummary {
        let topo = topology_of(mesh);
        MeshSummary {
            vertices: mesh.euler_characteristic().vertices,
            triangles: mesh.triangle_count(),
            chi: topo.chi,
            components: topo.components,
            watertight: mesh.is_watertight(),
            empty: mesh.triangle_count() == 0,
        }
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Timings {
    pub spheres_s: f64,
    pub topology_s: f64,
    pub extraction_s: f64,
    pub total_s: f64,
}

/// Machine-readable record of one visibility-volume run. Everything except
/// `timings` is deterministic for a given config and seed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub backend: Backend,
    pub d_max: f64,
    pub n_phi: usize,
    pub n_theta: usize,
    pub polygon: Vec<Vec3>,
    pub grid: GridSummary,
    pub edges: Vec<EdgeRecord>,
    pub splits: usize,
    pub spheres_computed: usize,
    pub sphere_cache_hits: usize,
    pub final_volume: MeshSummary,
    pub navigable: Option<MeshSummary>,
    pub validation: Option<AgreementReport>,
    pub warnings: Vec<String>,
    pub outputs: Vec<String>,
    pub timings: Timings,
}

/// Result of `compute_visibility_volume`.
#[derive(Debug)]
pub struct VisibilityVolume {
    pub region: ImplicitRegion,
    pub mesh: TriangleMesh,
    pub grid: ExtractionGrid,
    /// visibility sphere of each original polygon vertex, in order
    pub vertex_spheres: Vec<Arc<DepthSphere>>,
    pub report: RunReport,
}

fn ball_aabb(center: Vec3, r: f64) -> Aabb {
    Aabb::new(center - Vec3::splat(r), center + Vec3::splat(r))
}

/// Intersection of the per-vertex range-ball bounding boxes: the final
/// volume cannot escape it. Falls back to the union (with a warning) when
/// the balls do not mutually intersect, which already proves the volume
/// is empty.
fn volume_bounds(vertices: &[Vec3], d_max: f64, warnings: &mut Vec<String>) -> Aabb {
    let mut inter = ball_aabb(vertices[0], d_max);
    let mut union = inter;
    let mut ok = true;
    for &v in &vertices[1..] {
        let b = ball_aabb(v, d_max);
        union = union.union(&b);
        match inter.intersection(&b) {
            Some(next) => inter = next,
            None => ok = false,
        }
    }
    if ok {
        inter
    } else {
        warnings.push(
            "vertex range balls do not mutually intersect; the visibility volume is empty".into(),
        );
        union
    }
}

/// Depth sphere of one viewpoint via the configured backend.
pub fn compute_vertex_sphere(
    scene: &Scene,
    center: Vec3,
    params: &VolumeParams,
) -> Result<DepthSphere, DepthError> {
    let grid = AngularGrid::new(params.n_phi, params.n_theta)?;
    match params.backend {
        Backend::Raycast => DepthSphere::from_raycast(scene, center, grid, params.d_max),
        Backend::Cubemap => {
            let cm = compute_depth_cubemap(scene.mesh(), center, params.face_res, params.d_max, scene.eps())?;
            cubemap_to_sphere(&cm, grid.n_phi, grid.n_theta)
        }
    }
}

/// Runs the edge-split visibility algorithm and extracts the final volume.
pub fn compute_visibility_volume(
    polygon: &PolygonTarget,
    scene: &Scene,
    params: &VolumeParams,
) -> Result<VisibilityVolume, VolumeError> {
    let t_start = Instant::now();
    params.validate()?;

    if let Some(scene_bb) = scene.aabb() {
        for (i, &v) in polygon.vertices().iter().enumerate() {
            if !scene_bb.contains(v) {
                return Err(VolumeError::PolygonOutsideScene { vertex: i });
            }
        }
    }

    let mut warnings = Vec::new();
    let bounds = volume_bounds(polygon.vertices(), params.d_max, &mut warnings);
    let grid = ExtractionGrid::cube_padded_axes(&bounds, params.resolution, params.grid_pad_cells)?;
    let min_sub_len = 2.0 * grid.max_cell_size();

    let mut timings = Timings::default();
    let mut cache: HashMap<[u64; 3], Arc<DepthSphere>> = HashMap::new();
    let mut spheres_computed = 0usize;
    let mut cache_hits = 0usize;
    let mut sphere_of = |center: Vec3,
                         spheres_computed: &mut usize,
                         cache_hits: &mut usize,
                         timings: &mut Timings|
     -> Result<Arc<DepthSphere>, DepthError> {
        if let Some(s) = cache.get(&center.to_bits()) {
            *cache_hits += 1;
            return Ok(Arc::clone(s));
        }
        let t = Instant::now();
        let sphere = Arc::new(compute_vertex_sphere(scene, center, params)?);
        timings.spheres_s += t.elapsed().as_secs_f64();
        *spheres_computed += 1;
        cache.insert(center.to_bits(), Arc::clone(&sphere));
        Ok(sphere)
    };

    let mut queue: VecDeque<EdgeTask> =
        polygon.edges().map(|(a, b)| EdgeTask::new(a, b, 0)).collect();
    let mut records: Vec<EdgeRecord> = Vec::new();
    let mut splits = 0usize;
    // accepted endpoint spheres, deduplicated, in acceptance order
    let mut accepted: Vec<Arc<DepthSphere>> = Vec::new();
    let mut accepted_keys: Vec<[u64; 3]> = Vec::new();

    while let Some(task) = queue.pop_front() {
        let sphere_a = sphere_of(task.a, &mut spheres_computed, &mut cache_hits, &mut timings)?;
        let sphere_b = sphere_of(task.b, &mut spheres_computed, &mut cache_hits, &mut timings)?;
        let pair = ImplicitRegion::Intersection(vec![
            ImplicitRegion::VisibilitySphere(Arc::clone(&sphere_a)),
            ImplicitRegion::VisibilitySphere(Arc::clone(&sphere_b)),
        ]);

        // bound the topology grid to where the pair can live
        let t = Instant::now();
        let topo = match ball_aabb(task.a, params.d_max).intersection(&ball_aabb(task.b, params.d_max)) {
            Some(pair_bounds) => {
                let pair_grid =
                    ExtractionGrid::cube_padded_axes(&pair_bounds, params.resolution, params.grid_pad_cells)?;
                region_topology(&pair, &pair_grid)
            }
            None => crate::extract::RegionTopology { chi: 0, components: 0, faces: 0 },
        };
        timings.topology_s += t.elapsed().as_secs_f64();

        let equivalent = topo.chi == 2 && topo.components == 1;
        let mut record = EdgeRecord {
            a: task.a,
            b: task.b,
            depth: task.depth,
            chi: topo.chi,
            components: topo.components,
            split: false,
            unresolved: false,
        };

        if !equivalent {
            let can_split = task.depth < params.max_split_depth;
            match can_split.then(|| split_edge(&task, min_sub_len)).flatten() {
                Some((left, right)) => {
                    record.split = true;
                    splits += 1;
                    queue.push_back(left);
                    queue.push_back(right);
                    records.push(record);
                    continue;
                }
                None => {
                    record.unresolved = true;
                    warnings.push(format!(
                        "unresolved topology (chi={}, components={}) for edge ({}, {}, {})-({}, {}, {}) \
                         at depth {}; accepting its visibility intersection anyway",
                        topo.chi,
                        topo.components,
                        task.a.x,
                        task.a.y,
                        task.a.z,
                        task.b.x,
                        task.b.y,
                        task.b.z,
                        task.depth
                    ));
                }
            }
        }

        for (key, sphere) in [(task.a.to_bits(), &sphere_a), (task.b.to_bits(), &sphere_b)] {
            if !accepted_keys.contains(&key) {
                accepted_keys.push(key);
                accepted.push(Arc::clone(sphere));
            }
        }
        records.push(record);
    }

    let mut parts: Vec<ImplicitRegion> = Vec::with_capacity(accepted.len() + 1);
    parts.push(box_region(*grid.bounds()));
    parts.extend(accepted.into_iter().map(ImplicitRegion::VisibilitySphere));
    let region = intersect_regions(parts)?;

    let t = Instant::now();
    let mesh = extract_surface(&region, &grid);
    timings.extraction_s += t.elapsed().as_secs_f64();

    let final_volume = MeshSummary::of(&mesh);
    if final_volume.empty {
        warnings.push("visibility volume is empty".into());
    }

    let vertex_spheres = polygon
        .vertices()
        .iter()
        .map(|v| Arc::clone(cache.get(&v.to_bits()).expect("every polygon vertex was processed")))
        .collect();

    timings.total_s = t_start.elapsed().as_secs_f64();
    let cell = grid.cell_size();
    let report = RunReport {
        schema_version: 1,
        backend: params.backend,
        d_max: params.d_max,
        n_phi: params.n_phi,
        n_theta: params.n_theta,
        polygon: polygon.vertices().to_vec(),
        grid: GridSummary {
            min: grid.bounds().min,
            max: grid.bounds().max,
            resolution: grid.resolution(),
            cell_size: cell.x.max(cell.y).max(cell.z),
        },
        edges: records,
        splits,
        spheres_computed,
        sphere_cache_hits: cache_hits,
        final_volume,
        navigable: None,
        validation: None,
        warnings,
        outputs: Vec::new(),
        timings,
    };

    Ok(VisibilityVolume { region, mesh, grid, vertex_spheres, report })
}

/// Intersects the volume with navigation constraint regions and
/// re-extracts the boundary. An empty result is allowed; the caller
/// reports it.
pub fn apply_nav_constraints(
    region: &ImplicitRegion,
    constraints: &[ImplicitRegion],
    grid: &ExtractionGrid,
) -> Result<(ImplicitRegion, TriangleMesh), RegionError> {
    let mut parts = vec![region.clone()];
    parts.extend_from_slice(constraints);
    let combined = intersect_regions(parts)?;
    let mesh = extract_surface(&combined, grid);
    Ok((combined, mesh))
}
