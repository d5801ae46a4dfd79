//! Implicit region algebra: point-membership predicates composed by
//! intersection, and the sampling grid used to extract their boundaries.
//!
//! Keeping regions implicit sidesteps mesh-mesh boolean robustness
//! entirely; the only meshing happens once, at extraction time, so results
//! are grid-resolution-accurate by construction.

use crate::depth::DepthSphere;
use crate::math::Vec3;
use crate::mesh::Aabb;
use crate::vis_sphere::contains_point;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RegionError {
    #[error("cannot intersect an empty region list")]
    EmptyIntersection,
    #[error("altitude band has z_lo {z_lo} >= z_hi {z_hi}")]
    InvertedBand { z_lo: f64, z_hi: f64 },
    #[error("extraction grid needs at least 2 cells per axis, got {0}x{1}x{2}")]
    GridTooCoarse(usize, usize, usize),
    #[error("extraction grid bounds are degenerate")]
    DegenerateBounds,
}

/// Composable membership predicate. Evaluation is pure and deterministic.
#[derive(Debug, Clone)]
pub enum ImplicitRegion {
    /// Star-shaped visibility region of a depth sphere's center.
    VisibilitySphere(Arc<DepthSphere>),
    /// Closed axis-aligned box.
    Box(Aabb),
    /// Closed altitude slab z_lo <= z <= z_hi.
    AltitudeBand { z_lo: f64, z_hi: f64 },
    /// Logical AND of the children.
    Intersection(Vec<ImplicitRegion>),
}

impl ImplicitRegion {
    pub fn contains(&self, p: Vec3) -> bool {
        match self {
            ImplicitRegion::VisibilitySphere(ds) => contains_point(ds, p),
            ImplicitRegion::Box(aabb) => aabb.contains(p),
            ImplicitRegion::AltitudeBand { z_lo, z_hi } => p.z >= *z_lo && p.z <= *z_hi,
            ImplicitRegion::Intersection(children) => children.iter().all(|c| c.contains(p)),
        }
    }
}

pub fn box_region(aabb: Aabb) -> ImplicitRegion {
    ImplicitRegion::Box(aabb)
}

pub fn altitude_band(z_lo: f64, z_hi: f64) -> Result<ImplicitRegion, RegionError> {
    if z_lo >= z_hi {
        return Err(RegionError::InvertedBand { z_lo, z_hi });
    }
    Ok(ImplicitRegion::AltitudeBand { z_lo, z_hi })
}

/// AND of the given regions; nested intersections are flattened.
pub fn intersect_regions(regions: Vec<ImplicitRegion>) -> Result<ImplicitRegion, RegionError> {
    if regions.is_empty() {
        return Err(RegionError::EmptyIntersection);
    }
    let mut flat = Vec::with_capacity(regions.len());
    for r in regions {
        match r {
            ImplicitRegion::Intersection(children) => flat.extend(children),
            other => flat.push(other),
        }
    }
    if flat.len() == 1 {
        Ok(flat.pop().unwrap())
    } else {
        Ok(ImplicitRegion::Intersection(flat))
    }
}

/// Uniform sampling lattice over `bounds` with `resolution` cells per axis.
#[derive(Debug, Clone)]
pub struct ExtractionGrid {
    bounds: Aabb,
    resolution: [usize; 3],
}

impl ExtractionGrid {
    pub fn new(bounds: Aabb, resolution: [usize; 3]) -> Result<ExtractionGrid, RegionError> {
        let [nx, ny, nz] = resolution;
        if nx < 2 || ny < 2 || nz < 2 {
            return Err(RegionError::GridTooCoarse(nx, ny, nz));
        }
        let e = bounds.extent();
        if !(e.x > 0.0 && e.y > 0.0 && e.z > 0.0) {
            return Err(RegionError::DegenerateBounds);
        }
        Ok(ExtractionGrid { bounds, resolution })
    }

    /// Default pipeline grid: the bounding cube of `aabb` expanded by
    /// `pad_cells` cells on every side, so the surface never touches the
    /// lattice boundary. With a cubic target and uniform resolution the
    /// cells are cubes.
    pub fn cube_padded(aabb: &Aabb, resolution: usize, pad_cells: usize) -> Result<ExtractionGrid, RegionError> {
        ExtractionGrid::cube_padded_axes(aabb, [resolution; 3], pad_cells)
    }

    /// As [`ExtractionGrid::cube_padded`] with per-axis resolutions.
    pub fn cube_padded_axes(
        aabb: &Aabb,
        resolution: [usize; 3],
        pad_cells: usize,
    ) -> Result<ExtractionGrid, RegionError> {
        for n in resolution {
            if n <= 2 * pad_cells + 1 {
                return Err(RegionError::GridTooCoarse(resolution[0], resolution[1], resolution[2]));
            }
        }
        let cube = aabb.bounding_cube();
        let side = cube.extent().x;
        let side = if side > 0.0 { side } else { 1.0 };
        let mut min = cube.min;
        let mut max = cube.max;
        let pads = [
            side / (resolution[0] - 2 * pad_cells) as f64 * pad_cells as f64,
            side / (resolution[1] - 2 * pad_cells) as f64 * pad_cells as f64,
            side / (resolution[2] - 2 * pad_cells) as f64 * pad_cells as f64,
        ];
        min.x -= pads[0];
        max.x += pads[0];
        min.y -= pads[1];
        max.y += pads[1];
        min.z -= pads[2];
        max.z += pads[2];
        ExtractionGrid::new(Aabb::new(min, max), resolution)
    }

    pub fn bounds(&self) -> &Aabb {
        &self.bounds
    }

    pub fn resolution(&self) -> [usize; 3] {
        self.resolution
    }

    pub fn cell_size(&self) -> Vec3 {
        let e = self.bounds.extent();
        Vec3::new(
            e.x / self.resolution[0] as f64,
            e.y / self.resolution[1] as f64,
            e.z / self.resolution[2] as f64,
        )
    }

    pub fn max_cell_size(&self) -> f64 {
        let c = self.cell_size();
        c.x.max(c.y).max(c.z)
    }

    /// Lattice corner position, indices in [0, resolution].
    #[inline]
    pub fn corner(&self, ix: usize, iy: usize, iz: usize) -> Vec3 {
        let c = self.cell_size();
        Vec3::new(
            self.bounds.min.x + c.x * ix as f64,
            self.bounds.min.y + c.y * iy as f64,
            self.bounds.min.z + c.z * iz as f64,
        )
    }
}
