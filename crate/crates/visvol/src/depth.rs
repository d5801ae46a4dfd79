//! Omnidirectional depth fields: the per-direction maximum visible range
//! around a point, sampled on an equirectangular (azimuth x polar) grid.
//!
//! Cell (i, j) looks along φ = (i+0.5)·2π/n_phi, θ = (j+0.5)·π/n_theta with
//! direction (sinθ cosφ, sinθ sinφ, cosθ). Values are clamped to
//! (0, d_max]; a cell with no geometry within range holds exactly d_max.

use crate::bvh::{Ray, Scene};
use crate::math::Vec3;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DepthError {
    #[error("invalid angular resolution {n_phi}x{n_theta} (need n_phi >= 4, n_theta >= 2)")]
    InvalidResolution { n_phi: usize, n_theta: usize },
    #[error("invalid cubemap face resolution {face_res} (need >= 8)")]
    InvalidFaceRes { face_res: usize },
    #[error("d_max must be positive, got {0}")]
    InvalidRange(f64),
}

/// (cos φ_i, sin φ_i) for each azimuth cell center. When n_phi is a
/// multiple of 4 the table is built from the first quadrant by exact 90°
/// rotation, so grids aligned with quarter turns permute bit-exactly.
pub fn azimuth_table(n_phi: usize) -> Vec<(f64, f64)> {
    let step = std::f64::consts::TAU / n_phi as f64;
    let mut table = Vec::with_capacity(n_phi);
    if n_phi.is_multiple_of(4) {
        let quarter = n_phi / 4;
        for i in 0..quarter {
            let phi = (i as f64 + 0.5) * step;
            table.push((phi.cos(), phi.sin()));
        }
        for k in 1..4 {
            for i in 0..quarter {
                let (c, s) = table[(k - 1) * quarter + i];
                table.push((-s, c));
            }
        }
    } else {
        for i in 0..n_phi {
            let phi = (i as f64 + 0.5) * step;
            table.push((phi.cos(), phi.sin()));
        }
    }
    table
}

/// (sin θ_j, cos θ_j) for each polar cell center, θ from the +z pole.
pub fn polar_table(n_theta: usize) -> Vec<(f64, f64)> {
    let step = std::f64::consts::PI / n_theta as f64;
    (0..n_theta)
        .map(|j| {
            let theta = (j as f64 + 0.5) * step;
            (theta.sin(), theta.cos())
        })
        .collect()
}

#[inline]
fn direction_from(azimuth: (f64, f64), polar: (f64, f64)) -> Vec3 {
    let (cos_phi, sin_phi) = azimuth;
    let (sin_theta, cos_theta) = polar;
    Vec3::new(sin_theta * cos_phi, sin_theta * sin_phi, cos_theta)
}

/// Angular grid dimensions for a depth sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AngularGrid {
    pub n_phi: usize,
    pub n_theta: usize,
}

impl AngularGrid {
    pub fn new(n_phi: usize, n_theta: usize) -> Result<AngularGrid, DepthError> {
        if n_phi < 4 || n_theta < 2 {
            return Err(DepthError::InvalidResolution { n_phi, n_theta });
        }
        Ok(AngularGrid { n_phi, n_theta })
    }

    /// Largest angular cell extent in radians.
    pub fn max_cell_angle(&self) -> f64 {
        (std::f64::consts::TAU / self.n_phi as f64).max(std::f64::consts::PI / self.n_theta as f64)
    }
}

/// Range-clamped omnidirectional depth around a center point.
#[derive(Debug, Clone)]
pub struct DepthSphere {
    center: Vec3,
    d_max: f64,
    n_phi: usize,
    n_theta: usize,
    /// row-major, θ rows: depth[j * n_phi + i]
    depth: Vec<f64>,
}

impl DepthSphere {
    /// Builds from a per-cell depth function; values are clamped into
    /// (0, d_max].
    pub fn from_fn(
        center: Vec3,
        grid: AngularGrid,
        d_max: f64,
        f: impl Fn(usize, usize, Vec3) -> f64 + Sync,
    ) -> Result<DepthSphere, DepthError> {
        if d_max <= 0.0 || d_max.is_nan() {
            return Err(DepthError::InvalidRange(d_max));
        }
        let azimuth = azimuth_table(grid.n_phi);
        let polar = polar_table(grid.n_theta);
        let mut depth = vec![0.0f64; grid.n_phi * grid.n_theta];
        depth
            .par_chunks_mut(grid.n_phi)
            .enumerate()
            .for_each(|(j, row)| {
                for (i, cell) in row.iter_mut().enumerate() {
                    let dir = direction_from(azimuth[i], polar[j]);
                    let v = f(i, j, dir);
                    *cell = v.min(d_max).max(f64::MIN_POSITIVE);
                }
            });
        Ok(DepthSphere { center, d_max, n_phi: grid.n_phi, n_theta: grid.n_theta, depth })
    }

    pub fn uniform(center: Vec3, grid: AngularGrid, d_max: f64, value: f64) -> DepthSphere {
        DepthSphere::from_fn(center, grid, d_max, |_, _, _| value).expect("valid grid")
    }

    /// Reference backend: one first-hit ray per cell with t_min = eps.
    /// Cells with no hit within d_max hold exactly d_max.
    pub fn from_raycast(
        scene: &Scene,
        center: Vec3,
        grid: AngularGrid,
        d_max: f64,
    ) -> Result<DepthSphere, DepthError> {
        if d_max <= 0.0 || d_max.is_nan() {
            return Err(DepthError::InvalidRange(d_max));
        }
        let eps = scene.eps().min(d_max / 2.0);
        DepthSphere::from_fn(center, grid, d_max, |_, _, dir| {
            let t_min = if eps > 0.0 { eps } else { f64::MIN_POSITIVE };
            let ray = Ray::new(center, dir, t_min, d_max);
            match scene.first_hit(&ray) {
                Some(hit) => hit.t,
                None => d_max,
            }
        })
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn n_phi(&self) -> usize {
        self.n_phi
    }

    pub fn n_theta(&self) -> usize {
        self.n_theta
    }

    pub fn grid(&self) -> AngularGrid {
        AngularGrid { n_phi: self.n_phi, n_theta: self.n_theta }
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.depth[j * self.n_phi + i]
    }

    pub fn values(&self) -> &[f64] {
        &self.depth
    }

    /// Nearest-cell depth lookup for a unit direction. Azimuth wraps, the
    /// polar index clamps to the pole rows.
    pub fn sample(&self, dir: Vec3) -> f64 {
        debug_assert!((dir.length() - 1.0).abs() < 1e-6);
        let phi = dir.y.atan2(dir.x).rem_euclid(std::f64::consts::TAU);
        let theta = dir.z.clamp(-1.0, 1.0).acos();
        let phi_step = std::f64::consts::TAU / self.n_phi as f64;
        let theta_step = std::f64::consts::PI / self.n_theta as f64;
        let i = (phi / phi_step - 0.5).round().rem_euclid(self.n_phi as f64) as usize % self.n_phi;
        let j = ((theta / theta_step - 0.5).round().max(0.0) as usize).min(self.n_theta - 1);
        self.value(i, j)
    }
}

/// Debug export: raw 32-bit little-endian float grid (row-major, θ rows)
/// plus a small JSON header describing it.
pub fn export_depth_sphere(
    ds: &DepthSphere,
    grid_path: impl AsRef<Path>,
    header_path: impl AsRef<Path>,
) -> std::io::Result<()> {
    let mut bytes = Vec::with_capacity(ds.depth.len() * 4);
    for &v in &ds.depth {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    std::fs::File::create(grid_path)?.write_all(&bytes)?;

    #[derive(Serialize)]
    struct Header {
        center: [f64; 3],
        d_max: f64,
        n_phi: usize,
        n_theta: usize,
        layout: &'static str,
    }
    let header = Header {
        center: ds.center.to_array(),
        d_max: ds.d_max,
        n_phi: ds.n_phi,
        n_theta: ds.n_theta,
        layout: "f32le row-major theta rows",
    };
    std::fs::write(header_path, serde_json::to_string_pretty(&header)?)?;
    Ok(())
}
