//! Six-face depth cubemap computed by software rasterization: the
//! accelerated backend for omnidirectional depth.
//!
//! Each face is a 90° frustum depth image. Triangles are clipped in camera
//! space, projected, and rasterized with reciprocal-depth interpolation so
//! precision holds across large scenes; stored values are metric radial
//! distances from the center (planar depth times the view-vector length
//! factor), never raw planar z. Skipping that conversion is the classic
//! cubemap bug and breaks agreement with the ray-cast backend.

use crate::depth::{AngularGrid, DepthError, DepthSphere};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CubeFace {
    PosX,
    NegX,
    PosY,
    NegY,
    PosZ,
    NegZ,
}

impl CubeFace {
    pub const ALL: [CubeFace; 6] =
        [CubeFace::PosX, CubeFace::NegX, CubeFace::PosY, CubeFace::NegY, CubeFace::PosZ, CubeFace::NegZ];

    pub fn index(self) -> usize {
        match self {
            CubeFace::PosX => 0,
            CubeFace::NegX => 1,
            CubeFace::PosY => 2,
            CubeFace::NegY => 3,
            CubeFace::PosZ => 4,
            CubeFace::NegZ => 5,
        }
    }

    /// (right, up, forward) camera basis for the face.
    pub fn basis(self) -> (Vec3, Vec3, Vec3) {
        match self {
            CubeFace::PosX => (Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(1.0, 0.0, 0.0)),
            CubeFace::NegX => (Vec3::new(0.0, -1.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(-1.0, 0.0, 0.0)),
            CubeFace::PosY => (Vec3::new(-1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, 1.0, 0.0)),
            CubeFace::NegY => (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.0, -1.0, 0.0)),
            CubeFace::PosZ => (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
            CubeFace::NegZ => (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, -1.0, 0.0), Vec3::new(0.0, 0.0, -1.0)),
        }
    }

    /// Face whose axis dominates the direction (ties resolved x, y, z).
    pub fn from_direction(dir: Vec3) -> CubeFace {
        match dir.dominant_axis() {
            0 => {
                if dir.x >= 0.0 {
                    CubeFace::PosX
                } else {
                    CubeFace::NegX
                }
            }
            1 => {
                if dir.y >= 0.0 {
                    CubeFace::PosY
                } else {
                    CubeFace::NegY
                }
            }
            _ => {
                if dir.z >= 0.0 {
                    CubeFace::PosZ
                } else {
                    CubeFace::NegZ
                }
            }
        }
    }
}

/// Radial-distance cubemap around a center point. Pixels with no scene
/// coverage hold exactly d_max; covered pixels may exceed d_max (the
/// overall range clamp happens when resampling to a depth sphere).
#[derive(Debug, Clone)]
pub struct DepthCubemap {
    center: Vec3,
    face_res: usize,
    d_max: f64,
    faces: [Vec<f64>; 6],
}

impl DepthCubemap {
    /// Uniform per-face values, mainly for tests and debugging.
    pub fn constant_faces(center: Vec3, face_res: usize, d_max: f64, values: [f64; 6]) -> DepthCubemap {
        let faces = values.map(|v| vec![v; face_res * face_res]);
        DepthCubemap { center, face_res, d_max, faces }
    }

    pub fn center(&self) -> Vec3 {
        self.center
    }

    pub fn face_res(&self) -> usize {
        self.face_res
    }

    pub fn d_max(&self) -> f64 {
        self.d_max
    }

    pub fn face(&self, face: CubeFace) -> &[f64] {
        &self.faces[face.index()]
    }

    pub fn value(&self, face: CubeFace, px: usize, py: usize) -> f64 {
        self.faces[face.index()][py * self.face_res + px]
    }

    /// Nearest-pixel radial distance along a direction.
    pub fn sample(&self, dir: Vec3) -> f64 {
        let face = CubeFace::from_direction(dir);
        let (right, up, fwd) = face.basis();
        let z = dir.dot(fwd);
        let u = dir.dot(right) / z;
        let s = dir.dot(up) / z;
        let res = self.face_res;
        let px = (((u + 1.0) * 0.5 * res as f64).floor() as isize).clamp(0, res as isize - 1) as usize;
        let py = (((s + 1.0) * 0.5 * res as f64).floor() as isize).clamp(0, res as isize - 1) as usize;
        self.value(face, px, py)
    }
}

/// Clips a camera-space polygon against plane `n·p + offset >= 0`
/// (Sutherland-Hodgman).
fn clip_plane(poly: &mut Vec<Vec3>, scratch: &mut Vec<Vec3>, n: Vec3, offset: f64) {
    scratch.clear();
    let len = poly.len();
    for k in 0..len {
        let a = poly[k];
        let b = poly[(k + 1) % len];
        let da = n.dot(a) + offset;
        let db = n.dot(b) + offset;
        if da >= 0.0 {
            scratch.push(a);
        }
        if (da >= 0.0) != (db >= 0.0) {
            let t = da / (da - db);
            scratch.push(a + (b - a) * t);
        }
    }
    std::mem::swap(poly, scratch);
}

fn rasterize_face(
    mesh: &TriangleMesh,
    center: Vec3,
    face: CubeFace,
    face_res: usize,
    d_max: f64,
    near: f64,
) -> Vec<f64> {
    let (right, up, fwd) = face.basis();
    let res = face_res;
    // inverse-depth buffer: larger w = closer
    let mut inv_z = vec![0.0f64; res * res];

    let mut poly: Vec<Vec3> = Vec::with_capacity(8);
    let mut scratch: Vec<Vec3> = Vec::with_capacity(8);
    // modest guard band keeps projected coordinates bounded
    let guard = 1.05;

    for t in 0..mesh.triangle_count() {
        let pts = mesh.triangle_points(t);
        poly.clear();
        let mut any_in_front = false;
        for p in pts {
            let rel = p - center;
            let cam = Vec3::new(rel.dot(right), rel.dot(up), rel.dot(fwd));
            if cam.z >= near {
                any_in_front = true;
            }
            poly.push(cam);
        }
        if !any_in_front {
            continue;
        }
        // near plane z >= near, then the four side planes with guard band
        clip_plane(&mut poly, &mut scratch, Vec3::new(0.0, 0.0, 1.0), -near);
        clip_plane(&mut poly, &mut scratch, Vec3::new(-1.0, 0.0, guard), 0.0);
        clip_plane(&mut poly, &mut scratch, Vec3::new(1.0, 0.0, guard), 0.0);
        clip_plane(&mut poly, &mut scratch, Vec3::new(0.0, -1.0, guard), 0.0);
        clip_plane(&mut poly, &mut scratch, Vec3::new(0.0, 1.0, guard), 0.0);
        if poly.len() < 3 {
            continue;
        }
        // project: (u, s, 1/z)
        let projected: Vec<(f64, f64, f64)> = poly
            .iter()
            .map(|&cam| {
                let w = 1.0 / cam.z;
                (cam.x * w, cam.y * w, w)
            })
            .collect();
        for k in 1..projected.len() - 1 {
            raster_triangle(&mut inv_z, res, projected[0], projected[k], projected[k + 1], d_max);
        }
    }

    // resolve to radial distance
    let mut radial = vec![d_max; res * res];
    for py in 0..res {
        let s = ((py as f64 + 0.5) / res as f64) * 2.0 - 1.0;
        for px in 0..res {
            let w = inv_z[py * res + px];
            if w > 0.0 {
                let u = ((px as f64 + 0.5) / res as f64) * 2.0 - 1.0;
                let z = 1.0 / w;
                radial[py * res + px] = z * (u * u + s * s + 1.0).sqrt();
            }
        }
    }
    radial
}

fn raster_triangle(
    inv_z: &mut [f64],
    res: usize,
    v0: (f64, f64, f64),
    v1: (f64, f64, f64),
    v2: (f64, f64, f64),
    d_max: f64,
) {
    let area2 = (v1.0 - v0.0) * (v2.1 - v0.1) - (v1.1 - v0.1) * (v2.0 - v0.0);
    if area2.abs() < 1e-16 {
        return;
    }
    let min_u = v0.0.min(v1.0).min(v2.0);
    let max_u = v0.0.max(v1.0).max(v2.0);
    let min_s = v0.1.min(v1.1).min(v2.1);
    let max_s = v0.1.max(v1.1).max(v2.1);
    let to_px = |c: f64| ((c + 1.0) * 0.5 * res as f64 - 0.5).round() as isize;
    let px_lo = to_px(min_u).max(0) as usize;
    let px_hi = (to_px(max_u) + 1).min(res as isize - 1).max(-1);
    let py_lo = to_px(min_s).max(0) as usize;
    let py_hi = (to_px(max_s) + 1).min(res as isize - 1).max(-1);
    if px_hi < 0 || py_hi < 0 {
        return;
    }
    let inv_area = 1.0 / area2;
    let min_w = 1.0 / (d_max * 8.0); // ignore absurdly distant fragments
    for py in py_lo..=py_hi as usize {
        let s = ((py as f64 + 0.5) / res as f64) * 2.0 - 1.0;
        for px in px_lo..=px_hi as usize {
            let u = ((px as f64 + 0.5) / res as f64) * 2.0 - 1.0;
            // edge functions; inside when all share the sign of the area
            let e0 = (v2.0 - v1.0) * (s - v1.1) - (v2.1 - v1.1) * (u - v1.0);
            let e1 = (v0.0 - v2.0) * (s - v2.1) - (v0.1 - v2.1) * (u - v2.0);
            let e2 = (v1.0 - v0.0) * (s - v0.1) - (v1.1 - v0.1) * (u - v0.0);
            let inside = if area2 > 0.0 {
                e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0
            } else {
                e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0
            };
            if !inside {
                continue;
            }
            let l0 = e0 * inv_area;
            let l1 = e1 * inv_area;
            let l2 = e2 * inv_area;
            let w = l0 * v0.2 + l1 * v1.2 + l2 * v2.2;
            let slot = &mut inv_z[py * res + px];
            if w > *slot && w > min_w {
                *slot = w;
            }
        }
    }
}

/// Rasterizes the scene into all six faces. `near` plays the same role as
/// the ray-cast backend's t_min epsilon.
pub fn compute_depth_cubemap(
    mesh: &TriangleMesh,
    center: Vec3,
    face_res: usize,
    d_max: f64,
    near: f64,
) -> Result<DepthCubemap, DepthError> {
    if face_res < 8 {
        return Err(DepthError::InvalidFaceRes { face_res });
    }
    if d_max <= 0.0 || d_max.is_nan() {
        return Err(DepthError::InvalidRange(d_max));
    }
    let near = near.max(d_max * 1e-9);
    let face_vec: Vec<Vec<f64>> = CubeFace::ALL
        .par_iter()
        .map(|&face| rasterize_face(mesh, center, face, face_res, d_max, near))
        .collect();
    let mut faces = face_vec.into_iter();
    let faces = [
        faces.next().unwrap(),
        faces.next().unwrap(),
        faces.next().unwrap(),
        faces.next().unwrap(),
        faces.next().unwrap(),
        faces.next().unwrap(),
    ];
    Ok(DepthCubemap { center, face_res, d_max, faces })
}

/// Resamples a cubemap to the (φ, θ) parameterization by nearest-pixel
/// lookup on the dominant-axis face, clamped into (0, d_max].
pub fn cubemap_to_sphere(cm: &DepthCubemap, n_phi: usize, n_theta: usize) -> Result<DepthSphere, DepthError> {
    let grid = AngularGrid::new(n_phi, n_theta)?;
    DepthSphere::from_fn(cm.center, grid, cm.d_max, |_, _, dir| cm.sample(dir))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::Scene;
    use crate::fixtures::{box_mesh, ground_plane, merge};
    use crate::mesh::Aabb;

    #[test]
    fn face_res_validation() {
        let empty = TriangleMesh::empty();
        assert!(compute_depth_cubemap(&empty, Vec3::ZERO, 4, 10.0, 1e-4).is_err());
    }

    #[test]
    fn empty_scene_all_faces_d_max() {
        let cm = compute_depth_cubemap(&TriangleMesh::empty(), Vec3::ZERO, 8, 12.5, 1e-4).unwrap();
        for face in CubeFace::ALL {
            assert!(cm.face(face).iter().all(|&v| v == 12.5));
        }
    }

    #[test]
    fn wall_matches_plane_distance_per_pixel() {
        let w = 5.0;
        // wall at x = w large enough to fill the +x frustum
        let wall = box_mesh(
            Aabb::new(Vec3::new(w, -60.0, -60.0), Vec3::new(w + 1.0, 60.0, 60.0)),
            1,
        );
        let d_max = 40.0;
        let res = 32;
        let cm = compute_depth_cubemap(&wall, Vec3::ZERO, res, d_max, 1e-4).unwrap();
        for py in 0..res {
            let s = ((py as f64 + 0.5) / res as f64) * 2.0 - 1.0;
            for px in 0..res {
                let u = ((px as f64 + 0.5) / res as f64) * 2.0 - 1.0;
                let expect = w * (u * u + s * s + 1.0).sqrt();
                let got = cm.value(CubeFace::PosX, px, py);
                assert!(
                    (got - expect).abs() < 1e-9 * expect,
                    "pixel ({px},{py}): got {got}, expected {expect}"
                );
            }
        }
        // center pixel is approximately the perpendicular distance, corner
        // pixels carry nearly the sqrt(3) view-vector factor
        let mid = res / 2;
        assert!((cm.value(CubeFace::PosX, mid, mid) - w).abs() < 0.02 * w);
        let corner = cm.value(CubeFace::PosX, 0, 0);
        assert!(corner > 1.6 * w && corner < 3.0_f64.sqrt() * w * 1.01);
    }

    #[test]
    fn half_covered_face() {
        // one triangle covering (roughly) the lower-left half of the +z face
        let big = 100.0;
        let h = 10.0;
        let tri = TriangleMesh::new(
            vec![
                Vec3::new(-big, -big, h),
                Vec3::new(big, -big, h),
                Vec3::new(-big, big, h),
            ],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let d_max = 50.0;
        let res = 16;
        let cm = compute_depth_cubemap(&tri, Vec3::ZERO, res, d_max, 1e-4).unwrap();
        let mut covered = 0;
        let mut uncovered = 0;
        for py in 0..res {
            for px in 0..res {
                let v = cm.value(CubeFace::PosZ, px, py);
                if v < d_max {
                    covered += 1;
                } else {
                    assert_eq!(v, d_max);
                    uncovered += 1;
                }
            }
        }
        // diagonal split: about half the pixels each way
        assert!(covered > res * res / 3, "covered {covered}");
        assert!(uncovered > res * res / 3, "uncovered {uncovered}");
    }

    #[test]
    fn constant_cubemap_resamples_to_constant_sphere() {
        let cm = DepthCubemap::constant_faces(Vec3::ZERO, 8, 20.0, [20.0; 6]);
        let ds = cubemap_to_sphere(&cm, 16, 8).unwrap();
        assert!(ds.values().iter().all(|&v| v == 20.0));
    }

    #[test]
    fn minimal_grid_maps_to_dominant_axis_faces() {
        // distinct value per face reveals which face each cell sampled
        let cm = DepthCubemap::constant_faces(Vec3::ZERO, 8, 100.0, [1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let ds = cubemap_to_sphere(&cm, 4, 2).unwrap();
        // at θ = 45°/135°, |z| = cos(45°) ≈ 0.707 dominates every cell
        for j in 0..2 {
            for i in 0..4 {
                let expect = if j == 0 { 5.0 } else { 6.0 };
                assert_eq!(ds.value(i, j), expect, "cell ({i},{j})");
            }
        }
    }

    #[test]
    fn backends_agree_on_wall_scene() {
        let scene_mesh = merge(&[
            ground_plane(60.0, 60.0, 8, 8),
            box_mesh(Aabb::new(Vec3::new(8.0, -20.0, 0.0), Vec3::new(12.0, 20.0, 15.0)), 2),
        ]);
        let center = Vec3::new(0.0, 0.0, 3.0);
        let d_max = 30.0;
        let (n_phi, n_theta) = (32, 16);
        let scene = Scene::new(scene_mesh.clone());
        let ray = DepthSphere::from_raycast(&scene, center, AngularGrid::new(n_phi, n_theta).unwrap(), d_max)
            .unwrap();
        let cm = compute_depth_cubemap(&scene_mesh, center, 128, d_max, scene.eps()).unwrap();
        let raster = cubemap_to_sphere(&cm, n_phi, n_theta).unwrap();

        let cell = AngularGrid::new(n_phi, n_theta).unwrap().max_cell_angle();
        let bound = d_max * cell.tan();
        let mut ok = 0;
        let total = n_phi * n_theta;
        for j in 0..n_theta {
            for i in 0..n_phi {
                if (ray.value(i, j) - raster.value(i, j)).abs() <= bound {
                    ok += 1;
                }
            }
        }
        assert!(
            ok as f64 >= 0.95 * total as f64,
            "only {ok}/{total} cells within {bound}"
        );
    }
}
