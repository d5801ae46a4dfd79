//! Turns a depth sphere into the visibility sphere of its center point:
//! a watertight genus-0 mesh for export and booleans, and a direct
//! point-membership test exploiting star-shapedness.

use crate::depth::{azimuth_table, polar_table, DepthSphere};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;

/// Tessellates the clamped depth grid into a closed surface. One vertex
/// per grid cell at center + depth·direction, two pole vertices at the
/// mean depth of the adjacent pole rows, quads between rings split into
/// two triangles, pole fans closing the ends. The result is always
/// watertight with χ = 2 and outward orientation; both are asserted.
pub fn tessellate_visibility_sphere(ds: &DepthSphere) -> TriangleMesh {
    let n_phi = ds.n_phi();
    let n_theta = ds.n_theta();
    let center = ds.center();
    let azimuth = azimuth_table(n_phi);
    let polar = polar_table(n_theta);

    let mut vertices = Vec::with_capacity(n_phi * n_theta + 2);
    for (j, &(sin_t, cos_t)) in polar.iter().enumerate() {
        for (i, &(cos_p, sin_p)) in azimuth.iter().enumerate() {
            let dir = Vec3::new(sin_t * cos_p, sin_t * sin_p, cos_t);
            vertices.push(center + dir * ds.value(i, j));
        }
    }
    let mean = |j: usize| -> f64 {
        (0..n_phi).map(|i| ds.value(i, j)).sum::<f64>() / n_phi as f64
    };
    let north = vertices.len() as u32;
    vertices.push(center + Vec3::new(0.0, 0.0, mean(0)));
    let south = vertices.len() as u32;
    vertices.push(center + Vec3::new(0.0, 0.0, -mean(n_theta - 1)));

    let idx = |i: usize, j: usize| (j * n_phi + i % n_phi) as u32;
    let mut triangles = Vec::with_capacity(2 * n_phi * (n_theta - 1) + 2 * n_phi);
    for j in 0..n_theta - 1 {
        for i in 0..n_phi {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            // outward winding: θ increases away from +z
            triangles.push([a, c, b]);
            triangles.push([a, d, c]);
        }
    }
    for i in 0..n_phi {
        triangles.push([north, idx(i, 0), idx(i + 1, 0)]);
        triangles.push([south, idx(i + 1, n_theta - 1), idx(i, n_theta - 1)]);
    }

    let mesh = TriangleMesh::new(vertices, triangles).expect("tessellation indices are valid");
    debug_assert!(mesh.is_watertight());
    debug_assert_eq!(mesh.euler_characteristic().chi, 2);
    mesh
}

/// True when `p` lies in the visibility sphere: within the sampled depth
/// along its direction from the center. The center itself is a member.
pub fn contains_point(ds: &DepthSphere, p: Vec3) -> bool {
    let rel = p - ds.center();
    let r = rel.length();
    if r == 0.0 {
        return true;
    }
    r <= ds.sample(rel / r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bvh::{point_triangle_distance_squared, ray_triangle_intersection, Scene};
    use crate::depth::AngularGrid;
    use crate::fixtures::{box_mesh, ground_plane, merge};
    use crate::mesh::Aabb;
    use crate::rng::SplitMix64;

    fn grid(n_phi: usize, n_theta: usize) -> AngularGrid {
        AngularGrid::new(n_phi, n_theta).unwrap()
    }

    #[test]
    fn uniform_sphere_counts_and_topology() {
        let ds = DepthSphere::uniform(Vec3::ZERO, grid(8, 4), 10.0, 5.0);
        let mesh = tessellate_visibility_sphere(&ds);
        let e = mesh.euler_characteristic();
        assert_eq!(e.vertices, 34);
        assert_eq!(e.faces, 64);
        assert_eq!(e.edges, 96);
        assert_eq!(e.chi, 2);
        assert!(mesh.is_watertight());
        // outward orientation encloses positive volume
        assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn uniform_sphere_volume_near_analytic() {
        let r = 5.0;
        let ds = DepthSphere::uniform(Vec3::new(3.0, 0.0, -1.0), grid(64, 32), 10.0, r);
        let mesh = tessellate_visibility_sphere(&ds);
        let analytic = 4.0 / 3.0 * std::f64::consts::PI * r * r * r;
        let v = mesh.signed_volume();
        assert!((v - analytic).abs() < 0.02 * analytic, "volume {v} vs {analytic}");
    }

    #[test]
    fn ground_scene_sphere_is_watertight_genus_zero() {
        let scene = Scene::new(ground_plane(200.0, 200.0, 8, 8));
        let ds =
            DepthSphere::from_raycast(&scene, Vec3::new(0.0, 0.0, 5.0), grid(32, 16), 50.0).unwrap();
        let mesh = tessellate_visibility_sphere(&ds);
        assert!(mesh.is_watertight());
        assert_eq!(mesh.euler_characteristic().chi, 2);
        assert_eq!(mesh.connected_components(), 1);
        assert!(mesh.signed_volume() > 0.0);
    }

    #[test]
    fn contains_center_and_range_limit() {
        let center = Vec3::new(1.0, 2.0, 3.0);
        let ds = DepthSphere::uniform(center, grid(16, 8), 100.0, 100.0);
        assert!(contains_point(&ds, center));
        assert!(contains_point(&ds, center + Vec3::new(99.9, 0.0, 0.0)));
        assert!(!contains_point(&ds, center + Vec3::new(101.0, 0.0, 0.0)));
    }

    #[test]
    fn membership_matches_segment_oracle_away_from_cell_boundaries() {
        // wall between center and +x half-space
        let scene_mesh = merge(&[
            ground_plane(80.0, 80.0, 4, 4),
            box_mesh(Aabb::new(Vec3::new(10.0, -30.0, 0.0), Vec3::new(12.0, 30.0, 25.0)), 1),
        ]);
        let scene = Scene::new(scene_mesh);
        let center = Vec3::new(0.0, 0.0, 2.0);
        let d_max = 40.0;
        let g = grid(64, 32);
        let ds = DepthSphere::from_raycast(&scene, center, g, d_max).unwrap();

        let phi_step = std::f64::consts::TAU / g.n_phi as f64;
        let theta_step = std::f64::consts::PI / g.n_theta as f64;
        // depth spread over the 3x3 cell neighborhood: large values mark
        // discontinuities or grazing incidence, where nearest-cell lookup
        // legitimately differs from the exact oracle
        let neighborhood_spread = |i: usize, j: usize| -> f64 {
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for dj in -1i64..=1 {
                let jj = (j as i64 + dj).clamp(0, g.n_theta as i64 - 1) as usize;
                for di in -1i64..=1 {
                    let ii = (i as i64 + di).rem_euclid(g.n_phi as i64) as usize;
                    let v = ds.value(ii, jj);
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            hi - lo
        };
        let mut rng = SplitMix64::new(2024);
        let mut checked = 0;
        for _ in 0..20_000 {
            let dir = rng.next_unit_vector();
            let r = rng.next_range(0.5, d_max * 1.1);
            let p = center + dir * r;
            // skip directions near cell boundaries and radii near the
            // sampled depth
            let phi = dir.y.atan2(dir.x).rem_euclid(std::f64::consts::TAU);
            let theta = dir.z.clamp(-1.0, 1.0).acos();
            let fp = (phi / phi_step).fract();
            let ft = (theta / theta_step).fract();
            if !(0.15..=0.85).contains(&fp) || !(0.15..=0.85).contains(&ft) {
                continue;
            }
            let depth = ds.sample(dir);
            if (r - depth).abs() < 0.1 * d_max {
                continue;
            }
            let i = (phi / phi_step - 0.5).round().rem_euclid(g.n_phi as f64) as usize % g.n_phi;
            let j = ((theta / theta_step - 0.5).round().max(0.0) as usize).min(g.n_theta - 1);
            if neighborhood_spread(i, j) > 0.08 * d_max {
                continue;
            }
            let expect = r <= d_max && !scene.segment_occluded(center, p, scene.eps());
            assert_eq!(contains_point(&ds, p), expect, "p = {p:?}, r = {r}, depth = {depth}");
            checked += 1;
        }
        assert!(checked > 3_000, "only {checked} samples survived the filters");
    }

    #[test]
    fn star_shapedness() {
        // arbitrary bumpy depth field is still star-shaped about the center
        let center = Vec3::new(-4.0, 7.0, 1.0);
        let ds = DepthSphere::from_fn(center, grid(24, 12), 50.0, |i, j, _| {
            10.0 + 30.0 * (((i * 31 + j * 17) % 11) as f64 / 11.0)
        })
        .unwrap();
        let mut rng = SplitMix64::new(55);
        for _ in 0..2_000 {
            let dir = rng.next_unit_vector();
            let r = rng.next_range(0.0, 50.0);
            let p = center + dir * r;
            if contains_point(&ds, p) {
                for k in 1..8 {
                    let s = k as f64 / 8.0;
                    assert!(contains_point(&ds, center + (p - center) * s));
                }
            }
        }
    }

    #[test]
    fn mesh_and_predicate_agree_away_from_surface() {
        let scene_mesh = merge(&[
            ground_plane(80.0, 80.0, 4, 4),
            box_mesh(Aabb::new(Vec3::new(8.0, -20.0, 0.0), Vec3::new(11.0, 20.0, 18.0)), 1),
        ]);
        let scene = Scene::new(scene_mesh);
        let center = Vec3::new(0.0, 0.0, 3.0);
        let d_max = 30.0;
        let g = grid(32, 16);
        let ds = DepthSphere::from_raycast(&scene, center, g, d_max).unwrap();
        let mesh = tessellate_visibility_sphere(&ds);
        let margin = d_max * g.max_cell_angle();

        // ray-parity point-in-mesh oracle along +x
        let dir = Vec3::new(1.0, 0.0, 0.0);
        let inside_mesh = |p: Vec3| -> bool {
            let mut crossings = 0;
            for t in 0..mesh.triangle_count() {
                let [a, b, c] = mesh.triangle_points(t);
                if let Some(t) = ray_triangle_intersection(p, dir, a, b, c) {
                    if t > 0.0 {
                        crossings += 1;
                    }
                }
            }
            crossings % 2 == 1
        };
        let distance_to_mesh = |p: Vec3| -> f64 {
            let mut best = f64::INFINITY;
            for t in 0..mesh.triangle_count() {
                let [a, b, c] = mesh.triangle_points(t);
                best = best.min(point_triangle_distance_squared(p, a, b, c));
            }
            best.sqrt()
        };

        let mut rng = SplitMix64::new(99);
        let mut checked = 0;
        for _ in 0..300 {
            let p = center + rng.next_unit_vector() * rng.next_range(0.5, d_max * 1.05);
            if distance_to_mesh(p) <= margin {
                continue;
            }
            assert_eq!(contains_point(&ds, p), inside_mesh(p), "p = {p:?}");
            checked += 1;
        }
        assert!(checked > 100);
    }
}
