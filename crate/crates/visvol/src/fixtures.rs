//! Procedural test geometry: canonical closed surfaces plus the scene
//! fixtures used by the integration and acceptance suites.

use crate::math::Vec3;
use crate::mesh::{Aabb, TriangleMesh};
use std::collections::HashMap;

/// Unit cube spanning [0,1]^3, 8 vertices / 12 triangles, outward winding.
pub fn unit_cube() -> TriangleMesh {
    let vertices = vec![
        Vec3::new(0.0, 0.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 0.0, 1.0),
        Vec3::new(1.0, 0.0, 1.0),
        Vec3::new(1.0, 1.0, 1.0),
        Vec3::new(0.0, 1.0, 1.0),
    ];
    let triangles = vec![
        // bottom (z=0, normal -z)
        [0, 2, 1],
        [0, 3, 2],
        // top (z=1, normal +z)
        [4, 5, 6],
        [4, 6, 7],
        // front (y=0, normal -y)
        [0, 1, 5],
        [0, 5, 4],
        // back (y=1, normal +y)
        [2, 3, 7],
        [2, 7, 6],
        // left (x=0, normal -x)
        [0, 4, 7],
        [0, 7, 3],
        // right (x=1, normal +x)
        [1, 2, 6],
        [1, 6, 5],
    ];
    TriangleMesh::new(vertices, triangles).unwrap()
}

/// Unit-radius icosphere centered at the origin. `subdivisions` = 0 gives
/// the icosahedron (12/30/20); each level quadruples the face count.
pub fn icosphere(subdivisions: usize) -> TriangleMesh {
    let phi = (1.0 + 5.0_f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = vec![
        Vec3::new(-1.0, phi, 0.0),
        Vec3::new(1.0, phi, 0.0),
        Vec3::new(-1.0, -phi, 0.0),
        Vec3::new(1.0, -phi, 0.0),
        Vec3::new(0.0, -1.0, phi),
        Vec3::new(0.0, 1.0, phi),
        Vec3::new(0.0, -1.0, -phi),
        Vec3::new(0.0, 1.0, -phi),
        Vec3::new(phi, 0.0, -1.0),
        Vec3::new(phi, 0.0, 1.0),
        Vec3::new(-phi, 0.0, -1.0),
        Vec3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalized())
    .collect();
    let mut triangles: Vec<[u32; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(u32, u32), u32> = HashMap::new();
        let mut midpoint = |a: u32, b: u32, vertices: &mut Vec<Vec3>| -> u32 {
            let key = (a.min(b), a.max(b));
            *midpoints.entry(key).or_insert_with(|| {
                let m = ((vertices[a as usize] + vertices[b as usize]) * 0.5).normalized();
                vertices.push(m);
                (vertices.len() - 1) as u32
            })
        };
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for [a, b, c] in triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    TriangleMesh::new(vertices, triangles).unwrap()
}

/// Icosphere scaled to `radius` and moved to `center`.
pub fn icosphere_at(subdivisions: usize, radius: f64, center: Vec3) -> TriangleMesh {
    let mut m = icosphere(subdivisions);
    for v in &mut m.vertices {
        *v = *v * radius + center;
    }
    m
}

/// Structured torus around the z axis: `n_u` segments around the main ring,
/// `n_v` around the tube. V = n_u*n_v, F = 2*n_u*n_v.
pub fn structured_torus(n_u: usize, n_v: usize, big_r: f64, small_r: f64) -> TriangleMesh {
    assert!(n_u >= 3 && n_v >= 3);
    let mut vertices = Vec::with_capacity(n_u * n_v);
    for i in 0..n_u {
        let u = i as f64 / n_u as f64 * std::f64::consts::TAU;
        for j in 0..n_v {
            let v = j as f64 / n_v as f64 * std::f64::consts::TAU;
            let ring = big_r + small_r * v.cos();
            vertices.push(Vec3::new(ring * u.cos(), ring * u.sin(), small_r * v.sin()));
        }
    }
    let idx = |i: usize, j: usize| (i % n_u * n_v + j % n_v) as u32;
    let mut triangles = Vec::with_capacity(2 * n_u * n_v);
    for i in 0..n_u {
        for j in 0..n_v {
            let a = idx(i, j);
            let b = idx(i + 1, j);
            let c = idx(i + 1, j + 1);
            let d = idx(i, j + 1);
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, triangles).unwrap()
}

/// Concatenates meshes, offsetting indices. No vertex welding.
pub fn merge(meshes: &[TriangleMesh]) -> TriangleMesh {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for m in meshes {
        let base = vertices.len() as u32;
        vertices.extend_from_slice(&m.vertices);
        triangles.extend(m.triangles.iter().map(|t| [t[0] + base, t[1] + base, t[2] + base]));
    }
    TriangleMesh { vertices, triangles }
}

/// Flat ground rectangle at z=0 subdivided into `cells_x` x `cells_y` quads.
pub fn ground_plane(half_x: f64, half_y: f64, cells_x: usize, cells_y: usize) -> TriangleMesh {
    let nx = cells_x + 1;
    let ny = cells_y + 1;
    let mut vertices = Vec::with_capacity(nx * ny);
    for iy in 0..ny {
        for ix in 0..nx {
            let x = -half_x + 2.0 * half_x * ix as f64 / cells_x as f64;
            let y = -half_y + 2.0 * half_y * iy as f64 / cells_y as f64;
            vertices.push(Vec3::new(x, y, 0.0));
        }
    }
    let idx = |ix: usize, iy: usize| (iy * nx + ix) as u32;
    let mut triangles = Vec::with_capacity(2 * cells_x * cells_y);
    for iy in 0..cells_y {
        for ix in 0..cells_x {
            let a = idx(ix, iy);
            let b = idx(ix + 1, iy);
            let c = idx(ix + 1, iy + 1);
            let d = idx(ix, iy + 1);
            // +z facing
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh { vertices, triangles }
}

/// Closed axis-aligned box with each face subdivided into `subdiv`²
/// quads, outward winding. Face-border vertices are welded so the mesh is
/// watertight.
pub fn box_mesh(bounds: Aabb, subdiv: usize) -> TriangleMesh {
    assert!(subdiv >= 1);
    let mut vertices: Vec<Vec3> = Vec::new();
    let mut triangles = Vec::new();
    let mut weld: HashMap<[u64; 3], u32> = HashMap::new();
    let e = bounds.extent();
    // lattice coordinate hitting the bounds exactly at the ends so shared
    // face-border vertices weld bit-exactly
    let coord = |axis: usize, i: usize| -> f64 {
        if i == 0 {
            bounds.min[axis]
        } else if i == subdiv {
            bounds.max[axis]
        } else {
            bounds.min[axis] + e[axis] * i as f64 / subdiv as f64
        }
    };
    for axis in 0..3 {
        for &positive in &[false, true] {
            let (u_axis, v_axis) = match axis {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let n = subdiv + 1;
            let mut grid = vec![0u32; n * n];
            for iv in 0..n {
                for iu in 0..n {
                    let mut p = [0.0f64; 3];
                    p[axis] = if positive { bounds.max[axis] } else { bounds.min[axis] };
                    p[u_axis] = coord(u_axis, iu);
                    p[v_axis] = coord(v_axis, iv);
                    let p = Vec3::from(p);
                    let id = *weld.entry(p.to_bits()).or_insert_with(|| {
                        vertices.push(p);
                        (vertices.len() - 1) as u32
                    });
                    grid[iv * n + iu] = id;
                }
            }
            let idx = |iu: usize, iv: usize| grid[iv * n + iu];
            // u cross v points along +axis for (y,z), (x,z) is -y, (x,y) is +z
            let flip = match axis {
                0 => !positive,
                1 => positive,
                _ => !positive,
            };
            for iv in 0..subdiv {
                for iu in 0..subdiv {
                    let a = idx(iu, iv);
                    let b = idx(iu + 1, iv);
                    let c = idx(iu + 1, iv + 1);
                    let d = idx(iu, iv + 1);
                    if flip {
                        triangles.push([a, c, b]);
                        triangles.push([a, d, c]);
                    } else {
                        triangles.push([a, b, c]);
                        triangles.push([a, c, d]);
                    }
                }
            }
        }
    }
    TriangleMesh { vertices, triangles }
}

/// The two-building scene: flat ground with two box buildings flanking a
/// small target triangle at the origin (~10k triangles).
pub fn two_buildings_scene() -> TriangleMesh {
    let ground = ground_plane(80.0, 80.0, 64, 64);
    let west = box_mesh(Aabb::new(Vec3::new(-30.0, -12.0, 0.0), Vec3::new(-10.0, 12.0, 22.0)), 8);
    let east = box_mesh(Aabb::new(Vec3::new(10.0, -12.0, 0.0), Vec3::new(30.0, 12.0, 22.0)), 8);
    merge(&[ground, west, east])
}

/// Ground triangle between the two buildings.
pub fn two_buildings_polygon() -> Vec<Vec3> {
    vec![Vec3::new(-5.0, -4.0, 0.0), Vec3::new(5.0, -4.0, 0.0), Vec3::new(0.0, 6.0, 0.0)]
}

/// Obstacle scene that forces an edge split: a wide wall with two window
/// openings. Viewpoint pairs across the wall see each other through either
/// window, so the pairwise visibility intersection splits into two
/// disconnected lobes and fails the genus-0 test.
pub fn window_wall_scene() -> TriangleMesh {
    let ground = ground_plane(60.0, 60.0, 16, 16);
    // wall slab x in [-1,1], y in [-40,40], z in [0,50] with apertures at
    // y in [-3,3]: low window z in [18,22], high window z in [26,30]
    let parts = [
        Aabb::new(Vec3::new(-1.0, -40.0, 0.0), Vec3::new(1.0, -3.0, 50.0)),
        Aabb::new(Vec3::new(-1.0, 3.0, 0.0), Vec3::new(1.0, 40.0, 50.0)),
        Aabb::new(Vec3::new(-1.0, -3.0, 0.0), Vec3::new(1.0, 3.0, 18.0)),
        Aabb::new(Vec3::new(-1.0, -3.0, 22.0), Vec3::new(1.0, 3.0, 26.0)),
        Aabb::new(Vec3::new(-1.0, -3.0, 30.0), Vec3::new(1.0, 3.0, 50.0)),
    ];
    let mut meshes = vec![ground];
    for b in parts {
        meshes.push(box_mesh(b, 2));
    }
    merge(&meshes)
}

/// Target polygon for the window-wall scene: a skinny vertical triangle in
/// the y=0 plane whose long edge crosses the wall through the low window.
pub fn window_wall_polygon() -> Vec<Vec3> {
    vec![Vec3::new(-10.0, 0.0, 20.0), Vec3::new(10.0, 0.0, 20.0), Vec3::new(0.0, 0.0, 21.0)]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Rewrites the bundled fixture files. Run manually after changing a
    /// generator: `cargo test -p visvol --lib regenerate -- --ignored`
    #[test]
    #[ignore]
    fn regenerate_fixture_files() {
        let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
        std::fs::create_dir_all(&dir).unwrap();
        crate::io::save_mesh(&two_buildings_scene(), dir.join("two_buildings.obj")).unwrap();
        crate::io::save_mesh(&window_wall_scene(), dir.join("window_wall.obj")).unwrap();

        let fmt_poly = |poly: &[Vec3]| {
            poly.iter()
                .map(|v| format!("  - [{}, {}, {}]", v.x, v.y, v.z))
                .collect::<Vec<_>>()
                .join("\n")
        };
        std::fs::write(
            dir.join("two_buildings.yaml"),
            format!(
                "schema_version: 1\nscene: two_buildings.obj\npolygon:\n{}\nd_max: 50\n",
                fmt_poly(&two_buildings_polygon())
            ),
        )
        .unwrap();
        std::fs::write(
            dir.join("window_wall.yaml"),
            format!(
                "schema_version: 1\nscene: window_wall.obj\npolygon:\n{}\nd_max: 30\n",
                fmt_poly(&window_wall_polygon())
            ),
        )
        .unwrap();
    }

    #[test]
    fn cube_is_watertight_genus_zero() {
        let m = unit_cube();
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic().chi, 2);
    }

    #[test]
    fn icosphere_levels() {
        assert_eq!(icosphere(0).triangle_count(), 20);
        assert_eq!(icosphere(1).triangle_count(), 80);
        assert_eq!(icosphere(2).vertex_count(), 162);
        for v in &icosphere(1).vertices {
            assert!((v.length() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn box_mesh_watertight_outward() {
        let m = box_mesh(Aabb::new(Vec3::ZERO, Vec3::new(2.0, 3.0, 4.0)), 3);
        assert!(m.is_watertight());
        assert!((m.signed_volume() - 24.0).abs() < 1e-9);
    }

    #[test]
    fn icosphere_volume_positive() {
        let v = icosphere(2).signed_volume();
        assert!(v > 0.0);
        // inscribed polyhedron volume approaches 4/3 pi
        assert!(v < 4.19 && v > 3.9);
    }

    #[test]
    fn two_buildings_scene_size() {
        let m = two_buildings_scene();
        assert!(m.triangle_count() > 9_000 && m.triangle_count() < 11_000);
    }

    #[test]
    fn torus_is_watertight() {
        let m = structured_torus(8, 8, 10.0, 3.0);
        assert!(m.is_watertight());
        assert_eq!(m.euler_characteristic().chi, 0);
    }
}
