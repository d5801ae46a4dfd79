//! Indexed triangle meshes and their topology metrics.
//!
//! `TriangleMesh` is the shared data model for scene geometry, visibility
//! spheres and extracted volume boundaries. Meshes are immutable after
//! construction and all queries here are read-only, so values can be shared
//! freely across threads.

use crate::math::Vec3;
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("triangle {triangle} references vertex {index} but mesh has {vertex_count} vertices")]
    IndexOutOfRange { triangle: usize, index: u32, vertex_count: usize },
    #[error("triangle {triangle} repeats a vertex index")]
    RepeatedVertex { triangle: usize },
}

/// Axis-aligned bounding box, `min <= max` componentwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Aabb {
        assert!(
            min.x <= max.x && min.y <= max.y && min.z <= max.z,
            "invalid aabb: min {min:?} exceeds max {max:?}"
        );
        Aabb { min, max }
    }

    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Option<Aabb> {
        let mut iter = points.into_iter();
        let first = iter.next()?;
        let mut min = first;
        let mut max = first;
        for p in iter {
            min = min.min(p);
            max = max.max(p);
        }
        Some(Aabb { min, max })
    }

    #[inline]
    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn union(&self, other: &Aabb) -> Aabb {
        Aabb { min: self.min.min(other.min), max: self.max.max(other.max) }
    }

    /// Componentwise intersection; `None` when the boxes are disjoint.
    pub fn intersection(&self, other: &Aabb) -> Option<Aabb> {
        let min = self.min.max(other.min);
        let max = self.max.min(other.max);
        if min.x <= max.x && min.y <= max.y && min.z <= max.z {
            Some(Aabb { min, max })
        } else {
            None
        }
    }

    pub fn expanded(&self, margin: f64) -> Aabb {
        Aabb::new(self.min - Vec3::splat(margin), self.max + Vec3::splat(margin))
    }

    #[inline]
    pub fn diagonal(&self) -> f64 {
        (self.max - self.min).length()
    }

    #[inline]
    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    #[inline]
    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    /// Smallest cube with the same center that contains the box.
    pub fn bounding_cube(&self) -> Aabb {
        let e = self.extent();
        let side = e.x.max(e.y).max(e.z);
        let half = Vec3::splat(side * 0.5);
        let c = self.center();
        Aabb { min: c - half, max: c + half }
    }

    /// Squared distance from `p` to the box (0 inside).
    #[inline]
    pub fn distance_squared(&self, p: Vec3) -> f64 {
        let d = (self.min - p).max(p - self.max).max(Vec3::ZERO);
        d.length_squared()
    }
}

/// Euler characteristic of a mesh together with the counts it derives from.
///
/// Vertices are counted only when referenced by at least one face, so
/// stray coordinates (e.g. left by dropped degenerate faces) do not skew
/// the characteristic. Edges are unique unordered vertex pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EulerCharacteristic {
    pub chi: i64,
    pub vertices: usize,
    pub edges: usize,
    pub faces: usize,
}

/// Indexed triangle mesh. Triangle winding is counter-clockwise seen from
/// outside (outward normal).
#[derive(Debug, Clone, Default)]
pub struct TriangleMesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    pub fn new(vertices: Vec<Vec3>, triangles: Vec<[u32; 3]>) -> Result<TriangleMesh, MeshError> {
        let n = vertices.len();
        for (t, tri) in triangles.iter().enumerate() {
            for &i in tri {
                if i as usize >= n {
                    return Err(MeshError::IndexOutOfRange { triangle: t, index: i, vertex_count: n });
                }
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(MeshError::RepeatedVertex { triangle: t });
            }
        }
        Ok(TriangleMesh { vertices, triangles })
    }

    pub fn empty() -> TriangleMesh {
        TriangleMesh::default()
    }

    #[inline]
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    #[inline]
    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    #[inline]
    pub fn triangle_points(&self, t: usize) -> [Vec3; 3] {
        let [a, b, c] = self.triangles[t];
        [self.vertices[a as usize], self.vertices[b as usize], self.vertices[c as usize]]
    }

    /// Tight bounding box over all vertices; `None` for a vertex-less mesh.
    pub fn aabb(&self) -> Option<Aabb> {
        Aabb::from_points(self.vertices.iter().copied())
    }

    /// χ = V − E + F with V the referenced-vertex count and E the unique
    /// undirected edge count. For a closed connected orientable surface
    /// χ = 2 − 2g, so genus 0 is exactly χ = 2.
    pub fn euler_characteristic(&self) -> EulerCharacteristic {
        let mut referenced = vec![false; self.vertices.len()];
        let mut edges: HashMap<(u32, u32), ()> = HashMap::with_capacity(self.triangles.len() * 2);
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                referenced[a as usize] = true;
                edges.insert((a.min(b), a.max(b)), ());
            }
        }
        let vertices = referenced.iter().filter(|&&r| r).count();
        let edges = edges.len();
        let faces = self.triangles.len();
        EulerCharacteristic {
            chi: vertices as i64 - edges as i64 + faces as i64,
            vertices,
            edges,
            faces,
        }
    }

    /// True when every edge is shared by exactly two faces traversed in
    /// opposite directions (closed, consistently oriented 2-manifold).
    pub fn is_watertight(&self) -> bool {
        if self.triangles.is_empty() {
            return false;
        }
        // (forward, backward) traversal counts per undirected edge
        let mut edges: HashMap<(u32, u32), (u32, u32)> =
            HashMap::with_capacity(self.triangles.len() * 2);
        for tri in &self.triangles {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let entry = edges.entry((a.min(b), a.max(b))).or_insert((0, 0));
                if a < b {
                    entry.0 += 1;
                } else {
                    entry.1 += 1;
                }
            }
        }
        edges.values().all(|&(f, b)| f == 1 && b == 1)
    }

    /// Number of face-connected components (faces joined by shared edges).
    pub fn connected_components(&self) -> usize {
        let f = self.triangles.len();
        if f == 0 {
            return 0;
        }
        let mut parent: Vec<u32> = (0..f as u32).collect();
        fn find(parent: &mut [u32], mut i: u32) -> u32 {
            while parent[i as usize] != i {
                parent[i as usize] = parent[parent[i as usize] as usize];
                i = parent[i as usize];
            }
            i
        }
        let mut by_edge: HashMap<(u32, u32), u32> = HashMap::with_capacity(f * 2);
        for (t, tri) in self.triangles.iter().enumerate() {
            for k in 0..3 {
                let a = tri[k];
                let b = tri[(k + 1) % 3];
                let key = (a.min(b), a.max(b));
                match by_edge.get(&key) {
                    Some(&other) => {
                        let ra = find(&mut parent, other);
                        let rb = find(&mut parent, t as u32);
                        if ra != rb {
                            parent[ra as usize] = rb;
                        }
                    }
                    None => {
                        by_edge.insert(key, t as u32);
                    }
                }
            }
        }
        let mut roots = vec![false; f];
        for t in 0..f as u32 {
            roots[find(&mut parent, t) as usize] = true;
        }
        roots.iter().filter(|&&r| r).count()
    }

    /// Signed enclosed volume by the divergence theorem; positive for a
    /// closed outward-oriented surface.
    pub fn signed_volume(&self) -> f64 {
        let mut six_v = 0.0;
        for tri in &self.triangles {
            let a = self.vertices[tri[0] as usize];
            let b = self.vertices[tri[1] as usize];
            let c = self.vertices[tri[2] as usize];
            six_v += a.dot(b.cross(c));
        }
        six_v / 6.0
    }
}
