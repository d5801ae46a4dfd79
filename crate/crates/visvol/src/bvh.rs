//! Bounding volume hierarchy over the scene mesh: first-hit ray queries,
//! segment occlusion tests and point-to-surface distance.
//!
//! This is the computational stand-in for rendered depth: every visibility
//! query in the pipeline reduces to rays against this structure.

use crate::math::Vec3;
use crate::mesh::{Aabb, TriangleMesh};
use std::sync::Arc;
use thiserror::Error;

/// Leaves hold at most this many triangles.
const MAX_LEAF_SIZE: usize = 8;

#[derive(Debug, Error)]
pub enum BvhError {
    #[error("cannot build a BVH over a mesh with no triangles")]
    EmptyMesh,
}

/// A ray with a unit direction and a parameter interval in meters.
#[derive(Debug, Clone, Copy)]
pub struct Ray {
    pub origin: Vec3,
    pub dir: Vec3,
    pub t_min: f64,
    pub t_max: f64,
}

impl Ray {
    pub fn new(origin: Vec3, dir: Vec3, t_min: f64, t_max: f64) -> Ray {
        debug_assert!((dir.length() - 1.0).abs() <= 1e-9, "ray direction must be unit length");
        assert!(t_min >= 0.0 && t_min < t_max, "invalid ray interval [{t_min}, {t_max}]");
        Ray { origin, dir, t_min, t_max }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub triangle: u32,
}

/// Möller–Trumbore ray/triangle intersection, double sided, boundary
/// inclusive: hits on edges and vertices count. Returns the ray parameter.
pub fn ray_triangle_intersection(origin: Vec3, dir: Vec3, a: Vec3, b: Vec3, c: Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = dir.cross(e2);
    let det = e1.dot(p);
    if det.abs() < 1e-14 {
        return None; // parallel or degenerate
    }
    let inv_det = 1.0 / det;
    let s = origin - a;
    let u = s.dot(p) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let q = s.cross(e1);
    let v = dir.dot(q) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = e2.dot(q) * inv_det;
    if t.is_finite() {
        Some(t)
    } else {
        None
    }
}

/// Squared distance from a point to a triangle.
pub fn point_triangle_distance_squared(p: Vec3, a: Vec3, b: Vec3, c: Vec3) -> f64 {
    // region classification after Ericson, "Real-Time Collision Detection"
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(ap);
    let d2 = ac.dot(ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return ap.length_squared();
    }
    let bp = p - b;
    let d3 = ab.dot(bp);
    let d4 = ac.dot(bp);
    if d3 >= 0.0 && d4 <= d3 {
        return bp.length_squared();
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return (ap - ab * v).length_squared();
    }
    let cp = p - c;
    let d5 = ab.dot(cp);
    let d6 = ac.dot(cp);
    if d6 >= 0.0 && d5 <= d6 {
        return cp.length_squared();
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return (ap - ac * w).length_squared();
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (bp - (c - b) * w).length_squared();
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    (ap - ab * v - ac * w).length_squared()
}

#[derive(Debug, Clone)]
enum NodeKind {
    Leaf { start: u32, count: u32 },
    Inner { left: u32, right: u32 },
}

#[derive(Debug, Clone)]
struct Node {
    aabb: Aabb,
    kind: NodeKind,
}

/// Static binary BVH built by longest-axis median split.
pub struct Bvh {
    mesh: Arc<TriangleMesh>,
    nodes: Vec<Node>,
    /// triangle indices into the mesh, grouped by leaf
    order: Vec<u32>,
}

struct BuildRef {
    index: u32,
    aabb: Aabb,
    centroid: Vec3,
}

impl Bvh {
    pub fn build(mesh: TriangleMesh) -> Result<Bvh, BvhError> {
        Bvh::build_arc(Arc::new(mesh))
    }

    pub fn build_arc(mesh: Arc<TriangleMesh>) -> Result<Bvh, BvhError> {
        if mesh.triangles.is_empty() {
            return Err(BvhError::EmptyMesh);
        }
        let mut refs: Vec<BuildRef> = (0..mesh.triangle_count())
            .map(|i| {
                let [a, b, c] = mesh.triangle_points(i);
                let aabb = Aabb { min: a.min(b).min(c), max: a.max(b).max(c) };
                BuildRef { index: i as u32, aabb, centroid: (a + b + c) / 3.0 }
            })
            .collect();
        let mut nodes = Vec::with_capacity(refs.len() * 2);
        let count = refs.len();
        build_node(&mut refs, 0, count, &mut nodes);
        let order = refs.iter().map(|r| r.index).collect();
        Ok(Bvh { mesh, nodes, order })
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> Arc<TriangleMesh> {
        Arc::clone(&self.mesh)
    }

    /// Closest intersection in `[t_min, t_max]`, ties broken toward the
    /// lower triangle index so results do not depend on traversal order.
    pub fn first_hit(&self, ray: &Ray) -> Option<Hit> {
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut best: Option<Hit> = None;
        let mut stack: Vec<u32> = vec![0];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id as usize];
            let limit = best.map(|h| h.t).unwrap_or(ray.t_max);
            let Some((enter, _)) = slab_test(&node.aabb, ray.origin, inv, ray.t_min, limit) else {
                continue;
            };
            let _ = enter;
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &tri in &self.order[start as usize..(start + count) as usize] {
                        let [a, b, c] = self.mesh.triangle_points(tri as usize);
                        if let Some(t) = ray_triangle_intersection(ray.origin, ray.dir, a, b, c) {
                            if t >= ray.t_min && t <= ray.t_max {
                                let better = match best {
                                    None => true,
                                    Some(h) => t < h.t || (t == h.t && tri < h.triangle),
                                };
                                if better {
                                    best = Some(Hit { t, triangle: tri });
                                }
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    // visit nearer child first
                    let d_left = self.nodes[left as usize].aabb.distance_squared(ray.origin);
                    let d_right = self.nodes[right as usize].aabb.distance_squared(ray.origin);
                    if d_left <= d_right {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best
    }

    /// Any intersection in `[t_min, t_max]` (early exit).
    fn any_hit(&self, ray: &Ray) -> bool {
        let inv = Vec3::new(1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z);
        let mut stack: Vec<u32> = vec![0];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id as usize];
            if slab_test(&node.aabb, ray.origin, inv, ray.t_min, ray.t_max).is_none() {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &tri in &self.order[start as usize..(start + count) as usize] {
                        let [a, b, c] = self.mesh.triangle_points(tri as usize);
                        if let Some(t) = ray_triangle_intersection(ray.origin, ray.dir, a, b, c) {
                            if t >= ray.t_min && t <= ray.t_max {
                                return true;
                            }
                        }
                    }
                }
                NodeKind::Inner { left, right } => {
                    stack.push(left);
                    stack.push(right);
                }
            }
        }
        false
    }

    /// True when scene geometry blocks the open segment between `p` and
    /// `q`, shortened by `eps` at both ends so surface-resident endpoints
    /// do not self-occlude. Endpoint order is canonicalized, making the
    /// query exactly symmetric in (p, q).
    pub fn segment_occluded(&self, p: Vec3, q: Vec3, eps: f64) -> bool {
        assert!(eps >= 0.0);
        let (p, q) = canonical_pair(p, q);
        let d = q - p;
        let len = d.length();
        if len <= 2.0 * eps || len == 0.0 {
            return false;
        }
        let ray = Ray::new(p, d / len, eps.max(f64::MIN_POSITIVE), len - eps);
        self.any_hit(&ray)
    }

    /// Minimum distance from `p` to any triangle.
    pub fn min_distance(&self, p: Vec3) -> f64 {
        let mut best = f64::INFINITY;
        let mut stack: Vec<u32> = vec![0];
        while let Some(node_id) = stack.pop() {
            let node = &self.nodes[node_id as usize];
            if node.aabb.distance_squared(p) >= best {
                continue;
            }
            match node.kind {
                NodeKind::Leaf { start, count } => {
                    for &tri in &self.order[start as usize..(start + count) as usize] {
                        let [a, b, c] = self.mesh.triangle_points(tri as usize);
                        best = best.min(point_triangle_distance_squared(p, a, b, c));
                    }
                }
                NodeKind::Inner { left, right } => {
                    let d_left = self.nodes[left as usize].aabb.distance_squared(p);
                    let d_right = self.nodes[right as usize].aabb.distance_squared(p);
                    if d_left <= d_right {
                        stack.push(right);
                        stack.push(left);
                    } else {
                        stack.push(left);
                        stack.push(right);
                    }
                }
            }
        }
        best.sqrt()
    }

    #[cfg(test)]
    fn leaf_triangle_count(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Leaf { count, .. } => count as usize,
                _ => 0,
            })
            .sum()
    }

    #[cfg(test)]
    fn max_leaf_size(&self) -> usize {
        self.nodes
            .iter()
            .map(|n| match n.kind {
                NodeKind::Leaf { count, .. } => count as usize,
                _ => 0,
            })
            .max()
            .unwrap_or(0)
    }
}

fn canonical_pair(p: Vec3, q: Vec3) -> (Vec3, Vec3) {
    let pk = (p.x, p.y, p.z);
    let qk = (q.x, q.y, q.z);
    if pk <= qk {
        (p, q)
    } else {
        (q, p)
    }
}

fn slab_test(aabb: &Aabb, origin: Vec3, inv_dir: Vec3, t_min: f64, t_max: f64) -> Option<(f64, f64)> {
    let mut t0 = t_min;
    let mut t1 = t_max;
    for axis in 0..3 {
        let inv = inv_dir[axis];
        let mut near = (aabb.min[axis] - origin[axis]) * inv;
        let mut far = (aabb.max[axis] - origin[axis]) * inv;
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        // NaN from 0 * inf: treat as non-separating
        if near.is_nan() || far.is_nan() {
            continue;
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
        if t0 > t1 {
            return None;
        }
    }
    Some((t0, t1))
}

fn build_node(refs: &mut [BuildRef], start: usize, count: usize, nodes: &mut Vec<Node>) -> u32 {
    let slice = &refs[start..start + count];
    let mut aabb = slice[0].aabb;
    let mut centroid_bounds = Aabb { min: slice[0].centroid, max: slice[0].centroid };
    for r in &slice[1..] {
        aabb = aabb.union(&r.aabb);
        centroid_bounds.min = centroid_bounds.min.min(r.centroid);
        centroid_bounds.max = centroid_bounds.max.max(r.centroid);
    }
    let node_id = nodes.len() as u32;
    nodes.push(Node { aabb, kind: NodeKind::Leaf { start: start as u32, count: count as u32 } });

    let extent = centroid_bounds.extent();
    let axis = Vec3::new(extent.x, extent.y, extent.z).dominant_axis();
    if count <= MAX_LEAF_SIZE || extent[axis] == 0.0 {
        return node_id;
    }

    let mid = count / 2;
    refs[start..start + count].select_nth_unstable_by(mid, |a, b| {
        a.centroid[axis]
            .partial_cmp(&b.centroid[axis])
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    let left = build_node(refs, start, mid, nodes);
    let right = build_node(refs, start + mid, count - mid, nodes);
    nodes[node_id as usize].kind = NodeKind::Inner { left, right };
    node_id
}

/// A scene prepared for visibility queries. Unlike `Bvh::build`, an empty
/// mesh is allowed (all queries miss), which the empty-scene pipeline
/// cases rely on.
///
/// The query epsilon is fixed at 1e-4 of the scene AABB diagonal: target
/// polygon vertices usually lie exactly on scene surfaces and would
/// otherwise self-occlude at t = 0.
pub struct Scene {
    mesh: Arc<TriangleMesh>,
    bvh: Option<Bvh>,
    aabb: Option<Aabb>,
    eps: f64,
}

impl Scene {
    pub fn new(mesh: TriangleMesh) -> Scene {
        let aabb = mesh.aabb();
        let eps = aabb.map(|bb| 1e-4 * bb.diagonal()).unwrap_or(0.0);
        let mesh = Arc::new(mesh);
        let bvh = if mesh.triangles.is_empty() {
            None
        } else {
            Some(Bvh::build_arc(Arc::clone(&mesh)).expect("non-empty mesh"))
        };
        Scene { mesh, bvh, aabb, eps }
    }

    pub fn mesh(&self) -> &TriangleMesh {
        &self.mesh
    }

    pub fn bvh(&self) -> Option<&Bvh> {
        self.bvh.as_ref()
    }

    pub fn aabb(&self) -> Option<Aabb> {
        self.aabb
    }

    /// t_min epsilon shared by all visibility queries on this scene.
    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn is_empty(&self) -> bool {
        self.bvh.is_none()
    }

    pub fn first_hit(&self, ray: &Ray) -> Option<Hit> {
        self.bvh.as_ref().and_then(|b| b.first_hit(ray))
    }

    pub fn segment_occluded(&self, p: Vec3, q: Vec3, eps: f64) -> bool {
        self.bvh.as_ref().map(|b| b.segment_occluded(p, q, eps)).unwrap_or(false)
    }
}
