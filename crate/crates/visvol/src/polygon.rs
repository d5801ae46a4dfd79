//! Target polygon validation and the edge-split worklist item.

use crate::math::Vec3;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolygonError {
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("vertices {index} and {next} coincide")]
    DuplicateConsecutive { index: usize, next: usize },
    #[error("polygon is not planar: max deviation {max_deviation:.6} m exceeds tolerance {tolerance:.6} m")]
    NonPlanar { max_deviation: f64, tolerance: f64 },
    #[error("polygon is not convex at vertex {vertex}")]
    NonConvex { vertex: usize },
    #[error("three consecutive collinear vertices at vertex {vertex}")]
    Collinear { vertex: usize },
}

/// Convex planar polygon; edges run between consecutive vertices, closing
/// last to first.
#[derive(Debug, Clone)]
pub struct PolygonTarget {
    vertices: Vec<Vec3>,
    normal: Vec3,
    diameter: f64,
}

impl PolygonTarget {
    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Unit normal of the polygon plane (orientation from vertex winding).
    pub fn normal(&self) -> Vec3 {
        self.normal
    }

    /// Largest pairwise vertex distance.
    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn edges(&self) -> impl Iterator<Item = (Vec3, Vec3)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn centroid(&self) -> Vec3 {
        self.vertices.iter().fold(Vec3::ZERO, |a, &v| a + v) / self.vertices.len() as f64
    }
}

/// Checks planarity (max deviation from the Newell best-fit plane within
/// 1e-6 of the polygon diameter) and strict convexity, then derives edges.
pub fn validate_polygon(vertices: Vec<Vec3>) -> Result<PolygonTarget, PolygonError> {
    let n = vertices.len();
    if n < 3 {
        return Err(PolygonError::TooFewVertices(n));
    }
    for i in 0..n {
        let next = (i + 1) % n;
        if vertices[i].distance(vertices[next]) < 1e-9 {
            return Err(PolygonError::DuplicateConsecutive { index: i, next });
        }
    }

    let mut diameter: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            diameter = diameter.max(vertices[i].distance(vertices[j]));
        }
    }

    // Newell normal: robust plane orientation for arbitrary polygons
    let mut normal = Vec3::ZERO;
    for i in 0..n {
        let a = vertices[i];
        let b = vertices[(i + 1) % n];
        normal.x += (a.y - b.y) * (a.z + b.z);
        normal.y += (a.z - b.z) * (a.x + b.x);
        normal.z += (a.x - b.x) * (a.y + b.y);
    }
    if normal.length() == 0.0 {
        // all vertices collinear
        return Err(PolygonError::Collinear { vertex: 1 });
    }
    let normal = normal.normalized();

    let centroid = vertices.iter().fold(Vec3::ZERO, |a, &v| a + v) / n as f64;
    let tolerance = 1e-6 * diameter;
    let mut max_deviation: f64 = 0.0;
    for v in &vertices {
        max_deviation = max_deviation.max((*v - centroid).dot(normal).abs());
    }
    if max_deviation > tolerance {
        return Err(PolygonError::NonPlanar { max_deviation, tolerance });
    }

    // convexity: every turn must agree with the winding normal
    let collinear_tol = 1e-9 * diameter * diameter;
    for i in 0..n {
        let prev = vertices[(i + n - 1) % n];
        let cur = vertices[i];
        let next = vertices[(i + 1) % n];
        let turn = (cur - prev).cross(next - cur).dot(normal);
        if turn.abs() <= collinear_tol {
            return Err(PolygonError::Collinear { vertex: i });
        }
        if turn < 0.0 {
            return Err(PolygonError::NonConvex { vertex: i });
        }
    }

    Ok(PolygonTarget { vertices, normal, diameter })
}

/// One edge of the (possibly split) polygon boundary awaiting the
/// viewpoint-equivalence test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeTask {
    pub a: Vec3,
    pub b: Vec3,
    pub depth: u32,
}

impl EdgeTask {
    pub fn new(a: Vec3, b: Vec3, depth: u32) -> EdgeTask {
        debug_assert!(a != b, "edge endpoints must be distinct");
        EdgeTask { a, b, depth }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }
}

/// Splits at the exact arithmetic midpoint. Returns `None` when the
/// halves would fall below `min_len`, the caller's termination signal.
pub fn split_edge(task: &EdgeTask, min_len: f64) -> Option<(EdgeTask, EdgeTask)> {
    if task.length() / 2.0 < min_len {
        return None;
    }
    let mid = (task.a + task.b) * 0.5;
    Some((
        EdgeTask::new(task.a, mid, task.depth + 1),
        EdgeTask::new(mid, task.b, task.depth + 1),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equilateral_triangle_valid() {
        let h = 3.0f64.sqrt();
        let poly = validate_polygon(vec![
            Vec3::new(-1.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, h, 0.0),
        ])
        .unwrap();
        assert_eq!(poly.edges().count(), 3);
        assert!((poly.normal().z.abs() - 1.0).abs() < 1e-12);
        assert!((poly.diameter() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn arrow_quad_names_reflex_vertex() {
        // planar quad with a reflex vertex at index 3
        let err = validate_polygon(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(4.0, 0.0, 0.0),
            Vec3::new(2.0, 3.0, 0.0),
            Vec3::new(2.0, 1.0, 0.0),
        ])
        .unwrap_err();
        match err {
            PolygonError::NonConvex { vertex } => assert_eq!(vertex, 3),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn lifted_vertex_fails_planarity() {
        let err = validate_polygon(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(10.0, 0.0, 0.0),
            Vec3::new(10.0, 10.0, 1.0),
            Vec3::new(0.0, 10.0, 0.0),
        ])
        .unwrap_err();
        match err {
            PolygonError::NonPlanar { max_deviation, .. } => assert!(max_deviation > 0.2),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn too_few_and_duplicate_vertices() {
        assert!(matches!(
            validate_polygon(vec![Vec3::ZERO, Vec3::new(1.0, 0.0, 0.0)]),
            Err(PolygonError::TooFewVertices(2))
        ));
        assert!(matches!(
            validate_polygon(vec![
                Vec3::ZERO,
                Vec3::ZERO,
                Vec3::new(1.0, 0.0, 0.0),
                Vec3::new(0.0, 1.0, 0.0)
            ]),
            Err(PolygonError::DuplicateConsecutive { index: 0, next: 1 })
        ));
    }

    #[test]
    fn collinear_triple_rejected() {
        let err = validate_polygon(vec![
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(2.0, 0.0, 0.0),
            Vec3::new(2.0, 2.0, 0.0),
        ])
        .unwrap_err();
        assert!(matches!(err, PolygonError::Collinear { vertex: 1 }));
    }

    #[test]
    fn clockwise_winding_also_valid() {
        // winding direction only flips the normal; convexity holds
        let poly = validate_polygon(vec![
            Vec3::new(0.0, 1.0, 5.0),
            Vec3::new(1.0, 0.0, 5.0),
            Vec3::new(-1.0, 0.0, 5.0),
        ])
        .unwrap();
        assert!(poly.normal().z < 0.0);
    }

    #[test]
    fn split_edge_midpoint_and_depth() {
        let task = EdgeTask::new(Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0), 0);
        let (l, r) = split_edge(&task, 0.5).unwrap();
        assert_eq!(l.b, Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(r.a, l.b);
        assert_eq!(l.a, task.a);
        assert_eq!(r.b, task.b);
        assert_eq!(l.depth, 1);
        assert_eq!(r.depth, 1);
        assert!((l.length() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn split_refused_below_min_length() {
        let task = EdgeTask::new(Vec3::ZERO, Vec3::new(2.0, 0.0, 0.0), 3);
        assert!(split_edge(&task, 1.1).is_none());
        assert!(split_edge(&task, 1.0).is_some());
    }
}
