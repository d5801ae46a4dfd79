//! Brute-force visibility ground truth: dense segment tests from a point
//! to samples of the target polygon, plus seeded agreement reports between
//! a computed region and this oracle.

use crate::bvh::{Bvh, Scene};
use crate::math::Vec3;
use crate::mesh::{Aabb, TriangleMesh};
use crate::polygon::PolygonTarget;
use crate::region::ImplicitRegion;
use crate::rng::SplitMix64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Polygon vertices plus `samples_per_edge` uniform interior samples of
/// each edge. Boundary sampling suffices for convex targets (the farthest
/// point of a convex polygon is always a vertex and occluders cut the
/// sightline set along its boundary first) but it is an approximation;
/// `include_interior` adds a barycentric grid of interior points for
/// strictness.
pub fn polygon_samples(
    polygon: &PolygonTarget,
    samples_per_edge: usize,
    include_interior: bool,
) -> Vec<Vec3> {
    let mut samples: Vec<Vec3> = polygon.vertices().to_vec();
    for (a, b) in polygon.edges() {
        for k in 1..=samples_per_edge {
            let t = k as f64 / (samples_per_edge + 1) as f64;
            samples.push(a + (b - a) * t);
        }
    }
    if include_interior {
        let verts = polygon.vertices();
        let levels = (samples_per_edge / 2).max(2);
        for fan in 1..verts.len() - 1 {
            let (v0, v1, v2) = (verts[0], verts[fan], verts[fan + 1]);
            for i in 1..levels {
                for j in 1..levels - i {
                    let k = levels - i - j;
                    let (a, b, c) = (i as f64, j as f64, k as f64);
                    let l = levels as f64;
                    samples.push(v0 * (a / l) + v1 * (b / l) + v2 * (c / l));
                }
            }
        }
    }
    samples
}

/// True when every polygon boundary sample is within `d_max` of `p` and
/// unoccluded along the open segment.
pub fn point_sees_polygon(
    scene: &Scene,
    p: Vec3,
    polygon: &PolygonTarget,
    d_max: f64,
    samples_per_edge: usize,
) -> bool {
    point_sees_samples(scene, p, &polygon_samples(polygon, samples_per_edge, false), d_max)
}

/// Shared inner loop for precomputed sample sets.
pub fn point_sees_samples(scene: &Scene, p: Vec3, samples: &[Vec3], d_max: f64) -> bool {
    let eps = scene.eps();
    samples.iter().all(|&q| p.distance(q) <= d_max && !scene.segment_occluded(p, q, eps))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementParams {
    pub n_samples: usize,
    /// restricted statistics exclude points within this distance of the
    /// extracted surface
    pub boundary_margin: f64,
    pub seed: u64,
    pub samples_per_edge: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Disagreement {
    pub point: Vec3,
    pub region_member: bool,
    pub oracle_visible: bool,
    pub distance_to_surface: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgreementReport {
    pub n_samples: usize,
    pub boundary_margin: f64,
    pub seed: u64,
    pub agreements: usize,
    pub agreement_rate: f64,
    pub restricted_n: usize,
    pub restricted_agreements: usize,
    pub restricted_rate: f64,
    /// first disagreements, capped
    pub disagreements: Vec<Disagreement>,
}

const MAX_LISTED_DISAGREEMENTS: usize = 32;

/// Samples `n_samples` seeded uniform points in `sample_box`, classifies
/// each by region membership and by the segment oracle, and reports the
/// agreement rate overall and restricted to points farther than
/// `boundary_margin` from `surface`.
pub fn agreement_report(
    region: &ImplicitRegion,
    scene: &Scene,
    polygon: &PolygonTarget,
    d_max: f64,
    sample_box: &Aabb,
    surface: &TriangleMesh,
    params: &AgreementParams,
) -> AgreementReport {
    let mut rng = SplitMix64::new(params.seed);
    let points: Vec<Vec3> = (0..params.n_samples).map(|_| rng.next_in_aabb(sample_box)).collect();
    let samples = polygon_samples(polygon, params.samples_per_edge, false);
    let surface_bvh = if surface.triangles.is_empty() {
        None
    } else {
        Some(Bvh::build(surface.clone()).expect("non-empty surface"))
    };

    struct Row {
        member: bool,
        visible: bool,
        distance: f64,
    }
    let rows: Vec<Row> = points
        .par_iter()
        .map(|&p| Row {
            member: region.contains(p),
            visible: point_sees_samples(scene, p, &samples, d_max),
            distance: surface_bvh.as_ref().map(|b| b.min_distance(p)).unwrap_or(f64::INFINITY),
        })
        .collect();

    let mut agreements = 0;
    let mut restricted_n = 0;
    let mut restricted_agreements = 0;
    let mut disagreements = Vec::new();
    for (p, row) in points.iter().zip(&rows) {
        let agree = row.member == row.visible;
        if agree {
            agreements += 1;
        } else if disagreements.len() < MAX_LISTED_DISAGREEMENTS {
            disagreements.push(Disagreement {
                point: *p,
                region_member: row.member,
                oracle_visible: row.visible,
                distance_to_surface: row.distance,
            });
        }
        if row.distance > params.boundary_margin {
            restricted_n += 1;
            if agree {
                restricted_agreements += 1;
            }
        }
    }

    let rate = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
    AgreementReport {
        n_samples: params.n_samples,
        boundary_margin: params.boundary_margin,
        seed: params.seed,
        agreements,
        agreement_rate: rate(agreements, params.n_samples),
        restricted_n,
        restricted_agreements,
        restricted_rate: rate(restricted_agreements, restricted_n),
        disagreements,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depth::{AngularGrid, DepthSphere};
    use crate::fixtures::{box_mesh, ground_plane, merge};
    use crate::polygon::validate_polygon;
    use crate::region::intersect_regions;
    use std::sync::Arc;

    fn ground_triangle() -> PolygonTarget {
        validate_polygon(vec![
            Vec3::new(-5.0, -3.0, 0.0),
            Vec3::new(5.0, -3.0, 0.0),
            Vec3::new(0.0, 5.0, 0.0),
        ])
        .unwrap()
    }

    fn wall_scene() -> Scene {
        Scene::new(merge(&[
            ground_plane(60.0, 60.0, 4, 4),
            box_mesh(
                Aabb::new(Vec3::new(10.0, -15.0, 0.0), Vec3::new(14.0, 15.0, 20.0)),
                1,
            ),
        ]))
    }

    #[test]
    fn sample_count_matches_definition() {
        let poly = ground_triangle();
        assert_eq!(polygon_samples(&poly, 16, false).len(), 3 + 3 * 16);
        assert!(polygon_samples(&poly, 16, true).len() > 3 + 3 * 16);
    }

    #[test]
    fn point_above_centroid_sees_everything_in_empty_scene() {
        let scene = Scene::new(TriangleMesh::empty());
        let poly = ground_triangle();
        let p = poly.centroid() + Vec3::new(0.0, 0.0, 10.0);
        assert!(point_sees_polygon(&scene, p, &poly, 100.0, 16));
    }

    #[test]
    fn out_of_range_vertex_fails() {
        let scene = Scene::new(TriangleMesh::empty());
        let poly = ground_triangle();
        // farthest vertex is (0,5,0): pick p so that distance is d_max + 1
        let p = Vec3::new(0.0, 5.0, 0.0) + Vec3::new(0.0, 0.0, 51.0);
        assert!(!point_sees_polygon(&scene, p, &poly, 50.0, 4));
        assert!(point_sees_polygon(&scene, p, &poly, 52.0, 4));
    }

    #[test]
    fn point_behind_wall_fails() {
        let scene = wall_scene();
        let poly = ground_triangle();
        // behind the wall, at wall height: ground triangle is hidden
        let p = Vec3::new(20.0, 0.0, 5.0);
        assert!(!point_sees_polygon(&scene, p, &poly, 100.0, 16));
        // high above the wall it clears
        let p = Vec3::new(20.0, 0.0, 64.0);
        assert!(point_sees_polygon(&scene, p, &poly, 100.0, 16));
    }

    #[test]
    fn oracle_monotone_in_d_max() {
        let scene = wall_scene();
        let poly = ground_triangle();
        let mut rng = SplitMix64::new(8);
        let bb = Aabb::new(Vec3::new(-30.0, -30.0, 0.0), Vec3::new(30.0, 30.0, 40.0));
        for _ in 0..300 {
            let p = rng.next_in_aabb(&bb);
            if point_sees_polygon(&scene, p, &poly, 30.0, 8) {
                assert!(point_sees_polygon(&scene, p, &poly, 45.0, 8));
            }
        }
    }

    #[test]
    fn denser_nested_sampling_only_removes_points() {
        // sample positions k/(s+1) nest when going from s to 2s+1
        let scene = wall_scene();
        let poly = ground_triangle();
        let mut rng = SplitMix64::new(9);
        let bb = Aabb::new(Vec3::new(-30.0, -30.0, 0.0), Vec3::new(30.0, 30.0, 40.0));
        for _ in 0..300 {
            let p = rng.next_in_aabb(&bb);
            if point_sees_polygon(&scene, p, &poly, 60.0, 17) {
                assert!(point_sees_polygon(&scene, p, &poly, 60.0, 8));
            }
        }
    }

    #[test]
    fn analytic_region_agrees_with_oracle_in_empty_scene() {
        let scene = Scene::new(TriangleMesh::empty());
        let poly = ground_triangle();
        let d_max = 40.0;
        let grid = AngularGrid::new(32, 16).unwrap();
        let region = intersect_regions(
            poly.vertices()
                .iter()
                .map(|&v| {
                    ImplicitRegion::VisibilitySphere(Arc::new(DepthSphere::uniform(v, grid, d_max, d_max)))
                })
                .collect(),
        )
        .unwrap();
        let bb = Aabb::new(Vec3::splat(-45.0), Vec3::splat(45.0));
        let report = agreement_report(
            &region,
            &scene,
            &poly,
            d_max,
            &bb,
            &TriangleMesh::empty(),
            &AgreementParams { n_samples: 20_000, boundary_margin: 0.5, seed: 42, samples_per_edge: 8 },
        );
        assert!(report.agreement_rate >= 0.999, "rate {}", report.agreement_rate);
        // empty surface: every sample counts as restricted
        assert_eq!(report.restricted_n, report.n_samples);
    }

    #[test]
    fn report_deterministic_for_seed() {
        let scene = wall_scene();
        let poly = ground_triangle();
        let grid = AngularGrid::new(16, 8).unwrap();
        let region = ImplicitRegion::VisibilitySphere(Arc::new(DepthSphere::uniform(
            Vec3::ZERO,
            grid,
            30.0,
            30.0,
        )));
        let bb = Aabb::new(Vec3::splat(-35.0), Vec3::splat(35.0));
        let params = AgreementParams { n_samples: 2_000, boundary_margin: 1.0, seed: 7, samples_per_edge: 4 };
        let a = agreement_report(&region, &scene, &poly, 30.0, &bb, &TriangleMesh::empty(), &params);
        let b = agreement_report(&region, &scene, &poly, 30.0, &bb, &TriangleMesh::empty(), &params);
        assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    }

    #[test]
    fn boundary_margin_restriction_is_monotone() {
        // with a real surface, the restricted rate at positive margin can
        // only improve on the unrestricted rate
        let scene = Scene::new(TriangleMesh::empty());
        let poly = ground_triangle();
        let d_max = 30.0;
        let grid = AngularGrid::new(24, 12).unwrap();
        let region = intersect_regions(
            poly.vertices()
                .iter()
                .map(|&v| {
                    ImplicitRegion::VisibilitySphere(Arc::new(DepthSphere::uniform(v, grid, d_max, d_max)))
                })
                .collect(),
        )
        .unwrap();
        let extraction = crate::region::ExtractionGrid::cube_padded(
            &Aabb::new(Vec3::splat(-32.0), Vec3::splat(32.0)),
            48,
            2,
        )
        .unwrap();
        let surface = crate::extract::extract_surface(&region, &extraction);
        assert!(surface.triangle_count() > 0);
        let bb = Aabb::new(Vec3::splat(-35.0), Vec3::splat(35.0));
        let at = |margin: f64| {
            agreement_report(
                &region,
                &scene,
                &poly,
                d_max,
                &bb,
                &surface,
                &AgreementParams { n_samples: 5_000, boundary_margin: margin, seed: 3, samples_per_edge: 4 },
            )
        };
        let loose = at(0.0);
        let tight = at(extraction.max_cell_size() * 2.0);
        assert!(tight.restricted_rate >= loose.agreement_rate - 1e-12);
        assert!(tight.restricted_n < loose.restricted_n);
    }
}
