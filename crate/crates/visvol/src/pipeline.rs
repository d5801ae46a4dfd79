//! End-to-end mission run: load the scene, compute per-vertex visibility
//! spheres and the polygon visibility volume, apply navigation
//! constraints, and write meshes plus the JSON run report.

use crate::bvh::Scene;
use crate::config::{ConfigError, MissionConfig};
use crate::io::{load_mesh_with_stats, read_polygon_obj, save_mesh, MeshIoError};
use crate::math::Vec3;
use crate::mesh::TriangleMesh;
use crate::oracle::{agreement_report, AgreementParams};
use crate::polygon::{validate_polygon, PolygonError, PolygonTarget};
use crate::region::RegionError;
use crate::vis_sphere::tessellate_visibility_sphere;
use crate::volume::{apply_nav_constraints, compute_visibility_volume, MeshSummary, RunReport, VolumeError};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("mesh io: {0}")]
    MeshIo(#[from] MeshIoError),
    #[error("polygon: {0}")]
    Polygon(#[from] PolygonError),
    #[error("visibility volume: {0}")]
    Volume(#[from] VolumeError),
    #[error("region: {0}")]
    Region(#[from] RegionError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

pub struct PipelineOutcome {
    pub report: RunReport,
    pub report_path: PathBuf,
    pub output_dir: PathBuf,
    /// every file written, also listed (relative) in the report manifest
    pub outputs: Vec<PathBuf>,
}

/// Defaults for the optional oracle validation pass.
const VALIDATE_SAMPLES: usize = 10_000;
const VALIDATE_SAMPLES_PER_EDGE: usize = 16;

pub fn mission_polygon(cfg: &MissionConfig) -> Result<PolygonTarget, PipelineError> {
    let vertices: Vec<Vec3> = match (&cfg.polygon, &cfg.polygon_obj) {
        (Some(list), None) => list.iter().map(|&a| Vec3::from(a)).collect(),
        (None, Some(path)) => read_polygon_obj(path)?,
        _ => {
            return Err(PipelineError::Config(ConfigError::Invalid {
                key: "polygon".into(),
                msg: "either 'polygon' or 'polygon_obj' is required".into(),
            }))
        }
    };
    Ok(validate_polygon(vertices)?)
}

/// Runs the full mission described by `cfg`, writing outputs under
/// `output_dir`. An empty navigable volume is a success with a warning,
/// not an error.
pub fn run_pipeline(cfg: &MissionConfig, output_dir: &Path) -> Result<PipelineOutcome, PipelineError> {
    cfg.validate_values()?;
    std::fs::create_dir_all(output_dir).map_err(|source| PipelineError::Write {
        path: output_dir.display().to_string(),
        source,
    })?;

    let (scene_mesh, load_stats) = load_mesh_with_stats(&cfg.scene)?;
    let polygon = mission_polygon(cfg)?;
    let scene = Scene::new(scene_mesh);
    let params = cfg.to_volume_params();

    let mut volume = compute_visibility_volume(&polygon, &scene, &params)?;
    if load_stats.dropped_degenerate > 0 {
        volume.report.warnings.insert(
            0,
            format!("scene load dropped {} degenerate triangles", load_stats.dropped_degenerate),
        );
    }

    let mut outputs: Vec<PathBuf> = Vec::new();
    let write_mesh = |mesh: &TriangleMesh, name: &str, outputs: &mut Vec<PathBuf>| -> Result<(), PipelineError> {
        let path = output_dir.join(name);
        save_mesh(mesh, &path)?;
        outputs.push(path);
        Ok(())
    };

    for (i, sphere) in volume.vertex_spheres.iter().enumerate() {
        let mesh = tessellate_visibility_sphere(sphere);
        write_mesh(&mesh, &format!("sphere_{i:03}.obj"), &mut outputs)?;
    }

    if volume.mesh.triangle_count() > 0 {
        write_mesh(&volume.mesh, "visibility_volume.obj", &mut outputs)?;
    }

    let constraints = cfg.nav_regions();
    if !constraints.is_empty() {
        let (_combined, nav_mesh) = apply_nav_constraints(&volume.region, &constraints, &volume.grid)?;
        let summary = MeshSummary::of(&nav_mesh);
        if summary.empty {
            volume
                .report
                .warnings
                .push("navigable visibility volume is empty under the given constraints".into());
        } else {
            write_mesh(&nav_mesh, "navigable_volume.obj", &mut outputs)?;
        }
        volume.report.navigable = Some(summary);
    }

    if cfg.validate {
        let report = agreement_report(
            &volume.region,
            &scene,
            &polygon,
            cfg.d_max,
            volume.grid.bounds(),
            &volume.mesh,
            &AgreementParams {
                n_samples: VALIDATE_SAMPLES,
                boundary_margin: volume.grid.max_cell_size(),
                seed: cfg.seed,
                samples_per_edge: VALIDATE_SAMPLES_PER_EDGE,
            },
        );
        volume.report.validation = Some(report);
    }

    let report_path = output_dir.join("report.json");
    outputs.push(report_path.clone());
    volume.report.outputs = outputs
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();

    let json = serde_json::to_string_pretty(&volume.report).expect("report serializes");
    std::fs::write(&report_path, json).map_err(|source| PipelineError::Write {
        path: report_path.display().to_string(),
        source,
    })?;

    Ok(PipelineOutcome {
        report: volume.report,
        report_path,
        output_dir: output_dir.to_path_buf(),
        outputs,
    })
}
