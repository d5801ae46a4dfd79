//! Mission configuration: a small versioned YAML schema covering the
//! scene, the target polygon, ranges and resolutions, navigation
//! constraints and backend switches.

use crate::math::Vec3;
use crate::mesh::Aabb;
use crate::region::{altitude_band, box_region, ImplicitRegion};
use crate::volume::{Backend, VolumeParams};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Yaml { path: String, source: serde_yaml::Error },
    #[error("config key '{key}': {msg}")]
    Invalid { key: String, msg: String },
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct BoxConstraint {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct AltitudeConstraint {
    pub z_lo: f64,
    pub z_hi: f64,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct NavConstraints {
    #[serde(rename = "box", default, skip_serializing_if = "Option::is_none")]
    pub box_constraint: Option<BoxConstraint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub altitude: Option<AltitudeConstraint>,
}

impl NavConstraints {
    pub fn is_empty(&self) -> bool {
        self.box_constraint.is_none() && self.altitude.is_none()
    }
}

fn default_schema_version() -> u32 {
    1
}

fn default_n_phi() -> usize {
    160
}

fn default_n_theta() -> usize {
    80
}

fn default_resolution() -> [usize; 3] {
    [96, 96, 96]
}

fn default_face_res() -> usize {
    256
}

/// One visibility mission. Units are meters throughout; resolutions are
/// sample counts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MissionConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u32,
    /// scene mesh path (OBJ or binary PLY), relative to the config file
    pub scene: PathBuf,
    /// inline polygon vertices; exactly one of `polygon` / `polygon_obj`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon: Option<Vec<[f64; 3]>>,
    /// vertices-only OBJ polyline exported from a modeling tool
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polygon_obj: Option<PathBuf>,
    pub d_max: f64,
    #[serde(default = "default_n_phi")]
    pub n_phi: usize,
    #[serde(default = "default_n_theta")]
    pub n_theta: usize,
    #[serde(default = "default_resolution")]
    pub resolution: [usize; 3],
    #[serde(default)]
    pub nav: NavConstraints,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default = "default_face_res")]
    pub face_res: usize,
    #[serde(default)]
    pub validate: bool,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

impl MissionConfig {
    pub fn new(scene: impl Into<PathBuf>, polygon: Vec<Vec3>, d_max: f64) -> MissionConfig {
        MissionConfig {
            schema_version: 1,
            scene: scene.into(),
            polygon: Some(polygon.into_iter().map(Vec3::to_array).collect()),
            polygon_obj: None,
            d_max,
            n_phi: default_n_phi(),
            n_theta: default_n_theta(),
            resolution: default_resolution(),
            nav: NavConstraints::default(),
            backend: Backend::Raycast,
            face_res: default_face_res(),
            validate: false,
            seed: 0,
            output_dir: None,
        }
    }

    pub fn validate_values(&self) -> Result<(), ConfigError> {
        let invalid = |key: &str, msg: String| ConfigError::Invalid { key: key.into(), msg };
        if self.schema_version != 1 {
            return Err(invalid("schema_version", format!("unsupported version {}", self.schema_version)));
        }
        if self.d_max <= 0.0 || self.d_max.is_nan() {
            return Err(invalid("d_max", format!("must be positive, got {}", self.d_max)));
        }
        if !(4..=4096).contains(&self.n_phi) {
            return Err(invalid("n_phi", format!("must be in [4, 4096], got {}", self.n_phi)));
        }
        if !(2..=2048).contains(&self.n_theta) {
            return Err(invalid("n_theta", format!("must be in [2, 2048], got {}", self.n_theta)));
        }
        for (axis, n) in ["x", "y", "z"].iter().zip(self.resolution) {
            if !(8..=512).contains(&n) {
                return Err(invalid("resolution", format!("{axis} cells must be in [8, 512], got {n}")));
            }
        }
        if !(8..=4096).contains(&self.face_res) {
            return Err(invalid("face_res", format!("must be in [8, 4096], got {}", self.face_res)));
        }
        match (&self.polygon, &self.polygon_obj) {
            (None, None) => {
                return Err(invalid("polygon", "either 'polygon' or 'polygon_obj' is required".into()))
            }
            (Some(_), Some(_)) => {
                return Err(invalid("polygon", "'polygon' and 'polygon_obj' are mutually exclusive".into()))
            }
            (Some(p), None) if p.len() < 3 => {
                return Err(invalid("polygon", format!("needs at least 3 vertices, got {}", p.len())))
            }
            _ => {}
        }
        if let Some(band) = &self.nav.altitude {
            if band.z_lo >= band.z_hi {
                return Err(invalid(
                    "nav.altitude",
                    format!("z_lo {} must be below z_hi {}", band.z_lo, band.z_hi),
                ));
            }
        }
        if let Some(bc) = &self.nav.box_constraint {
            for axis in 0..3 {
                if bc.min[axis] >= bc.max[axis] {
                    return Err(invalid(
                        "nav.box",
                        format!("min {:?} must be below max {:?}", bc.min, bc.max),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_volume_params(&self) -> VolumeParams {
        VolumeParams {
            d_max: self.d_max,
            n_phi: self.n_phi,
            n_theta: self.n_theta,
            resolution: self.resolution,
            backend: self.backend,
            face_res: self.face_res,
            ..VolumeParams::new(self.d_max)
        }
    }

    /// Navigation constraints as implicit regions, in a fixed order.
    pub fn nav_regions(&self) -> Vec<ImplicitRegion> {
        let mut regions = Vec::new();
        if let Some(bc) = &self.nav.box_constraint {
            regions.push(box_region(Aabb::new(Vec3::from(bc.min), Vec3::from(bc.max))));
        }
        if let Some(band) = &self.nav.altitude {
            regions.push(altitude_band(band.z_lo, band.z_hi).expect("validated band"));
        }
        regions
    }
}

/// Reads and validates a YAML mission config. Relative scene and polygon
/// paths are resolved against the config file's directory.
pub fn parse_config(path: impl AsRef<Path>) -> Result<MissionConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut cfg: MissionConfig = serde_yaml::from_str(&text).map_err(|source| ConfigError::Yaml {
        path: path.display().to_string(),
        source,
    })?;
    cfg.validate_values()?;

    if let Some(dir) = path.parent() {
        if cfg.scene.is_relative() {
            cfg.scene = dir.join(&cfg.scene);
        }
        if let Some(p) = &cfg.polygon_obj {
            if p.is_relative() {
                cfg.polygon_obj = Some(dir.join(p));
            }
        }
        if let Some(p) = &cfg.output_dir {
            if p.is_relative() {
                cfg.output_dir = Some(dir.join(p));
            }
        }
    }
    Ok(cfg)
}
