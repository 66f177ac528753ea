//! File formats: GeoJSON footprints and districts, assessment and report
//! CSVs, PGM masks with world files, and the JSON-lines warning sidecar.

mod geojson;
mod masks;
mod tables;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;
use thiserror::Error;

use crate::analytics::Utilizations;
use crate::geometry::{LocalProjection, Point2};
use crate::instances::InstanceError;
use crate::panel_fit::PanelSpec;
use crate::pvout_raster::{NodataPolicy, RasterError};

pub use geojson::{
    footprints_geojson, panels_geojson, parse_districts, parse_footprints, read_districts, read_footprints,
    DistrictSet, FootprintSet,
};
pub use masks::{read_mask, read_mask_pair, read_world_file};
pub use tables::{
    district_reports_csv, district_reports_geojson, parse_assessments, read_assessments, write_assessments,
    AssessmentTable,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{source_name}: {message}")]
    Format { source_name: String, message: String },
    #[error("{path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Instances(#[from] InstanceError),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
    move |source| IoError::Io { path: path.to_path_buf(), source }
}

pub(crate) fn read_text(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(io_err(path))
}

/// Writes `bytes` to `path`, creating parent directories.
pub fn write_bytes(path: impl AsRef<Path>, bytes: &[u8]) -> Result<(), IoError> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    fs::write(path, bytes).map_err(io_err(path))
}

/// Coordinate reference of vector inputs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrsMode {
    /// Projected meters, used as is.
    #[default]
    Projected,
    /// Lon/lat degrees, projected locally to meters on read.
    Wgs84,
}

impl FromStr for CrsMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "projected" | "meters" => Ok(CrsMode::Projected),
            "wgs84" | "degrees" | "epsg:4326" => Ok(CrsMode::Wgs84),
            other => Err(format!("unknown CRS mode {other:?} (expected projected or wgs84)")),
        }
    }
}

impl fmt::Display for CrsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CrsMode::Projected => "projected",
            CrsMode::Wgs84 => "wgs84",
        })
    }
}

/// Output coordinate frame: working meters, or degrees via a projection.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct OutputFrame {
    pub projection: Option<LocalProjection>,
}

impl OutputFrame {
    pub fn new(projection: Option<LocalProjection>) -> Self {
        Self { projection }
    }

    pub fn to_output(&self, p: Point2) -> Point2 {
        match &self.projection {
            None => p,
            Some(proj) => {
                let (lon, lat) = proj.inverse(p);
                Point2::new(lon, lat)
            }
        }
    }

    pub fn to_working(&self, p: Point2) -> Point2 {
        match &self.projection {
            None => p,
            Some(proj) => proj.forward(p.x, p.y),
        }
    }

    /// 6 decimals for meters, 8 for degrees (about 1 mm at the equator).
    pub fn decimals(&self) -> usize {
        if self.projection.is_some() {
            8
        } else {
            6
        }
    }
}

/// One skipped or degraded input item.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Warning {
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub feature_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub message: String,
}

impl Warning {
    pub fn new(source: impl Into<String>, feature_index: Option<usize>, id: Option<String>, message: impl Into<String>) -> Self {
        Self { source: source.into(), feature_index, id, message: message.into() }
    }
}

/// One JSON object per line.
pub fn warnings_jsonl(warnings: &[Warning]) -> String {
    let mut out = String::new();
    for w in warnings {
        out.push_str(&serde_json::to_string(w).expect("warning serializes"));
        out.push('\n');
    }
    out
}

pub fn write_warnings(path: impl AsRef<Path>, warnings: &[Warning]) -> Result<(), IoError> {
    write_bytes(path, warnings_jsonl(warnings).as_bytes())
}

/// Settings for an assessment run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub footprints_path: PathBuf,
    pub districts_path: Option<PathBuf>,
    pub pvout_path: PathBuf,
    pub panel: PanelSpec,
    pub utilizations: Utilizations,
    pub nodata_policy: NodataPolicy,
    /// m.
    pub heatmap_stride: f64,
    pub crs: CrsMode,
    pub out_dir: PathBuf,
}

impl RunConfig {
    /// Validates raw settings; panel sides and utilization factors are
    /// checked by their own constructors.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        footprints_path: PathBuf,
        districts_path: Option<PathBuf>,
        pvout_path: PathBuf,
        panel_long: f64,
        panel_short: f64,
        p_nominal: f64,
        utilizations: Vec<f64>,
        nodata_policy: NodataPolicy,
        heatmap_stride: f64,
        crs: CrsMode,
        out_dir: PathBuf,
    ) -> Result<Self, IoError> {
        let panel = PanelSpec::new(panel_long, panel_short, p_nominal).map_err(|e| IoError::Config(e.to_string()))?;
        let utilizations = Utilizations::new(utilizations).map_err(|e| IoError::Config(e.to_string()))?;
        if !(heatmap_stride > 0.0 && heatmap_stride.is_finite()) {
            return Err(IoError::Config(format!("heatmap stride must be positive (got {heatmap_stride} m)")));
        }
        Ok(Self {
            footprints_path,
            districts_path,
            pvout_path,
            panel,
            utilizations,
            nodata_policy,
            heatmap_stride,
            crs,
            out_dir,
        })
    }
}

/// Parses `fail` / `nearest`.
pub fn parse_nodata_policy(s: &str) -> Result<NodataPolicy, String> {
    match s.to_ascii_lowercase().as_str() {
        "fail" => Ok(NodataPolicy::Fail),
        "nearest" => Ok(NodataPolicy::Nearest),
        other => Err(format!("unknown nodata policy {other:?} (expected fail or nearest)")),
    }
}

/// Fixed-precision float without a negative zero.
pub(crate) fn fixed(v: f64, decimals: usize) -> String {
    let s = format!("{v:.decimals$}");
    if s.starts_with('-') && s[1..].bytes().all(|b| b == b'0' || b == b'.') {
        s[1..].to_owned()
    } else {
        s
    }
}
