//! From building/border probability masks to regularized footprint polygons.
//!
//! The segmentation network itself is out of scope; this module consumes its
//! two output channels (building probability and building-border probability)
//! as 8-bit masks, splits touching buildings with a marker-based watershed,
//! traces each instance's outline on pixel corners and regularizes it.

mod regularize;
mod trace;
mod watershed;

use thiserror::Error;

use crate::geometry::{GeometryError, Point2};

pub use regularize::{douglas_peucker_ring, regularize, RegularizeParams};
pub use trace::trace_polygon;
pub use watershed::{watershed_instances, WatershedParams};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InstanceError {
    #[error("mask dimensions differ: building {building:?}, border {border:?}")]
    DimensionMismatch { building: (usize, usize), border: (usize, usize) },
    #[error("mask buffer holds {got} bytes, expected {expected}")]
    BufferSize { expected: usize, got: usize },
    #[error("georeference transform is not invertible")]
    SingularTransform,
    #[error("instance {0} not present in label map")]
    NotFound(u32),
    #[error("simplification of {id} left fewer than 3 vertices")]
    DegenerateResult { id: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Affine map from pixel-corner coordinates `(col, row)` to projected meters:
/// `x = x0 + a·col + b·row`, `y = y0 + d·col + e·row`.
///
/// `(col, row) = (0, 0)` is the outer corner of the upper-left pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoTransform {
    pub x0: f64,
    pub a: f64,
    pub b: f64,
    pub y0: f64,
    pub d: f64,
    pub e: f64,
}

impl GeoTransform {
    pub fn new(x0: f64, a: f64, b: f64, y0: f64, d: f64, e: f64) -> Result<Self, InstanceError> {
        let t = Self { x0, a, b, y0, d, e };
        if t.determinant() == 0.0 || !t.determinant().is_finite() || !x0.is_finite() || !y0.is_finite() {
            return Err(InstanceError::SingularTransform);
        }
        Ok(t)
    }

    /// Pixel units, rows increasing downward.
    pub fn identity() -> Self {
        Self { x0: 0.0, a: 1.0, b: 0.0, y0: 0.0, d: 0.0, e: 1.0 }
    }

    /// From the six world-file coefficients `[A, D, B, E, C, F]`, where
    /// `(C, F)` is the center of the upper-left pixel.
    pub fn from_world_file(coeffs: [f64; 6]) -> Result<Self, InstanceError> {
        let [a, d, b, e, c, f] = coeffs;
        Self::new(c - 0.5 * a - 0.5 * b, a, b, f - 0.5 * d - 0.5 * e, d, e)
    }

    pub fn determinant(&self) -> f64 {
        self.a * self.e - self.b * self.d
    }

    pub fn apply(&self, col: f64, row: f64) -> Point2 {
        Point2::new(self.x0 + self.a * col + self.b * row, self.y0 + self.d * col + self.e * row)
    }
}

/// The two 8-bit probability channels of one tile, row-major, top row first.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskPair {
    width: usize,
    height: usize,
    building: Vec<u8>,
    border: Vec<u8>,
    geo: GeoTransform,
}

impl MaskPair {
    pub fn new(
        width: usize,
        height: usize,
        building: Vec<u8>,
        border: Vec<u8>,
        geo: GeoTransform,
    ) -> Result<Self, InstanceError> {
        let expected = width * height;
        for got in [building.len(), border.len()] {
            if got != expected {
                return Err(InstanceError::BufferSize { expected, got });
            }
        }
        GeoTransform::new(geo.x0, geo.a, geo.b, geo.y0, geo.d, geo.e)?;
        Ok(Self { width, height, building, border, geo })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn building(&self) -> &[u8] {
        &self.building
    }

    pub fn border(&self) -> &[u8] {
        &self.border
    }

    pub fn geo(&self) -> &GeoTransform {
        &self.geo
    }
}

/// Dense instance labels: 0 background, 1..=count instances.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstanceLabelMap {
    width: usize,
    height: usize,
    labels: Vec<u32>,
    count: u32,
}

impl InstanceLabelMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of instances.
    pub fn count(&self) -> u32 {
        self.count
    }

    pub fn get(&self, col: usize, row: usize) -> u32 {
        self.labels[row * self.width + col]
    }

    pub fn pixel_count(&self, k: u32) -> usize {
        self.labels.iter().filter(|&&l| l == k).count()
    }
}
