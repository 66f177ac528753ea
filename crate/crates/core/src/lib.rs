//! Rooftop photovoltaic potential at building-footprint scale.
//!
//! The crate covers the pipeline downstream of a building segmentation model:
//! turning building/border probability masks into footprint polygons
//! ([`instances`]), fitting PV panels on each footprint ([`panel_fit`]),
//! sampling yearly PV output ([`pvout_raster`]), and aggregating per-roof
//! energy into district reports, histograms and heatmaps ([`analytics`]).
//! [`pipeline`] runs the per-building work in parallel with deterministic
//! output; [`io`] reads and writes the exchange formats.

pub mod analytics;
pub mod geometry;
pub mod instances;
pub mod io;
pub mod panel_fit;
pub mod pipeline;
pub mod pvout_raster;

pub use geometry::{FootprintPolygon, GeometryError, OrientedRect, Point2};
pub use panel_fit::{fit_panels, PanelLayout, PanelSpec};
pub use pvout_raster::{AsciiGrid, NodataPolicy, PvOutGrid, RasterError};
