//! Per-rooftop energy, district aggregation, histograms and heatmaps.
//!
//! Energies are carried in MWh/year throughout; GWh and TWh appear only when
//! reports are written out.

use std::fmt;
use std::ops::{Add, AddAssign};

use thiserror::Error;

use crate::geometry::{point_in_polygon, BBox, FootprintPolygon, Point2};
use crate::panel_fit::PanelSpec;
use crate::pvout_raster::{AsciiGrid, PvOutGrid, RasterError};

/// Average yearly household consumption, MWh.
pub const HOUSEHOLD_CONSUMPTION_MWH: f64 = 5.41;
pub const DEFAULT_UTILIZATION: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];
/// Histogram edges in MWh/year.
pub const DEFAULT_HISTOGRAM_EDGES: [f64; 5] = [1.0, 10.0, 50.0, 100.0, 350.0];
/// SP at or above this is kept but counted as a likely segmentation error.
pub const OVERFLOW_SP_MWH: f64 = 350.0;
pub const DEFAULT_WINDOW_AREA_M2: f64 = 4.0e6;
pub const DEFAULT_STRIDE_M: f64 = 500.0;
pub const HEATMAP_NODATA: f64 = -9999.0;

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("utilization factors must lie in (0, 1] and increase strictly (got {0:?})")]
    Utilization(Vec<f64>),
    #[error("utilization {u} missing from assessment {building_id}")]
    MissingUtilization { building_id: String, u: f64 },
    #[error("standard error needs at least 2 samples (got {0})")]
    InsufficientSamples(usize),
    #[error("histogram edges must be finite and strictly increasing")]
    Edges,
    #[error("district {0} has no polygon parts")]
    EmptyDistrict(String),
    #[error("heatmap window area and stride must be positive (got {window_area} m2, {stride} m)")]
    Window { window_area: f64, stride: f64 },
    #[error("heatmap has no buildings and no extent")]
    EmptyHeatmap,
    #[error(transparent)]
    Raster(#[from] RasterError),
}

/// Yearly energy, stored in MWh.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Energy(f64);

impl Energy {
    pub const ZERO: Energy = Energy(0.0);

    pub fn from_mwh(mwh: f64) -> Self {
        Energy(mwh)
    }

    pub fn mwh(self) -> f64 {
        self.0
    }

    pub fn gwh(self) -> f64 {
        self.0 / 1e3
    }

    pub fn twh(self) -> f64 {
        self.0 / 1e6
    }
}

impl Add for Energy {
    type Output = Energy;
    fn add(self, rhs: Energy) -> Energy {
        Energy(self.0 + rhs.0)
    }
}

impl AddAssign for Energy {
    fn add_assign(&mut self, rhs: Energy) {
        self.0 += rhs.0;
    }
}

impl fmt::Display for Energy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.4} MWh/year", self.0)
    }
}

/// Strictly increasing utilization factors in (0, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct Utilizations(Vec<f64>);

impl Utilizations {
    pub fn new(values: Vec<f64>) -> Result<Self, AnalyticsError> {
        let in_range = values.iter().all(|&u| u > 0.0 && u <= 1.0);
        let increasing = values.windows(2).all(|w| w[0] < w[1]);
        if values.is_empty() || !in_range || !increasing {
            return Err(AnalyticsError::Utilization(values));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Column suffix for `u`: 0.25 → "u25".
    pub fn label(u: f64) -> String {
        let pct = u * 100.0;
        if (pct - pct.round()).abs() < 1e-9 {
            format!("u{}", pct.round() as i64)
        } else {
            format!("u{}", pct).replace('.', "_")
        }
    }

    /// Inverse of [`Utilizations::label`].
    pub fn parse_label(label: &str) -> Option<f64> {
        let pct: f64 = label.strip_prefix('u')?.replace('_', ".").parse().ok()?;
        Some(pct / 100.0)
    }
}

impl Default for Utilizations {
    fn default() -> Self {
        Self(DEFAULT_UTILIZATION.to_vec())
    }
}

/// Rooftop solar potential with a utilization factor: `n · u · p_nominal · pv_out`, MWh/year.
///
/// `u` scales the panel count continuously, without rounding.
pub fn solar_potential(n_panels: usize, spec: &PanelSpec, pv_out: f64, u: f64) -> f64 {
    n_panels as f64 * u * spec.p_nominal() * pv_out
}

/// Households whose yearly consumption `sp` covers, to one decimal
/// (round half to even).
pub fn households_served(sp: f64, household_consumption: f64) -> f64 {
    (sp / household_consumption * 10.0).round_ties_even() / 10.0
}

/// Sample standard deviation over √n.
pub fn standard_error(values: &[f64]) -> Result<f64, AnalyticsError> {
    let n = values.len();
    if n < 2 {
        return Err(AnalyticsError::InsufficientSamples(n));
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    Ok((ss / (n - 1) as f64).sqrt() / (n as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct RooftopAssessment {
    pub building_id: String,
    pub panel_count: usize,
    /// MWh/kWp.
    pub pv_out: f64,
    /// m².
    pub footprint_area: f64,
    /// Footprint centroid, working frame.
    pub centroid: Point2,
    /// `(u, SP)` pairs in increasing `u`, SP in MWh/year.
    pub sp_by_u: Vec<(f64, f64)>,
}

impl RooftopAssessment {
    pub fn new(
        building_id: impl Into<String>,
        panel_count: usize,
        pv_out: f64,
        footprint_area: f64,
        centroid: Point2,
        spec: &PanelSpec,
        utilizations: &Utilizations,
    ) -> Self {
        let sp_by_u = utilizations
            .values()
            .iter()
            .map(|&u| (u, solar_potential(panel_count, spec, pv_out, u)))
            .collect();
        Self { building_id: building_id.into(), panel_count, pv_out, footprint_area, centroid, sp_by_u }
    }

    pub fn sp_at(&self, u: f64) -> Option<f64> {
        self.sp_by_u.iter().find(|(v, _)| *v == u).map(|&(_, sp)| sp)
    }

    fn require_sp(&self, u: f64) -> Result<f64, AnalyticsError> {
        self.sp_at(u)
            .ok_or_else(|| AnalyticsError::MissingUtilization { building_id: self.building_id.clone(), u })
    }
}

/// A named district, possibly made of several polygons.
#[derive(Debug, Clone, PartialEq)]
pub struct District {
    pub name: String,
    pub parts: Vec<FootprintPolygon>,
    /// Total area of `parts`, m².
    pub area_a_t: f64,
    bbox: BBox,
}

impl District {
    pub fn new(name: impl Into<String>, parts: Vec<FootprintPolygon>) -> Result<Self, AnalyticsError> {
        let name = name.into();
        if parts.is_empty() {
            return Err(AnalyticsError::EmptyDistrict(name));
        }
        let area_a_t = parts.iter().map(FootprintPolygon::area).sum();
        let bbox = parts.iter().fold(BBox::empty(), |b, p| b.union(&p.bbox()));
        Ok(Self { name, parts, area_a_t, bbox })
    }

    /// Closed containment: boundary points count as inside.
    pub fn contains(&self, p: Point2) -> bool {
        self.bbox.contains(p) && self.parts.iter().any(|part| point_in_polygon(part, p))
    }

    pub fn bbox(&self) -> BBox {
        self.bbox
    }
}

/// District index for each assessment, by footprint centroid. A centroid on
/// a boundary shared by several districts goes to the name that sorts first.
pub fn assign_districts<'a>(
    assessments: impl IntoIterator<Item = &'a RooftopAssessment>,
    districts: &[District],
) -> Vec<Option<usize>> {
    assessments
        .into_iter()
        .map(|a| {
            districts
                .iter()
                .enumerate()
                .filter(|(_, d)| d.contains(a.centroid))
                .min_by(|(_, x), (_, y)| x.name.cmp(&y.name))
                .map(|(i, _)| i)
        })
        .collect()
}

/// Ground coverage ratio: built-up footprint area over district area.
pub fn ground_coverage_ratio<'a>(
    buildings: impl IntoIterator<Item = &'a RooftopAssessment>,
    district: &District,
) -> f64 {
    let built: f64 = buildings.into_iter().map(|a| a.footprint_area).sum();
    built / district.area_a_t
}

/// Energy if the whole (flat) district were covered by panels, at the
/// district-mean PV_out. The panel count is not floored.
pub fn hypothetical_capacity(district: &District, spec: &PanelSpec, grid: &PvOutGrid) -> Result<Energy, AnalyticsError> {
    let mean = grid.district_mean_pvout(&district.name, &district.parts)?;
    Ok(Energy::from_mwh(district.area_a_t / spec.panel_area() * spec.p_nominal() * mean))
}

/// Aggregate figures for one district, or for the buildings outside every
/// district (in which case the area-based fields are `None`).
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictReport {
    pub name: String,
    pub building_count: usize,
    pub utilizations: Vec<f64>,
    pub tsp_by_u: Vec<Energy>,
    /// MWh/year per building; 0 for an empty district.
    pub asp_by_u: Vec<f64>,
    /// `None` with fewer than 2 buildings.
    pub se_by_u: Vec<Option<f64>>,
    pub gcr: Option<f64>,
    pub hc: Option<Energy>,
    /// TSP at u = 1 over HC; `None` when u = 1 is not among the factors.
    pub tsp_over_hc: Option<f64>,
    /// Buildings with SP(u = 1) at or above [`OVERFLOW_SP_MWH`].
    pub overflow_count: usize,
}

fn energy_summary(
    name: &str,
    members: &[&RooftopAssessment],
    utilizations: &Utilizations,
) -> Result<DistrictReport, AnalyticsError> {
    let n = members.len();
    let mut tsp_by_u = Vec::with_capacity(utilizations.len());
    let mut asp_by_u = Vec::with_capacity(utilizations.len());
    let mut se_by_u = Vec::with_capacity(utilizations.len());
    for &u in utilizations.values() {
        let sps = members.iter().map(|a| a.require_sp(u)).collect::<Result<Vec<f64>, _>>()?;
        let mut total = 0.0;
        for sp in &sps {
            total += sp;
        }
        tsp_by_u.push(Energy::from_mwh(total));
        asp_by_u.push(if n == 0 { 0.0 } else { total / n as f64 });
        se_by_u.push(standard_error(&sps).ok());
    }
    let overflow_count = members
        .iter()
        .filter(|a| a.sp_by_u.last().map_or(false, |&(_, sp)| sp >= OVERFLOW_SP_MWH))
        .count();
    Ok(DistrictReport {
        name: name.to_owned(),
        building_count: n,
        utilizations: utilizations.values().to_vec(),
        tsp_by_u,
        asp_by_u,
        se_by_u,
        gcr: None,
        hc: None,
        tsp_over_hc: None,
        overflow_count,
    })
}

/// Report for the buildings assigned to `district`, in the order given.
pub fn district_report(
    district: &District,
    members: &[&RooftopAssessment],
    grid: &PvOutGrid,
    spec: &PanelSpec,
    utilizations: &Utilizations,
) -> Result<DistrictReport, AnalyticsError> {
    let mut report = energy_summary(&district.name, members, utilizations)?;
    let hc = hypothetical_capacity(district, spec, grid)?;
    report.gcr = Some(ground_coverage_ratio(members.iter().copied(), district));
    report.tsp_over_hc = utilizations
        .values()
        .iter()
        .position(|&u| u == 1.0)
        .map(|i| report.tsp_by_u[i].mwh() / hc.mwh());
    report.hc = Some(hc);
    Ok(report)
}

/// Report row for buildings outside every district.
pub fn unassigned_report(
    members: &[&RooftopAssessment],
    utilizations: &Utilizations,
) -> Result<DistrictReport, AnalyticsError> {
    energy_summary("unassigned", members, utilizations)
}

/// Counts per bin: underflow (`< edges[0]`), the half-open bins
/// `[edges[i], edges[i+1])`, and overflow (`>= edges[last]`).
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn underflow(&self) -> usize {
        self.counts[0]
    }

    pub fn overflow(&self) -> usize {
        self.counts[self.counts.len() - 1]
    }

    /// Percent of all values per bin; all zero for an empty histogram.
    pub fn percentages(&self) -> Vec<f64> {
        let total = self.total();
        self.counts
            .iter()
            .map(|&c| if total == 0 { 0.0 } else { 100.0 * c as f64 / total as f64 })
            .collect()
    }
}

pub fn sp_histogram(values: impl IntoIterator<Item = f64>, edges: &[f64]) -> Result<Histogram, AnalyticsError> {
    if edges.is_empty() || edges.iter().any(|e| !e.is_finite()) || edges.windows(2).any(|w| w[0] >= w[1]) {
        return Err(AnalyticsError::Edges);
    }
    let mut counts = vec![0usize; edges.len() + 1];
    for v in values {
        counts[edges.partition_point(|&e| e <= v)] += 1;
    }
    Ok(Histogram { edges: edges.to_vec(), counts })
}

/// SP at `u` for every assessment, in input order.
pub fn sp_values(assessments: &[RooftopAssessment], u: f64) -> Result<Vec<f64>, AnalyticsError> {
    assessments.iter().map(|a| a.require_sp(u)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatmapParams {
    /// m²; the window is a square of side √window_area.
    pub window_area: f64,
    /// m; also the output cell size.
    pub stride: f64,
    /// Output extent. Without one, the centroid extent padded by half a
    /// window and snapped outward to multiples of the stride is used.
    pub extent: Option<BBox>,
}

impl Default for HeatmapParams {
    fn default() -> Self {
        Self { window_area: DEFAULT_WINDOW_AREA_M2, stride: DEFAULT_STRIDE_M, extent: None }
    }
}

/// Mean SP of the buildings whose centroid lies in a square window centered
/// on each output cell.
///
/// A window covers `[c - s/2, c + s/2)` on both axes around cell center `c`.
/// Cells whose window holds no building are nodata (-9999).
pub fn sliding_window_heatmap(points: &[(Point2, f64)], params: &HeatmapParams) -> Result<AsciiGrid, AnalyticsError> {
    let HeatmapParams { window_area, stride, extent } = *params;
    if !(window_area > 0.0 && window_area.is_finite() && stride > 0.0 && stride.is_finite()) {
        return Err(AnalyticsError::Window { window_area, stride });
    }
    let side = window_area.sqrt();
    let half = 0.5 * side;

    let (x0, y0, ncols, nrows) = match extent {
        Some(e) if !e.is_empty() => {
            let ncols = (((e.max_x - e.min_x) / stride).ceil() as usize).max(1);
            let nrows = (((e.max_y - e.min_y) / stride).ceil() as usize).max(1);
            (e.min_x, e.min_y, ncols, nrows)
        }
        _ => {
            if points.is_empty() {
                return Err(AnalyticsError::EmptyHeatmap);
            }
            let bb = BBox::of_points(points.iter().map(|(p, _)| p));
            let x0 = ((bb.min_x - half) / stride).floor() * stride;
            let y0 = ((bb.min_y - half) / stride).floor() * stride;
            let x1 = ((bb.max_x + half) / stride).ceil() * stride;
            let y1 = ((bb.max_y + half) / stride).ceil() * stride;
            let ncols = (((x1 - x0) / stride).round() as usize).max(1);
            let nrows = (((y1 - y0) / stride).round() as usize).max(1);
            (x0, y0, ncols, nrows)
        }
    };

    let center_x = |col: usize| x0 + (col as f64 + 0.5) * stride;
    // Counted from the south edge.
    let center_y = |k: usize| y0 + (k as f64 + 0.5) * stride;
    let covers = |c: f64, v: f64| c - half <= v && v < c + half;
    // Index range of cell centers that may cover `v`, widened by one on each
    // side; `covers` decides exactly.
    let span = |v: f64, origin: f64, n: usize| -> (usize, usize) {
        let lo = ((v - half - origin) / stride - 0.5).floor() - 1.0;
        let hi = ((v + half - origin) / stride - 0.5).floor() + 1.0;
        let clamp = |t: f64| t.max(0.0).min(n as f64) as usize;
        (clamp(lo), clamp(hi + 1.0))
    };

    let mut mean = vec![0.0f64; ncols * nrows];
    let mut count = vec![0u32; ncols * nrows];
    for &(p, sp) in points {
        let (c0, c1) = span(p.x, x0, ncols);
        let (k0, k1) = span(p.y, y0, nrows);
        for k in k0..k1 {
            if !covers(center_y(k), p.y) {
                continue;
            }
            let row = nrows - 1 - k;
            for col in c0..c1 {
                if !covers(center_x(col), p.x) {
                    continue;
                }
                let i = row * ncols + col;
                count[i] += 1;
                mean[i] += (sp - mean[i]) / count[i] as f64;
            }
        }
    }

    let values = mean
        .into_iter()
        .zip(count)
        .map(|(m, c)| if c == 0 { HEATMAP_NODATA } else { m })
        .collect();
    Ok(AsciiGrid { ncols, nrows, xllcorner: x0, yllcorner: y0, cellsize: stride, nodata: HEATMAP_NODATA, values })
}
