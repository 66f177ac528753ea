//! Batch stages over many buildings.
//!
//! Per-building work runs on the current rayon pool. Results are put back in
//! building-id order before anything is summed or written, so output does not
//! depend on the number of threads.

use rayon::prelude::*;
use thiserror::Error;

use crate::analytics::{
    assign_districts, district_report, unassigned_report, AnalyticsError, District, DistrictReport,
    RooftopAssessment, Utilizations,
};
use crate::geometry::{FootprintPolygon, GeometryError};
use crate::instances::{
    regularize, trace_polygon, watershed_instances, InstanceError, MaskPair, RegularizeParams, WatershedParams,
};
use crate::io::Warning;
use crate::panel_fit::{fit_panels, PanelLayout, PanelSpec};
use crate::pvout_raster::{NodataPolicy, PvOutGrid, RasterError};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("building {id}: {source}")]
    Geometry { id: String, source: GeometryError },
    #[error(transparent)]
    Raster(#[from] RasterError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
}

/// Panel layout, PV_out sample and energy for one roof.
pub fn assess_building(
    poly: &FootprintPolygon,
    spec: &PanelSpec,
    grid: &PvOutGrid,
    policy: NodataPolicy,
    utilizations: &Utilizations,
) -> Result<(RooftopAssessment, PanelLayout), PipelineError> {
    let layout = fit_panels(poly, spec).map_err(|source| PipelineError::Geometry { id: poly.id().to_owned(), source })?;
    let pv_out = grid.sample_for_building(poly, policy)?;
    let a = RooftopAssessment::new(poly.id(), layout.count(), pv_out, poly.area(), poly.centroid(), spec, utilizations);
    Ok((a, layout))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessed {
    /// Sorted by building id.
    pub assessments: Vec<RooftopAssessment>,
    /// Same order as `assessments`; empty unless layouts were requested.
    pub layouts: Vec<PanelLayout>,
}

/// Assesses every footprint in parallel. On failure the error of the first
/// failing footprint in input order is returned.
pub fn assess_all(
    footprints: &[FootprintPolygon],
    spec: &PanelSpec,
    grid: &PvOutGrid,
    policy: NodataPolicy,
    utilizations: &Utilizations,
    keep_layouts: bool,
) -> Result<Assessed, PipelineError> {
    let results: Vec<Result<(RooftopAssessment, Option<PanelLayout>), PipelineError>> = footprints
        .par_iter()
        .map(|poly| {
            let (a, layout) = assess_building(poly, spec, grid, policy, utilizations)?;
            Ok((a, keep_layouts.then_some(layout)))
        })
        .collect();
    let mut pairs = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    pairs.par_sort_by(|x, y| x.0.building_id.cmp(&y.0.building_id));
    let (assessments, layouts): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
    Ok(Assessed { assessments, layouts: layouts.into_iter().flatten().collect() })
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct InstanceParams {
    pub watershed: WatershedParams,
    pub regularize: RegularizeParams,
}

/// Splits the masks into instances and returns one regularized footprint per
/// instance, in label order. Instances that collapse under simplification
/// are reported as warnings.
pub fn extract_footprints(masks: &MaskPair, params: &InstanceParams) -> (Vec<FootprintPolygon>, Vec<Warning>) {
    let labels = watershed_instances(masks, &params.watershed);
    let results: Vec<Result<FootprintPolygon, InstanceError>> = (1..=labels.count())
        .into_par_iter()
        .map(|k| {
            let traced = trace_polygon(&labels, k, masks.geo())?;
            regularize(&traced, &params.regularize)
        })
        .collect();
    let mut footprints = Vec::new();
    let mut warnings = Vec::new();
    for (k, r) in (1..=labels.count()).zip(results) {
        match r {
            Ok(p) => footprints.push(p),
            Err(e) => warnings.push(Warning::new("instances", None, Some(k.to_string()), e.to_string())),
        }
    }
    (footprints, warnings)
}

/// One report per district in input order, followed by an `unassigned` row
/// when some buildings fall outside every district. Members are summed in
/// building-id order.
pub fn aggregate(
    assessments: &[RooftopAssessment],
    districts: &[District],
    grid: &PvOutGrid,
    spec: &PanelSpec,
    utilizations: &Utilizations,
) -> Result<Vec<DistrictReport>, PipelineError> {
    let mut sorted: Vec<&RooftopAssessment> = assessments.iter().collect();
    sorted.sort_by(|a, b| a.building_id.cmp(&b.building_id));
    let assignment = assign_districts(sorted.iter().copied(), districts);

    let mut members: Vec<Vec<&RooftopAssessment>> = vec![Vec::new(); districts.len()];
    let mut unassigned = Vec::new();
    for (a, slot) in sorted.iter().zip(&assignment) {
        match slot {
            Some(i) => members[*i].push(*a),
            None => unassigned.push(*a),
        }
    }
    let mut reports = districts
        .par_iter()
        .zip(members.par_iter())
        .map(|(d, m)| district_report(d, m, grid, spec, utilizations))
        .collect::<Vec<_>>()
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    if !unassigned.is_empty() {
        reports.push(unassigned_report(&unassigned, utilizations)?);
    }
    Ok(reports)
}
