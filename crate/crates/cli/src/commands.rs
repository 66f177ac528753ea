use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use solarfit_core::analytics::{sliding_window_heatmap, sp_histogram, sp_values, HeatmapParams, DEFAULT_HISTOGRAM_EDGES};
use solarfit_core::geometry::{BBox, LocalProjection, Point2};
use solarfit_core::instances::{RegularizeParams, WatershedParams};
use solarfit_core::io::{
    self, footprints_geojson, panels_geojson, read_assessments, read_districts, read_footprints, read_mask_pair,
    write_assessments, CrsMode, OutputFrame, RunConfig, Warning,
};
use solarfit_core::panel_fit::PanelSpec;
use solarfit_core::pipeline::{aggregate as aggregate_reports, assess_all, extract_footprints, InstanceParams};
use solarfit_core::pvout_raster::{GridFrame, PvOutGrid};

use crate::{AggregateArgs, AssessArgs, HeatmapArgs, InstancesArgs, PanelArgs};

pub enum Outcome {
    Complete,
    /// Finished, but some inputs were skipped (listed in the warning sidecar).
    Partial,
}

fn outcome(warnings: &[Warning]) -> Outcome {
    if warnings.is_empty() {
        Outcome::Complete
    } else {
        Outcome::Partial
    }
}

fn sidecar(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".warnings.jsonl");
    out.with_file_name(name)
}

fn panel_spec(p: &PanelArgs) -> Result<PanelSpec> {
    Ok(PanelSpec::new(p.panel_long, p.panel_short, p.p_nominal)?)
}

fn load_grid(path: &Path, projection: Option<LocalProjection>) -> Result<PvOutGrid> {
    let grid = PvOutGrid::load(path)?;
    Ok(match projection {
        Some(p) => grid.with_frame(GridFrame::Geographic(p)),
        None => grid,
    })
}

pub fn instances(a: InstancesArgs) -> Result<Outcome> {
    if !(a.epsilon >= 0.0 && a.epsilon.is_finite()) {
        bail!("--epsilon must be a non-negative number");
    }
    if !(a.rect_iou > 0.0 && a.rect_iou <= 1.0) {
        bail!("--rect-iou must lie in (0, 1]");
    }
    let masks = read_mask_pair(&a.building_mask, &a.border_mask, a.world_file.as_deref())?;
    let params = InstanceParams {
        watershed: WatershedParams { t_building: a.t_building, t_border: a.t_border, min_seed_area: a.min_seed_area },
        regularize: RegularizeParams { epsilon: a.epsilon, rect_threshold: a.rect_iou },
    };
    let (footprints, warnings) = extract_footprints(&masks, &params);
    io::write_bytes(&a.out, footprints_geojson(&footprints, &OutputFrame::default()).as_bytes())?;
    io::write_warnings(sidecar(&a.out), &warnings)?;
    println!("{} instances written to {}", footprints.len(), a.out.display());
    if !warnings.is_empty() {
        eprintln!("{} instances skipped, see {}", warnings.len(), sidecar(&a.out).display());
    }
    Ok(outcome(&warnings))
}

pub fn assess(a: AssessArgs) -> Result<Outcome> {
    let config = RunConfig::new(
        a.footprints,
        None,
        a.pvout,
        a.panel.panel_long,
        a.panel.panel_short,
        a.panel.p_nominal,
        a.u,
        a.nodata_policy,
        solarfit_core::analytics::DEFAULT_STRIDE_M,
        a.crs,
        a.out_dir,
    )?;
    let set = read_footprints(&config.footprints_path, config.crs)?;
    let grid = load_grid(&config.pvout_path, set.projection)?;
    grid.check_overlap(&set.bbox())
        .with_context(|| format!("{} and {} do not overlap", config.footprints_path.display(), config.pvout_path.display()))?;

    let assessed = assess_all(&set.footprints, &config.panel, &grid, config.nodata_policy, &config.utilizations, true)?;
    let frame = OutputFrame::new(set.projection);
    let mut csv = Vec::new();
    write_assessments(&mut csv, &assessed.assessments, &config.utilizations, &frame)?;
    io::write_bytes(config.out_dir.join("assessments.csv"), &csv)?;
    io::write_bytes(config.out_dir.join("panels.geojson"), panels_geojson(&assessed.layouts, &frame).as_bytes())?;
    io::write_warnings(config.out_dir.join("warnings.jsonl"), &set.warnings)?;

    let panels: usize = assessed.assessments.iter().map(|r| r.panel_count).sum();
    let mut summary = format!("{} buildings, {} panels; TSP MWh/year:", assessed.assessments.len(), panels);
    for (k, &u) in config.utilizations.values().iter().enumerate() {
        let mut total = 0.0;
        for r in &assessed.assessments {
            total += r.sp_by_u[k].1;
        }
        summary.push_str(&format!(" u={u} {total:.4}"));
    }
    println!("{summary}");
    if !set.warnings.is_empty() {
        eprintln!(
            "{} of {} features skipped, see {}",
            set.skipped_features,
            set.feature_count,
            config.out_dir.join("warnings.jsonl").display()
        );
    }
    Ok(outcome(&set.warnings))
}

pub fn aggregate(a: AggregateArgs) -> Result<Outcome> {
    let spec = panel_spec(&a.panel)?;
    let table = read_assessments(&a.assessments)?;
    let (districts, projection) = read_districts(&a.districts, a.crs, None)?;
    if districts.districts.is_empty() {
        bail!("{} contains no usable district", a.districts.display());
    }
    let frame = OutputFrame::new(projection);
    let mut assessments = table.assessments;
    for r in &mut assessments {
        r.centroid = frame.to_working(r.centroid);
    }
    let grid = load_grid(&a.pvout, projection)?;
    let reports = aggregate_reports(&assessments, &districts.districts, &grid, &spec, &table.utilizations)?;

    io::write_bytes(
        a.out_dir.join("districts.csv"),
        io::district_reports_csv(&reports, &table.utilizations)?.as_bytes(),
    )?;
    io::write_bytes(
        a.out_dir.join("districts.geojson"),
        io::district_reports_geojson(&reports, &districts).as_bytes(),
    )?;

    let values = sp_values(&assessments, a.histogram_u)?;
    let hist = sp_histogram(values, &DEFAULT_HISTOGRAM_EDGES)?;
    let mut text = String::from("lower_mwh,upper_mwh,count,percent\n");
    let mut bounds = vec![String::new()];
    bounds.extend(hist.edges.iter().map(|e| e.to_string()));
    bounds.push(String::new());
    for (k, (count, pct)) in hist.counts.iter().zip(hist.percentages()).enumerate() {
        text.push_str(&format!("{},{},{count},{pct:.4}\n", bounds[k], bounds[k + 1]));
    }
    io::write_bytes(a.out_dir.join("histogram.csv"), text.as_bytes())?;
    io::write_warnings(a.out_dir.join("warnings.jsonl"), &districts.warnings)?;

    println!("{} district reports written to {}", reports.len(), a.out_dir.display());
    Ok(outcome(&districts.warnings))
}

pub fn heatmap(a: HeatmapArgs) -> Result<Outcome> {
    if !(a.window_km2 > 0.0 && a.window_km2.is_finite()) {
        bail!("--window-km2 must be positive");
    }
    if !(a.stride_m > 0.0 && a.stride_m.is_finite()) {
        bail!("--stride-m must be positive");
    }
    let table = read_assessments(&a.assessments)?;
    let values = sp_values(&table.assessments, a.u)?;
    let centroids: Vec<Point2> = table.assessments.iter().map(|r| r.centroid).collect();
    let points: Vec<Point2> = match a.crs {
        CrsMode::Projected => centroids,
        CrsMode::Wgs84 => {
            let bb = BBox::of_points(&centroids);
            let proj = LocalProjection::new(0.5 * (bb.min_x + bb.max_x), 0.5 * (bb.min_y + bb.max_y));
            centroids.iter().map(|c| proj.forward(c.x, c.y)).collect()
        }
    };
    let pairs: Vec<(Point2, f64)> = points.into_iter().zip(values).collect();
    let params = HeatmapParams { window_area: a.window_km2 * 1e6, stride: a.stride_m, extent: None };
    let grid = sliding_window_heatmap(&pairs, &params)?;
    grid.write(&a.out, Some(4))?;
    println!("{} x {} heatmap written to {}", grid.ncols, grid.nrows, a.out.display());
    Ok(Outcome::Complete)
}
