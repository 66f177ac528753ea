//! `solarfit`: rooftop PV potential from footprints (or segmentation masks)
//! to district reports and heatmaps.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use solarfit_core::analytics::{DEFAULT_STRIDE_M, DEFAULT_UTILIZATION};
use solarfit_core::io::CrsMode;
use solarfit_core::pvout_raster::NodataPolicy;

#[derive(Debug, Parser)]
#[command(name = "solarfit", version, about = "Rooftop photovoltaic potential, building by building")]
struct Cli {
    /// Worker threads (default: one per hardware thread).
    #[arg(long, global = true, env = "SOLARFIT_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Split building/border probability masks into footprint polygons.
    Instances(InstancesArgs),
    /// Fit panels on every footprint and compute yearly solar potential.
    Assess(AssessArgs),
    /// Aggregate assessments into per-district reports and a histogram.
    Aggregate(AggregateArgs),
    /// Sliding-window mean of rooftop potential as an ASCII grid.
    Heatmap(HeatmapArgs),
}

#[derive(Debug, Args)]
struct InstancesArgs {
    /// Building probability mask, 8-bit grayscale PGM (0-255).
    #[arg(long)]
    building_mask: PathBuf,
    /// Building-border probability mask, same size as the building mask.
    #[arg(long)]
    border_mask: PathBuf,
    /// World file (6 lines: A D B E C F, meters per pixel and upper-left
    /// pixel center). Without it, output is in pixel units.
    #[arg(long)]
    world_file: Option<PathBuf>,
    /// Building probability threshold, 0-255; pixels at or above belong to buildings.
    #[arg(long, default_value_t = 128)]
    t_building: u8,
    /// Border probability threshold, 0-255; seeds need border below it.
    #[arg(long, default_value_t = 128)]
    t_border: u8,
    /// Minimum seed size, pixels.
    #[arg(long, default_value_t = 4)]
    min_seed_area: usize,
    /// Simplification tolerance, output units (meters with a world file, else pixels).
    #[arg(long, default_value_t = 0.5)]
    epsilon: f64,
    /// Minimum area ratio (0-1) of simplified outline to its bounding rectangle for
    /// snapping to the rectangle.
    #[arg(long, default_value_t = 0.85)]
    rect_iou: f64,
    /// Output GeoJSON FeatureCollection of footprints; warnings go to
    /// <out>.warnings.jsonl.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PanelArgs {
    /// Panel long side, meters.
    #[arg(long, default_value_t = 1.98)]
    panel_long: f64,
    /// Panel short side, meters.
    #[arg(long, default_value_t = 1.0)]
    panel_short: f64,
    /// Panel nameplate power, kWp.
    #[arg(long, default_value_t = 0.4)]
    p_nominal: f64,
}

fn default_u() -> Vec<f64> {
    DEFAULT_UTILIZATION.to_vec()
}

#[derive(Debug, Args)]
struct AssessArgs {
    /// Footprints, GeoJSON FeatureCollection of Polygon/MultiPolygon.
    #[arg(long)]
    footprints: PathBuf,
    /// Yearly PV output grid, ESRI ASCII, MWh/kWp per cell, same CRS as footprints.
    #[arg(long)]
    pvout: PathBuf,
    /// Coordinates of footprints and grid: projected (meters) or wgs84 (degrees).
    #[arg(long, default_value_t = CrsMode::Projected)]
    crs: CrsMode,
    #[command(flatten)]
    panel: PanelArgs,
    /// Utilization factors, fractions in (0, 1], comma separated, increasing.
    #[arg(long = "u", value_delimiter = ',', default_values_t = default_u())]
    u: Vec<f64>,
    /// Rooftops on nodata or off the grid: nearest (valid cell) or fail.
    #[arg(long, default_value = "nearest", value_parser = parse_policy)]
    nodata_policy: NodataPolicy,
    /// Output directory for assessments.csv, panels.geojson and warnings.jsonl.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct AggregateArgs {
    /// Assessment CSV written by `assess`.
    #[arg(long)]
    assessments: PathBuf,
    /// Districts, GeoJSON FeatureCollection; names from the `name` property.
    #[arg(long)]
    districts: PathBuf,
    /// Yearly PV output grid, ESRI ASCII, MWh/kWp, for hypothetical capacity.
    #[arg(long)]
    pvout: PathBuf,
    /// Coordinates of inputs: projected (meters) or wgs84 (degrees).
    #[arg(long, default_value_t = CrsMode::Projected)]
    crs: CrsMode,
    #[command(flatten)]
    panel: PanelArgs,
    /// Utilization factor for the potential histogram, fraction in (0, 1].
    #[arg(long, default_value_t = 0.5)]
    histogram_u: f64,
    /// Output directory for districts.csv, districts.geojson and histogram.csv.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct HeatmapArgs {
    /// Assessment CSV written by `assess`.
    #[arg(long)]
    assessments: PathBuf,
    /// Utilization factor to map, fraction in (0, 1]; must be a column of the CSV.
    #[arg(long = "u", default_value_t = 0.5)]
    u: f64,
    /// Window area, km² (square window).
    #[arg(long, default_value_t = 4.0)]
    window_km2: f64,
    /// Window step and output cell size, meters.
    #[arg(long, default_value_t = DEFAULT_STRIDE_M)]
    stride_m: f64,
    /// Coordinates of assessment centroids: projected (meters) or wgs84 (degrees).
    #[arg(long, default_value_t = CrsMode::Projected)]
    crs: CrsMode,
    /// Output ESRI ASCII grid, MWh/year per cell, nodata -9999.
    #[arg(long)]
    out: PathBuf,
}

fn parse_policy(s: &str) -> Result<NodataPolicy, String> {
    solarfit_core::io::parse_nodata_policy(s)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    }
    let result = match cli.command {
        Command::Instances(a) => commands::instances(a),
        Command::Assess(a) => commands::assess(a),
        Command::Aggregate(a) => commands::aggregate(a),
        Command::Heatmap(a) => commands::heatmap(a),
    };
    match result {
        Ok(commands::Outcome::Complete) => ExitCode::SUCCESS,
        Ok(commands::Outcome::Partial) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
