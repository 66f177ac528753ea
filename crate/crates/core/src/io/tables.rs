use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde_json::Value;

use super::{fixed, read_text, DistrictSet, IoError, OutputFrame};
use crate::analytics::{DistrictReport, RooftopAssessment, Utilizations};
use crate::geometry::Point2;

const FIXED_COLUMNS: [&str; 6] = ["building_id", "n_panels", "pv_out", "footprint_area_m2", "centroid_x", "centroid_y"];

fn format_err(source_name: &str, message: impl Into<String>) -> IoError {
    IoError::Format { source_name: source_name.to_owned(), message: message.into() }
}

/// Writes the assessment CSV, rows sorted by building id. Energies and
/// PV_out use 4 decimals; centroids are converted to `frame`.
pub fn write_assessments<W: Write>(
    out: W,
    assessments: &[RooftopAssessment],
    utilizations: &Utilizations,
    frame: &OutputFrame,
) -> Result<(), IoError> {
    let csv_err = |e: csv::Error| format_err("assessment csv", e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(utilizations.values().iter().map(|&u| format!("sp_{}", Utilizations::label(u))));
    w.write_record(&header).map_err(csv_err)?;

    let mut rows: Vec<&RooftopAssessment> = assessments.iter().collect();
    rows.sort_by(|a, b| a.building_id.cmp(&b.building_id));
    let d = frame.decimals();
    let mut record: Vec<String> = Vec::with_capacity(header.len());
    for a in rows {
        let c = frame.to_output(a.centroid);
        record.clear();
        record.push(a.building_id.clone());
        record.push(a.panel_count.to_string());
        record.push(fixed(a.pv_out, 4));
        record.push(fixed(a.footprint_area, 4));
        record.push(fixed(c.x, d));
        record.push(fixed(c.y, d));
        for &u in utilizations.values() {
            let sp = a.sp_at(u).ok_or_else(|| {
                format_err("assessment csv", format!("building {} has no SP at u = {u}", a.building_id))
            })?;
            record.push(fixed(sp, 4));
        }
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush().map_err(|e| format_err("assessment csv", e.to_string()))?;
    Ok(())
}

/// Assessments read back from CSV. Centroids stay in the file's frame.
#[derive(Debug, Clone, PartialEq)]
pub struct AssessmentTable {
    pub assessments: Vec<RooftopAssessment>,
    pub utilizations: Utilizations,
}

pub fn parse_assessments(text: &str, source_name: &str) -> Result<AssessmentTable, IoError> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| format_err(source_name, e.to_string()))?.clone();
    let cols: Vec<&str> = header.iter().collect();
    if cols.len() < FIXED_COLUMNS.len() || cols[..FIXED_COLUMNS.len()] != FIXED_COLUMNS {
        return Err(format_err(source_name, format!("header must start with {}", FIXED_COLUMNS.join(","))));
    }
    let us: Vec<f64> = cols[FIXED_COLUMNS.len()..]
        .iter()
        .map(|c| {
            c.strip_prefix("sp_")
                .and_then(Utilizations::parse_label)
                .ok_or_else(|| format_err(source_name, format!("unexpected column {c:?}")))
        })
        .collect::<Result<_, _>>()?;
    let utilizations = Utilizations::new(us).map_err(|e| format_err(source_name, e.to_string()))?;

    let mut assessments = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| format_err(source_name, e.to_string()))?;
        let num = |k: usize| -> Result<f64, IoError> {
            rec.get(k)
                .and_then(|s| s.parse::<f64>().ok())
                .filter(|v| v.is_finite())
                .ok_or_else(|| format_err(source_name, format!("line {line}: bad {} value", cols[k])))
        };
        let panel_count = rec
            .get(1)
            .and_then(|s| s.parse::<usize>().ok())
            .ok_or_else(|| format_err(source_name, format!("line {line}: bad n_panels value")))?;
        let sp_by_u = utilizations
            .values()
            .iter()
            .enumerate()
            .map(|(k, &u)| Ok((u, num(FIXED_COLUMNS.len() + k)?)))
            .collect::<Result<_, IoError>>()?;
        assessments.push(RooftopAssessment {
            building_id: rec[0].to_owned(),
            panel_count,
            pv_out: num(2)?,
            footprint_area: num(3)?,
            centroid: Point2::new(num(4)?, num(5)?),
            sp_by_u,
        });
    }
    Ok(AssessmentTable { assessments, utilizations })
}

pub fn read_assessments(path: impl AsRef<Path>) -> Result<AssessmentTable, IoError> {
    let path = path.as_ref();
    parse_assessments(&read_text(path)?, &path.display().to_string())
}

fn opt(v: Option<f64>, decimals: usize) -> String {
    v.map(|x| fixed(x, decimals)).unwrap_or_default()
}

/// Report table: `district`, ASP per factor (MWh/year), TSP per factor
/// (GWh/year), `hc_twh`, `pct_tsp_hc` (percent at u = 1), then
/// `building_count`, `gcr`, SE per factor (MWh/year) and `overflow_count`.
/// Fields without a value are left empty.
pub fn district_reports_csv(reports: &[DistrictReport], utilizations: &Utilizations) -> Result<String, IoError> {
    let csv_err = |e: csv::Error| format_err("district csv", e.to_string());
    let labels: Vec<String> = utilizations.values().iter().map(|&u| Utilizations::label(u)).collect();
    let mut header = vec!["district".to_string()];
    header.extend(labels.iter().map(|l| format!("asp_{l}")));
    header.extend(labels.iter().map(|l| format!("tsp_{l}")));
    header.extend(["hc_twh", "pct_tsp_hc", "building_count", "gcr"].map(String::from));
    header.extend(labels.iter().map(|l| format!("se_{l}")));
    header.push("overflow_count".into());

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(&header).map_err(csv_err)?;
    for r in reports {
        let mut rec = vec![r.name.clone()];
        rec.extend(r.asp_by_u.iter().map(|&v| fixed(v, 4)));
        // GWh and TWh keep the 4-decimal MWh resolution.
        rec.extend(r.tsp_by_u.iter().map(|e| fixed(e.gwh(), 7)));
        rec.push(opt(r.hc.map(|e| e.twh()), 10));
        rec.push(opt(r.tsp_over_hc.map(|f| 100.0 * f), 4));
        rec.push(r.building_count.to_string());
        rec.push(opt(r.gcr, 6));
        rec.extend(r.se_by_u.iter().map(|&v| opt(v, 4)));
        rec.push(r.overflow_count.to_string());
        w.write_record(&rec).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| format_err("district csv", e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Reports as a FeatureCollection over the source district geometries. The
/// unassigned row has a null geometry.
pub fn district_reports_geojson(reports: &[DistrictReport], districts: &DistrictSet) -> String {
    let mut out = String::from(r#"{"type":"FeatureCollection","features":["#);
    for (i, r) in reports.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let name = serde_json::to_string(&r.name).expect("string serializes");
        let _ = write!(out, r#"{{"type":"Feature","properties":{{"district":{name}"#);
        let num = |v: Option<f64>, d: usize| v.map(|x| fixed(x, d)).unwrap_or_else(|| "null".into());
        let _ = write!(out, r#","building_count":{}"#, r.building_count);
        for (k, &u) in r.utilizations.iter().enumerate() {
            let l = Utilizations::label(u);
            let _ = write!(
                out,
                r#","asp_{l}":{},"tsp_{l}":{},"se_{l}":{}"#,
                fixed(r.asp_by_u[k], 4),
                fixed(r.tsp_by_u[k].gwh(), 7),
                num(r.se_by_u[k], 4)
            );
        }
        let _ = write!(
            out,
            r#","gcr":{},"hc_twh":{},"pct_tsp_hc":{},"overflow_count":{}}},"geometry":"#,
            num(r.gcr, 6),
            num(r.hc.map(|e| e.twh()), 10),
            num(r.tsp_over_hc.map(|f| 100.0 * f), 4),
            r.overflow_count
        );
        let geometry = districts
            .districts
            .iter()
            .position(|d| d.name == r.name)
            .map(|k| &districts.geometries[k])
            .unwrap_or(&Value::Null);
        out.push_str(&serde_json::to_string(geometry).expect("geometry serializes"));
        out.push('}');
    }
    out.push_str("]}\n");
    out
}
