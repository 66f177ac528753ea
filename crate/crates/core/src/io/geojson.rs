use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde_json::{Map, Value};

use super::{fixed, read_text, CrsMode, IoError, OutputFrame, Warning};
use crate::analytics::District;
use crate::geometry::{BBox, FootprintPolygon, LocalProjection, Point2};
use crate::panel_fit::PanelLayout;

type Ring = Vec<(f64, f64)>;

struct RawFeature {
    index: usize,
    id: Option<String>,
    properties: Map<String, Value>,
    geometry: Value,
}

fn format_err(source_name: &str, message: impl Into<String>) -> IoError {
    IoError::Format { source_name: source_name.to_owned(), message: message.into() }
}

fn id_string(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn parse_collection(text: &str, source_name: &str) -> Result<Vec<RawFeature>, IoError> {
    let root: Value = serde_json::from_str(text).map_err(|e| format_err(source_name, e.to_string()))?;
    if root.get("type").and_then(Value::as_str) != Some("FeatureCollection") {
        return Err(format_err(source_name, "not a GeoJSON FeatureCollection"));
    }
    let features = root
        .get("features")
        .and_then(Value::as_array)
        .ok_or_else(|| format_err(source_name, "FeatureCollection without a features array"))?;
    Ok(features
        .iter()
        .enumerate()
        .map(|(index, f)| {
            let properties = f.get("properties").and_then(Value::as_object).cloned().unwrap_or_default();
            let id = f.get("id").and_then(id_string).or_else(|| properties.get("id").and_then(id_string));
            RawFeature { index, id, properties, geometry: f.get("geometry").cloned().unwrap_or(Value::Null) }
        })
        .collect())
}

fn parse_ring(v: &Value) -> Result<Ring, String> {
    let coords = v.as_array().ok_or("ring is not an array")?;
    coords
        .iter()
        .map(|c| {
            let xy = c.as_array().filter(|a| a.len() >= 2).ok_or("position needs 2 numbers")?;
            match (xy[0].as_f64(), xy[1].as_f64()) {
                (Some(x), Some(y)) => Ok((x, y)),
                _ => Err("position needs 2 numbers"),
            }
        })
        .collect::<Result<_, _>>()
        .map_err(str::to_owned)
}

fn parse_polygon(v: &Value) -> Result<Vec<Ring>, String> {
    let rings = v.as_array().ok_or("polygon coordinates are not an array")?;
    if rings.is_empty() {
        return Err("polygon has no rings".into());
    }
    rings.iter().map(parse_ring).collect()
}

/// Polygon parts of a geometry, and whether it was a MultiPolygon.
fn polygon_parts(geometry: &Value) -> Result<(Vec<Vec<Ring>>, bool), String> {
    let kind = geometry.get("type").and_then(Value::as_str).ok_or("feature has no geometry")?;
    let coords = geometry.get("coordinates").ok_or("geometry has no coordinates")?;
    match kind {
        "Polygon" => Ok((vec![parse_polygon(coords)?], false)),
        "MultiPolygon" => {
            let polys = coords.as_array().ok_or("multipolygon coordinates are not an array")?;
            Ok((polys.iter().map(parse_polygon).collect::<Result<_, _>>()?, true))
        }
        other => Err(format!("unsupported geometry type {other}")),
    }
}

fn to_points(ring: &Ring, projection: Option<&LocalProjection>) -> Vec<Point2> {
    ring.iter()
        .map(|&(x, y)| match projection {
            Some(p) => p.forward(x, y),
            None => Point2::new(x, y),
        })
        .collect()
}

/// Reference point for local projection: center of the lon/lat extent.
fn reference_of(parsed: &[Result<(Vec<Vec<Ring>>, bool), String>]) -> Option<LocalProjection> {
    let mut bb = BBox::empty();
    for (parts, _) in parsed.iter().flatten() {
        for part in parts {
            for ring in part {
                for &(x, y) in ring {
                    bb.expand(Point2::new(x, y));
                }
            }
        }
    }
    (!bb.is_empty()).then(|| LocalProjection::new(0.5 * (bb.min_x + bb.max_x), 0.5 * (bb.min_y + bb.max_y)))
}

/// Footprints read from a FeatureCollection, plus what was skipped.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintSet {
    pub footprints: Vec<FootprintPolygon>,
    pub warnings: Vec<Warning>,
    pub feature_count: usize,
    /// Features that produced no footprint at all.
    pub skipped_features: usize,
    /// Set in WGS84 mode: the projection used to reach meters.
    pub projection: Option<LocalProjection>,
}

impl FootprintSet {
    pub fn accepted_features(&self) -> usize {
        self.feature_count - self.skipped_features
    }

    pub fn bbox(&self) -> BBox {
        self.footprints.iter().fold(BBox::empty(), |b, f| b.union(&f.bbox()))
    }
}

/// Parses footprints. Ids come from the feature (`id` member, else an `id`
/// property), falling back to the feature index; MultiPolygon parts get
/// `-<part>` suffixes. Invalid features and duplicate ids are skipped with a
/// warning.
pub fn parse_footprints(text: &str, source_name: &str, crs: CrsMode) -> Result<FootprintSet, IoError> {
    let raw = parse_collection(text, source_name)?;
    let parsed: Vec<_> = raw.iter().map(|f| polygon_parts(&f.geometry)).collect();
    let projection = match crs {
        CrsMode::Projected => None,
        CrsMode::Wgs84 => reference_of(&parsed),
    };

    let mut footprints = Vec::new();
    let mut warnings = Vec::new();
    let mut skipped_features = 0;
    let mut seen = HashSet::new();
    for (f, parts) in raw.iter().zip(parsed) {
        let base = f.id.clone().unwrap_or_else(|| f.index.to_string());
        let warn = |id: &str, message: String| Warning::new(source_name, Some(f.index), Some(id.to_owned()), message);
        let (parts, multi) = match parts {
            Ok(p) => p,
            Err(message) => {
                warnings.push(warn(&base, message));
                skipped_features += 1;
                continue;
            }
        };
        let mut accepted = 0;
        for (k, rings) in parts.iter().enumerate() {
            let id = if multi { format!("{base}-{k}") } else { base.clone() };
            if seen.contains(&id) {
                warnings.push(warn(&id, "duplicate building id".into()));
                continue;
            }
            let exterior = to_points(&rings[0], projection.as_ref());
            let holes = rings[1..].iter().map(|r| to_points(r, projection.as_ref())).collect();
            match FootprintPolygon::new(id.clone(), exterior, holes) {
                Ok(poly) => {
                    seen.insert(id);
                    footprints.push(poly);
                    accepted += 1;
                }
                Err(e) => warnings.push(warn(&id, e.to_string())),
            }
        }
        if accepted == 0 {
            skipped_features += 1;
        }
    }
    Ok(FootprintSet { footprints, warnings, feature_count: raw.len(), skipped_features, projection })
}

pub fn read_footprints(path: impl AsRef<Path>, crs: CrsMode) -> Result<FootprintSet, IoError> {
    let path = path.as_ref();
    parse_footprints(&read_text(path)?, &path.display().to_string(), crs)
}

/// Districts with their source geometries, kept for report output.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictSet {
    pub districts: Vec<District>,
    pub geometries: Vec<Value>,
    pub warnings: Vec<Warning>,
}

/// Parses districts. The name is the `name` or `district` property, else the
/// feature id, else the index. In WGS84 mode the rings are projected with
/// `projection`, or about the center of the district extent when `None`.
pub fn parse_districts(
    text: &str,
    source_name: &str,
    crs: CrsMode,
    projection: Option<LocalProjection>,
) -> Result<(DistrictSet, Option<LocalProjection>), IoError> {
    let raw = parse_collection(text, source_name)?;
    let parsed: Vec<_> = raw.iter().map(|f| polygon_parts(&f.geometry)).collect();
    let projection = match crs {
        CrsMode::Projected => None,
        CrsMode::Wgs84 => projection.or_else(|| reference_of(&parsed)),
    };
    let mut set = DistrictSet { districts: Vec::new(), geometries: Vec::new(), warnings: Vec::new() };
    let mut seen = HashSet::new();
    for (f, parts) in raw.iter().zip(parsed) {
        let name = ["name", "district"]
            .iter()
            .find_map(|k| f.properties.get(*k).and_then(id_string))
            .or_else(|| f.id.clone())
            .unwrap_or_else(|| f.index.to_string());
        let warn = |message: String| Warning::new(source_name, Some(f.index), Some(name.clone()), message);
        let parts = match parts {
            Ok((p, _)) => p,
            Err(message) => {
                set.warnings.push(warn(message));
                continue;
            }
        };
        if seen.contains(&name) {
            set.warnings.push(warn("duplicate district name".into()));
            continue;
        }
        let mut polys = Vec::new();
        for (k, rings) in parts.iter().enumerate() {
            let exterior = to_points(&rings[0], projection.as_ref());
            let holes = rings[1..].iter().map(|r| to_points(r, projection.as_ref())).collect();
            match FootprintPolygon::new(format!("{name}-{k}"), exterior, holes) {
                Ok(p) => polys.push(p),
                Err(e) => set.warnings.push(warn(format!("part {k}: {e}"))),
            }
        }
        if polys.is_empty() {
            continue;
        }
        seen.insert(name.clone());
        set.districts.push(District::new(name, polys).expect("non-empty parts"));
        set.geometries.push(f.geometry.clone());
    }
    Ok((set, projection))
}

pub fn read_districts(
    path: impl AsRef<Path>,
    crs: CrsMode,
    projection: Option<LocalProjection>,
) -> Result<(DistrictSet, Option<LocalProjection>), IoError> {
    let path = path.as_ref();
    parse_districts(&read_text(path)?, &path.display().to_string(), crs, projection)
}

fn push_ring(out: &mut String, ring: &[Point2], frame: &OutputFrame) {
    let d = frame.decimals();
    out.push('[');
    for p in ring.iter().chain(ring.first()) {
        let q = frame.to_output(*p);
        if !out.ends_with('[') {
            out.push(',');
        }
        let _ = write!(out, "[{},{}]", fixed(q.x, d), fixed(q.y, d));
    }
    out.push(']');
}

fn push_polygon(out: &mut String, rings: &[&[Point2]], frame: &OutputFrame) {
    out.push_str(r#"{"type":"Polygon","coordinates":["#);
    for (i, ring) in rings.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        push_ring(out, ring, frame);
    }
    out.push_str("]}");
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("string serializes")
}

/// Panel rectangles as a FeatureCollection, one feature per panel with
/// `building_id` and `panel` (row-major index) properties.
pub fn panels_geojson(layouts: &[PanelLayout], frame: &OutputFrame) -> String {
    let mut out = String::from(r#"{"type":"FeatureCollection","features":["#);
    let mut first = true;
    for layout in layouts {
        for (k, panel) in layout.panels.iter().enumerate() {
            if !first {
                out.push(',');
            }
            first = false;
            let _ = write!(
                out,
                r#"{{"type":"Feature","properties":{{"building_id":{},"panel":{k}}},"geometry":"#,
                json_str(&layout.building_id)
            );
            push_polygon(&mut out, &[&panel.corners()], frame);
            out.push('}');
        }
    }
    out.push_str("]}\n");
    out
}

/// Footprints as a FeatureCollection with `id` members and properties.
pub fn footprints_geojson(footprints: &[FootprintPolygon], frame: &OutputFrame) -> String {
    let mut out = String::from(r#"{"type":"FeatureCollection","features":["#);
    for (i, f) in footprints.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let id = json_str(f.id());
        let _ = write!(out, r#"{{"type":"Feature","id":{id},"properties":{{"id":{id}}},"geometry":"#);
        let rings: Vec<&[Point2]> = f.rings().collect();
        push_polygon(&mut out, &rings, frame);
        out.push('}');
    }
    out.push_str("]}\n");
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_SQUARES: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,10],[0,0]]]}},
        {"type":"Feature","properties":{},"geometry":{"type":"Polygon","coordinates":[[[20,0],[30,0],[30,10],[20,10],[20,0]]]}}
    ]}"#;

    #[test]
    fn two_squares_default_ids() {
        let set = parse_footprints(TWO_SQUARES, "t", CrsMode::Projected).unwrap();
        let ids: Vec<&str> = set.footprints.iter().map(|f| f.id()).collect();
        assert_eq!(ids, ["0", "1"]);
        assert!(set.warnings.is_empty());
        assert_eq!(set.footprints[0].area(), 100.0);
    }

    #[test]
    fn bad_ring_is_skipped_with_warning() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","id":"a","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[0,0]]]}},
            {"type":"Feature","id":"b","geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
            {"type":"Feature","id":"c","geometry":{"type":"Point","coordinates":[0,0]}},
            {"type":"Feature","id":"d","geometry":null}
        ]}"#;
        let set = parse_footprints(text, "t", CrsMode::Projected).unwrap();
        assert_eq!(set.footprints.len(), 1);
        assert_eq!(set.warnings.len(), 3);
        assert_eq!(set.warnings[0].feature_index, Some(0));
        assert_eq!(set.skipped_features + set.accepted_features(), set.feature_count);
        assert_eq!(set.skipped_features, 3);
    }

    #[test]
    fn multipolygon_parts_get_suffixes() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","id":7,"geometry":{"type":"MultiPolygon","coordinates":[
                [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
                [[[5,5],[6,5],[6,6],[5,6],[5,5]]]]}}
        ]}"#;
        let set = parse_footprints(text, "t", CrsMode::Projected).unwrap();
        let ids: Vec<&str> = set.footprints.iter().map(|f| f.id()).collect();
        assert_eq!(ids, ["7-0", "7-1"]);
    }

    #[test]
    fn property_id_and_duplicates() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"id":"x"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}},
            {"type":"Feature","properties":{"id":"x"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,0]]]}}
        ]}"#;
        let set = parse_footprints(text, "t", CrsMode::Projected).unwrap();
        assert_eq!(set.footprints.len(), 1);
        assert_eq!(set.warnings[0].message, "duplicate building id");
    }

    #[test]
    fn not_a_collection_is_fatal() {
        assert!(matches!(parse_footprints("{\"type\":\"Feature\"}", "t", CrsMode::Projected), Err(IoError::Format { .. })));
        assert!(matches!(parse_footprints("nope", "t", CrsMode::Projected), Err(IoError::Format { .. })));
    }

    #[test]
    fn wgs84_projects_about_extent_center() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","geometry":{"type":"Polygon","coordinates":[[[35.5,33.9],[35.5001,33.9],[35.5001,33.9001],[35.5,33.9001],[35.5,33.9]]]}}
        ]}"#;
        let set = parse_footprints(text, "t", CrsMode::Wgs84).unwrap();
        let proj = set.projection.unwrap();
        assert!((proj.ref_lon - 35.50005).abs() < 1e-12);
        let c = set.footprints[0].centroid();
        assert!(c.x.abs() < 1e-6 && c.y.abs() < 1e-6);
        let side = crate::geometry::EARTH_RADIUS_M * 1e-4_f64.to_radians();
        let expected = side * side * 33.90005_f64.to_radians().cos();
        assert!((set.footprints[0].area() - expected).abs() < 1e-6);
    }

    #[test]
    fn districts_by_name() {
        let text = r#"{"type":"FeatureCollection","features":[
            {"type":"Feature","properties":{"name":"Harbor"},"geometry":{"type":"Polygon","coordinates":[[[0,0],[10,0],[10,10],[0,10],[0,0]]]}},
            {"type":"Feature","properties":{"district":"Valley"},"geometry":{"type":"MultiPolygon","coordinates":[
                [[[20,0],[30,0],[30,10],[20,10],[20,0]]], [[[40,0],[50,0],[50,10],[40,10],[40,0]]]]}}
        ]}"#;
        let (set, proj) = parse_districts(text, "d", CrsMode::Projected, None).unwrap();
        assert!(proj.is_none());
        assert_eq!(set.districts[0].name, "Harbor");
        assert_eq!(set.districts[1].name, "Valley");
        assert_eq!(set.districts[1].area_a_t, 200.0);
        assert_eq!(set.geometries.len(), 2);
    }

    #[test]
    fn footprint_output_round_trips() {
        let set = parse_footprints(TWO_SQUARES, "t", CrsMode::Projected).unwrap();
        let text = footprints_geojson(&set.footprints, &OutputFrame::default());
        let again = parse_footprints(&text, "t", CrsMode::Projected).unwrap();
        assert_eq!(again.footprints, set.footprints);
        assert_eq!(footprints_geojson(&again.footprints, &OutputFrame::default()), text);
    }
}
