use super::InstanceError;
use crate::geometry::{min_bounding_rect, polygon_area, FootprintPolygon, Point2};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegularizeParams {
    /// Douglas–Peucker tolerance, in polygon units.
    pub epsilon: f64,
    /// Minimum area(simplified)/area(MBR) for snapping to the rectangle.
    pub rect_threshold: f64,
}

impl Default for RegularizeParams {
    fn default() -> Self {
        Self { epsilon: 0.5, rect_threshold: 0.85 }
    }
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let len2 = ab.dot(ab);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(ab) / len2).clamp(0.0, 1.0);
    p.distance(a + ab * t)
}

fn simplify_span(pts: &[Point2], lo: usize, hi: usize, eps: f64, keep: &mut [bool]) {
    if hi <= lo + 1 {
        return;
    }
    let (mut best, mut best_d) = (lo, -1.0);
    for i in lo + 1..hi {
        let d = segment_distance(pts[i], pts[lo], pts[hi % pts.len()]);
        if d > best_d {
            best = i;
            best_d = d;
        }
    }
    if best_d > eps {
        keep[best] = true;
        simplify_span(pts, lo, best, eps, keep);
        simplify_span(pts, best, hi, eps, keep);
    }
}

/// Douglas–Peucker on a closed ring.
///
/// Vertex 0 and the vertex farthest from it (first on ties) are fixed, and
/// the two chains between them are simplified independently.
pub fn douglas_peucker_ring(ring: &[Point2], epsilon: f64) -> Vec<Point2> {
    let n = ring.len();
    if n < 3 {
        return ring.to_vec();
    }
    let mut far = 0;
    let mut far_d = -1.0;
    for (i, p) in ring.iter().enumerate() {
        let d = p.distance(ring[0]);
        if d > far_d {
            far = i;
            far_d = d;
        }
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    keep[far] = true;
    simplify_span(ring, 0, far, epsilon, &mut keep);
    simplify_span(ring, far, n, epsilon, &mut keep);
    ring.iter().zip(&keep).filter(|(_, &k)| k).map(|(&p, _)| p).collect()
}

/// Simplifies a traced outline and snaps near-rectangular ones to their
/// minimum bounding rectangle.
///
/// Holes that collapse under simplification are dropped. If the simplified
/// exterior is no longer a valid ring, the unsimplified outline is used for
/// the rectangle test instead. Rectangles pass through unchanged.
pub fn regularize(poly: &FootprintPolygon, params: &RegularizeParams) -> Result<FootprintPolygon, InstanceError> {
    let mbr = min_bounding_rect(poly)?;
    if poly.exterior().len() == 4 && poly.holes().is_empty() && polygon_area(poly) >= mbr.area() * (1.0 - 1e-9) {
        return Ok(poly.clone());
    }

    let exterior = douglas_peucker_ring(poly.exterior(), params.epsilon);
    if exterior.len() < 3 {
        return Err(InstanceError::DegenerateResult { id: poly.id().to_string() });
    }
    let holes: Vec<Vec<Point2>> = poly
        .holes()
        .iter()
        .map(|h| douglas_peucker_ring(h, params.epsilon))
        .filter(|h| h.len() >= 3)
        .collect();

    let simplified = FootprintPolygon::new(poly.id(), exterior.clone(), holes.clone())
        .or_else(|_| FootprintPolygon::new(poly.id(), exterior, Vec::new()))
        .unwrap_or_else(|_| poly.clone());

    let iou = polygon_area(&simplified) / mbr.area();
    if iou >= params.rect_threshold {
        Ok(mbr.to_polygon(poly.id())?)
    } else {
        Ok(simplified)
    }
}
