use super::{FootprintPolygon, OrientedRect, Point2, GEOMETRY_TOLERANCE};

/// Closed point-in-polygon test: points within [`GEOMETRY_TOLERANCE`] of any
/// ring count as inside. Holes are excluded.
pub fn point_in_polygon(poly: &FootprintPolygon, p: Point2) -> bool {
    let mut inside = false;
    for ring in poly.rings() {
        let n = ring.len();
        for i in 0..n {
            let a = ring[i];
            let b = ring[(i + 1) % n];
            if segment_distance(a, b, p) <= GEOMETRY_TOLERANCE {
                return true;
            }
            if crosses_ray(a, b, p) {
                inside = !inside;
            }
        }
    }
    inside
}

/// Closed containment of a rectangle in a polygon.
///
/// True iff no polygon edge (exterior or hole) enters the open interior of the
/// rectangle and the rectangle center lies inside the polygon. Boundary
/// contact within [`GEOMETRY_TOLERANCE`] is allowed, so edge-flush rectangles
/// are contained. This also rejects rectangles that straddle the boundary,
/// cover a hole, or are crossed by a reflex notch.
pub fn rect_inside_polygon(rect: &OrientedRect, poly: &FootprintPolygon) -> bool {
    let framed = FramedPolygon::new(poly, rect.center(), rect.axis_angle());
    let hl = 0.5 * rect.length();
    let hw = 0.5 * rect.width();
    framed.contains_box(-hl, hl, -hw, hw)
}

fn crosses_ray(a: Point2, b: Point2, p: Point2) -> bool {
    if (a.y > p.y) != (b.y > p.y) {
        let x = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
        p.x < x
    } else {
        false
    }
}

fn segment_distance(a: Point2, b: Point2, p: Point2) -> f64 {
    let d = b - a;
    let len2 = d.dot(d);
    if len2 == 0.0 {
        return p.distance(a);
    }
    let t = ((p - a).dot(d) / len2).clamp(0.0, 1.0);
    p.distance(a + d * t)
}

/// A polygon re-expressed in a rotated local frame, so axis-aligned boxes in
/// that frame can be tested cheaply and repeatedly.
pub(crate) struct FramedPolygon {
    /// Flattened edges `(a, b)` of all rings.
    edges: Vec<(Point2, Point2)>,
    /// Per edge: (min_x, max_x, min_y, max_y).
    edge_boxes: Vec<[f64; 4]>,
}

impl FramedPolygon {
    /// Local coordinates are `(p - origin)` rotated by `-angle`.
    pub(crate) fn new(poly: &FootprintPolygon, origin: Point2, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        let to_local = |p: Point2| {
            let d = p - origin;
            Point2::new(c * d.x + s * d.y, -s * d.x + c * d.y)
        };
        let mut edges = Vec::new();
        let mut edge_boxes = Vec::new();
        for ring in poly.rings() {
            let local: Vec<Point2> = ring.iter().map(|&p| to_local(p)).collect();
            let n = local.len();
            for i in 0..n {
                let a = local[i];
                let b = local[(i + 1) % n];
                edges.push((a, b));
                edge_boxes.push([a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y)]);
            }
        }
        Self { edges, edge_boxes }
    }

    /// Closed containment of the local axis-aligned box `[x0, x1] x [y0, y1]`.
    pub(crate) fn contains_box(&self, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
        let tol = GEOMETRY_TOLERANCE;
        let (ix0, ix1, iy0, iy1) = (x0 + tol, x1 - tol, y0 + tol, y1 - tol);
        if ix0 < ix1 && iy0 < iy1 {
            for (&(a, b), bb) in self.edges.iter().zip(&self.edge_boxes) {
                if bb[1] < ix0 || bb[0] > ix1 || bb[3] < iy0 || bb[2] > iy1 {
                    continue;
                }
                if clip_enters(a, b, ix0, ix1, iy0, iy1) {
                    return false;
                }
            }
        }
        let center = Point2::new(0.5 * (x0 + x1), 0.5 * (y0 + y1));
        self.contains_point(center)
    }

    fn contains_point(&self, p: Point2) -> bool {
        let mut inside = false;
        for &(a, b) in &self.edges {
            if segment_distance(a, b, p) <= GEOMETRY_TOLERANCE {
                return true;
            }
            if crosses_ray(a, b, p) {
                inside = !inside;
            }
        }
        inside
    }
}

/// Liang–Barsky: does segment `ab` have a positive-length part inside the box?
fn clip_enters(a: Point2, b: Point2, x0: f64, x1: f64, y0: f64, y1: f64) -> bool {
    let dx = b.x - a.x;
    let dy = b.y - a.y;
    let mut t0 = 0.0_f64;
    let mut t1 = 1.0_f64;
    for (p, q) in [(-dx, a.x - x0), (dx, x1 - a.x), (-dy, a.y - y0), (dy, y1 - a.y)] {
        if p == 0.0 {
            if q < 0.0 {
                return false;
            }
        } else {
            let r = q / p;
            if p < 0.0 {
                t0 = t0.max(r);
            } else {
                t1 = t1.min(r);
            }
            if t0 > t1 {
                return false;
            }
        }
    }
    t0 < t1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::FootprintPolygon;

    fn sq(x0: f64, y0: f64, s: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x0 + s, y0),
            Point2::new(x0 + s, y0 + s),
            Point2::new(x0, y0 + s),
        ]
    }

    fn rect(cx: f64, cy: f64, l: f64, w: f64) -> OrientedRect {
        OrientedRect::new(Point2::new(cx, cy), 0.0, l, w).unwrap()
    }

    #[test]
    fn small_rect_in_large_square() {
        let p = FootprintPolygon::new("p", sq(0.0, 0.0, 10.0), vec![]).unwrap();
        assert!(rect_inside_polygon(&rect(5.0, 5.0, 2.0, 1.0), &p));
    }

    #[test]
    fn straddling_rect_is_outside() {
        let p = FootprintPolygon::new("p", sq(0.0, 0.0, 10.0), vec![]).unwrap();
        assert!(!rect_inside_polygon(&rect(9.5, 5.0, 2.0, 1.0), &p));
    }

    #[test]
    fn flush_rect_counts_as_inside() {
        let p = FootprintPolygon::new("p", sq(0.0, 0.0, 10.0), vec![]).unwrap();
        assert!(rect_inside_polygon(&rect(1.0, 0.5, 2.0, 1.0), &p));
        assert!(rect_inside_polygon(&rect(5.0, 5.0, 10.0, 10.0), &p));
    }

    #[test]
    fn rect_over_hole_is_outside() {
        let p = FootprintPolygon::new("p", sq(0.0, 0.0, 10.0), vec![sq(4.0, 4.0, 1.0)]).unwrap();
        assert!(!rect_inside_polygon(&rect(4.5, 4.5, 3.0, 3.0), &p));
        // Flush against the hole edge is fine.
        assert!(rect_inside_polygon(&rect(6.0, 4.5, 2.0, 1.0), &p));
    }

    #[test]
    fn notch_through_corners_is_detected() {
        // A V-notch whose tip pokes into the rectangle while its edges pass
        // exactly through two rectangle corners.
        let ring = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 10.0),
            Point2::new(6.0, 10.0),
            Point2::new(5.0, 2.0),
            Point2::new(4.0, 10.0),
            Point2::new(0.0, 10.0),
        ];
        let p = FootprintPolygon::new("p", ring, vec![]).unwrap();
        assert!(!rect_inside_polygon(&rect(5.0, 5.0, 4.0, 4.0), &p));
    }

    #[test]
    fn point_in_polygon_closed() {
        let p = FootprintPolygon::new("p", sq(0.0, 0.0, 1.0), vec![sq(0.25, 0.25, 0.5)]).unwrap();
        assert!(point_in_polygon(&p, Point2::new(0.1, 0.1)));
        assert!(point_in_polygon(&p, Point2::new(1.0, 0.5)));
        assert!(point_in_polygon(&p, Point2::new(0.25, 0.5)));
        assert!(!point_in_polygon(&p, Point2::new(0.5, 0.5)));
        assert!(!point_in_polygon(&p, Point2::new(1.5, 0.5)));
    }
}
