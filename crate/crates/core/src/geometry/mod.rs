//! Planar polygon primitives in projected meters.
//!
//! Everything here is a pure function over immutable values. Rings are stored
//! without a closing duplicate vertex; exterior rings are counter-clockwise and
//! holes clockwise once a [`FootprintPolygon`] has been constructed.

mod containment;
mod hull;
mod mbr;
mod projection;

use std::f64::consts::PI;
use std::ops::{Add, Mul, Sub};

use thiserror::Error;

pub use containment::{point_in_polygon, rect_inside_polygon};
pub(crate) use containment::FramedPolygon;
pub use hull::convex_hull;
pub use mbr::min_bounding_rect;
pub use projection::{project_to_meters, LocalProjection, EARTH_RADIUS_M};

/// Absolute slack, in meters, used by closed containment tests.
pub const GEOMETRY_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("non-finite coordinate at vertex {index} of ring {ring}")]
    NonFinite { ring: usize, index: usize },
    #[error("ring {ring} has fewer than 3 distinct vertices")]
    Degenerate { ring: usize },
    #[error("ring {ring} has zero area")]
    ZeroArea { ring: usize },
    #[error("ring {ring} is self-intersecting")]
    SelfIntersecting { ring: usize },
    #[error("polygon net area is not positive")]
    NonPositiveArea,
    #[error("invalid rectangle extents {length} x {width}")]
    InvalidRect { length: f64, width: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn dot(self, other: Point2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, other: Point2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point2) -> f64 {
        (self - other).norm()
    }

    /// Rotates by `angle` radians counter-clockwise about the origin.
    pub fn rotate(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl BBox {
    pub fn empty() -> Self {
        Self {
            min_x: f64::INFINITY,
            min_y: f64::INFINITY,
            max_x: f64::NEG_INFINITY,
            max_y: f64::NEG_INFINITY,
        }
    }

    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point2>) -> Self {
        let mut bbox = Self::empty();
        for p in points {
            bbox.expand(*p);
        }
        bbox
    }

    pub fn is_empty(&self) -> bool {
        self.min_x > self.max_x || self.min_y > self.max_y
    }

    pub fn expand(&mut self, p: Point2) {
        self.min_x = self.min_x.min(p.x);
        self.min_y = self.min_y.min(p.y);
        self.max_x = self.max_x.max(p.x);
        self.max_y = self.max_y.max(p.y);
    }

    pub fn union(&self, other: &BBox) -> BBox {
        BBox {
            min_x: self.min_x.min(other.min_x),
            min_y: self.min_y.min(other.min_y),
            max_x: self.max_x.max(other.max_x),
            max_y: self.max_y.max(other.max_y),
        }
    }

    pub fn intersects(&self, other: &BBox) -> bool {
        !self.is_empty()
            && !other.is_empty()
            && self.min_x <= other.max_x
            && other.min_x <= self.max_x
            && self.min_y <= other.max_y
            && other.min_y <= self.max_y
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min_x && p.x <= self.max_x && p.y >= self.min_y && p.y <= self.max_y
    }
}

/// Twice the signed area of a ring (positive when counter-clockwise).
fn twice_signed_area(ring: &[Point2]) -> f64 {
    if ring.len() < 3 {
        return 0.0;
    }
    // Shift to the first vertex to keep the products small for georeferenced input.
    let o = ring[0];
    let mut acc = 0.0;
    for i in 1..ring.len() - 1 {
        acc += (ring[i] - o).cross(ring[i + 1] - o);
    }
    acc
}

/// Signed shoelace area of a ring; positive for counter-clockwise rings.
pub fn ring_signed_area(ring: &[Point2]) -> f64 {
    0.5 * twice_signed_area(ring)
}

/// Shoelace area of the exterior minus the areas of the holes.
pub fn polygon_area(poly: &FootprintPolygon) -> f64 {
    let holes: f64 = poly.holes.iter().map(|h| ring_signed_area(h).abs()).sum();
    ring_signed_area(&poly.exterior).abs() - holes
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn on_segment_collinear(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Closed segment intersection test (touching counts).
pub(crate) fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment_collinear(c, d, a))
        || (d2 == 0.0 && on_segment_collinear(c, d, b))
        || (d3 == 0.0 && on_segment_collinear(a, b, c))
        || (d4 == 0.0 && on_segment_collinear(a, b, d))
}

/// True when no two edges of the ring touch other than consecutive edges at
/// their shared vertex.
pub fn ring_is_simple(ring: &[Point2]) -> bool {
    let n = ring.len();
    if n < 3 {
        return false;
    }
    let bbs: Vec<BBox> = (0..n)
        .map(|i| BBox::of_points([&ring[i], &ring[(i + 1) % n]]))
        .collect();
    for i in 0..n {
        let a = ring[i];
        let b = ring[(i + 1) % n];
        for j in (i + 1)..n {
            let c = ring[j];
            let d = ring[(j + 1) % n];
            let adjacent_next = j == i + 1;
            let adjacent_wrap = i == 0 && j == n - 1;
            if adjacent_next || adjacent_wrap {
                // Consecutive edges share one vertex; they must not fold back.
                let (shared, p, q) = if adjacent_next { (b, a, d) } else { (a, b, c) };
                if orient(p, shared, q) == 0.0 && (q - shared).dot(p - shared) > 0.0 {
                    return false;
                }
                continue;
            }
            if !bbs[i].intersects(&bbs[j]) {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return false;
            }
        }
    }
    true
}

/// Validates a ring and strips consecutive duplicates and the closing vertex.
fn clean_ring(ring_idx: usize, ring: Vec<Point2>) -> Result<Vec<Point2>, GeometryError> {
    if let Some(index) = ring.iter().position(|p| !p.is_finite()) {
        return Err(GeometryError::NonFinite { ring: ring_idx, index });
    }
    let mut out: Vec<Point2> = Vec::with_capacity(ring.len());
    for p in ring {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    if out.len() < 3 {
        return Err(GeometryError::Degenerate { ring: ring_idx });
    }
    if !ring_is_simple(&out) {
        return Err(GeometryError::SelfIntersecting { ring: ring_idx });
    }
    if twice_signed_area(&out) == 0.0 {
        return Err(GeometryError::ZeroArea { ring: ring_idx });
    }
    Ok(out)
}

/// One building footprint: a simple exterior ring with optional holes.
///
/// Ring index 0 in errors refers to the exterior, `k >= 1` to hole `k - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct FootprintPolygon {
    id: String,
    exterior: Vec<Point2>,
    holes: Vec<Vec<Point2>>,
}

impl FootprintPolygon {
    pub fn new(
        id: impl Into<String>,
        exterior: Vec<Point2>,
        holes: Vec<Vec<Point2>>,
    ) -> Result<Self, GeometryError> {
        let mut exterior = clean_ring(0, exterior)?;
        if twice_signed_area(&exterior) < 0.0 {
            exterior.reverse();
        }
        let mut cleaned = Vec::with_capacity(holes.len());
        for (k, hole) in holes.into_iter().enumerate() {
            let mut hole = clean_ring(k + 1, hole)?;
            if twice_signed_area(&hole) > 0.0 {
                hole.reverse();
            }
            cleaned.push(hole);
        }
        let poly = Self { id: id.into(), exterior, holes: cleaned };
        if polygon_area(&poly) <= 0.0 {
            return Err(GeometryError::NonPositiveArea);
        }
        Ok(poly)
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn exterior(&self) -> &[Point2] {
        &self.exterior
    }

    pub fn holes(&self) -> &[Vec<Point2>] {
        &self.holes
    }

    /// Exterior followed by holes.
    pub fn rings(&self) -> impl Iterator<Item = &[Point2]> {
        std::iter::once(self.exterior.as_slice()).chain(self.holes.iter().map(Vec::as_slice))
    }

    pub fn area(&self) -> f64 {
        polygon_area(self)
    }

    pub fn bbox(&self) -> BBox {
        BBox::of_points(&self.exterior)
    }

    /// Area centroid, holes subtracted.
    pub fn centroid(&self) -> Point2 {
        let origin = self.exterior[0];
        let mut cx = 0.0;
        let mut cy = 0.0;
        let mut a2 = 0.0;
        for ring in self.rings() {
            let n = ring.len();
            for i in 0..n {
                let p = ring[i] - origin;
                let q = ring[(i + 1) % n] - origin;
                let w = p.cross(q);
                a2 += w;
                cx += (p.x + q.x) * w;
                cy += (p.y + q.y) * w;
            }
        }
        origin + Point2::new(cx / (3.0 * a2), cy / (3.0 * a2))
    }

    /// Applies `f` to every vertex and revalidates.
    pub fn map_points(&self, f: impl Fn(Point2) -> Point2) -> Result<Self, GeometryError> {
        let exterior = self.exterior.iter().map(|p| f(*p)).collect();
        let holes = self
            .holes
            .iter()
            .map(|h| h.iter().map(|p| f(*p)).collect())
            .collect();
        Self::new(self.id.clone(), exterior, holes)
    }
}

/// Normalizes an angle into `[0, π)`, folding values within 1e-12 of π onto 0.
pub fn normalize_axis_angle(angle: f64) -> f64 {
    let a = angle.rem_euclid(PI);
    if a >= PI - 1e-12 {
        0.0
    } else {
        a
    }
}

/// A rotated rectangle. `axis_angle` is the direction of the long side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrientedRect {
    center: Point2,
    axis_angle: f64,
    length: f64,
    width: f64,
}

impl OrientedRect {
    /// Builds a rectangle, swapping extents (and turning the axis by π/2) if
    /// `width > length`.
    pub fn new(center: Point2, axis_angle: f64, length: f64, width: f64) -> Result<Self, GeometryError> {
        if !(length.is_finite() && width.is_finite() && length > 0.0 && width > 0.0)
            || !center.is_finite()
            || !axis_angle.is_finite()
        {
            return Err(GeometryError::InvalidRect { length, width });
        }
        let (angle, length, width) = if width > length {
            (axis_angle + PI / 2.0, width, length)
        } else {
            (axis_angle, length, width)
        };
        Ok(Self::from_parts(center, normalize_axis_angle(angle), length, width))
    }

    pub(crate) fn from_parts(center: Point2, axis_angle: f64, length: f64, width: f64) -> Self {
        Self { center, axis_angle, length, width }
    }

    pub fn center(&self) -> Point2 {
        self.center
    }

    pub fn axis_angle(&self) -> f64 {
        self.axis_angle
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn area(&self) -> f64 {
        self.length * self.width
    }

    /// Unit vectors along the long and short axes.
    pub fn axes(&self) -> (Point2, Point2) {
        let (s, c) = self.axis_angle.sin_cos();
        (Point2::new(c, s), Point2::new(-s, c))
    }

    /// Corners in counter-clockwise order, starting at the (-long, -short) corner.
    pub fn corners(&self) -> [Point2; 4] {
        let (u, v) = self.axes();
        let hu = u * (0.5 * self.length);
        let hv = v * (0.5 * self.width);
        let c = self.center;
        [c - hu - hv, c + hu - hv, c + hu + hv, c - hu + hv]
    }

    pub fn to_polygon(&self, id: impl Into<String>) -> Result<FootprintPolygon, GeometryError> {
        FootprintPolygon::new(id, self.corners().to_vec(), Vec::new())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square(x0: f64, y0: f64, s: f64) -> Vec<Point2> {
        vec![
            Point2::new(x0, y0),
            Point2::new(x0 + s, y0),
            Point2::new(x0 + s, y0 + s),
            Point2::new(x0, y0 + s),
        ]
    }

    #[test]
    fn unit_square_area() {
        let p = FootprintPolygon::new("a", square(0.0, 0.0, 1.0), vec![]).unwrap();
        assert_eq!(polygon_area(&p), 1.0);
    }

    #[test]
    fn rectangle_area_is_product_of_sides() {
        let ring = vec![
            Point2::new(0.0, 0.0),
            Point2::new(10.0, 0.0),
            Point2::new(10.0, 9.9),
            Point2::new(0.0, 9.9),
        ];
        let p = FootprintPolygon::new("r", ring, vec![]).unwrap();
        assert!((polygon_area(&p) - 99.0).abs() < 1e-12);
    }

    #[test]
    fn hole_is_subtracted() {
        let p = FootprintPolygon::new(
            "h",
            square(0.0, 0.0, 1.0),
            vec![square(0.25, 0.25, 0.5)],
        )
        .unwrap();
        assert_eq!(polygon_area(&p), 0.75);
        assert!(ring_signed_area(&p.holes()[0]) < 0.0);
    }

    #[test]
    fn clockwise_input_is_reoriented_and_closing_vertex_dropped() {
        let mut ring = square(0.0, 0.0, 2.0);
        ring.reverse();
        ring.push(ring[0]);
        let p = FootprintPolygon::new("c", ring, vec![]).unwrap();
        assert_eq!(p.exterior().len(), 4);
        assert!(ring_signed_area(p.exterior()) > 0.0);
    }

    #[test]
    fn degenerate_rings_are_rejected() {
        let two = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.0, 0.0)];
        assert_eq!(
            FootprintPolygon::new("d", two, vec![]),
            Err(GeometryError::Degenerate { ring: 0 })
        );
        let collinear = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(2.0, 0.0)];
        assert!(FootprintPolygon::new("d", collinear, vec![]).is_err());
    }

    #[test]
    fn bow_tie_is_rejected() {
        let ring = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
            Point2::new(0.0, 1.0),
        ];
        assert_eq!(
            FootprintPolygon::new("b", ring, vec![]),
            Err(GeometryError::SelfIntersecting { ring: 0 })
        );
    }

    #[test]
    fn non_finite_is_rejected() {
        let ring = vec![Point2::new(0.0, 0.0), Point2::new(f64::NAN, 0.0), Point2::new(0.0, 1.0)];
        assert_eq!(
            FootprintPolygon::new("n", ring, vec![]),
            Err(GeometryError::NonFinite { ring: 0, index: 1 })
        );
    }

    #[test]
    fn centroid_of_square_with_hole() {
        let p = FootprintPolygon::new(
            "h",
            square(0.0, 0.0, 4.0),
            vec![square(2.0, 2.0, 1.0)],
        )
        .unwrap();
        let c = p.centroid();
        // (16*(2,2) - 1*(2.5,2.5)) / 15
        assert!((c.x - (32.0 - 2.5) / 15.0).abs() < 1e-12);
        assert!((c.y - (32.0 - 2.5) / 15.0).abs() < 1e-12);
    }

    #[test]
    fn oriented_rect_swaps_to_long_axis() {
        let r = OrientedRect::new(Point2::new(0.0, 0.0), 0.0, 1.0, 2.0).unwrap();
        assert_eq!(r.length(), 2.0);
        assert!((r.axis_angle() - PI / 2.0).abs() < 1e-15);
        let corners = r.corners();
        assert!((corners[0] - Point2::new(0.5, -1.0)).norm() < 1e-9);
    }
}
