use std::f64::consts::PI;

use super::{convex_hull, normalize_axis_angle, FootprintPolygon, GeometryError, OrientedRect, Point2};

/// Relative slack under which two candidate areas count as tied.
const AREA_TIE_REL: f64 = 1e-12;

struct Candidate {
    area: f64,
    rect: OrientedRect,
}

/// Minimum-area rotated rectangle enclosing the exterior ring, by rotating
/// calipers over the convex hull.
///
/// One side of the result is collinear with a hull edge. Ties between edge
/// orientations (within 1e-12 relative area) resolve to the smallest
/// `axis_angle`. For squares the generating edge direction is the axis.
pub fn min_bounding_rect(poly: &FootprintPolygon) -> Result<OrientedRect, GeometryError> {
    let hull = convex_hull(poly.exterior());
    let n = hull.len();
    if n < 3 {
        return Err(GeometryError::Degenerate { ring: 0 });
    }

    let dot_at = |k: usize, u: Point2| hull[k % n].dot(u);
    let cross_at = |k: usize, u: Point2| u.cross(hull[k % n]);

    let mut candidates: Vec<Candidate> = Vec::with_capacity(n);
    // Caliper indices, advanced monotonically around the hull.
    let (mut right, mut top, mut left) = (1usize, 0usize, 0usize);
    for i in 0..n {
        let a = hull[i];
        let d = hull[(i + 1) % n] - a;
        let len = d.norm();
        let u = d * (1.0 / len);

        if i == 0 {
            right = 1;
        }
        let mut guard = 0;
        while dot_at(right + 1, u) > dot_at(right, u) && guard < n {
            right += 1;
            guard += 1;
        }
        if i == 0 {
            top = right;
        }
        guard = 0;
        while cross_at(top + 1, u) > cross_at(top, u) && guard < n {
            top += 1;
            guard += 1;
        }
        if i == 0 {
            left = top;
        }
        guard = 0;
        while dot_at(left + 1, u) < dot_at(left, u) && guard < n {
            left += 1;
            guard += 1;
        }

        let u_min = dot_at(left, u) - a.dot(u);
        let u_max = dot_at(right, u) - a.dot(u);
        let v_max = cross_at(top, u) - u.cross(a);
        let ext_u = u_max - u_min;
        let ext_v = v_max;
        let v = Point2::new(-u.y, u.x);
        let center = a + u * (0.5 * (u_min + u_max)) + v * (0.5 * v_max);
        let edge_angle = u.y.atan2(u.x);

        let square = (ext_u - ext_v).abs() <= AREA_TIE_REL * ext_u.max(ext_v);
        let (angle, length, width) = if square || ext_u >= ext_v {
            (edge_angle, ext_u, ext_v)
        } else {
            (edge_angle + PI / 2.0, ext_v, ext_u)
        };
        candidates.push(Candidate {
            area: ext_u * ext_v,
            rect: OrientedRect::from_parts(center, normalize_axis_angle(angle), length, width),
        });
    }

    let min_area = candidates.iter().map(|c| c.area).fold(f64::INFINITY, f64::min);
    let limit = min_area * (1.0 + AREA_TIE_REL);
    let best = candidates
        .into_iter()
        .filter(|c| c.area <= limit)
        .min_by(|a, b| a.rect.axis_angle().total_cmp(&b.rect.axis_angle()))
        .expect("hull has at least three edges");
    Ok(best.rect)
}
