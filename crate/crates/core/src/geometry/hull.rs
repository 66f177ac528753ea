use super::Point2;

/// Convex hull by Andrew's monotone chain.
///
/// Returns the hull counter-clockwise without collinear vertices, starting at
/// the lexicographically smallest point. Collinear input yields the two
/// extreme points; a single point yields itself.
pub fn convex_hull(points: &[Point2]) -> Vec<Point2> {
    let mut pts: Vec<Point2> = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }

    let mut hull: Vec<Point2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower_len && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

fn turn(o: Point2, a: Point2, b: Point2) -> f64 {
    (a - o).cross(b - o)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::ring_signed_area;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn interior_point_is_dropped() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
            Point2::new(0.5, 0.5),
        ];
        let hull = convex_hull(&pts);
        assert_eq!(hull, vec![pts[0], pts[1], pts[2], pts[3]]);
    }

    #[test]
    fn triangle_comes_back_ccw() {
        let pts = [Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)];
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 3);
        assert!(ring_signed_area(&hull) > 0.0);
    }

    #[test]
    fn collinear_and_single_inputs() {
        let line = [Point2::new(0.0, 0.0), Point2::new(2.0, 2.0), Point2::new(1.0, 1.0)];
        assert_eq!(convex_hull(&line), vec![line[0], line[1]]);
        let one = [Point2::new(3.0, 4.0)];
        assert_eq!(convex_hull(&one), vec![one[0]]);
    }

    #[test]
    fn random_disk_points_are_all_inside_hull() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let pts: Vec<Point2> = (0..1000)
            .map(|_| {
                let r: f64 = rng.gen::<f64>().sqrt();
                let t: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                Point2::new(r * t.cos(), r * t.sin())
            })
            .collect();
        let hull = convex_hull(&pts);
        let n = hull.len();
        for i in 0..n {
            let a = hull[i];
            let b = hull[(i + 1) % n];
            let c = hull[(i + 2) % n];
            // strictly convex: no collinear vertices kept
            assert!((b - a).cross(c - b) > 0.0);
        }
        // Oracle: each point on the left of (or on) every hull edge.
        for p in &pts {
            for i in 0..n {
                let a = hull[i];
                let b = hull[(i + 1) % n];
                assert!((b - a).cross(*p - a) >= -1e-12, "point {p:?} outside hull edge {i}");
            }
        }
    }
}
