use super::Point2;

/// Mean Earth radius (IUGG), meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Local equirectangular projection about a reference longitude/latitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalProjection {
    pub ref_lon: f64,
    pub ref_lat: f64,
    cos_ref: f64,
}

impl LocalProjection {
    pub fn new(ref_lon: f64, ref_lat: f64) -> Self {
        Self { ref_lon, ref_lat, cos_ref: ref_lat.to_radians().cos() }
    }

    /// (lon, lat) in degrees to local meters.
    pub fn forward(&self, lon: f64, lat: f64) -> Point2 {
        Point2::new(
            EARTH_RADIUS_M * (lon - self.ref_lon).to_radians() * self.cos_ref,
            EARTH_RADIUS_M * (lat - self.ref_lat).to_radians(),
        )
    }

    /// Local meters back to (lon, lat) degrees.
    pub fn inverse(&self, p: Point2) -> (f64, f64) {
        (
            self.ref_lon + (p.x / (EARTH_RADIUS_M * self.cos_ref)).to_degrees(),
            self.ref_lat + (p.y / EARTH_RADIUS_M).to_degrees(),
        )
    }
}

/// Projects a lon/lat ring (degrees) to meters about `reference`.
pub fn project_to_meters(lonlat_ring: &[(f64, f64)], reference: (f64, f64)) -> Vec<Point2> {
    let proj = LocalProjection::new(reference.0, reference.1);
    lonlat_ring.iter().map(|&(lon, lat)| proj.forward(lon, lat)).collect()
}
