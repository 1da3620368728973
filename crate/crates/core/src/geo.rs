//! Great-circle distance and a local planar projection.

/// Mean Earth radius in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_008.8;

/// Haversine distance between two WGS84 points, in meters.
pub fn haversine_m(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let (p1, p2) = (lat1.to_radians(), lat2.to_radians());
    let dlat = p2 - p1;
    let dlon = (lon2 - lon1).to_radians();
    let a = (dlat / 2.0).sin().powi(2) + p1.cos() * p2.cos() * (dlon / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * a.sqrt().min(1.0).asin()
}

/// Equirectangular projection around a reference latitude.
///
/// Over a city-sized extent the planar Euclidean distance agrees with the
/// great-circle distance to well under a percent, which is what k-means needs:
/// centroids only make sense in a vector space.
#[derive(Debug, Clone, Copy)]
pub struct LocalProjection {
    cos_ref: f64,
}

impl LocalProjection {
    pub fn new(ref_lat: f64) -> Self {
        Self {
            cos_ref: ref_lat.to_radians().cos(),
        }
    }

    /// Projection centred on the mean latitude of `points` (lat, lon).
    pub fn around(points: &[[f64; 2]]) -> Self {
        let mean = if points.is_empty() {
            0.0
        } else {
            points.iter().map(|p| p[0]).sum::<f64>() / points.len() as f64
        };
        Self::new(mean)
    }

    /// (lat, lon) degrees to planar (x, y) meters.
    pub fn forward(&self, lat: f64, lon: f64) -> [f64; 2] {
        [
            EARTH_RADIUS_M * lon.to_radians() * self.cos_ref,
            EARTH_RADIUS_M * lat.to_radians(),
        ]
    }

    /// Planar (x, y) meters back to (lat, lon) degrees.
    pub fn inverse(&self, xy: [f64; 2]) -> (f64, f64) {
        let lat = (xy[1] / EARTH_RADIUS_M).to_degrees();
        let lon = (xy[0] / (EARTH_RADIUS_M * self.cos_ref)).to_degrees();
        (lat, lon)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_degree_of_latitude() {
        let d = haversine_m(50.0, 14.0, 51.0, 14.0);
        assert!((d - 111_195.0).abs() < 10.0, "{d}");
    }

    #[test]
    fn zero_distance() {
        assert_eq!(haversine_m(50.08, 14.42, 50.08, 14.42), 0.0);
    }

    #[test]
    fn projection_round_trips() {
        let p = LocalProjection::new(50.0);
        let xy = p.forward(50.1, 14.4);
        let (lat, lon) = p.inverse(xy);
        assert!((lat - 50.1).abs() < 1e-9);
        assert!((lon - 14.4).abs() < 1e-9);
    }

    #[test]
    fn projection_close_to_haversine_at_city_scale() {
        let p = LocalProjection::new(50.08);
        let a = p.forward(50.05, 14.35);
        let b = p.forward(50.11, 14.50);
        let planar = ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt();
        let gc = haversine_m(50.05, 14.35, 50.11, 14.50);
        assert!((planar - gc).abs() / gc < 0.005);
    }
}
