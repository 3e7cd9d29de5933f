//! Spherical-earth distances.
//!
//! The sphere is sized so one degree of arc is exactly [`METERS_PER_DEGREE`]
//! (radius about 6378.166 km, 29 m above the WGS84 equatorial radius). This
//! keeps haversine distances consistent with the meters-to-degrees
//! conversion used by parcel advection.

use crate::math::{asin, cos, sin, sqrt, DEG};

pub const EARTH_RADIUS_KM: f64 = METERS_PER_DEGREE * 180.0 / core::f64::consts::PI / 1000.0;

/// Length of one degree of latitude (and of longitude at the equator).
pub const METERS_PER_DEGREE: f64 = 111_320.0;

/// Great-circle distance in kilometers between two lat/lon points (degrees).
pub fn haversine_km(lat1: f64, lon1: f64, lat2: f64, lon2: f64) -> f64 {
    let phi1 = lat1 * DEG;
    let phi2 = lat2 * DEG;
    let dphi = (lat2 - lat1) * DEG;
    let dlambda = (lon2 - lon1) * DEG;
    let s1 = sin(dphi / 2.0);
    let s2 = sin(dlambda / 2.0);
    let h = s1 * s1 + cos(phi1) * cos(phi2) * s2 * s2;
    2.0 * EARTH_RADIUS_KM * asin(sqrt(h.min(1.0)))
}

/// Wraps a longitude into (-180, 180].
pub fn normalize_longitude(lon: f64) -> f64 {
    let mut l = lon % 360.0;
    if l > 180.0 {
        l -= 360.0;
    } else if l <= -180.0 {
        l += 360.0;
    }
    l
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tenth_degree_of_latitude() {
        let d = haversine_km(0.0, 0.0, 0.1, 0.0);
        assert!((d - 11.132).abs() < 1e-3, "{d}");
    }

    #[test]
    fn degree_matches_conversion_constant() {
        let d = haversine_km(0.0, 10.0, 0.0, 11.0);
        assert!((d * 1000.0 - METERS_PER_DEGREE).abs() < 1e-6);
    }

    #[test]
    fn symmetric_and_zero() {
        assert_eq!(haversine_km(36.4, -135.6, 36.4, -135.6), 0.0);
        let a = haversine_km(36.4, -135.6, 30.0, -120.0);
        let b = haversine_km(30.0, -120.0, 36.4, -135.6);
        assert!((a - b).abs() < 1e-9);
    }

    #[test]
    fn longitude_wrap() {
        assert_eq!(normalize_longitude(190.0), -170.0);
        assert_eq!(normalize_longitude(-180.0), 180.0);
        assert_eq!(normalize_longitude(180.0), 180.0);
        assert_eq!(normalize_longitude(-135.65), -135.65);
    }
}
