//! Solar zenith angles around the tracking box and day/night transition
//! classification.
//!
//! Zenith angles come from the low-precision solar coordinates of the
//! Astronomical Almanac (mean longitude, mean anomaly, two-term equation of
//! center, mean sidereal time). Over 1950-2050 the sun's position is good to
//! about 0.01 degrees, far inside the 12-degree gap between the day and night
//! thresholds. No refraction correction is applied.

use alloc::vec::Vec;
use core::fmt;

use crate::geodesy::normalize_longitude;
use crate::math::{acos, asin, atan2, cos, rem_euclid, sin, DEG};
use crate::raster::GeoTransform;
use crate::region::TrackingBox;
use crate::time::Timestamp;

const J2000: f64 = 2_451_545.0;

/// Solar zenith angle in degrees, in `[0, 180]`.
pub fn solar_zenith(lat: f64, lon: f64, t: Timestamp) -> f64 {
    let lon = normalize_longitude(lon);
    let n = t.julian_day() - J2000;

    let mean_longitude = rem_euclid(280.460 + 0.985_647_4 * n, 360.0);
    let mean_anomaly = rem_euclid(357.528 + 0.985_600_3 * n, 360.0) * DEG;
    let ecliptic_longitude = (mean_longitude + 1.915 * sin(mean_anomaly) + 0.020 * sin(2.0 * mean_anomaly)) * DEG;
    let obliquity = (23.439 - 0.000_000_4 * n) * DEG;

    let right_ascension = atan2(cos(obliquity) * sin(ecliptic_longitude), cos(ecliptic_longitude));
    let declination = asin(sin(obliquity) * sin(ecliptic_longitude));

    // Greenwich mean sidereal time in degrees.
    let gmst = rem_euclid(280.460_618_37 + 360.985_647_366_29 * n, 360.0);
    let hour_angle = (gmst + lon) * DEG - right_ascension;

    let phi = lat * DEG;
    let cos_zenith = sin(phi) * sin(declination) + cos(phi) * cos(declination) * cos(hour_angle);
    acos(cos_zenith.clamp(-1.0, 1.0)) / DEG
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolarError {
    InvalidThresholds,
    DegenerateBox,
}

impl fmt::Display for SolarError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolarError::InvalidThresholds => f.write_str("thresholds must satisfy 0 < day < night < 180"),
            SolarError::DegenerateBox => f.write_str("tracking box has no area"),
        }
    }
}

impl core::error::Error for SolarError {}

/// Zenith thresholds bounding the transition band, in degrees.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionParams {
    /// Above this the sun is too low for daytime imagery (`c`).
    pub day_threshold: f64,
    /// Below this the sun affects nighttime imagery (`d`).
    pub night_threshold: f64,
}

impl Default for TransitionParams {
    fn default() -> Self {
        TransitionParams {
            day_threshold: 84.0,
            night_threshold: 96.0,
        }
    }
}

impl TransitionParams {
    pub fn new(day_threshold: f64, night_threshold: f64) -> Result<Self, SolarError> {
        if 0.0 < day_threshold && day_threshold < night_threshold && night_threshold < 180.0 {
            Ok(TransitionParams {
                day_threshold,
                night_threshold,
            })
        } else {
            Err(SolarError::InvalidThresholds)
        }
    }
}

/// Zenith angles sampled at every perimeter pixel of the box, split at the
/// box center: `right` holds pixels with `x > center_x`, `left` the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct PerimeterAngles {
    pub right: Vec<f64>,
    pub left: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PerimeterExtremes {
    pub min_right: f64,
    pub max_right: f64,
    pub min_left: f64,
    pub max_left: f64,
}

impl PerimeterAngles {
    pub fn extremes(&self) -> PerimeterExtremes {
        let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
        let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        PerimeterExtremes {
            min_right: min(&self.right),
            max_right: max(&self.right),
            min_left: min(&self.left),
            max_left: max(&self.left),
        }
    }
}

/// Samples the solar zenith at each boundary pixel of the box footprint.
pub fn perimeter_angles(bx: &TrackingBox, geo: &GeoTransform, t: Timestamp) -> Result<PerimeterAngles, SolarError> {
    // The footprint is only used for its shape here, so bounds are unlimited.
    let rect = bx.pixel_rect(usize::MAX / 2, usize::MAX / 2).ok_or(SolarError::DegenerateBox)?;
    let mut angles = PerimeterAngles {
        right: Vec::new(),
        left: Vec::new(),
    };
    for (x, y) in rect.perimeter() {
        let (lat, lon) = geo.pixel_to_geo(x as f64, y as f64);
        let z = solar_zenith(lat, lon, t);
        if x as f64 > bx.center_x {
            angles.right.push(z);
        } else {
            angles.left.push(z);
        }
    }
    if angles.right.is_empty() || angles.left.is_empty() {
        return Err(SolarError::DegenerateBox);
    }
    Ok(angles)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DiurnalState {
    Day,
    Night,
    SunriseTransition,
    SunsetTransition,
}

impl DiurnalState {
    pub fn is_transition(self) -> bool {
        matches!(self, DiurnalState::SunriseTransition | DiurnalState::SunsetTransition)
    }

    pub fn name(self) -> &'static str {
        match self {
            DiurnalState::Day => "Day",
            DiurnalState::Night => "Night",
            DiurnalState::SunriseTransition => "SunriseTransition",
            DiurnalState::SunsetTransition => "SunsetTransition",
        }
    }
}

/// Classifies the box for one frame.
///
/// Sunrise holds while `min(right) < night` and `max(left) > day`; sunset
/// while `max(right) > day` and `min(left) < night`. When both hold, the
/// previous frame's extremes decide: a falling `min(right)` means sunrise, a
/// rising `max(right)` means sunset. Without a usable slope the side
/// ordering decides (the sunlit side has the smaller mean zenith). With
/// neither condition the box is in `Day` or `Night`, which together with the
/// threshold ordering makes the classification total.
pub fn transition_state(
    angles: &PerimeterAngles,
    params: &TransitionParams,
    previous: Option<&PerimeterExtremes>,
) -> DiurnalState {
    let e = angles.extremes();
    let (c, d) = (params.day_threshold, params.night_threshold);
    let sunrise = e.min_right < d && e.max_left > c;
    let sunset = e.max_right > c && e.min_left < d;
    match (sunrise, sunset) {
        (true, false) => DiurnalState::SunriseTransition,
        (false, true) => DiurnalState::SunsetTransition,
        (true, true) => {
            if let Some(p) = previous {
                if e.min_right < p.min_right {
                    return DiurnalState::SunriseTransition;
                }
                if e.max_right > p.max_right {
                    return DiurnalState::SunsetTransition;
                }
            }
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            if mean(&angles.right) < mean(&angles.left) {
                DiurnalState::SunriseTransition
            } else {
                DiurnalState::SunsetTransition
            }
        }
        (false, false) => {
            if e.max_right.max(e.max_left) <= c {
                DiurnalState::Day
            } else {
                DiurnalState::Night
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn ts(secs: i64) -> Timestamp {
        Timestamp::from_unix_seconds(secs)
    }

    fn uniform(v: f64) -> PerimeterAngles {
        PerimeterAngles {
            right: vec![v; 3],
            left: vec![v; 5],
        }
    }

    #[test]
    fn plain_day_and_night() {
        let p = TransitionParams::default();
        assert_eq!(transition_state(&uniform(40.0), &p, None), DiurnalState::Day);
        assert_eq!(transition_state(&uniform(120.0), &p, None), DiurnalState::Night);
        assert_eq!(transition_state(&uniform(84.0), &p, None), DiurnalState::Day);
        assert_eq!(transition_state(&uniform(96.0), &p, None), DiurnalState::Night);
    }

    #[test]
    fn sunrise_with_falling_right_minimum() {
        let angles = PerimeterAngles {
            right: vec![92.0, 93.0, 94.0],
            left: vec![97.0, 100.0],
        };
        let prev = PerimeterExtremes {
            min_right: 93.0,
            max_right: 95.0,
            min_left: 98.0,
            max_left: 101.0,
        };
        assert_eq!(
            transition_state(&angles, &TransitionParams::default(), Some(&prev)),
            DiurnalState::SunriseTransition
        );
    }

    #[test]
    fn ambiguous_band_follows_slope() {
        let p = TransitionParams::default();
        let now = uniform(90.0);
        let rising = PerimeterExtremes {
            min_right: 89.0,
            max_right: 89.0,
            min_left: 89.0,
            max_left: 89.0,
        };
        let falling = PerimeterExtremes {
            min_right: 91.0,
            max_right: 91.0,
            min_left: 91.0,
            max_left: 91.0,
        };
        assert_eq!(transition_state(&now, &p, Some(&rising)), DiurnalState::SunsetTransition);
        assert_eq!(transition_state(&now, &p, Some(&falling)), DiurnalState::SunriseTransition);
        // Flat slope, sunlit right side.
        let east_lit = PerimeterAngles {
            right: vec![89.0],
            left: vec![91.0],
        };
        assert_eq!(transition_state(&east_lit, &p, None), DiurnalState::SunriseTransition);
        assert_eq!(transition_state(&now, &p, None), DiurnalState::SunsetTransition);
    }

    #[test]
    fn threshold_validation() {
        assert!(TransitionParams::new(96.0, 84.0).is_err());
        assert!(TransitionParams::new(0.0, 84.0).is_err());
        assert!(TransitionParams::new(84.0, 180.0).is_err());
        assert_eq!(TransitionParams::new(84.0, 96.0).unwrap(), TransitionParams::default());
    }

    #[test]
    fn equinox_noon_on_equator() {
        // 2021-03-20 12:07 UTC is within minutes of solar noon at (0, 0).
        let z = solar_zenith(0.0, 0.0, ts(1_616_242_020));
        assert!(z < 1.0, "{z}");
        let z = solar_zenith(0.0, 0.0, ts(1_616_242_020 + 12 * 3600));
        assert!(z > 100.0, "{z}");
    }

    #[test]
    fn polar_night() {
        // 2020-12-21, every hour.
        for h in 0..24 {
            let z = solar_zenith(89.9, 15.0, ts(1_608_508_800 + h * 3600));
            assert!(z > 90.0, "hour {h}: {z}");
        }
    }

    #[test]
    fn perimeter_partition_of_three_by_three() {
        let geo = GeoTransform::new(0.0, 0.0, -0.02, 0.02).unwrap();
        let bx = TrackingBox::new(10.0, 10.0, 1.0, 1.0);
        let a = perimeter_angles(&bx, &geo, ts(0)).unwrap();
        assert_eq!((a.right.len(), a.left.len()), (3, 5));
        assert!(perimeter_angles(&TrackingBox::new(10.0, 10.0, 0.0, 1.0), &geo, ts(0)).is_err());
    }
}
