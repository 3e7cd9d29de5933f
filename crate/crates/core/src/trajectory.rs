//! Isoheight forward parcel advection over gridded horizontal winds, and
//! the distance between an advected parcel and a tracked box path.

use alloc::vec::Vec;
use core::fmt;

use crate::geodesy::{haversine_km, METERS_PER_DEGREE};
use crate::math::{ceil, cos, DEG};
use crate::time::Timestamp;

/// Default initialization heights in meters.
pub const DEFAULT_HEIGHTS: [f64; 4] = [0.0, 200.0, 400.0, 600.0];

pub const DEFAULT_STEP_SECONDS: f64 = 300.0;

#[derive(Clone, Debug, PartialEq)]
pub enum TrajectoryError {
    InvalidAxis(&'static str),
    PayloadLength { expected: usize, found: usize },
    NonFiniteWind,
    OutOfDomain,
    HeightOutOfRange(f64),
    InvalidStep,
    DisjointTimes,
    EmptyPath,
}

impl fmt::Display for TrajectoryError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TrajectoryError::InvalidAxis(axis) => write!(f, "{axis} axis must be nonempty and strictly increasing"),
            TrajectoryError::PayloadLength { expected, found } => {
                write!(f, "wind payload has {found} values per component, expected {expected}")
            }
            TrajectoryError::NonFiniteWind => f.write_str("wind field contains non-finite values"),
            TrajectoryError::OutOfDomain => f.write_str("query lies outside the wind field"),
            TrajectoryError::HeightOutOfRange(h) => write!(f, "height {h} m is outside the wind field levels"),
            TrajectoryError::InvalidStep => f.write_str("integration step must be in (0, 3600] seconds"),
            TrajectoryError::DisjointTimes => f.write_str("paths do not overlap in time"),
            TrajectoryError::EmptyPath => f.write_str("path has no samples"),
        }
    }
}

impl core::error::Error for TrajectoryError {}

/// Horizontal winds on a `(time, height, lat, lon)` grid, lon fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct WindField {
    lats: Vec<f64>,
    lons: Vec<f64>,
    heights: Vec<f64>,
    times: Vec<Timestamp>,
    /// East component, m/s.
    u: Vec<f32>,
    /// North component, m/s.
    v: Vec<f32>,
}

fn strictly_increasing(axis: &[f64]) -> bool {
    !axis.is_empty() && axis.iter().all(|v| v.is_finite()) && axis.windows(2).all(|w| w[0] < w[1])
}

impl WindField {
    pub fn new(
        lats: Vec<f64>,
        lons: Vec<f64>,
        heights: Vec<f64>,
        times: Vec<Timestamp>,
        u: Vec<f32>,
        v: Vec<f32>,
    ) -> Result<Self, TrajectoryError> {
        if !strictly_increasing(&lats) {
            return Err(TrajectoryError::InvalidAxis("lat"));
        }
        if !strictly_increasing(&lons) {
            return Err(TrajectoryError::InvalidAxis("lon"));
        }
        if !strictly_increasing(&heights) {
            return Err(TrajectoryError::InvalidAxis("height"));
        }
        if times.is_empty() || !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(TrajectoryError::InvalidAxis("time"));
        }
        let expected = lats.len() * lons.len() * heights.len() * times.len();
        for comp in [&u, &v] {
            if comp.len() != expected {
                return Err(TrajectoryError::PayloadLength {
                    expected,
                    found: comp.len(),
                });
            }
        }
        if !u.iter().chain(&v).all(|x| x.is_finite()) {
            return Err(TrajectoryError::NonFiniteWind);
        }
        Ok(WindField {
            lats,
            lons,
            heights,
            times,
            u,
            v,
        })
    }

    /// Builds a field by evaluating `wind(t, height, lat, lon) -> (u, v)` at every node.
    pub fn from_fn(
        lats: Vec<f64>,
        lons: Vec<f64>,
        heights: Vec<f64>,
        times: Vec<Timestamp>,
        mut wind: impl FnMut(Timestamp, f64, f64, f64) -> (f64, f64),
    ) -> Result<Self, TrajectoryError> {
        let mut u = Vec::new();
        let mut v = Vec::new();
        for &t in &times {
            for &h in &heights {
                for &lat in &lats {
                    for &lon in &lons {
                        let (a, b) = wind(t, h, lat, lon);
                        u.push(a as f32);
                        v.push(b as f32);
                    }
                }
            }
        }
        WindField::new(lats, lons, heights, times, u, v)
    }

    pub fn lats(&self) -> &[f64] {
        &self.lats
    }

    pub fn lons(&self) -> &[f64] {
        &self.lons
    }

    pub fn heights(&self) -> &[f64] {
        &self.heights
    }

    pub fn times(&self) -> &[Timestamp] {
        &self.times
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    /// Same grid with both components negated.
    pub fn negated(&self) -> WindField {
        WindField {
            u: self.u.iter().map(|x| -x).collect(),
            v: self.v.iter().map(|x| -x).collect(),
            ..self.clone()
        }
    }

    fn index(&self, it: usize, ih: usize, ilat: usize, ilon: usize) -> usize {
        ((it * self.heights.len() + ih) * self.lats.len() + ilat) * self.lons.len() + ilon
    }

    /// Multilinear interpolation in lon, lat, height and time.
    pub fn interpolate(&self, lat: f64, lon: f64, height: f64, t: Timestamp) -> Result<(f64, f64), TrajectoryError> {
        let (ilat, flat) = bracket(&self.lats, lat)?;
        let (ilon, flon) = bracket(&self.lons, lon)?;
        let (ih, fh) = bracket(&self.heights, height)?;
        let (it, ft) = bracket_time(&self.times, t)?;

        let mut u = 0.0;
        let mut v = 0.0;
        for (dt, wt) in corners(it, ft, self.times.len()) {
            for (dh, wh) in corners(ih, fh, self.heights.len()) {
                for (dlat, wlat) in corners(ilat, flat, self.lats.len()) {
                    for (dlon, wlon) in corners(ilon, flon, self.lons.len()) {
                        let w = wt * wh * wlat * wlon;
                        if w == 0.0 {
                            continue;
                        }
                        let k = self.index(dt, dh, dlat, dlon);
                        u += w * self.u[k] as f64;
                        v += w * self.v[k] as f64;
                    }
                }
            }
        }
        Ok((u, v))
    }
}

/// Lower node index and fractional position; single-node axes only accept
/// the node itself.
fn bracket(axis: &[f64], x: f64) -> Result<(usize, f64), TrajectoryError> {
    let last = axis.len() - 1;
    if !(x >= axis[0] && x <= axis[last]) {
        return Err(TrajectoryError::OutOfDomain);
    }
    if last == 0 {
        return Ok((0, 0.0));
    }
    let i = (axis.partition_point(|&a| a <= x).saturating_sub(1)).min(last - 1);
    Ok((i, (x - axis[i]) / (axis[i + 1] - axis[i])))
}

fn bracket_time(axis: &[Timestamp], t: Timestamp) -> Result<(usize, f64), TrajectoryError> {
    let last = axis.len() - 1;
    if t < axis[0] || t > axis[last] {
        return Err(TrajectoryError::OutOfDomain);
    }
    if last == 0 {
        return Ok((0, 0.0));
    }
    let i = (axis.partition_point(|&a| a <= t).saturating_sub(1)).min(last - 1);
    Ok((i, t.fraction_between(axis[i], axis[i + 1])))
}

fn corners(i: usize, f: f64, len: usize) -> [(usize, f64); 2] {
    if len == 1 {
        [(0, 1.0), (0, 0.0)]
    } else {
        [(i, 1.0 - f), (i + 1, f)]
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrajectoryPoint {
    pub t: Timestamp,
    pub lat: f64,
    pub lon: f64,
    pub height: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    /// Hourly positions, starting with the initial point.
    pub points: Vec<TrajectoryPoint>,
    /// Set when the parcel left the wind domain before the requested end.
    pub left_domain_at: Option<Timestamp>,
}

/// Advects a parcel at constant height for `duration_hours` (whole hours).
///
/// Each hour is split into `ceil(3600 / step_seconds)` equal steps of the
/// predictor-corrector scheme
/// `X' = X + V(X, t) dt`, `X(t + dt) = X + (V(X, t) + V(X', t + dt)) dt / 2`,
/// with `dlat = dy / 111320` and `dlon = dx / (111320 cos(lat))`.
pub fn advect(
    field: &WindField,
    start: TrajectoryPoint,
    duration_hours: u32,
    step_seconds: f64,
) -> Result<Trajectory, TrajectoryError> {
    if !(step_seconds > 0.0 && step_seconds <= 3600.0) {
        return Err(TrajectoryError::InvalidStep);
    }
    field.interpolate(start.lat, start.lon, start.height, start.t)?;
    let substeps = ceil(3600.0 / step_seconds) as u32;
    let dt_ms = 3_600_000 / substeps as i64;
    let dt = dt_ms as f64 / 1000.0;

    let mut points = alloc::vec![start];
    let (mut lat, mut lon) = (start.lat, start.lon);
    let h = start.height;
    let mut t = start.t;
    for hour in 1..=duration_hours {
        for s in 0..substeps {
            // The last substep lands exactly on the hour.
            let next_t = if s + 1 == substeps {
                Timestamp::from_unix_millis(start.t.unix_millis() + hour as i64 * 3_600_000)
            } else {
                Timestamp::from_unix_millis(t.unix_millis() + dt_ms)
            };
            let step = next_t.seconds_since(t);
            let stepped = heun_step(field, lat, lon, h, t, next_t, step);
            match stepped {
                Ok((nlat, nlon)) => {
                    lat = nlat;
                    lon = nlon;
                    t = next_t;
                }
                Err(TrajectoryError::OutOfDomain) => {
                    return Ok(Trajectory {
                        points,
                        left_domain_at: Some(t),
                    })
                }
                Err(e) => return Err(e),
            }
        }
        points.push(TrajectoryPoint { t, lat, lon, height: h });
    }
    let _ = dt;
    Ok(Trajectory {
        points,
        left_domain_at: None,
    })
}

fn displace(lat: f64, lon: f64, u: f64, v: f64, dt: f64) -> (f64, f64) {
    let dlat = v * dt / METERS_PER_DEGREE;
    let dlon = u * dt / (METERS_PER_DEGREE * cos(lat * DEG));
    (lat + dlat, lon + dlon)
}

fn heun_step(
    field: &WindField,
    lat: f64,
    lon: f64,
    h: f64,
    t: Timestamp,
    next_t: Timestamp,
    dt: f64,
) -> Result<(f64, f64), TrajectoryError> {
    let (u0, v0) = field.interpolate(lat, lon, h, t)?;
    let (plat, plon) = displace(lat, lon, u0, v0, dt);
    let (u1, v1) = field.interpolate(plat, plon, h, next_t)?;
    Ok(displace(lat, lon, 0.5 * (u0 + u1), 0.5 * (v0 + v1), dt))
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleRun {
    pub lat: f64,
    pub lon: f64,
    pub t0: Timestamp,
    pub heights: Vec<f64>,
    pub trajectories: Vec<Trajectory>,
}

/// Independent advection from the same point at each height. Heights outside
/// the field's level range are rejected, never clamped.
pub fn run_ensemble(
    field: &WindField,
    lat: f64,
    lon: f64,
    t0: Timestamp,
    heights: &[f64],
    duration_hours: u32,
    step_seconds: f64,
) -> Result<EnsembleRun, TrajectoryError> {
    let levels = field.heights();
    let (lo, hi) = (levels[0], levels[levels.len() - 1]);
    if let Some(&bad) = heights.iter().find(|&&h| !(h >= lo && h <= hi)) {
        return Err(TrajectoryError::HeightOutOfRange(bad));
    }
    let trajectories = heights
        .iter()
        .map(|&height| advect(field, TrajectoryPoint { t: t0, lat, lon, height }, duration_hours, step_seconds))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(EnsembleRun {
        lat,
        lon,
        t0,
        heights: heights.to_vec(),
        trajectories,
    })
}

/// Timestamped position on any path.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoSample {
    pub t: Timestamp,
    pub lat: f64,
    pub lon: f64,
}

impl From<&TrajectoryPoint> for GeoSample {
    fn from(p: &TrajectoryPoint) -> Self {
        GeoSample {
            t: p.t,
            lat: p.lat,
            lon: p.lon,
        }
    }
}

/// Position at `t` by linear interpolation in time; `None` outside the path.
pub fn position_at(path: &[GeoSample], t: Timestamp) -> Option<(f64, f64)> {
    let first = path.first()?;
    let last = path.last()?;
    if t < first.t || t > last.t {
        return None;
    }
    let i = path.partition_point(|s| s.t <= t).saturating_sub(1).min(path.len() - 1);
    let a = &path[i];
    if a.t == t || i + 1 == path.len() {
        return Some((a.lat, a.lon));
    }
    let b = &path[i + 1];
    let f = t.fraction_between(a.t, b.t);
    Some((a.lat + f * (b.lat - a.lat), a.lon + f * (b.lon - a.lon)))
}

/// Great-circle distance (km) between two time-ordered paths at hourly
/// instants `start, start + 1 h, ...` up to the end of their common time
/// range, where `start` is the later of the two first samples. Both paths
/// are interpolated linearly in time, so the result does not depend on the
/// argument order.
pub fn divergence_series(a: &[GeoSample], b: &[GeoSample]) -> Result<Vec<(Timestamp, f64)>, TrajectoryError> {
    let (a0, a1) = (a.first().ok_or(TrajectoryError::EmptyPath)?, a.last().ok_or(TrajectoryError::EmptyPath)?);
    let (b0, b1) = (b.first().ok_or(TrajectoryError::EmptyPath)?, b.last().ok_or(TrajectoryError::EmptyPath)?);
    let start = a0.t.max(b0.t);
    let end = a1.t.min(b1.t);
    if start > end {
        return Err(TrajectoryError::DisjointTimes);
    }
    let mut out = Vec::new();
    let mut t = start;
    while t <= end {
        let (la, lo) = position_at(a, t).expect("inside range");
        let (lb, lob) = position_at(b, t).expect("inside range");
        out.push((t, haversine_km(la, lo, lb, lob)));
        t = Timestamp::from_unix_millis(t.unix_millis() + 3_600_000);
    }
    Ok(out)
}

/// First sample whose divergence exceeds `threshold_km`.
pub fn first_exceedance(series: &[(Timestamp, f64)], threshold_km: f64) -> Option<Timestamp> {
    series.iter().find(|(_, d)| *d > threshold_km).map(|(t, _)| *t)
}
