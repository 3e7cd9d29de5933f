//! Trajectory ensemble versus an observed box path.

use serde_json::{json, Value};
use shiptrack_core::trajectory::{divergence_series, first_exceedance, run_ensemble, EnsembleRun, GeoSample, WindField};
use shiptrack_core::Timestamp;

use crate::error::Result;
use crate::timefmt::format_rfc3339;

/// One grid cell of a 0.25 degree analysis.
pub const DEFAULT_THRESHOLD_KM: f64 = 25.0;

#[derive(Clone, Debug, PartialEq)]
pub struct HeightSummary {
    pub height_m: f64,
    /// Hourly `(time, km)` over the overlap of trajectory and box path.
    pub series: Vec<(Timestamp, f64)>,
    pub first_exceedance: Option<Timestamp>,
    pub max_km: f64,
    pub mean_km: f64,
    pub left_domain_at: Option<Timestamp>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub threshold_km: f64,
    pub ensemble: EnsembleRun,
    pub heights: Vec<HeightSummary>,
}

impl Comparison {
    /// Heights whose divergence never exceeds the threshold.
    pub fn heights_within_threshold(&self) -> Vec<f64> {
        self.heights
            .iter()
            .filter(|h| h.first_exceedance.is_none())
            .map(|h| h.height_m)
            .collect()
    }

    /// Height with the smallest mean divergence; the lower height on ties.
    pub fn closest_height(&self) -> Option<f64> {
        self.heights
            .iter()
            .filter(|h| !h.series.is_empty())
            .min_by(|a, b| a.mean_km.total_cmp(&b.mean_km))
            .map(|h| h.height_m)
    }

    pub fn summary_json(&self) -> Value {
        let t0 = self.ensemble.t0;
        let ts = |t: Option<Timestamp>| t.map(format_rfc3339);
        json!({
            "init": { "timestamp": format_rfc3339(t0), "lat": self.ensemble.lat, "lon": self.ensemble.lon },
            "threshold_km": self.threshold_km,
            "heights": self.heights.iter().map(|h| json!({
                "height_m": h.height_m,
                "first_exceedance": ts(h.first_exceedance),
                "first_exceedance_hour": h.first_exceedance.map(|t| t.seconds_since(t0) / 3600.0),
                "max_divergence_km": h.max_km,
                "mean_divergence_km": h.mean_km,
                "samples": h.series.len(),
                "left_domain_at": ts(h.left_domain_at),
            })).collect::<Vec<_>>(),
            "heights_within_threshold": self.heights_within_threshold(),
            "closest_height_m": self.closest_height(),
        })
    }

    /// Rows `(time, hours since init, height, km)` for the divergence table.
    pub fn table(&self) -> impl Iterator<Item = (Timestamp, f64, f64, f64)> + '_ {
        let t0 = self.ensemble.t0;
        self.heights
            .iter()
            .flat_map(move |h| h.series.iter().map(move |&(t, d)| (t, t.seconds_since(t0) / 3600.0, h.height_m, d)))
    }
}

/// Hours from the first to the last box-path sample, rounded up.
pub fn path_hours(path: &[GeoSample]) -> u32 {
    match (path.first(), path.last()) {
        (Some(a), Some(b)) => (b.t.seconds_since(a.t) / 3600.0).ceil().max(0.0) as u32,
        _ => 0,
    }
}

/// Advects from `init` (or the first box-path sample) at each height and
/// measures hourly divergence from the box path.
pub fn compare(
    path: &[GeoSample],
    field: &WindField,
    init: Option<(f64, f64)>,
    heights: &[f64],
    hours: Option<u32>,
    step_seconds: f64,
    threshold_km: f64,
) -> Result<Comparison> {
    let first = path.first().ok_or(shiptrack_core::trajectory::TrajectoryError::EmptyPath)?;
    let (lat, lon) = init.unwrap_or((first.lat, first.lon));
    let hours = hours.unwrap_or_else(|| path_hours(path));
    let ensemble = run_ensemble(field, lat, lon, first.t, heights, hours, step_seconds)?;
    let mut out = Vec::with_capacity(heights.len());
    for (tr, &height_m) in ensemble.trajectories.iter().zip(heights) {
        let samples: Vec<GeoSample> = tr.points.iter().map(GeoSample::from).collect();
        let series = divergence_series(&samples, path)?;
        let max_km = series.iter().map(|s| s.1).fold(0.0, f64::max);
        let mean_km = series.iter().map(|s| s.1).sum::<f64>() / series.len().max(1) as f64;
        out.push(HeightSummary {
            height_m,
            first_exceedance: first_exceedance(&series, threshold_km),
            series,
            max_km,
            mean_km,
            left_domain_at: tr.left_domain_at,
        });
    }
    Ok(Comparison {
        threshold_km,
        ensemble,
        heights: out,
    })
}
