//! Tabular and JSON outputs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};
use shiptrack_core::synth::TruthRow;
use shiptrack_core::tracker::{BoxPathRow, EventKind, PersistenceReport, TrackerEvent};
use shiptrack_core::trajectory::{EnsembleRun, GeoSample};
use shiptrack_core::Timestamp;

use crate::error::{io_err, malformed, Error, Result};
use crate::timefmt::{format_rfc3339, parse_rfc3339};

pub const BOX_PATH_HEADER: [&str; 8] = ["timestamp", "center_x", "center_y", "lat", "lon", "mode", "n_features", "visibility"];

/// A box-path row as read back from CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxPathRecord {
    pub timestamp: Timestamp,
    pub center_x: f64,
    pub center_y: f64,
    pub lat: f64,
    pub lon: f64,
    pub mode: String,
    pub n_features: usize,
    pub visibility: f64,
}

impl From<&BoxPathRow> for BoxPathRecord {
    fn from(r: &BoxPathRow) -> Self {
        BoxPathRecord {
            timestamp: r.timestamp,
            center_x: r.center_x,
            center_y: r.center_y,
            lat: r.lat,
            lon: r.lon,
            mode: r.mode.to_string(),
            n_features: r.n_features,
            visibility: r.visibility,
        }
    }
}

impl From<&BoxPathRecord> for GeoSample {
    fn from(r: &BoxPathRecord) -> Self {
        GeoSample {
            t: r.timestamp,
            lat: r.lat,
            lon: r.lon,
        }
    }
}

fn csv_writer(path: &Path) -> Result<csv::Writer<File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => Error::Io {
            path: path.into(),
            source,
        },
        other => malformed(path, format!("{other:?}")),
    }
}

fn write_rows<I, R>(path: &Path, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn write_box_path(path: &Path, rows: &[BoxPathRow]) -> Result<()> {
    write_rows(
        path,
        &BOX_PATH_HEADER,
        rows.iter().map(|r| {
            [
                format_rfc3339(r.timestamp),
                r.center_x.to_string(),
                r.center_y.to_string(),
                r.lat.to_string(),
                r.lon.to_string(),
                r.mode.to_string(),
                r.n_features.to_string(),
                r.visibility.to_string(),
            ]
        }),
    )
}

pub fn read_box_path(path: &Path) -> Result<Vec<BoxPathRecord>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    if headers.iter().ne(BOX_PATH_HEADER) {
        return Err(malformed(path, format!("expected header {}", BOX_PATH_HEADER.join(","))));
    }
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let bad = |what: &str| malformed(path, format!("row {}: bad {what}", i + 1));
        let num = |k: usize| row[k].trim().parse::<f64>().map_err(|_| bad(BOX_PATH_HEADER[k]));
        out.push(BoxPathRecord {
            timestamp: parse_rfc3339(&row[0]).ok_or_else(|| bad("timestamp"))?,
            center_x: num(1)?,
            center_y: num(2)?,
            lat: num(3)?,
            lon: num(4)?,
            mode: row[5].trim().to_string(),
            n_features: row[6].trim().parse().map_err(|_| bad("n_features"))?,
            visibility: num(7)?,
        });
    }
    Ok(out)
}

pub fn event_json(e: &TrackerEvent) -> Value {
    let mut obj = Map::new();
    obj.insert("timestamp".into(), json!(format_rfc3339(e.timestamp)));
    obj.insert("event".into(), json!(e.kind.name()));
    if let EventKind::Terminated(reason) = e.kind {
        obj.insert("reason".into(), json!(reason.name()));
    }
    for (k, v) in &e.details {
        obj.insert((*k).into(), json!(v));
    }
    if let Some(w) = e.warning {
        obj.insert("warning".into(), json!(w));
    }
    Value::Object(obj)
}

/// One JSON object per line.
pub fn write_events(path: &Path, events: &[TrackerEvent]) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    for e in events {
        serde_json::to_writer(&mut w, &event_json(e)).map_err(|e| malformed(path, e.to_string()))?;
        w.write_all(b"\n").map_err(io_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub fn report_json(r: &PersistenceReport) -> Value {
    json!({
        "start": format_rfc3339(r.start),
        "end": format_rfc3339(r.end),
        "duration_hours": r.duration_hours(),
        "end_reason": r.end_reason.name(),
        "visibility_series": r
            .visibility_series
            .iter()
            .map(|(t, s)| json!({ "timestamp": format_rfc3339(*t), "score": s }))
            .collect::<Vec<_>>(),
    })
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    fs::write(path, text + "\n").map_err(io_err(path))
}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))
}

pub fn write_trajectories(path: &Path, run: &EnsembleRun) -> Result<()> {
    write_rows(
        path,
        &["timestamp", "lat", "lon", "height_m"],
        run.trajectories.iter().flat_map(|tr| {
            tr.points
                .iter()
                .map(|p| [format_rfc3339(p.t), p.lat.to_string(), p.lon.to_string(), p.height.to_string()])
        }),
    )
}

pub fn write_ground_truth(path: &Path, rows: &[TruthRow]) -> Result<()> {
    write_rows(
        path,
        &["frame", "timestamp", "true_cx", "true_cy", "ridge_visibility"],
        rows.iter().map(|r| {
            [
                r.frame.to_string(),
                format_rfc3339(r.timestamp),
                r.center_x.to_string(),
                r.center_y.to_string(),
                r.ridge_visibility.to_string(),
            ]
        }),
    )
}

pub fn read_ground_truth(path: &Path) -> Result<Vec<TruthRow>> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    let mut out = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| csv_error(path, e))?;
        let bad = || malformed(path, format!("row {}", i + 1));
        let num = |k: usize| row.get(k).and_then(|s| s.trim().parse::<f64>().ok()).ok_or_else(bad);
        out.push(TruthRow {
            frame: row.get(0).and_then(|s| s.trim().parse().ok()).ok_or_else(bad)?,
            timestamp: row.get(1).and_then(parse_rfc3339).ok_or_else(bad)?,
            center_x: num(2)?,
            center_y: num(3)?,
            ridge_visibility: num(4)?,
        });
    }
    Ok(out)
}

pub(crate) fn write_divergence(path: &Path, rows: impl IntoIterator<Item = (Timestamp, f64, f64, f64)>) -> Result<()> {
    write_rows(
        path,
        &["timestamp", "hour", "height_m", "divergence_km"],
        rows.into_iter()
            .map(|(t, hour, h, d)| [format_rfc3339(t), hour.to_string(), h.to_string(), d.to_string()]),
    )
}
