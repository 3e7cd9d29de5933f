//! Wind files: a JSON header naming a little-endian `f32` payload laid out
//! `[time][height][lat][lon]`, u block then v block.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use shiptrack_core::trajectory::WindField;

use crate::error::{io_err, malformed, Result};
use crate::timefmt::{format_rfc3339, parse_rfc3339};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    lats: Vec<f64>,
    lons: Vec<f64>,
    heights_m: Vec<f64>,
    times: Vec<String>,
    payload: String,
}

pub fn load_wind(path: &Path) -> Result<WindField> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let h: Header = serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))?;
    let times = h
        .times
        .iter()
        .map(|s| parse_rfc3339(s).ok_or_else(|| malformed(path, format!("bad time {s:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let payload_path = path.parent().unwrap_or(Path::new("")).join(&h.payload);
    let bytes = fs::read(&payload_path).map_err(io_err(&payload_path))?;
    if bytes.len() % 8 != 0 {
        return Err(malformed(&payload_path, "payload is not a whole number of u/v float pairs"));
    }
    let floats: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
        .collect();
    let half = floats.len() / 2;
    let (u, v) = floats.split_at(half);
    WindField::new(h.lats, h.lons, h.heights_m, times, u.to_vec(), v.to_vec())
        .map_err(|e| malformed(path, e.to_string()))
}

/// Writes the header at `path` and the payload next to it as
/// `<file name>.bin`.
pub fn write_wind(path: &Path, field: &WindField) -> Result<()> {
    let name = path
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| malformed(path, "wind path has no UTF-8 file name"))?;
    let payload = format!("{name}.bin");
    let header = Header {
        lats: field.lats().to_vec(),
        lons: field.lons().to_vec(),
        heights_m: field.heights().to_vec(),
        times: field.times().iter().map(|&t| format_rfc3339(t)).collect(),
        payload: payload.clone(),
    };
    let mut bytes = Vec::with_capacity((field.u().len() + field.v().len()) * 4);
    for x in field.u().iter().chain(field.v()) {
        bytes.extend_from_slice(&x.to_le_bytes());
    }
    let payload_path = path.with_file_name(&payload);
    fs::write(&payload_path, bytes).map_err(io_err(&payload_path))?;
    let text = serde_json::to_string_pretty(&header).expect("serializable");
    fs::write(path, text + "\n").map_err(io_err(path))
}
