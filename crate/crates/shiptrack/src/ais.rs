//! Ship position CSV: `vessel_id,timestamp,lat,lon[,name,type,speed]`.

use std::path::Path;

use shiptrack_core::shipmatch::ShipRecord;

use crate::error::{malformed, Error, Result};
use crate::timefmt::parse_rfc3339;

#[derive(Clone, Debug, PartialEq)]
pub struct AisLoad {
    pub records: Vec<ShipRecord>,
    /// Rows skipped as invalid, with their 1-based line numbers and reasons.
    pub warnings: Vec<(u64, String)>,
}

pub fn load_ais(path: &Path) -> Result<AisLoad> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_error(path, e))?.clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let (Some(id), Some(ts), Some(la), Some(lo)) = (column("vessel_id"), column("timestamp"), column("lat"), column("lon"))
    else {
        if headers.is_empty() {
            return Err(Error::NoRecords { path: path.into() });
        }
        return Err(malformed(path, "header must start vessel_id,timestamp,lat,lon"));
    };
    let (name, kind, speed) = (column("name"), column("type"), column("speed"));

    let mut records = Vec::new();
    let mut warnings = Vec::new();
    for row in reader.records() {
        let row = match row {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                warnings.push((line, e.to_string()));
                continue;
            }
        };
        let line = row.position().map_or(0, |p| p.line());
        let text = |i: Option<usize>| i.and_then(|i| row.get(i)).filter(|s| !s.is_empty());
        let parsed = (|| {
            let vessel_id = text(Some(id)).ok_or("empty vessel_id")?.to_string();
            let t = text(Some(ts)).and_then(parse_rfc3339).ok_or("bad timestamp")?;
            let lat: f64 = text(Some(la)).and_then(|s| s.parse().ok()).ok_or("bad lat")?;
            let lon: f64 = text(Some(lo)).and_then(|s| s.parse().ok()).ok_or("bad lon")?;
            if !(lat.abs() <= 90.0) || !lon.is_finite() {
                return Err("position out of range");
            }
            let speed_knots = match text(speed) {
                None => None,
                Some(s) => Some(s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or("bad speed")?),
            };
            Ok(ShipRecord {
                vessel_id,
                t,
                lat,
                lon,
                name: text(name).map(str::to_string),
                vessel_type: text(kind).map(str::to_string),
                speed_knots,
            })
        })();
        match parsed {
            Ok(r) => records.push(r),
            Err(why) => warnings.push((line, why.to_string())),
        }
    }
    if records.is_empty() {
        return Err(Error::NoRecords { path: path.into() });
    }
    Ok(AisLoad { records, warnings })
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
