//! Frames on disk: a 16-bit graymap, a JSON sidecar next to it, an optional
//! 8-bit quality mask, and manifests listing them in time order.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{json, Map, Value};
use shiptrack_core::grid::Grid;
use shiptrack_core::{Frame, GeoTransform, PixelQuality, Timestamp};

use crate::error::{io_err, malformed, Error, Result};
use crate::pgm::{self, Graymap};
use crate::timefmt::{format_rfc3339, parse_rfc3339};

/// Sidecar location for a raster: the raster path with `.json` appended.
pub fn sidecar_path(raster: &Path) -> PathBuf {
    let mut s = OsString::from(raster.as_os_str());
    s.push(".json");
    PathBuf::from(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sidecar {
    pub timestamp: Timestamp,
    pub geo: GeoTransform,
    /// Resolved against the sidecar's directory.
    pub quality_mask: Option<PathBuf>,
}

pub fn read_sidecar(path: &Path) -> Result<Sidecar> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: Value = serde_json::from_str(&text).map_err(|e| malformed(path, e.to_string()))?;
    let obj = value.as_object().ok_or_else(|| malformed(path, "sidecar is not a JSON object"))?;
    let field = |name: &'static str| obj.get(name).ok_or(Error::MissingMetadata { path: path.into(), field: name });
    let number = |name: &'static str| -> Result<f64> {
        field(name)?
            .as_f64()
            .ok_or_else(|| malformed(path, format!("`{name}` is not a number")))
    };
    let ts = field("timestamp")?
        .as_str()
        .ok_or_else(|| malformed(path, "`timestamp` is not a string"))?;
    let timestamp = parse_rfc3339(ts).ok_or_else(|| malformed(path, format!("bad timestamp {ts:?}")))?;
    let geo = GeoTransform::new(number("lat0")?, number("lon0")?, number("dlat")?, number("dlon")?)
        .map_err(|e| malformed(path, e.to_string()))?;
    let quality_mask = match obj.get("quality_mask") {
        None | Some(Value::Null) => None,
        Some(Value::String(p)) => Some(path.parent().unwrap_or(Path::new("")).join(p)),
        Some(_) => return Err(malformed(path, "`quality_mask` is not a string")),
    };
    Ok(Sidecar {
        timestamp,
        geo,
        quality_mask,
    })
}

pub fn load_frame(raster: &Path, sidecar: &Path) -> Result<Frame> {
    let meta = read_sidecar(sidecar)?;
    let g = pgm::read(raster)?;
    let values = Grid::from_vec(g.width, g.height, g.samples.iter().map(|&s| f64::from(s)).collect())
        .expect("graymap shape");
    let quality = match &meta.quality_mask {
        None => None,
        Some(mask_path) => {
            let m = pgm::read(mask_path)?;
            if (m.width, m.height) != (g.width, g.height) {
                return Err(Error::ShapeMismatch {
                    path: mask_path.clone(),
                    expected: (g.width, g.height),
                    found: (m.width, m.height),
                });
            }
            let flags = m
                .samples
                .iter()
                .map(|&s| if s == 0 { PixelQuality::Good } else { PixelQuality::Corrupt })
                .collect();
            Some(Grid::from_vec(m.width, m.height, flags).expect("mask shape"))
        }
    };
    let frame = Frame::new(values, quality, meta.timestamp, meta.geo).map_err(|e| malformed(raster, e.to_string()))?;
    Ok(frame)
}

/// Writes `frame` as `raster` plus its sidecar. A mask named
/// `<raster>.mask.pgm` is written only when some pixel is corrupt.
/// Values are rounded and clamped to 0..=65535.
pub fn save_frame(frame: &Frame, raster: &Path) -> Result<()> {
    let samples = frame
        .values()
        .as_slice()
        .iter()
        .map(|v| v.round().clamp(0.0, 65535.0) as u16)
        .collect();
    let g = Graymap::new(frame.width(), frame.height(), 65535, samples).expect("clamped samples");
    pgm::write(raster, &g)?;

    let name = raster
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| malformed(raster, "raster path has no UTF-8 file name"))?;
    let geo = frame.geo();
    let mut obj = Map::new();
    obj.insert("timestamp".into(), json!(format_rfc3339(frame.timestamp())));
    obj.insert("lat0".into(), json!(geo.lat0));
    obj.insert("lon0".into(), json!(geo.lon0));
    obj.insert("dlat".into(), json!(geo.dlat));
    obj.insert("dlon".into(), json!(geo.dlon));
    if frame.quality().as_slice().iter().any(|q| q.is_corrupt()) {
        let mask_name = format!("{name}.mask.pgm");
        let flags = frame
            .quality()
            .as_slice()
            .iter()
            .map(|q| if q.is_corrupt() { 255 } else { 0 })
            .collect();
        let m = Graymap::new(frame.width(), frame.height(), 255, flags).expect("mask samples");
        pgm::write(&raster.with_file_name(&mask_name), &m)?;
        obj.insert("quality_mask".into(), json!(mask_name));
    }
    let sidecar = sidecar_path(raster);
    let text = serde_json::to_string_pretty(&Value::Object(obj)).expect("serializable");
    fs::write(&sidecar, text + "\n").map_err(io_err(&sidecar))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ManifestEntry {
    pub raster: PathBuf,
    pub sidecar: PathBuf,
}

/// Ordered frame list. Relative paths are resolved against the manifest's
/// directory; blank lines and lines starting with `#` are ignored.
#[derive(Clone, Debug, PartialEq)]
pub struct Manifest {
    pub path: PathBuf,
    pub entries: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let text = fs::read_to_string(path).map_err(io_err(path))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let mut entries = Vec::new();
        for line in text.lines().map(str::trim) {
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let raster = base.join(line);
            let sidecar = sidecar_path(&raster);
            for p in [&raster, &sidecar] {
                if !p.is_file() {
                    return Err(malformed(path, format!("listed file {} does not exist", p.display())));
                }
            }
            entries.push(ManifestEntry { raster, sidecar });
        }
        if entries.is_empty() {
            return Err(malformed(path, "manifest lists no frames"));
        }
        Ok(Manifest {
            path: path.to_path_buf(),
            entries,
        })
    }

    /// Writes one line per raster, relative to the manifest's directory
    /// where possible.
    pub fn write(path: &Path, rasters: &[PathBuf]) -> Result<()> {
        let base = path.parent().unwrap_or(Path::new(""));
        let mut text = String::new();
        for r in rasters {
            let rel = r.strip_prefix(base).unwrap_or(r);
            text.push_str(&rel.to_string_lossy());
            text.push('\n');
        }
        fs::write(path, text).map_err(io_err(path))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sidecar timestamps, checked to be strictly increasing.
    pub fn timestamps(&self) -> Result<Vec<Timestamp>> {
        let mut out: Vec<Timestamp> = Vec::with_capacity(self.entries.len());
        for e in &self.entries {
            let t = read_sidecar(&e.sidecar)?.timestamp;
            self.check_order(out.last().copied(), t, &e.sidecar)?;
            out.push(t);
        }
        Ok(out)
    }

    /// Median spacing of the sidecar timestamps; `None` for a single frame.
    pub fn nominal_cadence_seconds(&self) -> Result<Option<f64>> {
        let ts = self.timestamps()?;
        let mut gaps: Vec<f64> = ts.windows(2).map(|w| w[1].seconds_since(w[0])).collect();
        if gaps.is_empty() {
            return Ok(None);
        }
        gaps.sort_by(f64::total_cmp);
        let m = gaps.len() / 2;
        Ok(Some(if gaps.len() % 2 == 1 { gaps[m] } else { 0.5 * (gaps[m - 1] + gaps[m]) }))
    }

    /// Loads frames lazily in manifest order, failing on the first frame
    /// that does not follow its predecessor in time.
    pub fn frames(&self) -> impl Iterator<Item = Result<Frame>> + '_ {
        let mut previous = None;
        self.entries.iter().map(move |e| {
            let f = load_frame(&e.raster, &e.sidecar)?;
            self.check_order(previous, f.timestamp(), &e.sidecar)?;
            previous = Some(f.timestamp());
            Ok(f)
        })
    }

    pub fn load_all(&self) -> Result<Vec<Frame>> {
        self.frames().collect()
    }

    fn check_order(&self, previous: Option<Timestamp>, t: Timestamp, at: &Path) -> Result<()> {
        match previous {
            Some(p) if t <= p => Err(Error::OutOfOrder {
                path: at.to_path_buf(),
                previous: format_rfc3339(p),
                found: format_rfc3339(t),
            }),
            _ => Ok(()),
        }
    }
}
