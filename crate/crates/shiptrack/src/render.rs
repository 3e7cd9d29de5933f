//! 8-bit preview frames with the tracked box drawn on top.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use shiptrack_core::{Frame, Timestamp};

use crate::error::{io_err, Result};
use crate::frames::Manifest;
use crate::outputs::BoxPathRecord;
use crate::pgm::{self, Graymap};

pub const OUTLINE_VALUE: u16 = 255;
pub const OUTLINE_WIDTH: i64 = 2;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RenderSummary {
    pub written: Vec<PathBuf>,
    /// Frames with no box-path row at their timestamp.
    pub unannotated: Vec<Timestamp>,
}

/// High byte of each 16-bit value, with a box outline when `bx` is given.
/// `bx` is `(center_x, center_y, half_width, half_height)`; the outline is
/// clipped to the image.
pub fn annotate(frame: &Frame, bx: Option<(f64, f64, f64, f64)>) -> Graymap {
    let (w, h) = (frame.width(), frame.height());
    let mut samples: Vec<u16> = frame
        .values()
        .as_slice()
        .iter()
        .map(|v| (v.round().clamp(0.0, 65535.0) as u16) >> 8)
        .collect();
    if let Some((cx, cy, hw, hh)) = bx {
        let (x0, x1) = ((cx - hw).round() as i64, (cx + hw).round() as i64);
        let (y0, y1) = ((cy - hh).round() as i64, (cy + hh).round() as i64);
        for y in y0.max(0)..=y1.min(h as i64 - 1) {
            for x in x0.max(0)..=x1.min(w as i64 - 1) {
                let edge = x < x0 + OUTLINE_WIDTH || x > x1 - OUTLINE_WIDTH || y < y0 + OUTLINE_WIDTH || y > y1 - OUTLINE_WIDTH;
                if edge {
                    samples[y as usize * w + x as usize] = OUTLINE_VALUE;
                }
            }
        }
    }
    Graymap::new(w, h, 255, samples).expect("8-bit samples")
}

/// Writes `render_NNNNN.pgm` for every manifest frame. Box paths carry
/// only centers, so the fixed box half extent is passed in.
pub fn render(
    manifest: &Manifest,
    rows: &[BoxPathRecord],
    half_extent: (f64, f64),
    out_dir: &Path,
) -> Result<RenderSummary> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let by_time: HashMap<Timestamp, &BoxPathRecord> = rows.iter().map(|r| (r.timestamp, r)).collect();
    let mut summary = RenderSummary::default();
    for (k, frame) in manifest.frames().enumerate() {
        let frame = frame?;
        let row = by_time.get(&frame.timestamp());
        let g = match row {
            Some(r) => annotate(&frame, Some((r.center_x, r.center_y, half_extent.0, half_extent.1))),
            None => {
                summary.unannotated.push(frame.timestamp());
                annotate(&frame, None)
            }
        };
        let path = out_dir.join(format!("render_{k:05}.pgm"));
        pgm::write(&path, &g)?;
        summary.written.push(path);
    }
    Ok(summary)
}
