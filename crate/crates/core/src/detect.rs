//! Minimum-eigenvalue corner detection (Shi-Tomasi "good features to track").
//!
//! The quality of a pixel is the smaller eigenvalue of the structure tensor
//! summed over a `(2n+1) x (2n+1)` window of Sobel gradients. Candidates must
//! reach a fraction of the best quality in the region and be the first
//! maximum of their `m x m` neighbourhood.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::Grid;
use crate::math::sqrt;
use crate::raster::Frame;
use crate::region::PixelRect;

#[derive(Clone, Debug, PartialEq)]
pub enum DetectError {
    FrameTooSmall { width: usize, height: usize },
    InvalidParams(&'static str),
}

impl fmt::Display for DetectError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectError::FrameTooSmall { width, height } => {
                write!(f, "frame of {width}x{height} is too small for detection")
            }
            DetectError::InvalidParams(what) => write!(f, "invalid detector parameters: {what}"),
        }
    }
}

impl core::error::Error for DetectError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DetectorParams {
    /// Half extent `n` of the tensor summation window.
    pub neighborhood: usize,
    /// Side `m` of the non-maximum-suppression window (odd).
    pub nms_window: usize,
    /// Threshold as a fraction of the region's best quality.
    pub threshold_fraction: f64,
    pub max_features: usize,
}

impl Default for DetectorParams {
    fn default() -> Self {
        DetectorParams {
            neighborhood: 3,
            nms_window: 3,
            threshold_fraction: 0.2,
            max_features: 50,
        }
    }
}

impl DetectorParams {
    pub fn validate(&self) -> Result<(), DetectError> {
        if self.neighborhood < 1 {
            return Err(DetectError::InvalidParams("neighborhood must be >= 1"));
        }
        if self.nms_window < 3 || self.nms_window.is_multiple_of(2) {
            return Err(DetectError::InvalidParams("nms window must be odd and >= 3"));
        }
        if !(self.threshold_fraction > 0.0 && self.threshold_fraction < 1.0) {
            return Err(DetectError::InvalidParams("threshold fraction must be in (0, 1)"));
        }
        if self.max_features < 1 {
            return Err(DetectError::InvalidParams("max_features must be >= 1"));
        }
        Ok(())
    }

    /// Pixels closer than this to the border never become features.
    pub fn margin(&self) -> usize {
        self.neighborhood + 1
    }
}

/// Symmetric 2x2 gradient tensor `[[a, b], [b, c]]`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct StructureTensor {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl StructureTensor {
    pub fn min_eigenvalue(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        let d = a - c;
        ((a + c) - sqrt(d * d + 4.0 * b * b)) / 2.0
    }

    pub fn max_eigenvalue(&self) -> f64 {
        let (a, b, c) = (self.a, self.b, self.c);
        let d = a - c;
        ((a + c) + sqrt(d * d + 4.0 * b * b)) / 2.0
    }
}

/// A detected feature center (integer pixel at detection time).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FeaturePoint {
    pub x: f64,
    pub y: f64,
    pub quality: f64,
}

/// Sobel gradients scaled by 1/8, so a unit-slope ramp has gradient 1.
/// Edges are replicated.
pub fn image_gradients(values: &Grid<f64>) -> Result<(Grid<f64>, Grid<f64>), DetectError> {
    let (w, h) = values.dims();
    if w < 3 || h < 3 {
        return Err(DetectError::FrameTooSmall { width: w, height: h });
    }
    let p = |x: usize, y: usize, dx: isize, dy: isize| values.clamped(x as isize + dx, y as isize + dy);
    let gx = Grid::from_fn(w, h, |x, y| {
        let right = p(x, y, 1, -1) + 2.0 * p(x, y, 1, 0) + p(x, y, 1, 1);
        let left = p(x, y, -1, -1) + 2.0 * p(x, y, -1, 0) + p(x, y, -1, 1);
        (right - left) / 8.0
    });
    let gy = Grid::from_fn(w, h, |x, y| {
        let down = p(x, y, -1, 1) + 2.0 * p(x, y, 0, 1) + p(x, y, 1, 1);
        let up = p(x, y, -1, -1) + 2.0 * p(x, y, 0, -1) + p(x, y, 1, -1);
        (down - up) / 8.0
    });
    Ok((gx, gy))
}

/// Tensor at `(x, y)` summed over the `(2n+1)^2` window. The window must lie
/// inside the gradient grids.
pub fn structure_tensor(gx: &Grid<f64>, gy: &Grid<f64>, x: usize, y: usize, n: usize) -> StructureTensor {
    let mut t = StructureTensor::default();
    for yy in y - n..=y + n {
        for xx in x - n..=x + n {
            let (ix, iy) = (gx[(xx, yy)], gy[(xx, yy)]);
            t.a += ix * ix;
            t.b += ix * iy;
            t.c += iy * iy;
        }
    }
    t
}

/// Per-pixel minimum eigenvalue of the structure tensor.
///
/// Pixels within `n + 1` of the border, and pixels whose tensor window
/// touches a corrupt pixel, get quality 0. Negative round-off is clamped to 0.
pub fn quality_map(frame: &Frame, params: &DetectorParams) -> Result<Grid<f64>, DetectError> {
    params.validate()?;
    let (w, h) = (frame.width(), frame.height());
    let margin = params.margin();
    if w < 2 * margin + 1 || h < 2 * margin + 1 {
        return Err(DetectError::FrameTooSmall { width: w, height: h });
    }
    let (gx, gy) = image_gradients(frame.values())?;
    let n = params.neighborhood;

    let xx = box_sum(&Grid::from_fn(w, h, |x, y| gx[(x, y)] * gx[(x, y)]), n);
    let xy = box_sum(&Grid::from_fn(w, h, |x, y| gx[(x, y)] * gy[(x, y)]), n);
    let yy = box_sum(&Grid::from_fn(w, h, |x, y| gy[(x, y)] * gy[(x, y)]), n);
    let bad = box_sum(&frame.quality().map(|q| if q.is_corrupt() { 1.0 } else { 0.0 }), n);

    Ok(Grid::from_fn(w, h, |x, y| {
        let inside = x >= margin && y >= margin && x + margin < w && y + margin < h;
        if !inside || bad[(x, y)] > 0.0 {
            return 0.0;
        }
        let t = StructureTensor {
            a: xx[(x, y)],
            b: xy[(x, y)],
            c: yy[(x, y)],
        };
        t.min_eigenvalue().max(0.0)
    }))
}

/// Sum over the `(2n+1)^2` window centred on each pixel; only meaningful
/// where the window is fully inside the grid (the caller masks the rest).
fn box_sum(g: &Grid<f64>, n: usize) -> Grid<f64> {
    let (w, h) = g.dims();
    let mut rows = Grid::filled(w, h, 0.0);
    for y in 0..h {
        for x in n..w.saturating_sub(n) {
            rows[(x, y)] = (x - n..=x + n).map(|xx| g[(xx, y)]).sum();
        }
    }
    let mut out = Grid::filled(w, h, 0.0);
    for y in n..h.saturating_sub(n) {
        for x in 0..w {
            out[(x, y)] = (y - n..=y + n).map(|yy| rows[(x, yy)]).sum();
        }
    }
    out
}

/// Threshold plus non-maximum suppression over the whole grid.
pub fn select_features(q: &Grid<f64>, params: &DetectorParams) -> Vec<FeaturePoint> {
    select_features_in(q, params, PixelRect::full(q.width(), q.height()))
}

/// Threshold plus non-maximum suppression restricted to `region`.
///
/// The threshold is `threshold_fraction` times the best quality inside the
/// region; suppression windows are clipped to the region. A pixel survives
/// when no pixel in its window has higher quality and no equal-quality
/// pixel precedes it in row-major order. Results are sorted by descending
/// quality (row-major order among equals) and truncated to `max_features`.
pub fn select_features_in(q: &Grid<f64>, params: &DetectorParams, region: PixelRect) -> Vec<FeaturePoint> {
    let best = (region.y0..=region.y1)
        .flat_map(|y| (region.x0..=region.x1).map(move |x| (x, y)))
        .map(|p| q[p])
        .fold(0.0f64, f64::max);
    if best <= 0.0 {
        return Vec::new();
    }
    let threshold = params.threshold_fraction * best;
    let half = params.nms_window / 2;

    let mut out = Vec::new();
    for y in region.y0..=region.y1 {
        for x in region.x0..=region.x1 {
            let v = q[(x, y)];
            if v < threshold || v <= 0.0 {
                continue;
            }
            let (wx0, wx1) = (x.saturating_sub(half).max(region.x0), (x + half).min(region.x1));
            let (wy0, wy1) = (y.saturating_sub(half).max(region.y0), (y + half).min(region.y1));
            let dominated = (wy0..=wy1).any(|yy| {
                (wx0..=wx1).any(|xx| {
                    let o = q[(xx, yy)];
                    o > v || (o == v && (yy, xx) < (y, x))
                })
            });
            if !dominated {
                out.push(FeaturePoint {
                    x: x as f64,
                    y: y as f64,
                    quality: v,
                });
            }
        }
    }
    // Stable sort keeps row-major order among equal qualities.
    out.sort_by(|a, b| b.quality.total_cmp(&a.quality));
    out.truncate(params.max_features);
    out
}

/// Quality map followed by selection inside `region`.
pub fn detect_features(frame: &Frame, params: &DetectorParams, region: PixelRect) -> Result<Vec<FeaturePoint>, DetectError> {
    let q = quality_map(frame, params)?;
    Ok(select_features_in(&q, params, region))
}
