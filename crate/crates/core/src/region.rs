//! Pixel regions: integer rectangles and the subpixel tracking box.

use crate::math::round;

/// Inclusive integer pixel rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PixelRect {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        (self.x0..=self.x1).contains(&x) && (self.y0..=self.y1).contains(&y)
    }

    pub fn full(width: usize, height: usize) -> Self {
        PixelRect {
            x0: 0,
            y0: 0,
            x1: width - 1,
            y1: height - 1,
        }
    }

    /// Iterates the boundary pixels once each, row-major.
    pub fn perimeter(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y0..=self.y1).flat_map(move |y| {
            (self.x0..=self.x1)
                .filter(move |&x| y == self.y0 || y == self.y1 || x == self.x0 || x == self.x1)
                .map(move |x| (x, y))
        })
    }
}

/// Axis-aligned region of interest following the tracked feature.
///
/// The pixel footprint spans `round(center - half)` to `round(center + half)`
/// inclusive on each axis, so `half_width = 25` covers 51 columns.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackingBox {
    pub center_x: f64,
    pub center_y: f64,
    pub half_width: f64,
    pub half_height: f64,
}

impl TrackingBox {
    pub fn new(center_x: f64, center_y: f64, half_width: f64, half_height: f64) -> Self {
        TrackingBox {
            center_x,
            center_y,
            half_width,
            half_height,
        }
    }

    /// Integer footprint, or `None` when any edge falls outside
    /// `[0, width) x [0, height)` or the box has no area.
    pub fn pixel_rect(&self, width: usize, height: usize) -> Option<PixelRect> {
        if !(self.half_width > 0.0 && self.half_height > 0.0) {
            return None;
        }
        let x0 = round(self.center_x - self.half_width);
        let x1 = round(self.center_x + self.half_width);
        let y0 = round(self.center_y - self.half_height);
        let y1 = round(self.center_y + self.half_height);
        if !(x0 >= 0.0 && y0 >= 0.0 && x1 < width as f64 && y1 < height as f64) {
            return None;
        }
        if x1 <= x0 || y1 <= y0 {
            return None;
        }
        Some(PixelRect {
            x0: x0 as usize,
            y0: y0 as usize,
            x1: x1 as usize,
            y1: y1 as usize,
        })
    }

    pub fn translated(&self, dx: f64, dy: f64) -> Self {
        TrackingBox {
            center_x: self.center_x + dx,
            center_y: self.center_y + dy,
            ..*self
        }
    }
}
