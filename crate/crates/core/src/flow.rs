//! Pyramidal Lucas-Kanade feature displacement.
//!
//! Displacement `d` of a feature minimizes the sum of squared differences
//! between the `(2wx+1) x (2wy+1)` window around the feature in `I` and the
//! window shifted by `d` in `J`. Each level solves the 2x2 normal equations
//! with spatial gradients of `I` (computed once per feature and level) and
//! iterates until the update is shorter than `epsilon_stop`. The coarse
//! estimate is doubled when descending a level.

use alloc::vec::Vec;
use core::fmt;

use crate::detect::StructureTensor;
use crate::grid::Grid;
use crate::math::{floor, hypot};

#[derive(Clone, Debug, PartialEq)]
pub enum FlowError {
    TooSmall { width: usize, height: usize, levels: usize },
    InvalidParams(&'static str),
}

impl fmt::Display for FlowError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FlowError::TooSmall { width, height, levels } => {
                write!(f, "{width}x{height} image is too small for a {levels}-level pyramid")
            }
            FlowError::InvalidParams(what) => write!(f, "invalid flow parameters: {what}"),
        }
    }
}

impl core::error::Error for FlowError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowParams {
    pub window_x: usize,
    pub window_y: usize,
    /// Number of pyramid images, full resolution included.
    pub pyramid_levels: usize,
    pub max_iterations: usize,
    /// Iteration stops once the update is shorter than this (pixels).
    pub epsilon_stop: f64,
    /// Minimum eigenvalue of the gradient matrix below which a feature is
    /// declared singular, in squared unit-intensity.
    pub min_gradient_eig: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        let (wx, wy) = (7, 7);
        FlowParams {
            window_x: wx,
            window_y: wy,
            pyramid_levels: 3,
            max_iterations: 10,
            epsilon_stop: 0.03,
            min_gradient_eig: default_min_gradient_eig(wx, wy),
        }
    }
}

/// `1e-4` per window pixel.
pub fn default_min_gradient_eig(window_x: usize, window_y: usize) -> f64 {
    1e-4 * ((2 * window_x + 1) * (2 * window_y + 1)) as f64
}

impl FlowParams {
    pub fn validate(&self) -> Result<(), FlowError> {
        if self.window_x < 1 || self.window_y < 1 {
            return Err(FlowError::InvalidParams("window half extents must be >= 1"));
        }
        if self.pyramid_levels < 1 {
            return Err(FlowError::InvalidParams("pyramid needs at least one level"));
        }
        if self.max_iterations < 1 {
            return Err(FlowError::InvalidParams("max_iterations must be >= 1"));
        }
        if !(self.epsilon_stop > 0.0) {
            return Err(FlowError::InvalidParams("epsilon_stop must be positive"));
        }
        if !(self.min_gradient_eig >= 0.0) {
            return Err(FlowError::InvalidParams("min_gradient_eig must be non-negative"));
        }
        Ok(())
    }

    fn divergence_limit(&self) -> f64 {
        4.0 * hypot((2 * self.window_x + 1) as f64, (2 * self.window_y + 1) as f64)
    }
}

/// How the low-pass filter extends the image past its border.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BorderRule {
    #[default]
    Replicate,
    /// Wrap around. With even dimensions this preserves the image mean
    /// exactly, since the binomial kernel removes the Nyquist component.
    Periodic,
}

/// Successively halved copies of an image; level 0 is full resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct ImagePyramid {
    levels: Vec<Grid<f64>>,
}

impl ImagePyramid {
    pub fn levels(&self) -> &[Grid<f64>] {
        &self.levels
    }

    pub fn level(&self, l: usize) -> &Grid<f64> {
        &self.levels[l]
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }
}

const BINOMIAL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

pub fn build_pyramid(image: &Grid<f64>, levels: usize) -> Result<ImagePyramid, FlowError> {
    build_pyramid_with(image, levels, BorderRule::Replicate)
}

/// Each level is the `[1 4 6 4 1]/16` separable low-pass of its predecessor,
/// sampled at even indices (`ceil(n / 2)` samples per axis). The top level
/// must be at least 3x3.
pub fn build_pyramid_with(image: &Grid<f64>, levels: usize, border: BorderRule) -> Result<ImagePyramid, FlowError> {
    let (w, h) = image.dims();
    let too_small = FlowError::TooSmall { width: w, height: h, levels };
    if levels < 1 {
        return Err(FlowError::InvalidParams("pyramid needs at least one level"));
    }
    let shrink = |n: usize| (0..levels - 1).fold(n, |n, _| n.div_ceil(2));
    if shrink(w) < 3 || shrink(h) < 3 {
        return Err(too_small);
    }
    let mut out = Vec::with_capacity(levels);
    out.push(image.clone());
    for _ in 1..levels {
        let next = downsample(out.last().expect("nonempty"), border);
        out.push(next);
    }
    Ok(ImagePyramid { levels: out })
}

fn downsample(src: &Grid<f64>, border: BorderRule) -> Grid<f64> {
    let (w, h) = src.dims();
    let index = |i: isize, n: usize| -> usize {
        match border {
            BorderRule::Replicate => i.clamp(0, n as isize - 1) as usize,
            BorderRule::Periodic => i.rem_euclid(n as isize) as usize,
        }
    };
    let (nw, nh) = (w.div_ceil(2), h.div_ceil(2));
    // Horizontal pass only at the kept columns.
    let horiz = Grid::from_fn(nw, h, |x, y| {
        let cx = 2 * x as isize;
        BINOMIAL
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * src[(index(cx + k as isize - 2, w), y)])
            .sum::<f64>()
    });
    Grid::from_fn(nw, nh, |x, y| {
        let cy = 2 * y as isize;
        BINOMIAL
            .iter()
            .enumerate()
            .map(|(k, wk)| wk * horiz[(x, index(cy + k as isize - 2, h))])
            .sum()
    })
}

/// Bilinear interpolation; `None` outside `[0, W-1] x [0, H-1]`.
#[inline]
pub fn sample_bilinear(grid: &Grid<f64>, x: f64, y: f64) -> Option<f64> {
    let (w, h) = grid.dims();
    if !(x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64) {
        return None;
    }
    let x0 = (floor(x) as usize).min(w.saturating_sub(2));
    let y0 = (floor(y) as usize).min(h.saturating_sub(2));
    let fx = x - x0 as f64;
    let fy = y - y0 as f64;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let top = grid[(x0, y0)] * (1.0 - fx) + grid[(x1, y0)] * fx;
    let bottom = grid[(x0, y1)] * (1.0 - fx) + grid[(x1, y1)] * fx;
    Some(top * (1.0 - fy) + bottom * fy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FlowVector {
    pub dx: f64,
    pub dy: f64,
    /// Final sum of squared window differences.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LostReason {
    OutOfBounds,
    Singular,
    Diverged,
}

impl fmt::Display for LostReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LostReason::OutOfBounds => "out of bounds",
            LostReason::Singular => "singular gradient matrix",
            LostReason::Diverged => "diverged",
        })
    }
}

pub type TrackOutcome = Result<FlowVector, LostReason>;

/// Window sampling policy. Coarse pyramid levels replicate the border so
/// windows near the image edge stay usable; full resolution never does.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Sampling {
    Strict,
    Clamped,
}

fn sample(grid: &Grid<f64>, x: f64, y: f64, mode: Sampling) -> Option<f64> {
    match mode {
        Sampling::Strict => sample_bilinear(grid, x, y),
        Sampling::Clamped => {
            if !(x.is_finite() && y.is_finite()) {
                return None;
            }
            let (w, h) = grid.dims();
            sample_bilinear(grid, x.clamp(0.0, (w - 1) as f64), y.clamp(0.0, (h - 1) as f64))
        }
    }
}

fn inside(grid: &Grid<f64>, x: f64, y: f64) -> bool {
    let (w, h) = grid.dims();
    x >= 0.0 && y >= 0.0 && x <= (w - 1) as f64 && y <= (h - 1) as f64
}

struct Template {
    center: (f64, f64),
    offsets: Vec<(f64, f64)>,
    values: Vec<f64>,
    grads: Vec<(f64, f64)>,
    g: StructureTensor,
}

impl Template {
    fn new(img: &Grid<f64>, cx: f64, cy: f64, params: &FlowParams, mode: Sampling) -> Result<Self, LostReason> {
        if !inside(img, cx, cy) {
            return Err(LostReason::OutOfBounds);
        }
        let (wx, wy) = (params.window_x as isize, params.window_y as isize);
        let n = ((2 * wx + 1) * (2 * wy + 1)) as usize;
        let mut t = Template {
            center: (cx, cy),
            offsets: Vec::with_capacity(n),
            values: Vec::with_capacity(n),
            grads: Vec::with_capacity(n),
            g: StructureTensor::default(),
        };
        for j in -wy..=wy {
            for i in -wx..=wx {
                let (x, y) = (cx + i as f64, cy + j as f64);
                let s = |x: f64, y: f64| sample(img, x, y, mode).ok_or(LostReason::OutOfBounds);
                let v = s(x, y)?;
                let gx = (s(x + 1.0, y)? - s(x - 1.0, y)?) / 2.0;
                let gy = (s(x, y + 1.0)? - s(x, y - 1.0)?) / 2.0;
                t.g.a += gx * gx;
                t.g.b += gx * gy;
                t.g.c += gy * gy;
                t.offsets.push((x, y));
                t.values.push(v);
                t.grads.push((gx, gy));
            }
        }
        Ok(t)
    }

    /// Window of `J` at displacement `(dx, dy)` and its SSD against the template.
    fn compare(&self, j: &Grid<f64>, dx: f64, dy: f64, out: &mut Vec<f64>, mode: Sampling) -> Result<f64, LostReason> {
        if !inside(j, self.center.0 + dx, self.center.1 + dy) {
            return Err(LostReason::OutOfBounds);
        }
        out.clear();
        let mut ssd = 0.0;
        for (&(x, y), &t) in self.offsets.iter().zip(&self.values) {
            let v = sample(j, x + dx, y + dy, mode).ok_or(LostReason::OutOfBounds)?;
            ssd += (t - v) * (t - v);
            out.push(v);
        }
        Ok(ssd)
    }
}

/// Iterative single-level Lucas-Kanade starting from `guess`.
///
/// Iteration stops once the Newton step is shorter than `epsilon_stop` or
/// after `max_iterations`. A step that would raise the residual is halved up
/// to four times; if none helps, the current estimate is final. Divergence
/// means the displacement grew past four window diagonals.
pub fn lk_refine(
    i: &Grid<f64>,
    j: &Grid<f64>,
    center: (f64, f64),
    guess: (f64, f64),
    params: &FlowParams,
) -> TrackOutcome {
    refine(i, j, center, guess, params, Sampling::Strict)
}

fn refine(
    i: &Grid<f64>,
    j: &Grid<f64>,
    center: (f64, f64),
    guess: (f64, f64),
    params: &FlowParams,
    mode: Sampling,
) -> TrackOutcome {
    let template = Template::new(i, center.0, center.1, params, mode)?;
    let g = template.g;
    if !(g.min_eigenvalue() >= params.min_gradient_eig) || g.min_eigenvalue() <= 0.0 {
        return Err(LostReason::Singular);
    }
    let det = g.a * g.c - g.b * g.b;
    let limit = params.divergence_limit();

    let (mut dx, mut dy) = guess;
    let mut warped = Vec::with_capacity(template.values.len());
    let mut candidate = Vec::with_capacity(template.values.len());
    let mut residual = template.compare(j, dx, dy, &mut warped, mode)?;
    let mut iterations = 0;

    while iterations < params.max_iterations {
        iterations += 1;
        let (mut bx, mut by) = (0.0, 0.0);
        for ((t, v), (gx, gy)) in template.values.iter().zip(&warped).zip(&template.grads) {
            let e = t - v;
            bx += gx * e;
            by += gy * e;
        }
        let step_x = (g.c * bx - g.b * by) / det;
        let step_y = (g.a * by - g.b * bx) / det;
        if !(step_x.is_finite() && step_y.is_finite()) {
            return Err(LostReason::Diverged);
        }
        let full = hypot(step_x, step_y);

        // Halve steps that raise the residual, at most four times.
        let mut accepted = false;
        let mut scale = 1.0;
        for _ in 0..=4 {
            let (nx, ny) = (dx + scale * step_x, dy + scale * step_y);
            if hypot(nx, ny) > limit {
                return Err(LostReason::Diverged);
            }
            let r = template.compare(j, nx, ny, &mut candidate, mode)?;
            if r <= residual {
                (dx, dy, residual) = (nx, ny, r);
                core::mem::swap(&mut warped, &mut candidate);
                accepted = true;
                break;
            }
            scale *= 0.5;
        }
        if !accepted || full < params.epsilon_stop {
            break;
        }
    }

    Ok(FlowVector {
        dx,
        dy,
        residual,
        iterations,
    })
}

/// Coarse-to-fine tracking of the feature at `point` (level-0 pixels).
///
/// Coarser levels replicate the image border, so only the full-resolution
/// windows must lie inside the frames. A singular gradient matrix at a coarse
/// level passes the current estimate down unchanged; only full resolution
/// reports `Singular`.
/// Uses `min(params.pyramid_levels, levels available)` levels. The returned
/// displacement is in full-resolution pixels; `iterations` sums all levels.
pub fn track_feature(pyr_i: &ImagePyramid, pyr_j: &ImagePyramid, point: (f64, f64), params: &FlowParams) -> TrackOutcome {
    let levels = params.pyramid_levels.min(pyr_i.len()).min(pyr_j.len());
    let (mut gx, mut gy) = (0.0, 0.0);
    let mut total_iterations = 0;
    let mut last = None;
    for level in (0..levels).rev() {
        let scale = (1u64 << level) as f64;
        let center = (point.0 / scale, point.1 / scale);
        let mode = if level == 0 { Sampling::Strict } else { Sampling::Clamped };
        let v = match refine(pyr_i.level(level), pyr_j.level(level), center, (gx, gy), params, mode) {
            Ok(v) => v,
            // Too little texture at this resolution; carry the guess down.
            Err(LostReason::Singular) if level > 0 => FlowVector {
                dx: gx,
                dy: gy,
                residual: 0.0,
                iterations: 0,
            },
            Err(e) => return Err(e),
        };
        total_iterations += v.iterations;
        if level > 0 {
            gx = 2.0 * v.dx;
            gy = 2.0 * v.dy;
        }
        last = Some(v);
    }
    let v = last.ok_or(LostReason::OutOfBounds)?;
    Ok(FlowVector {
        iterations: total_iterations,
        ..v
    })
}

/// Rescales 16-bit intensities to `[0, 1]`, the scale flow math runs in.
pub fn to_unit_scale(values: &Grid<f64>) -> Grid<f64> {
    values.map(|v| v / 65535.0)
}
