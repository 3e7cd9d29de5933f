//! Synthetic scenes with known motion: a seeded cloud-like texture carried by
//! an analytic flow, an optional bright linear ridge, a brightness inversion
//! ramp and injected corrupt pixels.
//!
//! The texture mimics a bright stratocumulus deck broken by dark holes:
//! normalized value noise `z` is mapped to `-exp(skew * z)`, rescaled to zero
//! mean and unit variance. The bright side is bounded, so a plain deck scores
//! well under 1 on the visibility score while a ridge of a few standard
//! deviations stands out clearly.
//!
//! Frame `k` is built by mapping every output pixel back through `k` steps of
//! the flow and evaluating the source pattern there. The pattern is analytic,
//! so composition of warps is exact and there is no resampling drift.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::Grid;
use crate::math::{cos, exp, floor, round, sin, sqrt};
use crate::raster::{Frame, GeoTransform, PixelQuality, RasterError, EQUALIZED_MAX};
use crate::region::TrackingBox;
use crate::time::Timestamp;

/// Mean intensity of the deck. The texture is bounded above by about
/// 0.35 standard deviations and has a long dark tail, so the mean sits high.
const BASE_LEVEL: f64 = 50000.0;

#[derive(Clone, Debug, PartialEq)]
pub enum SynthError {
    InvalidSpec(&'static str),
    Raster(RasterError),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidSpec(what) => write!(f, "invalid scene: {what}"),
            SynthError::Raster(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for SynthError {}

impl From<RasterError> for SynthError {
    fn from(e: RasterError) -> Self {
        SynthError::Raster(e)
    }
}

/// Steady motion field, in pixels per frame.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Flow {
    Uniform { u: f64, v: f64 },
    /// Rigid rotation by `omega` radians per frame, counterclockwise in
    /// image coordinates (x right, y down).
    Rotation { cx: f64, cy: f64, omega: f64 },
    /// `u = u0 + rate * (y - y_ref)`, `v = 0`.
    Shear { u0: f64, rate: f64, y_ref: f64 },
}

impl Flow {
    /// Position after `frames` frames of a point starting at `(x, y)`.
    pub fn forward(&self, x: f64, y: f64, frames: f64) -> (f64, f64) {
        match *self {
            Flow::Uniform { u, v } => (x + u * frames, y + v * frames),
            Flow::Rotation { cx, cy, omega } => rotate(x, y, cx, cy, omega * frames),
            Flow::Shear { u0, rate, y_ref } => (x + (u0 + rate * (y - y_ref)) * frames, y),
        }
    }

    /// Where the point now at `(x, y)` was `frames` frames ago.
    pub fn backward(&self, x: f64, y: f64, frames: f64) -> (f64, f64) {
        self.forward(x, y, -frames)
    }

    /// Instantaneous velocity at `(x, y)` in pixels per frame.
    pub fn velocity(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            Flow::Uniform { u, v } => (u, v),
            Flow::Rotation { cx, cy, omega } => (-omega * (y - cy), omega * (x - cx)),
            Flow::Shear { u0, rate, y_ref } => (u0 + rate * (y - y_ref), 0.0),
        }
    }
}

fn rotate(x: f64, y: f64, cx: f64, cy: f64, angle: f64) -> (f64, f64) {
    let (s, c) = (sin(angle), cos(angle));
    let (dx, dy) = (x - cx, y - cy);
    (cx + c * dx - s * dy, cy + s * dx + c * dy)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TextureSpec {
    pub seed: u64,
    /// Lattice spacing of the coarsest noise octave, in pixels.
    pub correlation_length: f64,
    /// Counts per texture standard deviation.
    pub contrast: f64,
    /// Skewness control; larger values give a flatter deck and sparser,
    /// deeper holes.
    pub skew: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        TextureSpec {
            seed: 1,
            correlation_length: 6.0,
            contrast: 5000.0,
            skew: 1.5,
        }
    }
}

/// Linear fade of the ridge: full strength up to `start`, zero from `end`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Fade {
    pub start: usize,
    pub end: usize,
}

/// Bright line with a Gaussian cross-section, defined at frame 0 and carried
/// by the flow. `amplitude` is in texture standard deviations, `width` is the Gaussian
/// standard deviation in pixels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RidgeSpec {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
    pub width: f64,
    pub amplitude: f64,
    pub fade: Option<Fade>,
}

impl RidgeSpec {
    /// Fraction of full amplitude shown in frame `k`.
    pub fn strength(&self, k: usize) -> f64 {
        match self.fade {
            None => 1.0,
            Some(Fade { start, end }) => {
                if k <= start {
                    1.0
                } else if k >= end {
                    0.0
                } else {
                    1.0 - (k - start) as f64 / (end - start) as f64
                }
            }
        }
    }

    fn profile(&self, x: f64, y: f64) -> f64 {
        let (ex, ey) = (self.x1 - self.x0, self.y1 - self.y0);
        let len2 = ex * ex + ey * ey;
        let t = if len2 > 0.0 {
            (((x - self.x0) * ex + (y - self.y0) * ey) / len2).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let (dx, dy) = (x - self.x0 - t * ex, y - self.y0 - t * ey);
        exp(-(dx * dx + dy * dy) / (2.0 * self.width * self.width))
    }
}

/// Gradual inversion `v -> 65535 - v`. The inverted weight climbs linearly
/// over `length` frames starting at `start`, reaching `depth`, and stays there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrightnessRamp {
    pub start: usize,
    pub length: usize,
    pub depth: f64,
}

impl BrightnessRamp {
    pub fn weight(&self, k: usize) -> f64 {
        if k < self.start {
            return 0.0;
        }
        let f = (k - self.start + 1) as f64 / self.length.max(1) as f64;
        self.depth * f.min(1.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Corruption {
    pub frame: usize,
    pub fraction: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub width: usize,
    pub height: usize,
    pub n_frames: usize,
    pub cadence_seconds: f64,
    pub start: Timestamp,
    pub geo: GeoTransform,
    pub flow: Flow,
    pub texture: TextureSpec,
    pub ridge: Option<RidgeSpec>,
    pub transition: Option<BrightnessRamp>,
    pub corruption: Vec<Corruption>,
}

impl SceneSpec {
    /// Scene over the northeast Pacific starting 2019-06-17 05:00 UTC,
    /// 2 km pixels, five-minute cadence, no motion.
    pub fn new(width: usize, height: usize, n_frames: usize) -> Self {
        SceneSpec {
            width,
            height,
            n_frames,
            cadence_seconds: 300.0,
            start: Timestamp::from_unix_seconds(1_560_747_600),
            geo: GeoTransform::new(36.4, -135.65, -0.018, 0.018).expect("valid default"),
            flow: Flow::Uniform { u: 0.0, v: 0.0 },
            texture: TextureSpec::default(),
            ridge: None,
            transition: None,
            corruption: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |what| Err(SynthError::InvalidSpec(what));
        if self.width < 2 || self.height < 2 {
            return bad("frames must be at least 2x2");
        }
        if self.n_frames == 0 {
            return bad("n_frames must be at least 1");
        }
        if !(self.cadence_seconds > 0.0 && self.cadence_seconds.is_finite()) {
            return bad("cadence must be positive");
        }
        let t = &self.texture;
        if !(t.correlation_length > 0.0 && t.contrast >= 0.0 && t.skew > 0.0) {
            return bad("texture parameters must be positive");
        }
        if let Some(r) = &self.ridge {
            if !(r.amplitude >= 0.0 && r.width > 0.0) {
                return bad("ridge amplitude must be >= 0 and width > 0");
            }
            if let Some(f) = r.fade {
                if f.end <= f.start {
                    return bad("fade end must follow fade start");
                }
            }
        }
        if let Some(b) = &self.transition {
            if b.length == 0 || !(0.0..=1.0).contains(&b.depth) {
                return bad("brightness ramp needs length >= 1 and depth in [0, 1]");
            }
        }
        if self.corruption.iter().any(|c| !(0.0..=1.0).contains(&c.fraction)) {
            return bad("corruption fraction must be in [0, 1]");
        }
        let finite = match self.flow {
            Flow::Uniform { u, v } => u.is_finite() && v.is_finite(),
            Flow::Rotation { cx, cy, omega } => cx.is_finite() && cy.is_finite() && omega.is_finite(),
            Flow::Shear { u0, rate, y_ref } => u0.is_finite() && rate.is_finite() && y_ref.is_finite(),
        };
        if !finite {
            return bad("flow parameters must be finite");
        }
        Ok(())
    }

    pub fn timestamp(&self, k: usize) -> Timestamp {
        self.start.plus_seconds(k as f64 * self.cadence_seconds)
    }

    /// Ridge strength times amplitude in frame `k`; zero without a ridge.
    pub fn ridge_visibility(&self, k: usize) -> f64 {
        self.ridge.map_or(0.0, |r| r.amplitude * r.strength(k))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

fn lattice_value(seed: u64, octave: u64, ix: i64, iy: i64) -> f64 {
    let h = splitmix64(splitmix64(splitmix64(seed ^ (octave << 56)) ^ ix as u64) ^ iy as u64);
    (h >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn smoothstep(t: f64) -> f64 {
    t * t * (3.0 - 2.0 * t)
}

/// Seeded multi-octave value noise, normalized and skewed.
#[derive(Clone, Debug, PartialEq)]
pub struct Texture {
    spec: TextureSpec,
    spacings: Vec<f64>,
    mean: f64,
    std: f64,
}

impl Texture {
    pub fn new(spec: TextureSpec) -> Self {
        let mut spacings = Vec::new();
        let mut l = spec.correlation_length;
        spacings.push(l);
        while l / 2.0 >= 2.0 {
            l /= 2.0;
            spacings.push(l);
        }
        let mut tex = Texture {
            spec,
            spacings,
            mean: 0.0,
            std: 1.0,
        };
        // Normalization from a fixed sample patch so every frame of every
        // scene with this texture uses the same constants.
        let n = 96;
        let step = (spec.correlation_length * 32.0) / n as f64;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let r = tex.raw(i as f64 * step + 0.37, j as f64 * step + 0.71);
                sum += r;
                sum2 += r * r;
            }
        }
        let count = (n * n) as f64;
        tex.mean = sum / count;
        tex.std = sqrt((sum2 / count - tex.mean * tex.mean).max(1e-12));
        tex
    }

    fn raw(&self, x: f64, y: f64) -> f64 {
        let mut total = 0.0;
        let mut amp = 1.0;
        for (o, &l) in self.spacings.iter().enumerate() {
            let (gx, gy) = (x / l, y / l);
            let (fx, fy) = (floor(gx), floor(gy));
            let (ix, iy) = (fx as i64, fy as i64);
            let (tx, ty) = (smoothstep(gx - fx), smoothstep(gy - fy));
            let v = |dx: i64, dy: i64| lattice_value(self.spec.seed, o as u64, ix + dx, iy + dy);
            let top = v(0, 0) + tx * (v(1, 0) - v(0, 0));
            let bottom = v(0, 1) + tx * (v(1, 1) - v(0, 1));
            total += amp * (top + ty * (bottom - top));
            amp *= 0.5;
        }
        total
    }

    /// Texture value at a continuous position: zero mean, unit variance,
    /// bounded above by about `exp(s^2/2) / sqrt((exp(s^2) - 1) exp(s^2))`.
    pub fn value(&self, x: f64, y: f64) -> f64 {
        let s = self.spec.skew;
        let z = (self.raw(x, y) - self.mean) / self.std;
        // Moments of exp(s z) for standard normal z.
        let m = exp(0.5 * s * s);
        let sd = sqrt((exp(s * s) - 1.0) * exp(s * s));
        (m - exp(s * z)) / sd
    }
}

/// A validated scene ready to render frames.
#[derive(Clone, Debug, PartialEq)]
pub struct Scene {
    spec: SceneSpec,
    texture: Texture,
}

impl Scene {
    pub fn new(spec: SceneSpec) -> Result<Self, SynthError> {
        spec.validate()?;
        let texture = Texture::new(spec.texture);
        Ok(Scene { spec, texture })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn len(&self) -> usize {
        self.spec.n_frames
    }

    pub fn is_empty(&self) -> bool {
        self.spec.n_frames == 0
    }

    /// Noise-free intensity at `(x, y)` in frame `k`, before quantization
    /// and corruption.
    pub fn intensity(&self, k: usize, x: f64, y: f64) -> f64 {
        let (sx, sy) = self.spec.flow.backward(x, y, k as f64);
        let mut units = self.texture.value(sx, sy);
        if let Some(r) = &self.spec.ridge {
            let s = r.strength(k);
            if s > 0.0 && r.amplitude > 0.0 {
                units += r.amplitude * s * r.profile(sx, sy);
            }
        }
        let v = BASE_LEVEL + self.spec.texture.contrast * units;
        match &self.spec.transition {
            Some(ramp) => {
                let w = ramp.weight(k);
                (1.0 - w) * v + w * (EQUALIZED_MAX as f64 - v)
            }
            None => v,
        }
    }

    /// Frame `k`, quantized to whole counts in `[0, 65535]`.
    pub fn frame(&self, k: usize) -> Result<Frame, SynthError> {
        let (w, h) = (self.spec.width, self.spec.height);
        let mut values = Grid::from_fn(w, h, |x, y| round(self.intensity(k, x as f64, y as f64)).clamp(0.0, EQUALIZED_MAX as f64));
        let mut quality = Grid::filled(w, h, PixelQuality::Good);
        for idx in self.corrupt_pixels(k) {
            values.as_mut_slice()[idx] = 0.0;
            quality.as_mut_slice()[idx] = PixelQuality::Corrupt;
        }
        Ok(Frame::new(values, Some(quality), self.spec.timestamp(k), self.spec.geo)?)
    }

    pub fn frames(&self) -> impl Iterator<Item = Result<Frame, SynthError>> + '_ {
        (0..self.spec.n_frames).map(move |k| self.frame(k))
    }

    /// Row-major indices of the pixels flagged corrupt in frame `k`: the
    /// `round(fraction * N)` pixels with the smallest seeded hash.
    pub fn corrupt_pixels(&self, k: usize) -> Vec<usize> {
        let n = self.spec.width * self.spec.height;
        let fraction: f64 = self.spec.corruption.iter().filter(|c| c.frame == k).map(|c| c.fraction).fold(0.0, f64::max);
        let count = (round(fraction * n as f64) as usize).min(n);
        if count == 0 {
            return Vec::new();
        }
        let salt = splitmix64(self.spec.texture.seed ^ 0x5bd1_e995) ^ (k as u64).wrapping_mul(0x9e37_79b9);
        let mut ranked: Vec<(u64, usize)> = (0..n).map(|i| (splitmix64(salt ^ i as u64), i)).collect();
        ranked.sort_unstable();
        let mut picked: Vec<usize> = ranked[..count].iter().map(|&(_, i)| i).collect();
        picked.sort_unstable();
        picked
    }

    pub fn ground_truth_box_path(&self, init: &TrackingBox) -> Vec<TruthRow> {
        ground_truth_box_path(&self.spec, init)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TruthRow {
    pub frame: usize,
    pub timestamp: Timestamp,
    pub center_x: f64,
    pub center_y: f64,
    pub ridge_visibility: f64,
}

/// Analytic box-center path under the scene flow, one row per frame,
/// stopping before the first frame whose center falls outside the image.
pub fn ground_truth_box_path(spec: &SceneSpec, init: &TrackingBox) -> Vec<TruthRow> {
    let inside = |x: f64, y: f64| x >= 0.0 && y >= 0.0 && x <= (spec.width - 1) as f64 && y <= (spec.height - 1) as f64;
    let mut rows = Vec::new();
    for k in 0..spec.n_frames {
        let (x, y) = spec.flow.forward(init.center_x, init.center_y, k as f64);
        if !inside(x, y) {
            break;
        }
        rows.push(TruthRow {
            frame: k,
            timestamp: spec.timestamp(k),
            center_x: x,
            center_y: y,
            ridge_visibility: spec.ridge_visibility(k),
        });
    }
    rows
}
