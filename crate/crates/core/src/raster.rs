//! Frames, quality masks and per-frame preprocessing.

use alloc::vec::Vec;
use core::fmt;

use crate::grid::Grid;
use crate::time::Timestamp;

/// Largest output level of [`equalize_histogram`].
pub const EQUALIZED_MAX: u32 = 65_535;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PixelQuality {
    #[default]
    Good,
    Corrupt,
}

impl PixelQuality {
    pub fn is_corrupt(self) -> bool {
        self == PixelQuality::Corrupt
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RasterError {
    TooSmall { width: usize, height: usize },
    ShapeMismatch { expected: (usize, usize), found: (usize, usize) },
    NonFinite,
    InvalidGeo,
    GeoMismatch,
    TimeMismatch,
    NoGoodPixels,
}

impl fmt::Display for RasterError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RasterError::TooSmall { width, height } => {
                write!(f, "frame of {width}x{height} is smaller than 2x2")
            }
            RasterError::ShapeMismatch { expected, found } => write!(
                f,
                "shape mismatch: expected {}x{}, found {}x{}",
                expected.0, expected.1, found.0, found.1
            ),
            RasterError::NonFinite => f.write_str("frame contains non-finite values"),
            RasterError::InvalidGeo => f.write_str("geo transform needs nonzero, finite steps"),
            RasterError::GeoMismatch => f.write_str("frames have different geo transforms"),
            RasterError::TimeMismatch => f.write_str("frames have different timestamps"),
            RasterError::NoGoodPixels => f.write_str("every pixel is flagged corrupt"),
        }
    }
}

impl core::error::Error for RasterError {}

/// Equirectangular mapping between pixel indices and latitude/longitude.
///
/// `lat = lat0 + y * dlat`, `lon = lon0 + x * dlon`; north-up rasters have a
/// negative `dlat`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeoTransform {
    pub lat0: f64,
    pub lon0: f64,
    pub dlat: f64,
    pub dlon: f64,
}

impl GeoTransform {
    pub fn new(lat0: f64, lon0: f64, dlat: f64, dlon: f64) -> Result<Self, RasterError> {
        let ok = [lat0, lon0, dlat, dlon].iter().all(|v| v.is_finite()) && dlat != 0.0 && dlon != 0.0;
        if ok {
            Ok(GeoTransform {
                lat0,
                lon0,
                dlat,
                dlon,
            })
        } else {
            Err(RasterError::InvalidGeo)
        }
    }

    /// Returns `(lat, lon)` in degrees.
    pub fn pixel_to_geo(&self, x: f64, y: f64) -> (f64, f64) {
        (self.lat0 + y * self.dlat, self.lon0 + x * self.dlon)
    }

    /// Returns `(x, y)` in pixels.
    pub fn geo_to_pixel(&self, lat: f64, lon: f64) -> (f64, f64) {
        ((lon - self.lon0) / self.dlon, (lat - self.lat0) / self.dlat)
    }
}

/// One timestamped raster with its per-pixel quality flags.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    values: Grid<f64>,
    quality: Grid<PixelQuality>,
    timestamp: Timestamp,
    geo: GeoTransform,
}

impl Frame {
    /// Validates shape and finiteness. A missing mask means every pixel is good.
    pub fn new(
        values: Grid<f64>,
        quality: Option<Grid<PixelQuality>>,
        timestamp: Timestamp,
        geo: GeoTransform,
    ) -> Result<Self, RasterError> {
        let (width, height) = values.dims();
        if width < 2 || height < 2 {
            return Err(RasterError::TooSmall { width, height });
        }
        if !values.as_slice().iter().all(|v| v.is_finite()) {
            return Err(RasterError::NonFinite);
        }
        let quality = match quality {
            Some(q) if !q.same_shape(&values) => {
                return Err(RasterError::ShapeMismatch {
                    expected: (width, height),
                    found: q.dims(),
                })
            }
            Some(q) => q,
            None => Grid::filled(width, height, PixelQuality::Good),
        };
        Ok(Frame {
            values,
            quality,
            timestamp,
            geo,
        })
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn quality(&self) -> &Grid<PixelQuality> {
        &self.quality
    }

    pub fn timestamp(&self) -> Timestamp {
        self.timestamp
    }

    pub fn geo(&self) -> &GeoTransform {
        &self.geo
    }

    pub fn is_good(&self, x: usize, y: usize) -> bool {
        !self.quality[(x, y)].is_corrupt()
    }

    /// Fraction of pixels flagged corrupt, in `[0, 1]`.
    pub fn corrupt_fraction(&self) -> f64 {
        let q = self.quality.as_slice();
        q.iter().filter(|p| p.is_corrupt()).count() as f64 / q.len() as f64
    }

    fn check_compatible(&self, other: &Frame) -> Result<(), RasterError> {
        if !self.values.same_shape(&other.values) {
            return Err(RasterError::ShapeMismatch {
                expected: self.values.dims(),
                found: other.values.dims(),
            });
        }
        if self.geo != other.geo {
            return Err(RasterError::GeoMismatch);
        }
        if self.timestamp != other.timestamp {
            return Err(RasterError::TimeMismatch);
        }
        Ok(())
    }
}

/// Elementwise `c06 - c07`; a pixel is good only where both inputs are good.
pub fn band_difference(c06: &Frame, c07: &Frame) -> Result<Frame, RasterError> {
    c06.check_compatible(c07)?;
    let values: Vec<f64> = c06
        .values
        .as_slice()
        .iter()
        .zip(c07.values.as_slice())
        .map(|(a, b)| a - b)
        .collect();
    let quality: Vec<PixelQuality> = c06
        .quality
        .as_slice()
        .iter()
        .zip(c07.quality.as_slice())
        .map(|(a, b)| {
            if a.is_corrupt() || b.is_corrupt() {
                PixelQuality::Corrupt
            } else {
                PixelQuality::Good
            }
        })
        .collect();
    let (w, h) = c06.values.dims();
    Ok(Frame {
        values: Grid::from_vec(w, h, values).expect("shape checked"),
        quality: Grid::from_vec(w, h, quality).expect("shape checked"),
        timestamp: c06.timestamp,
        geo: c06.geo,
    })
}

/// Global histogram equalization over the good pixels.
///
/// Each good pixel maps to `round(CDF(v) * 65535)`, where CDF is the
/// empirical distribution of the good pixels (count of good values `<= v`
/// over the good-pixel count). Rounding is half-up in exact integer
/// arithmetic. Corrupt pixels are set to 0 and stay flagged.
pub fn equalize_histogram(frame: &Frame) -> Result<Frame, RasterError> {
    let mut sorted: Vec<f64> = frame
        .values
        .as_slice()
        .iter()
        .zip(frame.quality.as_slice())
        .filter(|(_, q)| !q.is_corrupt())
        .map(|(v, _)| *v)
        .collect();
    if sorted.is_empty() {
        return Err(RasterError::NoGoodPixels);
    }
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as u64;
    let max = EQUALIZED_MAX as u64;

    let values = frame
        .values
        .as_slice()
        .iter()
        .zip(frame.quality.as_slice())
        .map(|(&v, q)| {
            if q.is_corrupt() {
                0.0
            } else {
                let count = sorted.partition_point(|&s| s <= v) as u64;
                ((count * max + n / 2) / n) as f64
            }
        })
        .collect();
    let (w, h) = frame.values.dims();
    Ok(Frame {
        values: Grid::from_vec(w, h, values).expect("same shape"),
        quality: frame.quality.clone(),
        timestamp: frame.timestamp,
        geo: frame.geo,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn geo() -> GeoTransform {
        GeoTransform::new(36.0, -135.0, -0.018, 0.018).unwrap()
    }

    fn frame(w: usize, h: usize, values: Vec<f64>) -> Frame {
        Frame::new(Grid::from_vec(w, h, values).unwrap(), None, Timestamp::from_unix_seconds(0), geo()).unwrap()
    }

    #[test]
    fn default_mask_is_all_good() {
        let f = frame(4, 4, vec![1.0; 16]);
        assert_eq!(f.corrupt_fraction(), 0.0);
    }

    #[test]
    fn mask_shape_must_match() {
        let mask = Grid::filled(3, 3, PixelQuality::Good);
        let err = Frame::new(Grid::filled(4, 4, 0.0), Some(mask), Timestamp::from_unix_seconds(0), geo());
        assert_eq!(
            err,
            Err(RasterError::ShapeMismatch {
                expected: (4, 4),
                found: (3, 3)
            })
        );
    }

    #[test]
    fn rejects_tiny_and_non_finite() {
        let t = Timestamp::from_unix_seconds(0);
        assert!(matches!(
            Frame::new(Grid::filled(1, 5, 0.0), None, t, geo()),
            Err(RasterError::TooSmall { .. })
        ));
        assert_eq!(
            Frame::new(Grid::from_vec(2, 2, vec![0.0, f64::NAN, 0.0, 0.0]).unwrap(), None, t, geo()),
            Err(RasterError::NonFinite)
        );
        assert_eq!(GeoTransform::new(0.0, 0.0, 0.0, 1.0), Err(RasterError::InvalidGeo));
    }

    #[test]
    fn corrupt_fraction_counts() {
        let mut mask = Grid::filled(10, 10, PixelQuality::Good);
        mask[(3, 4)] = PixelQuality::Corrupt;
        mask[(9, 9)] = PixelQuality::Corrupt;
        let f = Frame::new(Grid::filled(10, 10, 0.0), Some(mask), Timestamp::from_unix_seconds(0), geo()).unwrap();
        assert_eq!(f.corrupt_fraction(), 0.02);
        let all = Grid::filled(10, 10, PixelQuality::Corrupt);
        let f = Frame::new(Grid::filled(10, 10, 0.0), Some(all), Timestamp::from_unix_seconds(0), geo()).unwrap();
        assert_eq!(f.corrupt_fraction(), 1.0);
    }

    #[test]
    fn difference_of_bands() {
        let a = frame(2, 2, vec![5.0, 7.0, 1.0, 1.0]);
        let b = frame(2, 2, vec![2.0, 9.0, 1.0, 1.0]);
        let d = band_difference(&a, &b).unwrap();
        assert_eq!(d.values().as_slice(), &[3.0, -2.0, 0.0, 0.0]);
        let same = band_difference(&a, &a).unwrap();
        assert!(same.values().as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn difference_propagates_corruption() {
        let a = frame(2, 2, vec![5.0, 7.0, 1.0, 1.0]);
        let mut mask = Grid::filled(2, 2, PixelQuality::Good);
        mask[(1, 1)] = PixelQuality::Corrupt;
        let b = Frame::new(Grid::filled(2, 2, 1.0), Some(mask), a.timestamp(), geo()).unwrap();
        let d = band_difference(&a, &b).unwrap();
        assert!(!d.is_good(1, 1));
        assert_eq!(d.corrupt_fraction(), 0.25);
    }

    #[test]
    fn difference_checks_compatibility() {
        let a = frame(2, 2, vec![0.0; 4]);
        let later = Frame::new(Grid::filled(2, 2, 0.0), None, Timestamp::from_unix_seconds(300), geo()).unwrap();
        assert_eq!(band_difference(&a, &later), Err(RasterError::TimeMismatch));
        let wide = frame(3, 2, vec![0.0; 6]);
        assert!(matches!(band_difference(&a, &wide), Err(RasterError::ShapeMismatch { .. })));
        let moved = Frame::new(
            Grid::filled(2, 2, 0.0),
            None,
            a.timestamp(),
            GeoTransform::new(10.0, 0.0, -0.018, 0.018).unwrap(),
        )
        .unwrap();
        assert_eq!(band_difference(&a, &moved), Err(RasterError::GeoMismatch));
    }

    #[test]
    fn equalize_constant_maps_to_max() {
        let f = equalize_histogram(&frame(3, 3, vec![42.0; 9])).unwrap();
        assert!(f.values().as_slice().iter().all(|&v| v == 65535.0));
    }

    #[test]
    fn equalize_two_levels() {
        // CDF(a) = 10/20 -> 0.5 * 65535 = 32767.5 -> 32768 (half-up)
        let mut v = vec![-3.0; 10];
        v.extend([8.0; 10]);
        let f = equalize_histogram(&frame(5, 4, v)).unwrap();
        let out = f.values().as_slice();
        assert!(out[..10].iter().all(|&x| x == 32768.0));
        assert!(out[10..].iter().all(|&x| x == 65535.0));
    }

    #[test]
    fn equalize_ignores_corrupt_pixels() {
        let mut mask = Grid::filled(2, 2, PixelQuality::Good);
        mask[(0, 0)] = PixelQuality::Corrupt;
        let f = Frame::new(
            Grid::from_vec(2, 2, vec![-1e9, 1.0, 2.0, 3.0]).unwrap(),
            Some(mask),
            Timestamp::from_unix_seconds(0),
            geo(),
        )
        .unwrap();
        let e = equalize_histogram(&f).unwrap();
        assert_eq!(e.values().as_slice(), &[0.0, 21845.0, 43690.0, 65535.0]);
        assert!(!e.is_good(0, 0));

        let dead = Frame::new(
            Grid::filled(2, 2, 1.0),
            Some(Grid::filled(2, 2, PixelQuality::Corrupt)),
            Timestamp::from_unix_seconds(0),
            geo(),
        )
        .unwrap();
        assert_eq!(equalize_histogram(&dead), Err(RasterError::NoGoodPixels));
    }

    #[test]
    fn geo_mapping() {
        let g = GeoTransform::new(10.0, 20.0, -0.018, 0.018).unwrap();
        assert_eq!(g.pixel_to_geo(0.0, 0.0), (10.0, 20.0));
        let (_, lon) = g.pixel_to_geo(100.0, 0.0);
        assert!((lon - 21.8).abs() < 1e-12);
    }
}
