//! Tracking of linear cloud features (ship tracks) through geo-referenced
//! raster sequences.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! function of its inputs; file formats, manifests and the command line live
//! in the `shiptrack` crate.
//!
//! The main pieces:
//!
//! * [`raster`]: frames, quality masks, band differencing, histogram
//!   equalization and the pixel/geo mapping.
//! * [`detect`]: minimum-eigenvalue (Shi-Tomasi) feature detection.
//! * [`flow`]: pyramidal Lucas-Kanade displacement estimation.
//! * [`solar`]: solar zenith angles and diurnal transition classification.
//! * [`tracker`]: the tracking-box state machine and persistence reporting.
//! * [`trajectory`]: isoheight parcel advection over gridded winds.
//! * [`shipmatch`]: nearest-ship lookup for position reports.
//! * [`synth`]: procedural ground-truth scenes.
#![no_std]
// Negated float comparisons are used on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod detect;
pub mod flow;
pub mod geodesy;
pub mod grid;
mod math;
pub mod raster;
pub mod region;
pub mod shipmatch;
pub mod solar;
pub mod synth;
pub mod time;
pub mod tracker;
pub mod trajectory;

pub use grid::Grid;
pub use raster::{Frame, GeoTransform, PixelQuality};
pub use region::{PixelRect, TrackingBox};
pub use time::Timestamp;
